#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "embed_oracle.hpp"
#include "gradcases.hpp"
#include "ngram/ple.hpp"
#include "ngram/rng.hpp"

using namespace ngram;

namespace {

// Straight-line transcription of the gated-FFN form, independent of the
// library loop structure.
std::vector<double> oracle_ffn(const std::vector<double>& x,
                               const std::vector<double>& g,
                               const ple_params_t<double>& p) {
    const int H = p.hidden, D = p.d_model;
    std::vector<double> h(static_cast<std::size_t>(H));
    for (int r = 0; r < H; ++r) {
        double u = 0;
        for (int c = 0; c < D; ++c) {
            u += p.gate[std::size_t(r) * std::size_t(D) + std::size_t(c)] *
                 x[std::size_t(c)];
        }
        const double sig = 1.0 / (1.0 + std::exp(-u));
        h[std::size_t(r)] = u * sig * g[std::size_t(r)];
    }
    std::vector<double> y(static_cast<std::size_t>(D));
    for (int r = 0; r < D; ++r) {
        double acc = 0;
        for (int c = 0; c < H; ++c) {
            acc += p.down[std::size_t(r) * std::size_t(H) + std::size_t(c)] *
                   h[std::size_t(c)];
        }
        y[std::size_t(r)] = acc;
    }
    return y;
}

ngram_config layer_config(std::uint32_t v0, int width, int order, int k) {
    ngram_config cfg;
    cfg.max_order = order;
    cfg.sub_tables = k;
    cfg.base_vocab = v0;
    cfg.dim = width;
    cfg.variant = ne_variant::subtable_v2;
    cfg.amplification = amp_mode::none;
    for (int n = 2; n <= order; ++n) {
        for (int kk = 1; kk <= k; ++kk) {
            cfg.sub_vocab[{n, kk}] = 19 + 6 * std::uint64_t(n) + std::uint64_t(kk);
        }
    }
    cfg.validate();
    return cfg;
}

}  // namespace

TEST_CASE("ffn_ple: zero input gives zero output (SiLU(0) = 0)") {
    const auto p = make_ple_params<double>(4, 6, 10, 1);
    std::vector<double> x(4, 0.0);
    for (const double y : ffn_ple<double>(x, 3, p)) CHECK(y == 0.0);
}

TEST_CASE("ffn_ple: zero table row gates everything off") {
    auto p = make_ple_params<double>(4, 6, 10, 2);
    std::fill(p.table.begin() + 3 * 6, p.table.begin() + 4 * 6, 0.0);
    rng64 rng(4);
    std::vector<double> x(4);
    for (auto& v : x) v = gaussian(rng);
    for (const double y : ffn_ple<double>(x, 3, p)) CHECK(y == 0.0);
}

TEST_CASE("ffn_ple matches the straight-line oracle") {
    const auto p = make_ple_params<double>(4, 6, 10, 7);
    rng64 rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(4);
        for (auto& v : x) v = gaussian(rng);
        const token_id t = token_id(uniform_below(rng, 10));
        const auto got = ffn_ple<double>(x, t, p);
        std::vector<double> g(p.table.begin() + std::ptrdiff_t(t) * 6,
                              p.table.begin() + std::ptrdiff_t(t + 1) * 6);
        const auto want = oracle_ffn(x, g, p);
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("ffn_ple rejects out-of-range tokens and bad shapes") {
    const auto p = make_ple_params<double>(4, 6, 10, 7);
    std::vector<double> x(4, 0.1);
    CHECK_THROWS_AS(ffn_ple<double>(x, 10, p), std::out_of_range);
    std::vector<double> short_x(3, 0.1);
    CHECK_THROWS_AS(ffn_ple<double>(short_x, 2, p), std::invalid_argument);
}

TEST_CASE("ffn_plne: zero layer bank gives zero output") {
    const auto cfg = layer_config(10, 6, 3, 3);
    const auto bank = make_zero_bank<double>(cfg);
    auto p = make_ple_params<double>(4, 6, 10, 5);
    rng64 rng(9);
    std::vector<double> x(4);
    for (auto& v : x) v = gaussian(rng);
    std::vector<token_id> ctx{1, 2, 3};
    for (const double y : ffn_plne<double>(x, ctx, bank, p)) CHECK(y == 0.0);
}

TEST_CASE("ffn_plne on an all-pad context reduces to scaled ffn_ple") {
    const auto cfg = layer_config(10, 6, 3, 3);
    auto bank = make_zero_bank<double>(cfg);
    auto p = make_ple_params<double>(4, 6, 10, 5);
    // Layer bank whose base table is the PLE table; sub-tables stay zero.
    bank.base = p.table;

    rng64 rng(10);
    std::vector<double> x(4);
    for (auto& v : x) v = gaussian(rng);
    std::vector<token_id> pads{0, 0, 0};

    const auto plne = ffn_plne<double>(x, pads, bank, p);
    const auto ple = ffn_ple<double>(x, 0, p);
    const double c = double(cfg.merge_denominator());
    for (std::size_t i = 0; i < plne.size(); ++i) {
        CHECK(plne[i] == doctest::Approx(ple[i] / c).epsilon(1e-12));
    }
}

TEST_CASE("ffn_plne matches the composition of verified oracles") {
    const auto cfg = layer_config(10, 6, 3, 1);
    const auto bank = make_bank<double>(cfg, 21);
    const auto p = make_ple_params<double>(4, 6, 10, 22);
    rng64 rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(4);
        for (auto& v : x) v = gaussian(rng);
        std::vector<token_id> ctx(3);
        for (auto& t : ctx) t = token_id(uniform_below(rng, 10));
        const auto got = ffn_plne<double>(x, ctx, bank, p);
        const auto g = oracle::embed_v2<double>(ctx, bank);
        const auto want = oracle_ffn(x, g, p);
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("ffn_plne with a base-only degenerate bank equals ffn_ple exactly") {
    ngram_config cfg;
    cfg.max_order = 1;  // no n-gram branches, merge scale 1
    cfg.sub_tables = 1;
    cfg.base_vocab = 10;
    cfg.dim = 6;
    cfg.variant = ne_variant::subtable_v2;
    cfg.validate();
    auto bank = make_zero_bank<double>(cfg);
    const auto p = make_ple_params<double>(4, 6, 10, 31);
    bank.base = p.table;

    rng64 rng(32);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(4);
        for (auto& v : x) v = gaussian(rng);
        const token_id t = token_id(uniform_below(rng, 10));
        std::vector<token_id> ctx{t};
        const auto plne = ffn_plne<double>(x, ctx, bank, p);
        const auto ple = ffn_ple<double>(x, t, p);
        for (std::size_t i = 0; i < plne.size(); ++i) CHECK(plne[i] == ple[i]);
    }
}

TEST_CASE("ffn_plne validates the layer bank") {
    const auto cfg = layer_config(10, 8, 3, 2);  // width 8 != hidden 6
    const auto bank = make_bank<double>(cfg, 2);
    const auto p = make_ple_params<double>(4, 6, 10, 2);
    std::vector<double> x(4, 0.1);
    std::vector<token_id> ctx{1, 2, 3};
    CHECK_THROWS_AS(ffn_plne<double>(x, ctx, bank, p), std::invalid_argument);
}

TEST_CASE("gradient check: ffn_ple parameters and input") {
    CHECK(gradcases::check_ple_gradients(4, 6, 10, 201) == 0);
    CHECK(gradcases::check_ple_gradients(5, 8, 12, 202) == 0);
    CHECK(gradcases::check_ple_gradients(3, 3, 6, 203) == 0);
}

TEST_CASE("gradient check: ffn_plne parameters, layer bank and input") {
    CHECK(gradcases::check_plne_gradients(4, layer_config(8, 6, 3, 1), 211) == 0);
    CHECK(gradcases::check_plne_gradients(5, layer_config(6, 8, 3, 2), 212) == 0);
    CHECK(gradcases::check_plne_gradients(3, layer_config(6, 6, 2, 3), 213) == 0);
}

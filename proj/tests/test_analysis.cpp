#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <sstream>

#include "ngram/analysis.hpp"
#include "ngram/corpus.hpp"
#include "ngram/rng.hpp"
#include "oracles.hpp"

using namespace ngram;

namespace {

// Two-pass set-based oracle: store every window and every bucket.
struct oracle_counts {
    std::uint64_t distinct_ngrams = 0;
    std::uint64_t distinct_buckets = 0;
};

oracle_counts two_pass_oracle(const std::vector<token_sequence>& corpus,
                              std::uint64_t v0, int order,
                              std::uint64_t modulus) {
    std::set<std::vector<token_id>> ngrams;
    std::set<std::uint64_t> buckets;
    std::vector<token_id> w;
    for (const auto& seq : corpus) {
        for (std::size_t pos = 0; pos < seq.size(); ++pos) {
            window_at(seq, pos, order, w);
            ngrams.insert(w);
            buckets.insert(oracle::polynomial_hash(w, v0, modulus));
        }
    }
    return {ngrams.size(), buckets.size()};
}

std::vector<token_sequence> random_corpus(rng64& rng, std::uint32_t v0,
                                          std::size_t seqs, std::size_t max_len) {
    std::vector<token_sequence> corpus(seqs);
    for (auto& seq : corpus) {
        seq.resize(1 + uniform_below(rng, max_len));
        for (auto& t : seq) t = token_id(uniform_below(rng, v0));
    }
    return corpus;
}

}  // namespace

TEST_CASE("hit rate: single n-gram activates one bucket") {
    std::vector<token_sequence> corpus{{5}};
    CHECK(compute_hit_rate(corpus, {2, 10, 100}) == doctest::Approx(0.01));
}

TEST_CASE("hit rate: full 2-gram coverage saturates a surjective table") {
    // All V0^2 windows as one long... rather as explicit two-token sequences
    // plus the pad windows; poly values cover [0, V0^2), so any modulus
    // <= V0^2 is surjective.
    const std::uint32_t v0 = 7;
    std::vector<token_sequence> corpus;
    for (std::uint32_t a = 0; a < v0; ++a) {
        for (std::uint32_t b = 0; b < v0; ++b) {
            corpus.push_back({a, b});
        }
    }
    CHECK(compute_hit_rate(corpus, {2, v0, 49}) == doctest::Approx(1.0));
    CHECK(compute_hit_rate(corpus, {2, v0, 30}) == doctest::Approx(1.0));
    // Cross-check surjectivity by brute-force enumeration of all windows.
    std::set<std::uint64_t> covered;
    for (std::uint32_t a = 0; a < v0; ++a) {
        for (std::uint32_t b = 0; b < v0; ++b) {
            std::vector<token_id> w{a, b};
            covered.insert(oracle::polynomial_hash(w, v0, 30));
        }
    }
    CHECK(covered.size() == 30);
}

TEST_CASE("hit rate: higher orders cover buckets faster on the synthetic corpus") {
    const auto corpus = generate_zipf_markov(1000, 16, 4096, 99, 1.1, 0.85);
    const double hit2 = compute_hit_rate(corpus, {2, 1000, 4999});
    const double hit4 = compute_hit_rate(corpus, {4, 1000, 4999});
    CHECK(hit4 > hit2);
}

TEST_CASE("collision counting worked example: integer-multiple pathology") {
    // 2-grams (1,5), (3,5), (5,5) share the last token; with V_n = 2*V0
    // they all land in one bucket (plus the three pad windows).
    std::vector<token_sequence> corpus{{1, 5}, {3, 5}, {5, 5}};
    CHECK(count_collisions(corpus, {2, 10, 20}) == 2);
    // With V_n = 23 the same three windows hash apart (15, 12, 9 per the
    // big-integer oracle), so no collisions anywhere.
    std::vector<token_id> w1{1, 5}, w2{3, 5}, w3{5, 5};
    CHECK(oracle::polynomial_hash(w1, 10, 23) == 15);
    CHECK(oracle::polynomial_hash(w2, 10, 23) == 12);
    CHECK(oracle::polynomial_hash(w3, 10, 23) == 9);
    CHECK(count_collisions(corpus, {2, 10, 23}) == 0);
}

TEST_CASE("collisions: injective regime yields zero") {
    std::vector<token_sequence> corpus{{1, 2, 3, 4, 5, 6, 7, 8, 9}};
    CHECK(count_collisions(corpus, {2, 10, 1000000}) == 0);
}

TEST_CASE("collisions: modulus >= V0^n with injective hash yields zero") {
    rng64 rng(42);
    const std::uint32_t v0 = 6;
    for (int trial = 0; trial < 20; ++trial) {
        const auto corpus = random_corpus(rng, v0, 4, 50);
        CHECK(count_collisions(corpus, {2, v0, 36}) == 0);
        CHECK(count_collisions(corpus, {3, v0, 216}) == 0);
    }
}

TEST_CASE("streaming equals two-pass oracle on random corpora") {
    rng64 rng(0xabc);
    for (int trial = 0; trial < 25; ++trial) {
        const std::uint32_t v0 = 3 + std::uint32_t(uniform_below(rng, 200));
        const auto corpus = random_corpus(rng, v0, 1 + uniform_below(rng, 6), 80);
        const int order = 2 + int(uniform_below(rng, 3));
        const std::uint64_t modulus = 1 + uniform_below(rng, 3000);
        const auto want = two_pass_oracle(corpus, v0, order, modulus);
        const hash_spec spec{order, v0, modulus};
        CHECK(compute_hit_rate(corpus, spec) ==
              doctest::Approx(double(want.distinct_buckets) / double(modulus)));
        CHECK(count_collisions(corpus, spec) ==
              want.distinct_ngrams - want.distinct_buckets);
    }
}

TEST_CASE("sweep: reports in input order, consistent with single calls") {
    const auto corpus = generate_zipf_markov(100, 8, 512, 7, 1.1, 0.85);
    const std::vector<std::uint64_t> moduli{101, 250, 999};
    const auto reports = sweep_vocab_sizes(corpus, 2, 100, moduli, "c");
    REQUIRE(reports.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(reports[i].modulus == moduli[i]);
        CHECK(reports[i].order == 2);
        CHECK(reports[i].hit_rate ==
              doctest::Approx(compute_hit_rate(corpus, {2, 100, moduli[i]})));
        CHECK(reports[i].collision_count ==
              count_collisions(corpus, {2, 100, moduli[i]}));
        CHECK(reports[i].corpus_id == "c");
        CHECK(reports[i].tokens_processed == total_tokens(corpus));
    }

    CHECK(sweep_vocab_sizes(corpus, 2, 100, {}).empty());
    CHECK_THROWS_AS(sweep_vocab_sizes(corpus, 2, 100, {250, 101}),
                    std::invalid_argument);
}

TEST_CASE("sweep: collision count drops from the integer multiple to the half-multiple") {
    const std::uint32_t v0 = 1000;
    const auto corpus = generate_zipf_markov(v0, 24, 4096, 20260809, 1.1, 0.85);
    const auto reports =
        sweep_vocab_sizes(corpus, 2, v0, {2 * v0, 2 * v0 + v0 / 2});
    REQUIRE(reports.size() == 2);
    CHECK(reports[0].collision_count > reports[1].collision_count);
    // Cross-checked against the two-pass oracle.
    const auto o1 = two_pass_oracle(corpus, v0, 2, 2 * v0);
    const auto o2 = two_pass_oracle(corpus, v0, 2, 2 * v0 + v0 / 2);
    CHECK(reports[0].collision_count == o1.distinct_ngrams - o1.distinct_buckets);
    CHECK(reports[1].collision_count == o2.distinct_ngrams - o2.distinct_buckets);
}

TEST_CASE("advise_vocab_size: half-multiple rule") {
    CHECK(advise_vocab_size(128000, 30) == 3904000);
    CHECK(advise_vocab_size(10, 2) == 25);
    CHECK(advise_vocab_size(2, 1) == 3);
    CHECK_THROWS_AS(advise_vocab_size(1, 3), std::invalid_argument);
    CHECK_THROWS_AS(advise_vocab_size(10, 0), std::invalid_argument);
}

TEST_CASE("advised size collides no more than the integer multiple") {
    const std::uint32_t v0 = 1000;
    const auto corpus = generate_zipf_markov(v0, 24, 4096, 20260809, 1.1, 0.85);
    const std::uint64_t multiple = 30;
    const std::uint64_t advised = advise_vocab_size(v0, multiple);
    CHECK(advised == 30500);
    const auto c_mult = count_collisions(corpus, {2, v0, multiple * v0});
    const auto c_advised = count_collisions(corpus, {2, v0, advised});
    CHECK(c_advised <= c_mult);
}

TEST_CASE("monotonicity: extending the corpus never decreases the counters") {
    rng64 rng(0xfeed);
    for (int trial = 0; trial < 10; ++trial) {
        const std::uint32_t v0 = 50;
        auto corpus = random_corpus(rng, v0, 6, 60);
        const hash_spec spec{2, v0, 40};
        std::vector<token_sequence> prefix(corpus.begin(), corpus.begin() + 3);
        CHECK(compute_hit_rate(corpus, spec) >= compute_hit_rate(prefix, spec));
        CHECK(count_collisions(corpus, spec) >= count_collisions(prefix, spec));
    }
}

TEST_CASE("sharded analyzers merge to the single-pass result") {
    rng64 rng(0x5eed);
    const std::uint32_t v0 = 120;
    const auto corpus = random_corpus(rng, v0, 9, 100);
    const std::vector<int> orders{2, 3};
    const std::vector<std::uint64_t> moduli{37, 240, 4000};

    corpus_analyzer whole(v0, orders, moduli);
    whole.add_corpus(corpus);

    corpus_analyzer a(v0, orders, moduli), b(v0, orders, moduli),
        c(v0, orders, moduli);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        (i % 3 == 0 ? a : i % 3 == 1 ? b : c).add_sequence(corpus[i]);
    }
    // Merge order must not matter.
    c.merge(a);
    c.merge(b);

    const auto sw = whole.stats();
    const auto sc = c.stats();
    CHECK(sw.sequences_seen == sc.sequences_seen);
    CHECK(sw.ngrams_seen == sc.ngrams_seen);
    CHECK(sw.distinct_ngrams == sc.distinct_ngrams);
    CHECK(sw.distinct_buckets == sc.distinct_buckets);
}

TEST_CASE("corpus stats invariants") {
    rng64 rng(31337);
    const std::uint32_t v0 = 40;
    const auto corpus = random_corpus(rng, v0, 8, 120);
    corpus_analyzer an(v0, {2, 3, 4}, {17, 1000, 70000});
    an.add_corpus(corpus);
    const auto s = an.stats();
    for (const auto& [order, distinct] : s.distinct_ngrams) {
        CHECK(distinct <= s.ngrams_seen.at(order));
        for (const auto& [key, buckets] : s.distinct_buckets) {
            if (key.first != order) continue;
            CHECK(buckets <= distinct);
            CHECK(buckets <= key.second);
        }
    }
}

TEST_CASE("analysis error paths") {
    std::vector<token_sequence> empty;
    CHECK_THROWS_AS(compute_hit_rate(empty, {2, 10, 5}), std::invalid_argument);
    std::vector<token_sequence> empty_seqs{{}, {}};
    CHECK_THROWS_AS(compute_hit_rate(empty_seqs, {2, 10, 5}), std::invalid_argument);
    std::vector<token_sequence> oob{{3, 11}};
    CHECK_THROWS_AS(count_collisions(oob, {2, 10, 5}), std::out_of_range);
    // Exact counting needs V0^order to fit the 128-bit key.
    CHECK_THROWS_AS(corpus_analyzer(1 << 17, {8}, {100}), std::invalid_argument);
}

TEST_CASE("CSV report format") {
    std::vector<collision_report> reports(2);
    reports[0] = {2, 2000, 0.5, 123, "c", 4096};
    reports[1] = {3, 2500, 0.125, 0, "c", 4096};
    std::ostringstream ss;
    write_reports_csv(ss, reports);
    CHECK(ss.str() ==
          "order,modulus,hit_rate,collision_count,tokens_processed\n"
          "2,2000,0.5,123,4096\n"
          "3,2500,0.125,0,4096\n");
}

TEST_CASE("corpus text and binary round-trips preserve analysis inputs") {
    rng64 rng(404);
    const auto corpus = random_corpus(rng, 500, 7, 40);
    const auto dir = std::string("/tmp/ngram_test_corpus_rt");
    save_corpus_text(corpus, dir + ".txt");
    save_corpus_binary(corpus, dir + ".bin");
    CHECK(load_corpus_text(dir + ".txt") == corpus);
    CHECK(load_corpus_binary(dir + ".bin") == corpus);
    CHECK(corpus_digest(load_corpus_text(dir + ".txt")) == corpus_digest(corpus));
}

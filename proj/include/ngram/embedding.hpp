#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ngram/config.hpp"
#include "ngram/hashing.hpp"
#include "ngram/rng.hpp"

namespace ngram {

// Work counters for the embedding kernels. A "gather" is one table-row
// fetch; projection work is counted in multiply-adds. These are the
// machine-independent latency proxy reported by the bench CLI.
struct embed_counters {
    std::uint64_t table_gathers = 0;
    std::uint64_t projection_madds = 0;
};

// The parameter store for one n-gram embedding layer. Everything is
// row-major. sub_tables/projections are indexed by config.branch_index(n,k);
// projections are present only for the sub-table variant. The layer-norm
// gain/bias exist only when amplification == layer_norm.
//
// Parameters are held in float in normal use; the double instantiation
// exists for the finite-difference gradient checks.
template <typename T>
struct embedding_bank_t {
    ngram_config config;
    std::vector<T> base;                      // V0 x D
    std::vector<std::vector<T>> sub_tables;   // V_{n,k} x d each
    std::vector<std::vector<T>> projections;  // D x d each
    std::vector<T> ln_gain;                   // D
    std::vector<T> ln_bias;                   // D

    std::span<const T> base_row(token_id t) const {
        if (std::uint64_t(t) >= config.base_vocab) {
            throw std::out_of_range("embedding: token " + std::to_string(t) +
                                    " out of range for base vocabulary " +
                                    std::to_string(config.base_vocab));
        }
        return std::span<const T>(base).subspan(std::size_t(t) * std::size_t(config.dim),
                                                std::size_t(config.dim));
    }

    std::span<T> base_row(token_id t) {
        auto r = std::as_const(*this).base_row(t);
        return {const_cast<T*>(r.data()), r.size()};
    }

    std::span<const T> sub_row(int branch, std::uint64_t bucket) const {
        const auto& table = sub_tables.at(std::size_t(branch));
        const std::size_t width = std::size_t(config.branch_dim());
        if ((bucket + 1) * width > table.size()) {
            throw std::out_of_range("embedding: bucket " + std::to_string(bucket) +
                                    " out of range for sub-table " +
                                    std::to_string(branch));
        }
        return std::span<const T>(table).subspan(std::size_t(bucket) * width, width);
    }

    std::span<T> sub_row(int branch, std::uint64_t bucket) {
        auto r = std::as_const(*this).sub_row(branch, bucket);
        return {const_cast<T*>(r.data()), r.size()};
    }
};

using embedding_bank = embedding_bank_t<float>;

// Randomly initialized bank: base and sub-tables ~ N(0, 0.02^2),
// projections ~ N(0, (0.02/sqrt(d))^2), layer-norm gain 1 / bias 0.
template <typename T>
embedding_bank_t<T> make_bank(const ngram_config& cfg, std::uint64_t seed) {
    cfg.validate();
    embedding_bank_t<T> bank;
    bank.config = cfg;
    rng64 rng(seed);

    const std::size_t dim = std::size_t(cfg.dim);
    const std::size_t d = std::size_t(cfg.branch_dim());
    bank.base.resize(std::size_t(cfg.base_vocab) * dim);
    for (auto& x : bank.base) x = T(0.02 * gaussian(rng));

    bank.sub_tables.resize(std::size_t(cfg.branch_count()));
    bank.projections.resize(
        cfg.variant == ne_variant::subtable_v2 ? std::size_t(cfg.branch_count()) : 0);
    for (int n = 2; n <= cfg.max_order; ++n) {
        for (int k = 1; k <= cfg.sub_tables; ++k) {
            const int b = cfg.branch_index(n, k);
            auto& table = bank.sub_tables[std::size_t(b)];
            table.resize(std::size_t(cfg.vocab_of(n, k)) * d);
            for (auto& x : table) x = T(0.02 * gaussian(rng));
            if (cfg.variant == ne_variant::subtable_v2) {
                auto& proj = bank.projections[std::size_t(b)];
                proj.resize(dim * d);
                const double sigma = 0.02 / std::sqrt(double(d));
                for (auto& x : proj) x = T(sigma * gaussian(rng));
            }
        }
    }
    if (cfg.amplification == amp_mode::layer_norm) {
        bank.ln_gain.assign(dim, T(1));
        bank.ln_bias.assign(dim, T(0));
    }
    return bank;
}

template <typename T>
embedding_bank_t<T> make_zero_bank(const ngram_config& cfg) {
    auto bank = make_bank<T>(cfg, 0);
    std::fill(bank.base.begin(), bank.base.end(), T(0));
    for (auto& t : bank.sub_tables) std::fill(t.begin(), t.end(), T(0));
    for (auto& p : bank.projections) std::fill(p.begin(), p.end(), T(0));
    return bank;
}

// Same shapes as `bank`, all values zero. Used as a gradient accumulator.
template <typename T>
embedding_bank_t<T> zeros_like(const embedding_bank_t<T>& bank) {
    embedding_bank_t<T> g;
    g.config = bank.config;
    g.base.assign(bank.base.size(), T(0));
    g.sub_tables.resize(bank.sub_tables.size());
    for (std::size_t i = 0; i < bank.sub_tables.size(); ++i) {
        g.sub_tables[i].assign(bank.sub_tables[i].size(), T(0));
    }
    g.projections.resize(bank.projections.size());
    for (std::size_t i = 0; i < bank.projections.size(); ++i) {
        g.projections[i].assign(bank.projections[i].size(), T(0));
    }
    g.ln_gain.assign(bank.ln_gain.size(), T(0));
    g.ln_bias.assign(bank.ln_bias.size(), T(0));
    return g;
}

template <typename From, typename To>
embedding_bank_t<To> bank_cast(const embedding_bank_t<From>& bank) {
    embedding_bank_t<To> out;
    out.config = bank.config;
    out.base.assign(bank.base.begin(), bank.base.end());
    out.sub_tables.resize(bank.sub_tables.size());
    for (std::size_t i = 0; i < bank.sub_tables.size(); ++i) {
        out.sub_tables[i].assign(bank.sub_tables[i].begin(), bank.sub_tables[i].end());
    }
    out.projections.resize(bank.projections.size());
    for (std::size_t i = 0; i < bank.projections.size(); ++i) {
        out.projections[i].assign(bank.projections[i].begin(), bank.projections[i].end());
    }
    out.ln_gain.assign(bank.ln_gain.begin(), bank.ln_gain.end());
    out.ln_bias.assign(bank.ln_bias.begin(), bank.ln_bias.end());
    return out;
}

// Merged (pre-amplification) embedding from already-computed bucket ids.
// This is the gather path the decode cache re-uses without re-hashing:
//
//   v1: e = (E0(t) + sum_n E_n(id_n)) / N
//   v2: e = (E0(t) + sum_{n,k} W_{n,k} E_{n,k}(id_{n,k})) / ((N-1)K + 1)
template <typename T>
void embed_from_ids(token_id token, std::span<const std::uint64_t> ids,
                    const embedding_bank_t<T>& bank, std::span<T> out,
                    embed_counters* counters = nullptr) {
    const ngram_config& cfg = bank.config;
    if (ids.size() != std::size_t(cfg.branch_count())) {
        throw std::invalid_argument("embed_from_ids: expected " +
                                    std::to_string(cfg.branch_count()) +
                                    " bucket ids, got " + std::to_string(ids.size()));
    }
    if (out.size() != std::size_t(cfg.dim)) {
        throw std::invalid_argument("embed_from_ids: output size mismatch");
    }
    const std::size_t dim = std::size_t(cfg.dim);
    const std::size_t d = std::size_t(cfg.branch_dim());

    const auto e0 = bank.base_row(token);
    std::copy(e0.begin(), e0.end(), out.begin());
    if (counters) counters->table_gathers++;

    for (int b = 0; b < cfg.branch_count(); ++b) {
        const auto row = bank.sub_row(b, ids[std::size_t(b)]);
        if (counters) counters->table_gathers++;
        if (cfg.variant == ne_variant::averaged_v1) {
            for (std::size_t i = 0; i < dim; ++i) out[i] += row[i];
        } else {
            const auto& proj = bank.projections[std::size_t(b)];
            for (std::size_t i = 0; i < dim; ++i) {
                T acc = 0;
                const T* wrow = proj.data() + i * d;
                for (std::size_t j = 0; j < d; ++j) acc += wrow[j] * row[j];
                out[i] += acc;
            }
            if (counters) counters->projection_madds += dim * d;
        }
    }
    const T scale = T(1) / T(cfg.merge_denominator());
    for (std::size_t i = 0; i < dim; ++i) out[i] *= scale;
}

// Averaged-variant embedding of one window (context = trailing N tokens,
// zero-padded by the caller).
template <typename T>
std::vector<T> embed_v1(std::span<const token_id> context,
                        const embedding_bank_t<T>& bank) {
    if (bank.config.variant != ne_variant::averaged_v1) {
        throw std::invalid_argument("embed_v1 requires the averaged variant");
    }
    const auto ids = hash_all_orders(context, bank.config);
    std::vector<T> out(std::size_t(bank.config.dim));
    embed_from_ids(context.back(), ids, bank, std::span<T>(out));
    return out;
}

// Sub-table + projection embedding of one window.
template <typename T>
std::vector<T> embed_v2(std::span<const token_id> context,
                        const embedding_bank_t<T>& bank) {
    if (bank.config.variant != ne_variant::subtable_v2) {
        throw std::invalid_argument("embed_v2 requires the sub-table variant");
    }
    const auto ids = hash_all_orders(context, bank.config);
    std::vector<T> out(std::size_t(bank.config.dim));
    embed_from_ids(context.back(), ids, bank, std::span<T>(out));
    return out;
}

// Variant dispatch, for callers that are agnostic.
template <typename T>
void embed_window(std::span<const token_id> context,
                  const embedding_bank_t<T>& bank, std::span<T> out,
                  embed_counters* counters = nullptr) {
    const auto ids = hash_all_orders(context, bank.config);
    embed_from_ids(context.back(), ids, bank, out, counters);
}

constexpr double kLayerNormEps = 1e-5;

// Amplification of a merged embedding. layer_norm uses the learnable
// gain/bias; `gain`/`bias` may be empty for the other modes.
template <typename T>
void amplify(std::span<const T> e, amp_mode mode, std::span<const T> gain,
             std::span<const T> bias, std::span<T> out) {
    const std::size_t dim = e.size();
    if (out.size() != dim) {
        throw std::invalid_argument("amplify: output size mismatch");
    }
    switch (mode) {
        case amp_mode::none:
            std::copy(e.begin(), e.end(), out.begin());
            return;
        case amp_mode::scale_sqrt_d: {
            const T s = T(std::sqrt(double(dim)));
            for (std::size_t i = 0; i < dim; ++i) out[i] = e[i] * s;
            return;
        }
        case amp_mode::layer_norm: {
            if (gain.size() != dim || bias.size() != dim) {
                throw std::invalid_argument("amplify: layer_norm needs gain/bias of size D");
            }
            T mean = 0;
            for (std::size_t i = 0; i < dim; ++i) mean += e[i];
            mean /= T(dim);
            T var = 0;
            for (std::size_t i = 0; i < dim; ++i) {
                const T c = e[i] - mean;
                var += c * c;
            }
            var /= T(dim);
            const T inv_std = T(1) / std::sqrt(var + T(kLayerNormEps));
            for (std::size_t i = 0; i < dim; ++i) {
                out[i] = gain[i] * (e[i] - mean) * inv_std + bias[i];
            }
            return;
        }
    }
}

template <typename T>
std::vector<T> amplify(std::span<const T> e, const embedding_bank_t<T>& bank) {
    std::vector<T> out(e.size());
    amplify<T>(e, bank.config.amplification, bank.ln_gain, bank.ln_bias,
               std::span<T>(out));
    return out;
}

// d(amplify)/d(input) and layer-norm parameter gradients. `pre` is the
// amplification input (the merged embedding); accumulates into grads.
template <typename T>
void amplify_backward(std::span<const T> pre, std::span<const T> upstream,
                      const embedding_bank_t<T>& bank,
                      embedding_bank_t<T>& grads, std::span<T> d_pre) {
    const std::size_t dim = pre.size();
    switch (bank.config.amplification) {
        case amp_mode::none:
            std::copy(upstream.begin(), upstream.end(), d_pre.begin());
            return;
        case amp_mode::scale_sqrt_d: {
            const T s = T(std::sqrt(double(dim)));
            for (std::size_t i = 0; i < dim; ++i) d_pre[i] = upstream[i] * s;
            return;
        }
        case amp_mode::layer_norm: {
            T mean = 0;
            for (std::size_t i = 0; i < dim; ++i) mean += pre[i];
            mean /= T(dim);
            T var = 0;
            for (std::size_t i = 0; i < dim; ++i) {
                const T c = pre[i] - mean;
                var += c * c;
            }
            var /= T(dim);
            const T inv_std = T(1) / std::sqrt(var + T(kLayerNormEps));
            // s_i = dL/dxhat_i; d_pre = (s - mean(s) - xhat * mean(s*xhat)) * inv_std
            T mean_s = 0, mean_sx = 0;
            for (std::size_t i = 0; i < dim; ++i) {
                const T xhat = (pre[i] - mean) * inv_std;
                const T s = upstream[i] * bank.ln_gain[i];
                grads.ln_gain[i] += upstream[i] * xhat;
                grads.ln_bias[i] += upstream[i];
                mean_s += s;
                mean_sx += s * xhat;
            }
            mean_s /= T(dim);
            mean_sx /= T(dim);
            for (std::size_t i = 0; i < dim; ++i) {
                const T xhat = (pre[i] - mean) * inv_std;
                const T s = upstream[i] * bank.ln_gain[i];
                d_pre[i] = (s - mean_s - xhat * mean_sx) * inv_std;
            }
            return;
        }
    }
}

// Gradients of the merged (pre-amplification) embedding w.r.t. the bank
// parameters it touched, accumulated into `grads`. Re-hashes the context;
// rows not touched keep zero gradient.
template <typename T>
void embed_backward(std::span<const token_id> context,
                    const embedding_bank_t<T>& bank,
                    std::span<const T> upstream, embedding_bank_t<T>& grads) {
    const ngram_config& cfg = bank.config;
    if (upstream.size() != std::size_t(cfg.dim)) {
        throw std::invalid_argument("embed_backward: upstream size mismatch");
    }
    const auto ids = hash_all_orders(context, cfg);
    const std::size_t dim = std::size_t(cfg.dim);
    const std::size_t d = std::size_t(cfg.branch_dim());
    const T scale = T(1) / T(cfg.merge_denominator());

    auto g0 = grads.base_row(context.back());
    for (std::size_t i = 0; i < dim; ++i) g0[i] += scale * upstream[i];

    for (int b = 0; b < cfg.branch_count(); ++b) {
        const std::uint64_t bucket = ids[std::size_t(b)];
        auto grow = grads.sub_row(b, bucket);
        if (cfg.variant == ne_variant::averaged_v1) {
            for (std::size_t i = 0; i < dim; ++i) grow[i] += scale * upstream[i];
        } else {
            const auto row = bank.sub_row(b, bucket);
            const auto& proj = bank.projections[std::size_t(b)];
            auto& gproj = grads.projections[std::size_t(b)];
            for (std::size_t i = 0; i < dim; ++i) {
                const T u = scale * upstream[i];
                const T* wrow = proj.data() + i * d;
                T* gwrow = gproj.data() + i * d;
                for (std::size_t j = 0; j < d; ++j) {
                    gwrow[j] += u * row[j];
                    grow[j] += u * wrow[j];
                }
            }
        }
    }
}

// Embedding of a whole sequence: row i is the embedding of the window
// ending at position i, zero-padded before the sequence start (or drawn
// from `prior_context`, the tokens that precede tokens[0], when resuming
// mid-sequence). Amplification is applied per the bank config.
template <typename T>
struct sequence_embedding {
    std::vector<T> rows;    // len x D, amplified
    std::vector<T> merged;  // len x D, before amplification
};

namespace detail {

inline void fill_context(std::span<const token_id> tokens, std::size_t pos,
                         int order, std::span<const token_id> prior_context,
                         std::vector<token_id>& ctx) {
    ctx.resize(std::size_t(order));
    for (int j = 0; j < order; ++j) {
        const std::ptrdiff_t idx =
            std::ptrdiff_t(pos) - (order - 1) + j;
        if (idx >= 0) {
            ctx[std::size_t(j)] = tokens[std::size_t(idx)];
        } else {
            const std::ptrdiff_t pidx = std::ptrdiff_t(prior_context.size()) + idx;
            ctx[std::size_t(j)] = pidx >= 0 ? prior_context[std::size_t(pidx)] : 0;
        }
    }
}

}  // namespace detail

template <typename T>
sequence_embedding<T> embed_sequence_cached(
    std::span<const token_id> tokens, const embedding_bank_t<T>& bank,
    std::span<const token_id> prior_context = {},
    embed_counters* counters = nullptr) {
    const ngram_config& cfg = bank.config;
    const std::size_t dim = std::size_t(cfg.dim);
    sequence_embedding<T> out;
    out.rows.resize(tokens.size() * dim);
    out.merged.resize(tokens.size() * dim);

    std::vector<token_id> ctx;
    for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
        detail::fill_context(tokens, pos, cfg.max_order, prior_context, ctx);
        auto merged = std::span<T>(out.merged).subspan(pos * dim, dim);
        embed_window<T>(ctx, bank, merged, counters);
        amplify<T>(merged, cfg.amplification, bank.ln_gain, bank.ln_bias,
                   std::span<T>(out.rows).subspan(pos * dim, dim));
    }
    return out;
}

template <typename T>
std::vector<T> embed_sequence(std::span<const token_id> tokens,
                              const embedding_bank_t<T>& bank,
                              std::span<const token_id> prior_context = {}) {
    return embed_sequence_cached(tokens, bank, prior_context).rows;
}

// Backward through amplification and the merge, for every row of a
// sequence embedding. `merged` must be the pre-amplification values from
// embed_sequence_cached.
template <typename T>
void embed_sequence_backward(std::span<const token_id> tokens,
                             const embedding_bank_t<T>& bank,
                             std::span<const T> merged,
                             std::span<const T> upstream,
                             embedding_bank_t<T>& grads,
                             std::span<const token_id> prior_context = {}) {
    const ngram_config& cfg = bank.config;
    const std::size_t dim = std::size_t(cfg.dim);
    std::vector<token_id> ctx;
    std::vector<T> d_pre(dim);
    for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
        detail::fill_context(tokens, pos, cfg.max_order, prior_context, ctx);
        amplify_backward<T>(merged.subspan(pos * dim, dim),
                            upstream.subspan(pos * dim, dim), bank, grads,
                            std::span<T>(d_pre));
        embed_backward<T>(ctx, bank, d_pre, grads);
    }
}

// ---- parameter accounting ----

struct param_count_report {
    std::uint64_t base = 0;
    std::uint64_t sub_tables = 0;
    std::uint64_t projections = 0;
    std::uint64_t total = 0;
};

param_count_report param_count(const ngram_config& cfg);

struct budget_info {
    std::uint64_t embedding_params = 0;
    std::uint64_t other_params = 0;
    double fraction = 0.0;       // embedding / (embedding + other)
    bool over_budget = false;    // fraction strictly above 1/2
};

budget_info budget_report(std::uint64_t embedding_params,
                          std::uint64_t other_params);
budget_info budget_report(const ngram_config& cfg, std::uint64_t other_params);

// One-paragraph sizing guidance, including the production reference point.
std::string budget_guidance(const budget_info& info);

// ---- serialization ----
// Single file: u32 little-endian header length, the config echo as JSON,
// then raw little-endian float32 tensors in declaration order (base,
// sub-tables sorted by (n,k), projections sorted by (n,k), then layer-norm
// gain and bias when the config uses layer_norm amplification).

void save_bank(const embedding_bank& bank, const std::string& path);
embedding_bank load_bank(const std::string& path);

}  // namespace ngram

#pragma once

// Straight-line reference implementations of the two embedding forms and
// the amplification modes, written directly from their defining formulas
// and kept independent of the library's gather/merge kernel.

#include <cmath>
#include <span>
#include <vector>

#include "ngram/embedding.hpp"
#include "oracles.hpp"

namespace oracle {

template <typename T>
std::vector<T> embed_v1(std::span<const ngram::token_id> context,
                        const ngram::embedding_bank_t<T>& bank) {
    const auto& cfg = bank.config;
    const std::size_t D = std::size_t(cfg.dim);
    std::vector<T> e(D, T(0));
    for (std::size_t i = 0; i < D; ++i) {
        e[i] = bank.base[std::size_t(context.back()) * D + i];
    }
    for (int n = 2; n <= cfg.max_order; ++n) {
        const auto window = context.subspan(context.size() - std::size_t(n));
        const std::uint64_t h =
            polynomial_hash(window, cfg.base_vocab, cfg.vocab_of(n, 1));
        const auto& table = bank.sub_tables[std::size_t(cfg.branch_index(n, 1))];
        for (std::size_t i = 0; i < D; ++i) {
            e[i] += table[std::size_t(h) * D + i];
        }
    }
    for (auto& x : e) x /= T(cfg.max_order);
    return e;
}

template <typename T>
std::vector<T> embed_v2(std::span<const ngram::token_id> context,
                        const ngram::embedding_bank_t<T>& bank) {
    const auto& cfg = bank.config;
    const std::size_t D = std::size_t(cfg.dim);
    const std::size_t d = std::size_t(cfg.branch_dim());
    std::vector<T> e(D, T(0));
    for (std::size_t i = 0; i < D; ++i) {
        e[i] = bank.base[std::size_t(context.back()) * D + i];
    }
    for (int n = 2; n <= cfg.max_order; ++n) {
        for (int k = 1; k <= cfg.sub_tables; ++k) {
            const auto window = context.subspan(context.size() - std::size_t(n));
            const std::uint64_t h =
                polynomial_hash(window, cfg.base_vocab, cfg.vocab_of(n, k));
            const int b = cfg.branch_index(n, k);
            const auto& table = bank.sub_tables[std::size_t(b)];
            const auto& proj = bank.projections[std::size_t(b)];
            for (std::size_t i = 0; i < D; ++i) {
                T acc = 0;
                for (std::size_t j = 0; j < d; ++j) {
                    acc += proj[i * d + j] * table[std::size_t(h) * d + j];
                }
                e[i] += acc;
            }
        }
    }
    const T denom = T((cfg.max_order - 1) * cfg.sub_tables + 1);
    for (auto& x : e) x /= denom;
    return e;
}

template <typename T>
std::vector<T> amplify(const std::vector<T>& e, ngram::amp_mode mode,
                       std::span<const T> gain, std::span<const T> bias) {
    const std::size_t D = e.size();
    std::vector<T> out(D);
    if (mode == ngram::amp_mode::none) {
        out = e;
    } else if (mode == ngram::amp_mode::scale_sqrt_d) {
        for (std::size_t i = 0; i < D; ++i) out[i] = e[i] * T(std::sqrt(double(D)));
    } else {
        T mean = 0;
        for (const auto x : e) mean += x;
        mean /= T(D);
        T var = 0;
        for (const auto x : e) var += (x - mean) * (x - mean);
        var /= T(D);
        for (std::size_t i = 0; i < D; ++i) {
            out[i] = gain[i] * (e[i] - mean) / std::sqrt(var + T(1e-5)) + bias[i];
        }
    }
    return out;
}

}  // namespace oracle

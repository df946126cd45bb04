#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "ngram/embedding.hpp"

namespace ngram {

// Parameters of one per-layer-embedding FFN block. The plain form gates a
// per-layer embedding table row; the n-gram form gates a per-layer
// embedding-bank output instead (table left empty). Both substitute the
// gated vector for the usual up-projection output:
//
//   y = W_d (SiLU(W_g x) ⊙ g),   g = E0l(t)  or  g = bank embedding
template <typename T>
struct ple_params_t {
    int d_model = 0;
    int hidden = 0;
    std::uint32_t base_vocab = 0;
    std::vector<T> gate;   // hidden x d_model
    std::vector<T> down;   // d_model x hidden
    std::vector<T> table;  // base_vocab x hidden; empty for the n-gram form
};

using ple_params = ple_params_t<float>;

void ple_shape_check(int d_model, int hidden, std::uint32_t base_vocab);

template <typename T>
ple_params_t<T> make_ple_params(int d_model, int hidden, std::uint32_t base_vocab,
                                std::uint64_t seed) {
    ple_shape_check(d_model, hidden, base_vocab);
    ple_params_t<T> p;
    p.d_model = d_model;
    p.hidden = hidden;
    p.base_vocab = base_vocab;
    rng64 rng(seed);
    p.gate.resize(std::size_t(hidden) * std::size_t(d_model));
    p.down.resize(std::size_t(d_model) * std::size_t(hidden));
    p.table.resize(std::size_t(base_vocab) * std::size_t(hidden));
    for (auto& x : p.gate) x = T(0.02 * gaussian(rng));
    for (auto& x : p.down) x = T(0.02 * gaussian(rng));
    for (auto& x : p.table) x = T(0.02 * gaussian(rng));
    return p;
}

template <typename T>
ple_params_t<T> ple_zeros_like(const ple_params_t<T>& p) {
    ple_params_t<T> g;
    g.d_model = p.d_model;
    g.hidden = p.hidden;
    g.base_vocab = p.base_vocab;
    g.gate.assign(p.gate.size(), T(0));
    g.down.assign(p.down.size(), T(0));
    g.table.assign(p.table.size(), T(0));
    return g;
}

template <typename T>
inline T silu(T x) {
    return x / (T(1) + std::exp(-x));
}

template <typename T>
inline T silu_grad(T x) {
    const T s = T(1) / (T(1) + std::exp(-x));
    return s * (T(1) + x * (T(1) - s));
}

namespace detail {

// Shared SwiGLU body: y = W_d (SiLU(W_g x) ⊙ g).
template <typename T>
std::vector<T> gated_ffn(std::span<const T> x, std::span<const T> g,
                         const ple_params_t<T>& p) {
    if (x.size() != std::size_t(p.d_model) || g.size() != std::size_t(p.hidden)) {
        throw std::invalid_argument("ple: input/gate width mismatch");
    }
    const std::size_t H = std::size_t(p.hidden), D = std::size_t(p.d_model);
    std::vector<T> h(H);
    for (std::size_t r = 0; r < H; ++r) {
        T acc = 0;
        const T* row = p.gate.data() + r * D;
        for (std::size_t c = 0; c < D; ++c) acc += row[c] * x[c];
        h[r] = silu(acc) * g[r];
    }
    std::vector<T> y(D);
    for (std::size_t r = 0; r < D; ++r) {
        T acc = 0;
        const T* row = p.down.data() + r * H;
        for (std::size_t c = 0; c < H; ++c) acc += row[c] * h[c];
        y[r] = acc;
    }
    return y;
}

// Backward of the shared body; accumulates dW_g, dW_d, dx and returns
// dL/dg so the caller can route it to its table row or layer bank.
template <typename T>
std::vector<T> gated_ffn_backward(std::span<const T> x, std::span<const T> g,
                                  const ple_params_t<T>& p,
                                  std::span<const T> upstream,
                                  ple_params_t<T>& grads, std::span<T> dx) {
    const std::size_t H = std::size_t(p.hidden), D = std::size_t(p.d_model);
    // Recompute the pre-activations.
    std::vector<T> u(H), s(H), h(H);
    for (std::size_t r = 0; r < H; ++r) {
        T acc = 0;
        const T* row = p.gate.data() + r * D;
        for (std::size_t c = 0; c < D; ++c) acc += row[c] * x[c];
        u[r] = acc;
        s[r] = silu(acc);
        h[r] = s[r] * g[r];
    }

    std::vector<T> dh(H, T(0));
    for (std::size_t r = 0; r < D; ++r) {
        const T up = upstream[r];
        const T* row = p.down.data() + r * H;
        T* grow = grads.down.data() + r * H;
        for (std::size_t c = 0; c < H; ++c) {
            grow[c] += up * h[c];
            dh[c] += up * row[c];
        }
    }

    std::vector<T> dg(H);
    for (std::size_t r = 0; r < H; ++r) {
        dg[r] = dh[r] * s[r];
        const T du = dh[r] * g[r] * silu_grad(u[r]);
        const T* row = p.gate.data() + r * D;
        T* grow = grads.gate.data() + r * D;
        for (std::size_t c = 0; c < D; ++c) {
            grow[c] += du * x[c];
            dx[c] += du * row[c];
        }
    }
    return dg;
}

}  // namespace detail

// Plain per-layer form: gate the layer table row of the current token.
template <typename T>
std::vector<T> ffn_ple(std::span<const T> x, token_id token,
                       const ple_params_t<T>& p) {
    if (std::uint64_t(token) >= p.base_vocab) {
        throw std::out_of_range("ffn_ple: token out of range");
    }
    const auto g = std::span<const T>(p.table).subspan(
        std::size_t(token) * std::size_t(p.hidden), std::size_t(p.hidden));
    return detail::gated_ffn<T>(x, g, p);
}

template <typename T>
void ffn_ple_backward(std::span<const T> x, token_id token,
                      const ple_params_t<T>& p, std::span<const T> upstream,
                      ple_params_t<T>& grads, std::span<T> dx) {
    const auto g = std::span<const T>(p.table).subspan(
        std::size_t(token) * std::size_t(p.hidden), std::size_t(p.hidden));
    const auto dg = detail::gated_ffn_backward<T>(x, g, p, upstream, grads, dx);
    T* grow = grads.table.data() + std::size_t(token) * std::size_t(p.hidden);
    for (std::size_t i = 0; i < dg.size(); ++i) grow[i] += dg[i];
}

// N-gram per-layer form: gate the layer bank's embedding of the trailing
// context. The layer bank's width must equal the gate width and it uses
// the raw merge (no amplification).
template <typename T>
std::vector<T> ffn_plne(std::span<const T> x, std::span<const token_id> context,
                        const embedding_bank_t<T>& layer_bank,
                        const ple_params_t<T>& p) {
    if (layer_bank.config.dim != p.hidden) {
        throw std::invalid_argument("ffn_plne: layer bank width must equal gate width");
    }
    if (layer_bank.config.amplification != amp_mode::none) {
        throw std::invalid_argument("ffn_plne: layer banks use no amplification");
    }
    std::vector<T> g(std::size_t(p.hidden));
    embed_window<T>(context, layer_bank, std::span<T>(g));
    return detail::gated_ffn<T>(x, g, p);
}

template <typename T>
void ffn_plne_backward(std::span<const T> x, std::span<const token_id> context,
                       const embedding_bank_t<T>& layer_bank,
                       const ple_params_t<T>& p, std::span<const T> upstream,
                       ple_params_t<T>& grads, embedding_bank_t<T>& bank_grads,
                       std::span<T> dx) {
    std::vector<T> g(std::size_t(p.hidden));
    embed_window<T>(context, layer_bank, std::span<T>(g));
    const auto dg = detail::gated_ffn_backward<T>(x, g, p, upstream, grads, dx);
    embed_backward<T>(context, layer_bank, dg, bank_grads);
}

}  // namespace ngram

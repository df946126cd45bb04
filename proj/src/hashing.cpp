#include "ngram/hashing.hpp"

#include <stdexcept>
#include <string>

namespace ngram {

namespace {

// (a * b) mod m without overflow for any 64-bit operands.
inline std::uint64_t mulmod(std::uint64_t a, std::uint64_t b,
                            std::uint64_t m) {
    return static_cast<std::uint64_t>(
        static_cast<unsigned __int128>(a) * b % m);
}

}  // namespace

void hash_spec::validate() const {
    if (order < 2) {
        throw std::invalid_argument("hash_spec: order must be >= 2, got " +
                                    std::to_string(order));
    }
    if (base < 2) {
        throw std::invalid_argument("hash_spec: base must be >= 2, got " +
                                    std::to_string(base));
    }
    if (modulus < 1) {
        throw std::invalid_argument("hash_spec: modulus must be >= 1");
    }
}

std::uint64_t rolling_hash(std::span<const token_id> window,
                           const hash_spec& spec) {
    spec.validate();
    if (window.size() != static_cast<std::size_t>(spec.order)) {
        throw std::invalid_argument(
            "rolling_hash: window length " + std::to_string(window.size()) +
            " does not match order " + std::to_string(spec.order));
    }

    const std::uint64_t m = spec.modulus;
    const std::uint64_t base_mod = spec.base % m;
    std::uint64_t acc = 0;
    std::uint64_t power = 1 % m;  // V0^j mod m, j ascending
    // j = 0 weights the most recent token, i.e. the last window element.
    for (int j = 0; j < spec.order; ++j) {
        const token_id t = window[window.size() - 1 - std::size_t(j)];
        if (std::uint64_t(t) >= spec.base) {
            throw std::out_of_range(
                "rolling_hash: token " + std::to_string(t) +
                " out of range for base vocabulary " +
                std::to_string(spec.base));
        }
        acc = (acc + mulmod(std::uint64_t(t) % m, power, m)) % m;
        power = mulmod(power, base_mod, m);
    }
    return acc;
}

std::vector<std::uint64_t> hash_all_orders(std::span<const token_id> context,
                                           const ngram_config& cfg) {
    cfg.validate();
    if (context.size() != static_cast<std::size_t>(cfg.max_order)) {
        throw std::invalid_argument(
            "hash_all_orders: context length " +
            std::to_string(context.size()) + " does not match max order " +
            std::to_string(cfg.max_order));
    }

    std::vector<std::uint64_t> ids(std::size_t(cfg.branch_count()), 0);
    for (int n = 2; n <= cfg.max_order; ++n) {
        const auto window = context.subspan(context.size() - std::size_t(n));
        for (int k = 1; k <= cfg.sub_tables; ++k) {
            const hash_spec spec{n, cfg.base_vocab, cfg.vocab_of(n, k)};
            ids[std::size_t(cfg.branch_index(n, k))] =
                rolling_hash(window, spec);
        }
    }
    return ids;
}

}  // namespace ngram

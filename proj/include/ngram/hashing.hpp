#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ngram/config.hpp"

namespace ngram {

// A single polynomial-rolling-hash instance: maps windows of `order` token
// ids drawn from a base vocabulary of size `base` into [0, modulus).
struct hash_spec {
    int order = 2;               // n
    std::uint64_t base = 2;      // V0
    std::uint64_t modulus = 1;   // V_n (or V_{n,k})

    void validate() const;
};

// Hash of one token window, oldest token first. The most recent token
// carries weight V0^0, the oldest V0^(n-1):
//
//   h = (sum_j window[n-1-j] * V0^j) mod modulus
//
// Every multiply-add is reduced modulo `modulus` as it happens; V0^j is
// never materialized at full width, so the result is exact for any order.
// Throws std::invalid_argument on a window/order mismatch and
// std::out_of_range on a token >= base.
std::uint64_t rolling_hash(std::span<const token_id> window,
                           const hash_spec& spec);

// Bucket ids for every (n,k) branch of `cfg`, over a trailing context of
// exactly cfg.max_order tokens (zero-padded by the caller). Entry
// cfg.branch_index(n,k) holds the hash of the last n tokens under modulus
// V_{n,k}. Empty for the degenerate base-only config.
std::vector<std::uint64_t> hash_all_orders(std::span<const token_id> context,
                                           const ngram_config& cfg);

}  // namespace ngram

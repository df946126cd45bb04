#pragma once

#include <cstdint>
#include <list>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ngram/embedding.hpp"

namespace ngram {

// Work and traffic counters exported by the bench CLI. Gather/projection
// counts are the machine-independent latency proxy; wall-clock is reported
// elsewhere and never asserted.
struct cache_counters {
    std::uint64_t appends = 0;
    std::uint64_t rollbacks = 0;
    std::uint64_t memo_hits = 0;
    std::uint64_t memo_misses = 0;
    std::uint64_t table_gathers = 0;
    std::uint64_t projection_madds = 0;
    std::uint64_t draft_table_gathers = 0;
    std::uint64_t verify_table_gathers = 0;
};

std::string counters_to_json(const cache_counters& c);

// Handle to a point in a sequence cache's history. Valid until a rollback
// to an earlier snapshot (or a discard) removes it.
struct snapshot_handle {
    std::uint64_t owner = 0;
    std::uint64_t serial = 0;
    std::size_t slot = 0;
};

// Per-sequence incremental n-gram id state: a ring of the trailing N-1
// confirmed tokens (zero-padded before the start) plus a snapshot stack
// for draft/verify decoding. Appending costs O(N*K) arithmetic regardless
// of how many tokens were decoded; memory is O(N + snapshot depth).
// Single-owner: one decode stream per instance.
class sequence_cache {
  public:
    explicit sequence_cache(const ngram_config& cfg);

    // Confirms one token and returns the (n,k) bucket ids of the window
    // ending at it (indexed by cfg.branch_index).
    std::vector<std::uint64_t> append(token_id token,
                                      cache_counters* counters = nullptr);

    snapshot_handle snapshot();
    void rollback(const snapshot_handle& h, cache_counters* counters = nullptr);
    // Removes the top-of-stack snapshot, invalidating its handle.
    void discard(const snapshot_handle& h);

    std::uint64_t length() const { return length_; }
    std::size_t snapshot_depth() const { return snaps_.size(); }
    token_id last_token() const { return last_; }
    const ngram_config& config() const { return cfg_; }
    std::span<const token_id> ring() const { return ring_; }

  private:
    void check(const snapshot_handle& h) const;

    ngram_config cfg_;
    std::uint64_t uid_ = 0;
    std::uint64_t length_ = 0;
    token_id last_ = 0;
    std::vector<token_id> ring_;  // trailing N-1 tokens, oldest first

    struct snap {
        std::uint64_t serial;
        std::uint64_t length;
        token_id last;
        std::vector<token_id> ring;
    };
    std::vector<snap> snaps_;
    std::uint64_t next_serial_ = 1;
};

// LRU-memoized embedding lookup keyed by the full (n,k)->bucket id-set
// plus the base token id, hashed to 128 bits. A hit returns a vector
// bit-identical to recomputation; a miss gathers, merges and inserts.
// Instances are externally synchronized when shared across streams.
class embedding_memo {
  public:
    explicit embedding_memo(std::size_t capacity);

    std::vector<float> lookup(token_id token,
                              std::span<const std::uint64_t> ids,
                              const embedding_bank& bank,
                              cache_counters* counters = nullptr);

    std::size_t size() const { return entries_.size(); }
    std::size_t capacity() const { return capacity_; }

  private:
    struct key128 {
        std::uint64_t hi = 0, lo = 0;
        bool operator==(const key128&) const = default;
    };
    struct key_hash {
        std::size_t operator()(const key128& k) const {
            return std::size_t(k.hi ^ (k.lo * 0x9e3779b97f4a7c15ULL));
        }
    };
    static key128 make_key(token_id token, std::span<const std::uint64_t> ids);

    std::size_t capacity_;
    std::list<std::pair<key128, std::vector<float>>> entries_;  // front = MRU
    std::unordered_map<key128, decltype(entries_)::iterator, key_hash> index_;
};

struct draft_options {
    // Model the draft model running a conventional embedding layer: the
    // draft phase fetches only base rows and leaves the memo cold, so the
    // n-gram work happens at verification instead.
    bool conventional_draft_embedding = false;
};

struct draft_result {
    // Merged (pre-amplification) embeddings of the accepted prefix.
    std::vector<std::vector<float>> accepted;
};

// Draft/verify round: speculate `draft` tokens against a snapshot, then
// accept the first `accept_count` and roll the rest back. With the memo
// warm, every accepted embedding is served without any table gather
// (tracked in counters->verify_table_gathers).
draft_result draft_verify(sequence_cache& state, embedding_memo& memo,
                          const embedding_bank& bank,
                          std::span<const token_id> draft,
                          std::size_t accept_count,
                          cache_counters* counters = nullptr,
                          const draft_options& opts = {});

}  // namespace ngram

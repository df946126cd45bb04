#include "ngram/cache.hpp"

#include <atomic>
#include <sstream>
#include <stdexcept>

#include "ngram/hashing.hpp"

namespace ngram {

std::string counters_to_json(const cache_counters& c) {
    std::ostringstream ss;
    ss << "{\"appends\":" << c.appends << ",\"rollbacks\":" << c.rollbacks
       << ",\"memo_hits\":" << c.memo_hits << ",\"memo_misses\":" << c.memo_misses
       << ",\"table_gathers\":" << c.table_gathers
       << ",\"projection_madds\":" << c.projection_madds
       << ",\"draft_table_gathers\":" << c.draft_table_gathers
       << ",\"verify_table_gathers\":" << c.verify_table_gathers << "}";
    return ss.str();
}

namespace {

std::uint64_t next_uid() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1);
}

}  // namespace

sequence_cache::sequence_cache(const ngram_config& cfg) : cfg_(cfg) {
    cfg_.validate();
    uid_ = next_uid();
    ring_.assign(cfg_.max_order > 1 ? std::size_t(cfg_.max_order - 1) : 0, 0);
}

std::vector<std::uint64_t> sequence_cache::append(token_id token,
                                                  cache_counters* counters) {
    if (std::uint64_t(token) >= cfg_.base_vocab) {
        throw std::out_of_range("sequence_cache: token " + std::to_string(token) +
                                " out of range");
    }
    // Window ending at the new token: trailing ring plus the token itself.
    std::vector<token_id> window(ring_.size() + 1);
    std::copy(ring_.begin(), ring_.end(), window.begin());
    window.back() = token;
    auto ids = hash_all_orders(window, cfg_);

    if (!ring_.empty()) {
        std::copy(ring_.begin() + 1, ring_.end(), ring_.begin());
        ring_.back() = token;
    }
    last_ = token;
    ++length_;
    if (counters) counters->appends++;
    return ids;
}

snapshot_handle sequence_cache::snapshot() {
    snap s;
    s.serial = next_serial_++;
    s.length = length_;
    s.last = last_;
    s.ring = ring_;
    snaps_.push_back(std::move(s));
    return {uid_, snaps_.back().serial, snaps_.size() - 1};
}

void sequence_cache::check(const snapshot_handle& h) const {
    if (h.owner != uid_) {
        throw std::invalid_argument("sequence_cache: handle belongs to another state");
    }
    if (h.slot >= snaps_.size() || snaps_[h.slot].serial != h.serial) {
        throw std::invalid_argument("sequence_cache: stale snapshot handle");
    }
}

void sequence_cache::rollback(const snapshot_handle& h, cache_counters* counters) {
    check(h);
    const snap& s = snaps_[h.slot];
    length_ = s.length;
    last_ = s.last;
    ring_ = s.ring;
    // Snapshots taken after this one describe futures that no longer
    // exist; the handle itself stays valid for repeated rollbacks.
    snaps_.resize(h.slot + 1);
    if (counters) counters->rollbacks++;
}

void sequence_cache::discard(const snapshot_handle& h) {
    check(h);
    if (h.slot + 1 != snaps_.size()) {
        throw std::invalid_argument("sequence_cache: only the top snapshot can be discarded");
    }
    snaps_.pop_back();
}

embedding_memo::embedding_memo(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ < 1) {
        throw std::invalid_argument("embedding_memo: capacity must be >= 1");
    }
}

embedding_memo::key128 embedding_memo::make_key(
    token_id token, std::span<const std::uint64_t> ids) {
    auto mix = [](std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    };
    key128 k{0x6a09e667f3bcc908ULL, 0xbb67ae8584caa73bULL};
    auto absorb = [&](std::uint64_t v) {
        k.hi = mix(k.hi ^ v);
        k.lo = mix(k.lo + (v ^ 0xa5a5a5a5a5a5a5a5ULL));
    };
    absorb(token);
    absorb(ids.size());
    for (const auto id : ids) absorb(id);
    return k;
}

std::vector<float> embedding_memo::lookup(token_id token,
                                          std::span<const std::uint64_t> ids,
                                          const embedding_bank& bank,
                                          cache_counters* counters) {
    const key128 key = make_key(token, ids);
    if (const auto it = index_.find(key); it != index_.end()) {
        entries_.splice(entries_.begin(), entries_, it->second);
        if (counters) counters->memo_hits++;
        return it->second->second;
    }

    std::vector<float> e(std::size_t(bank.config.dim));
    embed_counters ec;
    embed_from_ids<float>(token, ids, bank, e, &ec);
    if (counters) {
        counters->memo_misses++;
        counters->table_gathers += ec.table_gathers;
        counters->projection_madds += ec.projection_madds;
    }

    if (entries_.size() == capacity_) {
        index_.erase(entries_.back().first);
        entries_.pop_back();
    }
    entries_.emplace_front(key, e);
    index_[key] = entries_.begin();
    return e;
}

draft_result draft_verify(sequence_cache& state, embedding_memo& memo,
                          const embedding_bank& bank,
                          std::span<const token_id> draft,
                          std::size_t accept_count, cache_counters* counters,
                          const draft_options& opts) {
    if (accept_count > draft.size()) {
        throw std::invalid_argument("draft_verify: accept count exceeds draft length");
    }
    const auto h = state.snapshot();

    // Draft phase: speculate every token, warming the memo unless the
    // draft model bypasses the n-gram path with a conventional lookup.
    for (const token_id t : draft) {
        const auto ids = state.append(t, counters);
        if (opts.conventional_draft_embedding) {
            bank.base_row(t);  // one base-table row fetch for the draft model
            if (counters) {
                counters->table_gathers++;
                counters->draft_table_gathers++;
            }
        } else {
            const std::uint64_t before = counters ? counters->table_gathers : 0;
            memo.lookup(t, ids, bank, counters);
            if (counters) {
                counters->draft_table_gathers += counters->table_gathers - before;
            }
        }
    }

    // Verify phase: keep the accepted prefix, roll back the rest.
    state.rollback(h, counters);
    draft_result result;
    result.accepted.reserve(accept_count);
    for (std::size_t i = 0; i < accept_count; ++i) {
        const auto ids = state.append(draft[i], counters);
        const std::uint64_t before = counters ? counters->table_gathers : 0;
        result.accepted.push_back(memo.lookup(draft[i], ids, bank, counters));
        if (counters) {
            counters->verify_table_gathers += counters->table_gathers - before;
        }
    }
    state.discard(h);
    return result;
}

}  // namespace ngram

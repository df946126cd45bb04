#include "ngram/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace ngram {

void corpus_analyzer::bucket_set::init(std::uint64_t m) {
    modulus = m;
    constexpr std::uint64_t kBitmapCutoff = std::uint64_t(1) << 26;
    if (m <= kBitmapCutoff) {
        bits.assign(std::size_t((m + 63) / 64), 0);
    }
}

void corpus_analyzer::bucket_set::insert(std::uint64_t b) {
    if (!bits.empty()) {
        std::uint64_t& word = bits[std::size_t(b >> 6)];
        const std::uint64_t mask = std::uint64_t(1) << (b & 63);
        if (!(word & mask)) {
            word |= mask;
            ++count;
        }
    } else {
        if (sparse.insert(b).second) ++count;
    }
}

void corpus_analyzer::bucket_set::merge(const bucket_set& other) {
    if (!bits.empty()) {
        count = 0;
        for (std::size_t i = 0; i < bits.size(); ++i) {
            bits[i] |= other.bits[i];
            count += std::uint64_t(__builtin_popcountll(bits[i]));
        }
    } else {
        for (const auto b : other.sparse) sparse.insert(b);
        count = sparse.size();
    }
}

corpus_analyzer::corpus_analyzer(std::uint64_t base_vocab,
                                 std::vector<int> orders,
                                 std::vector<std::uint64_t> moduli)
    : base_vocab_(base_vocab),
      orders_(std::move(orders)),
      moduli_(std::move(moduli)) {
    if (base_vocab_ < 2) {
        throw std::invalid_argument("corpus_analyzer: base vocabulary must be >= 2");
    }
    if (orders_.empty() || moduli_.empty()) {
        throw std::invalid_argument("corpus_analyzer: need at least one order and one modulus");
    }
    int max_order = 0;
    for (const int n : orders_) {
        if (n < 2) {
            throw std::invalid_argument("corpus_analyzer: orders must be >= 2");
        }
        max_order = std::max(max_order, n);
    }
    for (const auto m : moduli_) {
        if (m < 1) {
            throw std::invalid_argument("corpus_analyzer: moduli must be >= 1");
        }
    }

    // Exact window identity is the polynomial value, so V0^order must fit
    // the 128-bit key.
    powers_.resize(std::size_t(max_order) + 1);
    powers_[0] = 1;
    for (int j = 1; j <= max_order; ++j) {
        const unsigned __int128 prev = powers_[std::size_t(j - 1)];
        if (prev > (~(unsigned __int128)0) / base_vocab_) {
            throw std::invalid_argument(
                "corpus_analyzer: V0^order exceeds 128 bits; exact distinct "
                "n-gram counting is limited to order*log2(V0) < 128");
        }
        powers_[std::size_t(j)] = prev * base_vocab_;
    }

    ngrams_seen_.assign(orders_.size(), 0);
    ngram_sets_.resize(orders_.size());
    bucket_sets_.resize(orders_.size() * moduli_.size());
    for (std::size_t oi = 0; oi < orders_.size(); ++oi) {
        for (std::size_t mi = 0; mi < moduli_.size(); ++mi) {
            bucket_sets_[oi * moduli_.size() + mi].init(moduli_[mi]);
        }
    }
}

void corpus_analyzer::add_sequence(std::span<const token_id> seq) {
    ++sequences_;
    tokens_ += seq.size();
    for (std::size_t pos = 0; pos < seq.size(); ++pos) {
        if (std::uint64_t(seq[pos]) >= base_vocab_) {
            throw std::out_of_range("corpus_analyzer: token " +
                                    std::to_string(seq[pos]) +
                                    " out of range for base vocabulary " +
                                    std::to_string(base_vocab_));
        }
        for (std::size_t oi = 0; oi < orders_.size(); ++oi) {
            const int n = orders_[oi];
            // Polynomial value of the zero-padded window ending at pos;
            // tokens before the start are pad 0 and contribute nothing.
            unsigned __int128 poly = 0;
            for (int j = 0; j < n; ++j) {
                const std::ptrdiff_t idx = std::ptrdiff_t(pos) - j;
                if (idx < 0) break;
                poly += powers_[std::size_t(j)] * (unsigned __int128)seq[std::size_t(idx)];
            }
            ++ngrams_seen_[oi];
            ngram_sets_[oi].insert(poly);
            for (std::size_t mi = 0; mi < moduli_.size(); ++mi) {
                bucket_sets_[oi * moduli_.size() + mi].insert(
                    std::uint64_t(poly % moduli_[mi]));
            }
        }
    }
}

void corpus_analyzer::add_corpus(const std::vector<token_sequence>& corpus) {
    for (const auto& seq : corpus) add_sequence(seq);
}

void corpus_analyzer::merge(const corpus_analyzer& other) {
    if (other.base_vocab_ != base_vocab_ || other.orders_ != orders_ ||
        other.moduli_ != moduli_) {
        throw std::invalid_argument("corpus_analyzer: merge of mismatched analyzers");
    }
    sequences_ += other.sequences_;
    tokens_ += other.tokens_;
    for (std::size_t oi = 0; oi < orders_.size(); ++oi) {
        ngrams_seen_[oi] += other.ngrams_seen_[oi];
        for (const auto key : other.ngram_sets_[oi]) ngram_sets_[oi].insert(key);
    }
    for (std::size_t i = 0; i < bucket_sets_.size(); ++i) {
        bucket_sets_[i].merge(other.bucket_sets_[i]);
    }
}

corpus_stats corpus_analyzer::stats() const {
    corpus_stats s;
    s.sequences_seen = sequences_;
    s.tokens_seen = tokens_;
    for (std::size_t oi = 0; oi < orders_.size(); ++oi) {
        s.ngrams_seen[orders_[oi]] = ngrams_seen_[oi];
        s.distinct_ngrams[orders_[oi]] = ngram_sets_[oi].size();
        for (std::size_t mi = 0; mi < moduli_.size(); ++mi) {
            s.distinct_buckets[{orders_[oi], moduli_[mi]}] =
                bucket_sets_[oi * moduli_.size() + mi].count;
        }
    }
    return s;
}

std::vector<collision_report> corpus_analyzer::reports(
    const std::string& corpus_id) const {
    if (tokens_ == 0) {
        throw std::invalid_argument("corpus_analyzer: empty corpus");
    }
    std::vector<collision_report> out;
    out.reserve(orders_.size() * moduli_.size());
    for (std::size_t oi = 0; oi < orders_.size(); ++oi) {
        const std::uint64_t distinct = ngram_sets_[oi].size();
        for (std::size_t mi = 0; mi < moduli_.size(); ++mi) {
            const auto& bs = bucket_sets_[oi * moduli_.size() + mi];
            collision_report r;
            r.order = orders_[oi];
            r.modulus = moduli_[mi];
            r.hit_rate = double(bs.count) / double(moduli_[mi]);
            r.collision_count = distinct - bs.count;
            r.corpus_id = corpus_id;
            r.tokens_processed = tokens_;
            out.push_back(std::move(r));
        }
    }
    return out;
}

namespace {

corpus_analyzer analyze_one(const std::vector<token_sequence>& corpus,
                            const hash_spec& spec) {
    spec.validate();
    if (total_tokens(corpus) == 0) {
        throw std::invalid_argument("analysis: empty corpus");
    }
    corpus_analyzer an(spec.base, {spec.order}, {spec.modulus});
    an.add_corpus(corpus);
    return an;
}

}  // namespace

double compute_hit_rate(const std::vector<token_sequence>& corpus,
                        const hash_spec& spec) {
    return analyze_one(corpus, spec).reports("").front().hit_rate;
}

std::uint64_t count_collisions(const std::vector<token_sequence>& corpus,
                               const hash_spec& spec) {
    return analyze_one(corpus, spec).reports("").front().collision_count;
}

std::vector<collision_report> sweep_vocab_sizes(
    const std::vector<token_sequence>& corpus, int order,
    std::uint64_t base_vocab, const std::vector<std::uint64_t>& moduli,
    const std::string& corpus_id) {
    if (moduli.empty()) return {};
    if (!std::is_sorted(moduli.begin(), moduli.end())) {
        throw std::invalid_argument("sweep_vocab_sizes: moduli must be sorted ascending");
    }
    if (total_tokens(corpus) == 0) {
        throw std::invalid_argument("analysis: empty corpus");
    }
    corpus_analyzer an(base_vocab, {order}, moduli);
    an.add_corpus(corpus);
    return an.reports(corpus_id);
}

std::uint64_t advise_vocab_size(std::uint64_t base_vocab,
                                std::uint64_t target_multiple) {
    if (base_vocab < 2) {
        throw std::invalid_argument("advise_vocab_size: base vocabulary must be >= 2");
    }
    if (target_multiple < 1) {
        throw std::invalid_argument("advise_vocab_size: target multiple must be >= 1");
    }
    // round((m + 1/2) * V0)
    return ((2 * target_multiple + 1) * base_vocab + 1) / 2;
}

void write_reports_csv(std::ostream& out,
                       std::span<const collision_report> reports) {
    out << "order,modulus,hit_rate,collision_count,tokens_processed\n";
    char buf[64];
    for (const auto& r : reports) {
        std::snprintf(buf, sizeof(buf), "%.9g", r.hit_rate);
        out << r.order << ',' << r.modulus << ',' << buf << ','
            << r.collision_count << ',' << r.tokens_processed << '\n';
    }
}

}  // namespace ngram

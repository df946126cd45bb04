#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "ngram/corpus.hpp"
#include "ngram/hashing.hpp"

namespace ngram {

// Corpus-level counting state. Distinctness is tracked with exact sets;
// the per-shard analyzers below merge by set union, so sharded and
// single-pass runs produce identical numbers.
struct corpus_stats {
    std::uint64_t sequences_seen = 0;
    std::uint64_t tokens_seen = 0;
    std::map<int, std::uint64_t> ngrams_seen;      // per order
    std::map<int, std::uint64_t> distinct_ngrams;  // per order
    std::map<std::pair<int, std::uint64_t>, std::uint64_t>
        distinct_buckets;  // per (order, modulus)
};

// Per-(order, modulus) diagnostics:
//   hit_rate        = distinct buckets / modulus
//   collision_count = distinct n-grams - distinct buckets
struct collision_report {
    int order = 0;
    std::uint64_t modulus = 0;
    double hit_rate = 0.0;
    std::uint64_t collision_count = 0;
    std::string corpus_id;
    std::uint64_t tokens_processed = 0;
};

// Single-pass analyzer over any number of orders and moduli. Every
// position of every sequence contributes one window per order, zero-padded
// at the sequence start. Exact n-gram identity is the full-width
// polynomial value of the window, which requires V0^order to fit in 128
// bits (checked at construction).
class corpus_analyzer {
  public:
    corpus_analyzer(std::uint64_t base_vocab, std::vector<int> orders,
                    std::vector<std::uint64_t> moduli);

    void add_sequence(std::span<const token_id> seq);
    void add_corpus(const std::vector<token_sequence>& corpus);

    // Set-union merge of an analyzer with identical configuration.
    void merge(const corpus_analyzer& other);

    corpus_stats stats() const;
    std::vector<collision_report> reports(const std::string& corpus_id) const;

    const std::vector<int>& orders() const { return orders_; }
    const std::vector<std::uint64_t>& moduli() const { return moduli_; }

  private:
    struct u128_hash {
        std::size_t operator()(unsigned __int128 v) const {
            std::uint64_t x = std::uint64_t(v) ^ std::uint64_t(v >> 64) * 0x9e3779b97f4a7c15ULL;
            x ^= x >> 30;
            x *= 0xbf58476d1ce4e5b9ULL;
            x ^= x >> 27;
            return std::size_t(x);
        }
    };

    // Dense bitmap for small moduli, hash set above the bitmap cutoff.
    struct bucket_set {
        std::uint64_t modulus = 0;
        std::vector<std::uint64_t> bits;
        std::unordered_set<std::uint64_t> sparse;
        std::uint64_t count = 0;

        void init(std::uint64_t m);
        void insert(std::uint64_t b);
        void merge(const bucket_set& other);
    };

    std::uint64_t base_vocab_;
    std::vector<int> orders_;
    std::vector<std::uint64_t> moduli_;
    std::vector<unsigned __int128> powers_;  // V0^j, j <= max order
    std::uint64_t sequences_ = 0;
    std::uint64_t tokens_ = 0;
    std::vector<std::uint64_t> ngrams_seen_;                            // per order
    std::vector<std::unordered_set<unsigned __int128, u128_hash>> ngram_sets_;  // per order
    std::vector<bucket_set> bucket_sets_;  // orders-major: [order][modulus]
};

// Convenience single-metric entry points (one pass each).
double compute_hit_rate(const std::vector<token_sequence>& corpus,
                        const hash_spec& spec);
std::uint64_t count_collisions(const std::vector<token_sequence>& corpus,
                               const hash_spec& spec);

// One report per modulus, single corpus pass. Moduli must be sorted
// ascending; reports come back in input order.
std::vector<collision_report> sweep_vocab_sizes(
    const std::vector<token_sequence>& corpus, int order,
    std::uint64_t base_vocab, const std::vector<std::uint64_t>& moduli,
    const std::string& corpus_id = "");

// Half-multiple sizing rule: round((m + 1/2) * V0), the point farthest
// from the adjacent integer multiples of the base vocabulary. Primality
// is deliberately not enforced.
std::uint64_t advise_vocab_size(std::uint64_t base_vocab,
                                std::uint64_t target_multiple);

// CSV with header `order,modulus,hit_rate,collision_count,tokens_processed`.
void write_reports_csv(std::ostream& out,
                       std::span<const collision_report> reports);

}  // namespace ngram

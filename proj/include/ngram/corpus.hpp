#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ngram/config.hpp"

namespace ngram {

using token_sequence = std::vector<token_id>;

// A token-id corpus, one entry per sequence. Two on-disk formats:
//   text:   one sequence per line, whitespace-separated decimal ids
//   binary: magic "NGC1", then per sequence a u32 little-endian length
//           followed by that many u32 little-endian token ids
enum class corpus_format { text, binary };

std::vector<token_sequence> load_corpus_text(const std::string& path);
std::vector<token_sequence> load_corpus_binary(const std::string& path);
std::vector<token_sequence> load_corpus(const std::string& path, corpus_format fmt);

void save_corpus_text(const std::vector<token_sequence>& corpus,
                      const std::string& path);
void save_corpus_binary(const std::vector<token_sequence>& corpus,
                        const std::string& path);

std::size_t total_tokens(const std::vector<token_sequence>& corpus);

// FNV-1a over the token stream (sequence lengths included), used as the
// corpus provenance id in reports and manifests.
std::uint64_t corpus_digest(const std::vector<token_sequence>& corpus);

// FNV-1a over raw file bytes, for run manifests.
std::uint64_t file_digest(const std::string& path);

// Synthetic Zipf-Markov corpus: marginals follow a Zipf law with the given
// exponent over [0, vocab); with probability markov_prob the next token is
// a fixed per-token successor instead of a fresh draw, which concentrates
// bigram mass the way running text does. Fully determined by the seed.
std::vector<token_sequence> generate_zipf_markov(
    std::uint32_t vocab, std::size_t sequences, std::size_t seq_len,
    std::uint64_t seed, double exponent = 1.1, double markov_prob = 0.35);

// The trailing window ending at `pos` for one sequence, zero-padded before
// the sequence start.
void window_at(const token_sequence& seq, std::size_t pos, int order,
               std::vector<token_id>& out);

}  // namespace ngram

#include "ngram/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "ngram/errors.hpp"
#include "ngram/rng.hpp"

namespace ngram {

namespace {

constexpr char kMagic[4] = {'N', 'G', 'C', '1'};

std::uint32_t read_u32_le(const unsigned char* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
           (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}

void write_u32_le(std::ofstream& out, std::uint32_t v) {
    char buf[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff),
                   char((v >> 24) & 0xff)};
    out.write(buf, 4);
}

}  // namespace

std::vector<token_sequence> load_corpus_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw io_error("cannot open corpus file: " + path);
    }
    std::vector<token_sequence> corpus;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        token_sequence seq;
        std::size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
            if (i >= line.size()) break;
            std::uint64_t value = 0;
            const std::size_t start = i;
            while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) {
                const char c = line[i];
                if (c < '0' || c > '9') {
                    throw parse_error("corpus token is not a decimal integer", lineno, i);
                }
                value = value * 10 + std::uint64_t(c - '0');
                if (value > std::numeric_limits<token_id>::max()) {
                    throw parse_error("corpus token exceeds 32 bits", lineno, start);
                }
                ++i;
            }
            seq.push_back(token_id(value));
        }
        if (!seq.empty()) {
            corpus.push_back(std::move(seq));
        }
    }
    return corpus;
}

std::vector<token_sequence> load_corpus_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("cannot open corpus file: " + path);
    }
    unsigned char magic[4];
    in.read(reinterpret_cast<char*>(magic), 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw parse_error("bad corpus magic (expected NGC1)", 0, 0);
    }
    std::vector<token_sequence> corpus;
    std::size_t offset = 4;
    for (;;) {
        unsigned char lenbuf[4];
        in.read(reinterpret_cast<char*>(lenbuf), 4);
        if (in.gcount() == 0) break;  // clean EOF between sequences
        if (in.gcount() != 4) {
            throw parse_error("truncated sequence length", 0, offset);
        }
        const std::uint32_t len = read_u32_le(lenbuf);
        offset += 4;
        token_sequence seq(len);
        if (len > 0) {
            std::vector<unsigned char> raw(std::size_t(len) * 4);
            in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()));
            if (std::size_t(in.gcount()) != raw.size()) {
                throw parse_error("truncated sequence body", 0, offset);
            }
            for (std::uint32_t i = 0; i < len; ++i) {
                seq[i] = read_u32_le(raw.data() + std::size_t(i) * 4);
            }
            offset += raw.size();
        }
        corpus.push_back(std::move(seq));
    }
    return corpus;
}

std::vector<token_sequence> load_corpus(const std::string& path, corpus_format fmt) {
    return fmt == corpus_format::text ? load_corpus_text(path)
                                      : load_corpus_binary(path);
}

void save_corpus_text(const std::vector<token_sequence>& corpus,
                      const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw io_error("cannot write corpus file: " + path);
    }
    for (const auto& seq : corpus) {
        for (std::size_t i = 0; i < seq.size(); ++i) {
            if (i) out << ' ';
            out << seq[i];
        }
        out << '\n';
    }
}

void save_corpus_binary(const std::vector<token_sequence>& corpus,
                        const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw io_error("cannot write corpus file: " + path);
    }
    out.write(kMagic, 4);
    for (const auto& seq : corpus) {
        write_u32_le(out, std::uint32_t(seq.size()));
        for (const token_id t : seq) write_u32_le(out, t);
    }
}

std::size_t total_tokens(const std::vector<token_sequence>& corpus) {
    std::size_t n = 0;
    for (const auto& seq : corpus) n += seq.size();
    return n;
}

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

inline void fnv_absorb(std::uint64_t& h, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xff;
        h *= kFnvPrime;
    }
}

}  // namespace

std::uint64_t corpus_digest(const std::vector<token_sequence>& corpus) {
    std::uint64_t h = kFnvOffset;
    for (const auto& seq : corpus) {
        fnv_absorb(h, seq.size());
        for (const token_id t : seq) fnv_absorb(h, t);
    }
    return h;
}

std::uint64_t file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("cannot open file for digest: " + path);
    }
    std::uint64_t h = kFnvOffset;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const auto n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= kFnvPrime;
        }
        if (!in) break;
    }
    return h;
}

namespace {

// Zipf CDF sampler over [0, vocab): P(i) proportional to 1/(i+1)^exponent.
struct zipf_sampler {
    std::vector<double> cdf;

    zipf_sampler(std::uint32_t vocab, double exponent) : cdf(vocab) {
        double total = 0.0;
        for (std::uint32_t i = 0; i < vocab; ++i) {
            total += 1.0 / std::pow(double(i) + 1.0, exponent);
            cdf[i] = total;
        }
        for (auto& c : cdf) c /= total;
    }

    token_id draw(rng64& rng) const {
        const double u = uniform01(rng);
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        return token_id(it == cdf.end() ? cdf.size() - 1
                                        : std::size_t(it - cdf.begin()));
    }
};

}  // namespace

std::vector<token_sequence> generate_zipf_markov(std::uint32_t vocab,
                                                 std::size_t sequences,
                                                 std::size_t seq_len,
                                                 std::uint64_t seed,
                                                 double exponent,
                                                 double markov_prob) {
    rng64 rng(seed);
    const zipf_sampler zipf(vocab, exponent);

    // Transition structure mimicking running text: a small pool of
    // high-frequency "function" tokens dominates what follows anything,
    // content tokens (outside the pool) hand control back to the pool via
    // a coarse class map over consecutive id blocks, and fresh draws are
    // Zipf over the active half of the id space plus a thin uniform noise
    // floor. Fresh draws never occur twice in a row, which keeps bigram
    // type diversity bounded the way repeated collocations do.
    const std::uint32_t pool = std::min<std::uint32_t>(
        vocab, std::max<std::uint32_t>(2, vocab * 3 / 50));
    const std::uint32_t block = std::max<std::uint32_t>(1, vocab / 20);
    const std::uint32_t active = std::max<std::uint32_t>(pool, vocab / 2);
    const double noise_prob = 0.001;

    std::vector<token_id> successor(vocab);
    for (std::uint32_t v = 0; v < vocab; ++v) {
        if (v < pool) {
            token_id s;
            do {
                s = zipf.draw(rng);
            } while (s >= pool);
            successor[v] = s;
        } else {
            successor[v] = token_id((2 * (v / block) + 1) % pool);
        }
    }

    std::vector<token_sequence> corpus(sequences);
    for (auto& seq : corpus) {
        seq.resize(seq_len);
        token_id prev = 0;
        bool prev_fresh = true;
        for (std::size_t i = 0; i < seq_len; ++i) {
            token_id next;
            if (!prev_fresh && uniform01(rng) >= markov_prob) {
                if (uniform01(rng) < noise_prob) {
                    next = token_id(uniform_below(rng, vocab));
                } else {
                    do {
                        next = zipf.draw(rng);
                    } while (next >= active);
                }
                prev_fresh = true;
            } else {
                next = successor[prev];
                prev_fresh = false;
            }
            seq[i] = next;
            prev = next;
        }
    }
    return corpus;
}

void window_at(const token_sequence& seq, std::size_t pos, int order,
               std::vector<token_id>& out) {
    out.resize(std::size_t(order));
    for (int j = 0; j < order; ++j) {
        const std::ptrdiff_t idx = std::ptrdiff_t(pos) - (order - 1) + j;
        out[std::size_t(j)] = idx >= 0 ? seq[std::size_t(idx)] : 0;
    }
}

}  // namespace ngram

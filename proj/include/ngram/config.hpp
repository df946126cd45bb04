#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>

namespace ngram {

using token_id = std::uint32_t;

// Which merge rule the embedding layer uses.
//   averaged_v1: one full-width table per order, plain average.
//   subtable_v2: K reduced-width sub-tables per order, each mapped back to
//                model width by a linear projection.
enum class ne_variant { averaged_v1, subtable_v2 };

// How the merged embedding is boosted before entering the residual stream.
enum class amp_mode { none, scale_sqrt_d, layer_norm };

// Full specification of an n-gram embedding layer. max_order == 1 is the
// degenerate base-only configuration (no n-gram branches, merge scale 1);
// it exists so per-layer n-gram FFN blocks can collapse to the plain
// per-layer-table form exactly.
struct ngram_config {
    int max_order = 4;               // N
    int sub_tables = 2;              // K
    std::uint32_t base_vocab = 0;    // V0
    int dim = 0;                     // D
    std::map<std::pair<int, int>, std::uint64_t> sub_vocab;  // (n,k) -> V_{n,k}
    ne_variant variant = ne_variant::subtable_v2;
    amp_mode amplification = amp_mode::none;

    // Number of (n,k) branches beyond the base table.
    int branch_count() const {
        return max_order < 2 ? 0 : (max_order - 1) * sub_tables;
    }

    // Width of each sub-table row: D for v1, D/((N-1)K) for v2.
    int branch_dim() const {
        if (variant == ne_variant::averaged_v1 || branch_count() == 0) {
            return dim;
        }
        return dim / branch_count();
    }

    // Flat index of branch (n,k) into sub-table arrays.
    int branch_index(int n, int k) const {
        return (n - 2) * sub_tables + (k - 1);
    }

    // Denominator of the merge average: N for v1, (N-1)K+1 for v2.
    int merge_denominator() const {
        return variant == ne_variant::averaged_v1 ? max_order
                                                  : branch_count() + 1;
    }

    std::uint64_t vocab_of(int n, int k) const;

    // Throws std::invalid_argument on any violated invariant.
    void validate() const;

    bool operator==(const ngram_config&) const = default;
};

std::string to_json_string(const ngram_config& cfg);
ngram_config ngram_config_from_json(const std::string& json_text);
ngram_config load_ngram_config(const std::string& path);
void save_ngram_config(const ngram_config& cfg, const std::string& path);

// A config with every V_{n,k} set through the half-multiple sizing rule,
// spreading target multiples across orders and sub-tables.
ngram_config make_default_config(std::uint32_t base_vocab, int dim,
                                 int max_order = 4, int sub_tables = 2);

const char* to_string(ne_variant v);
const char* to_string(amp_mode m);

}  // namespace ngram

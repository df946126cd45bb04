#include "ngram/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "ngram/errors.hpp"

namespace ngram {

namespace {

// Half-multiple vocabulary sizing (see analysis::advise_vocab_size; kept
// local to avoid a dependency cycle between config and analysis).
std::uint64_t half_multiple_size(std::uint64_t v0, std::uint64_t multiple) {
    return ((2 * multiple + 1) * v0 + 1) / 2;
}

}  // namespace

std::uint64_t ngram_config::vocab_of(int n, int k) const {
    const auto it = sub_vocab.find({n, k});
    if (it == sub_vocab.end()) {
        throw std::invalid_argument("ngram_config: missing vocabulary size for (n=" +
                                    std::to_string(n) + ", k=" + std::to_string(k) + ")");
    }
    return it->second;
}

void ngram_config::validate() const {
    if (max_order < 1) {
        throw std::invalid_argument("ngram_config: max_order must be >= 1");
    }
    if (sub_tables < 1) {
        throw std::invalid_argument("ngram_config: sub_tables must be >= 1");
    }
    if (base_vocab < 2) {
        throw std::invalid_argument("ngram_config: base_vocab must be >= 2");
    }
    if (dim < 1) {
        throw std::invalid_argument("ngram_config: dim must be >= 1");
    }
    if (variant == ne_variant::averaged_v1 && sub_tables != 1) {
        throw std::invalid_argument(
            "ngram_config: the averaged variant has a single full-width table "
            "per order (sub_tables must be 1)");
    }
    if (max_order == 1) {
        if (!sub_vocab.empty()) {
            throw std::invalid_argument(
                "ngram_config: base-only config must have no sub-table vocabularies");
        }
        return;
    }
    if (variant == ne_variant::subtable_v2) {
        if (dim % branch_count() != 0) {
            throw std::invalid_argument(
                "ngram_config: dim " + std::to_string(dim) +
                " not divisible by (max_order-1)*sub_tables = " +
                std::to_string(branch_count()));
        }
    }
    if (sub_vocab.size() != std::size_t(branch_count())) {
        throw std::invalid_argument(
            "ngram_config: expected " + std::to_string(branch_count()) +
            " sub-table vocabulary sizes, got " + std::to_string(sub_vocab.size()));
    }
    for (int n = 2; n <= max_order; ++n) {
        for (int k = 1; k <= sub_tables; ++k) {
            if (vocab_of(n, k) < 1) {
                throw std::invalid_argument("ngram_config: every V_{n,k} must be >= 1");
            }
        }
    }
}

const char* to_string(ne_variant v) {
    return v == ne_variant::averaged_v1 ? "averaged_v1" : "subtable_v2";
}

const char* to_string(amp_mode m) {
    switch (m) {
        case amp_mode::none: return "none";
        case amp_mode::scale_sqrt_d: return "scale_sqrt_d";
        case amp_mode::layer_norm: return "layer_norm";
    }
    return "none";
}

namespace {

ne_variant variant_from_string(const std::string& s) {
    if (s == "averaged_v1") return ne_variant::averaged_v1;
    if (s == "subtable_v2") return ne_variant::subtable_v2;
    throw std::invalid_argument("ngram_config: unknown variant '" + s + "'");
}

amp_mode amp_from_string(const std::string& s) {
    if (s == "none") return amp_mode::none;
    if (s == "scale_sqrt_d") return amp_mode::scale_sqrt_d;
    if (s == "layer_norm") return amp_mode::layer_norm;
    throw std::invalid_argument("ngram_config: unknown amplification '" + s + "'");
}

}  // namespace

std::string to_json_string(const ngram_config& cfg) {
    nlohmann::json j;
    j["max_order"] = cfg.max_order;
    j["sub_tables"] = cfg.sub_tables;
    j["base_vocab"] = cfg.base_vocab;
    j["dim"] = cfg.dim;
    j["variant"] = to_string(cfg.variant);
    j["amplification"] = to_string(cfg.amplification);
    auto& sv = j["sub_vocab"] = nlohmann::json::array();
    for (const auto& [nk, v] : cfg.sub_vocab) {
        sv.push_back({{"n", nk.first}, {"k", nk.second}, {"vocab", v}});
    }
    return j.dump(2);
}

ngram_config ngram_config_from_json(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    ngram_config cfg;
    cfg.max_order = j.at("max_order").get<int>();
    cfg.sub_tables = j.at("sub_tables").get<int>();
    cfg.base_vocab = j.at("base_vocab").get<std::uint32_t>();
    cfg.dim = j.at("dim").get<int>();
    cfg.variant = variant_from_string(j.at("variant").get<std::string>());
    cfg.amplification = amp_from_string(j.at("amplification").get<std::string>());
    for (const auto& e : j.at("sub_vocab")) {
        cfg.sub_vocab[{e.at("n").get<int>(), e.at("k").get<int>()}] =
            e.at("vocab").get<std::uint64_t>();
    }
    cfg.validate();
    return cfg;
}

ngram_config load_ngram_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw io_error("cannot open config file: " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return ngram_config_from_json(ss.str());
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("bad config JSON: ") + e.what(), 0, 0);
    }
}

void save_ngram_config(const ngram_config& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw io_error("cannot write config file: " + path);
    }
    out << to_json_string(cfg) << '\n';
}

ngram_config make_default_config(std::uint32_t base_vocab, int dim,
                                 int max_order, int sub_tables) {
    ngram_config cfg;
    cfg.max_order = max_order;
    cfg.sub_tables = sub_tables;
    cfg.base_vocab = base_vocab;
    cfg.dim = dim;
    cfg.variant = ne_variant::subtable_v2;
    cfg.amplification = amp_mode::scale_sqrt_d;
    // Spread target multiples across orders and sub-tables so each branch
    // gets a distinct modulus sitting halfway between integer multiples.
    for (int n = 2; n <= max_order; ++n) {
        for (int k = 1; k <= sub_tables; ++k) {
            const std::uint64_t multiple =
                std::uint64_t(8) * std::uint64_t(n - 1) + 4 * std::uint64_t(k - 1);
            cfg.sub_vocab[{n, k}] = half_multiple_size(base_vocab, multiple);
        }
    }
    cfg.validate();
    return cfg;
}

}  // namespace ngram

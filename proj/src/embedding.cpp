#include "ngram/embedding.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ngram/errors.hpp"

namespace ngram {

param_count_report param_count(const ngram_config& cfg) {
    cfg.validate();
    param_count_report r;
    r.base = std::uint64_t(cfg.base_vocab) * std::uint64_t(cfg.dim);
    const std::uint64_t d = std::uint64_t(cfg.branch_dim());
    for (const auto& [nk, vocab] : cfg.sub_vocab) {
        (void)nk;
        r.sub_tables += vocab * d;
    }
    if (cfg.variant == ne_variant::subtable_v2) {
        // (N-1)K projections of D x d = D^2 in total.
        r.projections = std::uint64_t(cfg.branch_count()) * std::uint64_t(cfg.dim) * d;
    }
    r.total = r.base + r.sub_tables + r.projections;
    return r;
}

budget_info budget_report(std::uint64_t embedding_params,
                          std::uint64_t other_params) {
    budget_info info;
    info.embedding_params = embedding_params;
    info.other_params = other_params;
    const double total = double(embedding_params) + double(other_params);
    info.fraction = total > 0 ? double(embedding_params) / total : 0.0;
    info.over_budget = info.fraction > 0.5;
    return info;
}

budget_info budget_report(const ngram_config& cfg, std::uint64_t other_params) {
    return budget_report(param_count(cfg).total, other_params);
}

std::string budget_guidance(const budget_info& info) {
    std::ostringstream ss;
    ss << "embedding parameters take " << int(info.fraction * 100.0 + 0.5)
       << "% of the total budget; keep this at or below 50%. ";
    if (info.over_budget) {
        ss << "This configuration is over budget: past the halfway point the "
              "same parameters buy more as FFN capacity. ";
    }
    ss << "Reference point: a production 68.5B-parameter model allocates "
          "31.4B parameters (46% of the total) to n-gram embeddings.";
    return ss.str();
}

namespace {

void write_f32(std::ofstream& out, const std::vector<float>& v) {
    static_assert(sizeof(float) == 4);
    out.write(reinterpret_cast<const char*>(v.data()),
              std::streamsize(v.size() * sizeof(float)));
}

void read_f32(std::ifstream& in, std::vector<float>& v, const std::string& path) {
    in.read(reinterpret_cast<char*>(v.data()),
            std::streamsize(v.size() * sizeof(float)));
    if (!in) {
        throw parse_error("bank file truncated: " + path, 0,
                          std::size_t(in.gcount()));
    }
}

}  // namespace

void save_bank(const embedding_bank& bank, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw io_error("cannot write bank file: " + path);
    }
    const std::string header = to_json_string(bank.config);
    const std::uint32_t len = std::uint32_t(header.size());
    char lenbuf[4] = {char(len & 0xff), char((len >> 8) & 0xff),
                      char((len >> 16) & 0xff), char((len >> 24) & 0xff)};
    out.write(lenbuf, 4);
    out.write(header.data(), std::streamsize(header.size()));
    write_f32(out, bank.base);
    for (const auto& t : bank.sub_tables) write_f32(out, t);
    for (const auto& p : bank.projections) write_f32(out, p);
    if (bank.config.amplification == amp_mode::layer_norm) {
        write_f32(out, bank.ln_gain);
        write_f32(out, bank.ln_bias);
    }
    if (!out) {
        throw io_error("short write to bank file: " + path);
    }
}

embedding_bank load_bank(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("cannot open bank file: " + path);
    }
    unsigned char lenbuf[4];
    in.read(reinterpret_cast<char*>(lenbuf), 4);
    if (!in) {
        throw parse_error("bank file too short for header: " + path, 0, 0);
    }
    const std::uint32_t len = std::uint32_t(lenbuf[0]) |
                              (std::uint32_t(lenbuf[1]) << 8) |
                              (std::uint32_t(lenbuf[2]) << 16) |
                              (std::uint32_t(lenbuf[3]) << 24);
    std::string header(len, '\0');
    in.read(header.data(), std::streamsize(len));
    if (!in) {
        throw parse_error("bank file truncated in header: " + path, 0, 4);
    }
    ngram_config cfg;
    try {
        cfg = ngram_config_from_json(header);
    } catch (const nlohmann::json::exception& e) {
        throw parse_error("bad bank header JSON: " + std::string(e.what()), 0, 4);
    }

    embedding_bank bank = make_zero_bank<float>(cfg);
    read_f32(in, bank.base, path);
    for (auto& t : bank.sub_tables) read_f32(in, t, path);
    for (auto& p : bank.projections) read_f32(in, p, path);
    if (cfg.amplification == amp_mode::layer_norm) {
        read_f32(in, bank.ln_gain, path);
        read_f32(in, bank.ln_bias, path);
    }
    // Trailing garbage means the file does not match its own header.
    char extra;
    if (in.read(&extra, 1)) {
        throw parse_error("bank file longer than its header declares: " + path, 0, 0);
    }
    return bank;
}

}  // namespace ngram

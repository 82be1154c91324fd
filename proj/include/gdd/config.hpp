#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gdd/error.hpp"
#include "gdd/local_encoder.hpp"

namespace gdd {

/// Every hyper-parameter of the model and the training loop.
struct ModelConfig {
    std::size_t d_model = 64;     // token embedding width
    std::size_t d_tag = 16;       // dependency tag and hop embedding width
    std::size_t d_head = 128;     // width of each DGAT head
    std::size_t d_hid = 32;       // hidden width of the sigma MLP
    std::size_t d_k = 64;         // local attention width
    std::size_t local_heads = 1;
    std::size_t dual_heads = 3;   // U
    std::size_t rel_heads = 3;    // V
    std::size_t layers = 2;       // L
    std::size_t kappa_max = 3;
    double sample_interval = 0.2;
    double dropout = 0.0;
    double lr = 5e-5;
    double l2 = 1e-5;             // Lambda
    std::size_t epochs = 30;
    std::size_t batch_size = 1;
    std::uint64_t seed = 42;
    bool normalize_mask = false;
    bool use_mask = true;
    AttentionVariant attention = AttentionVariant::covariance;
    bool scale_logits = false;
    bool drop_punct = false;

    std::size_t d_edge() const { return (kappa_max + 1) * d_tag; }
    std::size_t global_width() const { return (dual_heads + rel_heads) * d_head; }
    std::size_t final_width() const { return d_k + global_width(); }

    static const std::vector<std::string>& keys() {
        static const std::vector<std::string> k = {
            "d_model", "d_tag",   "d_head",       "d_hid",          "d_k",      "local_heads", "dual_heads",
            "rel_heads", "layers", "kappa_max",   "sample_interval", "dropout", "lr",          "l2",
            "epochs",  "batch_size", "seed",      "normalize_mask", "use_mask", "attention",   "scale_logits",
            "drop_punct"};
        return k;
    }

    void set(const std::string& key, const std::string& value);
    std::string get(const std::string& key) const;

    void validate() const {
        auto positive = [](std::size_t v, const char* name) {
            if (v == 0) throw value_error(std::string("config: ") + name + " must be positive");
        };
        positive(d_model, "d_model");
        positive(d_tag, "d_tag");
        positive(d_head, "d_head");
        positive(d_hid, "d_hid");
        positive(d_k, "d_k");
        positive(local_heads, "local_heads");
        positive(layers, "layers");
        positive(kappa_max, "kappa_max");
        positive(epochs, "epochs");
        positive(batch_size, "batch_size");
        if (dual_heads + rel_heads == 0) throw value_error("config: need at least one DGAT head");
        if (d_k % local_heads != 0) throw value_error("config: d_k must be divisible by local_heads");
        if (!(sample_interval > 0.0)) throw value_error("config: sample_interval must be positive");
        if (!(dropout >= 0.0 && dropout < 1.0)) throw value_error("config: dropout must lie in [0, 1)");
        if (!(lr > 0.0)) throw value_error("config: lr must be positive");
        if (!(l2 >= 0.0)) throw value_error("config: l2 must be non-negative");
    }

    /// Small dimensions used by gradient checks and the overfit sanity run.
    static ModelConfig toy() {
        ModelConfig c;
        c.d_model = 8;
        c.d_tag = 4;
        c.d_head = 4;
        c.d_hid = 4;
        c.d_k = 8;
        c.dual_heads = 1;
        c.rel_heads = 1;
        c.layers = 1;
        return c;
    }
};

namespace detail {

inline std::size_t parse_size(const std::string& key, const std::string& v) {
    std::size_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw value_error("config: " + key + " expects a non-negative integer, got '" + v + "'");
    return out;
}

inline double parse_real(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double out = 0;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != v.size() || !std::isfinite(out))
        throw value_error("config: " + key + " expects a number, got '" + v + "'");
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    throw value_error("config: " + key + " expects true/false, got '" + v + "'");
}

inline std::string fmt_real(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace detail

inline void ModelConfig::set(const std::string& key, const std::string& value) {
    using namespace detail;
    if (key == "d_model") d_model = parse_size(key, value);
    else if (key == "d_tag") d_tag = parse_size(key, value);
    else if (key == "d_head") d_head = parse_size(key, value);
    else if (key == "d_hid") d_hid = parse_size(key, value);
    else if (key == "d_k") d_k = parse_size(key, value);
    else if (key == "local_heads") local_heads = parse_size(key, value);
    else if (key == "dual_heads") dual_heads = parse_size(key, value);
    else if (key == "rel_heads") rel_heads = parse_size(key, value);
    else if (key == "layers") layers = parse_size(key, value);
    else if (key == "kappa_max") kappa_max = parse_size(key, value);
    else if (key == "sample_interval") sample_interval = parse_real(key, value);
    else if (key == "dropout") dropout = parse_real(key, value);
    else if (key == "lr") lr = parse_real(key, value);
    else if (key == "l2") l2 = parse_real(key, value);
    else if (key == "epochs") epochs = parse_size(key, value);
    else if (key == "batch_size") batch_size = parse_size(key, value);
    else if (key == "seed") seed = parse_size(key, value);
    else if (key == "normalize_mask") normalize_mask = parse_bool(key, value);
    else if (key == "use_mask") use_mask = parse_bool(key, value);
    else if (key == "scale_logits") scale_logits = parse_bool(key, value);
    else if (key == "drop_punct") drop_punct = parse_bool(key, value);
    else if (key == "attention") {
        if (value == "covariance") attention = AttentionVariant::covariance;
        else if (value == "original") attention = AttentionVariant::original;
        else throw value_error("config: attention must be covariance or original, got '" + value + "'");
    } else
        throw value_error("config: unknown key '" + key + "'");
}

inline std::string ModelConfig::get(const std::string& key) const {
    using detail::fmt_real;
    auto b = [](bool v) { return std::string(v ? "true" : "false"); };
    if (key == "d_model") return std::to_string(d_model);
    if (key == "d_tag") return std::to_string(d_tag);
    if (key == "d_head") return std::to_string(d_head);
    if (key == "d_hid") return std::to_string(d_hid);
    if (key == "d_k") return std::to_string(d_k);
    if (key == "local_heads") return std::to_string(local_heads);
    if (key == "dual_heads") return std::to_string(dual_heads);
    if (key == "rel_heads") return std::to_string(rel_heads);
    if (key == "layers") return std::to_string(layers);
    if (key == "kappa_max") return std::to_string(kappa_max);
    if (key == "sample_interval") return fmt_real(sample_interval);
    if (key == "dropout") return fmt_real(dropout);
    if (key == "lr") return fmt_real(lr);
    if (key == "l2") return fmt_real(l2);
    if (key == "epochs") return std::to_string(epochs);
    if (key == "batch_size") return std::to_string(batch_size);
    if (key == "seed") return std::to_string(seed);
    if (key == "normalize_mask") return b(normalize_mask);
    if (key == "use_mask") return b(use_mask);
    if (key == "scale_logits") return b(scale_logits);
    if (key == "drop_punct") return b(drop_punct);
    if (key == "attention") return attention == AttentionVariant::covariance ? "covariance" : "original";
    throw value_error("config: unknown key '" + key + "'");
}

/// Flat `key = value` lines; '#' starts a comment.
inline void apply_config_text(ModelConfig& cfg, std::istream& in) {
    std::string raw;
    std::size_t lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string{};
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    };
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw parse_error(lineno, "expected key=value");
        try {
            cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const value_error& e) {
            throw parse_error(lineno, e.what());
        }
    }
}

inline void apply_config_file(ModelConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config file '" + path + "'");
    try {
        apply_config_text(cfg, in);
    } catch (const parse_error& e) {
        throw e.with_source(path);
    }
}

inline nlohmann::json config_to_json(const ModelConfig& cfg) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& k : ModelConfig::keys()) j[k] = cfg.get(k);
    return j;
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig cfg;
    for (const auto& [k, v] : j.items()) cfg.set(k, v.get<std::string>());
    cfg.validate();
    return cfg;
}

} // namespace gdd

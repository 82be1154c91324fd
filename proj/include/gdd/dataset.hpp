#pragma once

#include <array>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "gdd/dep_graph.hpp"
#include "gdd/error.hpp"

namespace gdd {

/// Class indices are fixed in every serialization.
enum class Label : std::size_t { positive = 0, neutral = 1, negative = 2 };

inline constexpr std::size_t num_classes = 3;
inline constexpr std::array<const char*, num_classes> label_names = {"positive", "neutral", "negative"};

inline std::optional<Label> parse_label(std::string_view s) {
    for (std::size_t i = 0; i < num_classes; ++i)
        if (s == label_names[i]) return static_cast<Label>(i);
    return std::nullopt;
}

inline const char* label_name(Label l) { return label_names[static_cast<std::size_t>(l)]; }

/// One (sentence, aspect) pair. The aspect occupies [aspect_start, aspect_end).
struct Example {
    std::vector<std::string> tokens;
    std::size_t aspect_start = 0;
    std::size_t aspect_end = 0;
    Label label = Label::neutral;
    std::vector<int> dep_heads;
    std::vector<std::string> dep_rels;

    Span span() const { return Span{aspect_start, aspect_end - 1}; }
    DepTree tree() const { return DepTree{tokens, dep_heads, dep_rels}; }
    std::size_t size() const noexcept { return tokens.size(); }
};

inline std::optional<std::string> example_problem(const Example& e) {
    const std::size_t n = e.tokens.size();
    if (n == 0) return "tokens is empty";
    if (!(e.aspect_start < e.aspect_end && e.aspect_end <= n))
        return "aspect span [" + std::to_string(e.aspect_start) + "," + std::to_string(e.aspect_end) +
               ") invalid for " + std::to_string(n) + " tokens";
    if (e.dep_heads.size() != n) return "dep_heads length differs from tokens";
    if (e.dep_rels.size() != n) return "dep_rels length differs from tokens";
    if (auto p = tree_problem(e.dep_heads, e.dep_rels.size())) return "dep_heads: " + *p;
    return std::nullopt;
}

namespace detail {

inline const std::set<std::string>& example_keys() {
    static const std::set<std::string> keys = {"tokens", "aspect_start", "aspect_end", "label", "dep_heads", "dep_rels"};
    return keys;
}

template <typename T>
T field(const nlohmann::json& j, const char* key, std::size_t line) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw parse_error(line, std::string("field '") + key + "' missing or of the wrong type");
    }
}

} // namespace detail

inline Example example_from_json(const nlohmann::json& j, std::size_t line = 0) {
    if (!j.is_object()) throw parse_error(line, "record is not a JSON object");
    for (const auto& [k, _] : j.items())
        if (!detail::example_keys().count(k)) throw parse_error(line, "unexpected field '" + k + "'");
    Example e;
    e.tokens = detail::field<std::vector<std::string>>(j, "tokens", line);
    const auto start = detail::field<long long>(j, "aspect_start", line);
    const auto end = detail::field<long long>(j, "aspect_end", line);
    if (start < 0) throw parse_error(line, "field 'aspect_start' is negative");
    if (end < 0) throw parse_error(line, "field 'aspect_end' is negative");
    e.aspect_start = static_cast<std::size_t>(start);
    e.aspect_end = static_cast<std::size_t>(end);
    const auto label = detail::field<std::string>(j, "label", line);
    const auto parsed = parse_label(label);
    if (!parsed) throw parse_error(line, "field 'label': unsupported polarity '" + label + "'");
    e.label = *parsed;
    e.dep_heads = detail::field<std::vector<int>>(j, "dep_heads", line);
    e.dep_rels = detail::field<std::vector<std::string>>(j, "dep_rels", line);
    if (auto p = example_problem(e)) throw parse_error(line, *p);
    return e;
}

inline nlohmann::json example_to_json(const Example& e) {
    return nlohmann::json{{"tokens", e.tokens},   {"aspect_start", e.aspect_start}, {"aspect_end", e.aspect_end},
                          {"label", label_name(e.label)}, {"dep_heads", e.dep_heads}, {"dep_rels", e.dep_rels}};
}

/// One Example per non-blank JSONL line.
inline std::vector<Example> load_dataset(std::istream& in) {
    std::vector<Example> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& ex) {
            throw parse_error(lineno, std::string("invalid JSON: ") + ex.what());
        }
        out.push_back(example_from_json(j, lineno));
    }
    return out;
}

inline std::vector<Example> load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open dataset '" + path + "'");
    try {
        return load_dataset(in);
    } catch (const parse_error& e) {
        throw e.with_source(path);
    }
}

inline void write_dataset(std::ostream& out, const std::vector<Example>& data) {
    for (const auto& e : data) out << example_to_json(e).dump() << '\n';
}

/// Per-class example counts in label order.
inline std::array<std::size_t, num_classes> class_counts(const std::vector<Example>& data) {
    std::array<std::size_t, num_classes> c{};
    for (const auto& e : data) ++c[static_cast<std::size_t>(e.label)];
    return c;
}

} // namespace gdd

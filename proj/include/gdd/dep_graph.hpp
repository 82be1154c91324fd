#pragma once

#include <algorithm>
#include <charconv>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gdd/error.hpp"

namespace gdd {

/// One dependency-parsed sentence. heads are 1-based, 0 marks the root.
struct DepTree {
    std::vector<std::string> tokens;
    std::vector<int> heads;
    std::vector<std::string> rels;

    std::size_t size() const noexcept { return tokens.size(); }
};

/// Checks the tree invariants: parallel arrays, heads in range, no self
/// heads, exactly one root, no cycles. Returns an error message or nullopt.
inline std::optional<std::string> tree_problem(const std::vector<int>& heads, std::size_t n_rels) {
    const std::size_t n = heads.size();
    if (n_rels != n) return "heads and rels have different lengths";
    std::size_t roots = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const int h = heads[i];
        if (h < 0 || static_cast<std::size_t>(h) > n)
            return "head " + std::to_string(h) + " of token " + std::to_string(i + 1) + " out of range";
        if (static_cast<std::size_t>(h) == i + 1) return "token " + std::to_string(i + 1) + " is its own head";
        if (h == 0) ++roots;
    }
    // Walk up from every token; more than n steps means a cycle.
    std::vector<int> state(n, 0); // 0 unvisited, 1 on stack, 2 done
    for (std::size_t start = 0; start < n; ++start) {
        std::vector<std::size_t> chain;
        std::size_t cur = start;
        while (true) {
            if (state[cur] == 2) break;
            if (state[cur] == 1) {
                std::string cyc;
                auto it = std::find(chain.begin(), chain.end(), cur);
                for (; it != chain.end(); ++it) cyc += std::to_string(*it + 1) + "->";
                return "cycle " + cyc + std::to_string(cur + 1);
            }
            state[cur] = 1;
            chain.push_back(cur);
            if (heads[cur] == 0) break;
            cur = static_cast<std::size_t>(heads[cur] - 1);
        }
        for (std::size_t c : chain) state[c] = 2;
    }
    if (n > 0 && roots != 1) return "expected exactly one root, found " + std::to_string(roots);
    return std::nullopt;
}

inline void validate_tree(const DepTree& t) {
    if (t.heads.size() != t.tokens.size()) throw value_error("dependency tree: tokens and heads have different lengths");
    if (auto p = tree_problem(t.heads, t.rels.size())) throw value_error("dependency tree: " + *p);
}

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> cols;
    std::size_t pos = 0;
    while (true) {
        const auto tab = line.find('\t', pos);
        cols.push_back(line.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos));
        if (tab == std::string_view::npos) break;
        pos = tab + 1;
    }
    return cols;
}

inline bool parse_int(std::string_view s, int& out) {
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && p == end;
}

} // namespace detail

/// Reads CoNLL-U: ten tab-separated columns per token, '#' comments, blank
/// line between sentences. Multiword ranges ("3-4") and empty nodes ("5.1")
/// are skipped. Trees are validated; errors carry the line number.
inline std::vector<DepTree> parse_conllu(std::istream& in) {
    std::vector<DepTree> out;
    DepTree cur;
    std::size_t sentence_line = 0;
    std::size_t lineno = 0;

    auto flush = [&] {
        if (cur.tokens.empty()) return;
        if (auto p = tree_problem(cur.heads, cur.rels.size()))
            throw parse_error(sentence_line, "invalid dependency tree: " + *p);
        out.push_back(std::move(cur));
        cur = DepTree{};
    };

    std::string raw;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string_view line = raw;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) {
            flush();
            continue;
        }
        if (line.front() == '#') continue;
        const auto cols = detail::split_tabs(line);
        if (cols.size() != 10)
            throw parse_error(lineno, "expected 10 tab-separated columns, found " + std::to_string(cols.size()));
        const std::string_view id = cols[0];
        if (id.find('-') != std::string_view::npos || id.find('.') != std::string_view::npos) continue;
        int idx = 0, head = 0;
        if (!detail::parse_int(id, idx)) throw parse_error(lineno, "non-integer ID '" + std::string(id) + "'");
        if (idx != static_cast<int>(cur.tokens.size()) + 1)
            throw parse_error(lineno, "token ID " + std::to_string(idx) + " out of sequence");
        if (!detail::parse_int(cols[6], head)) throw parse_error(lineno, "non-integer HEAD '" + std::string(cols[6]) + "'");
        if (cur.tokens.empty()) sentence_line = lineno;
        cur.tokens.emplace_back(cols[1]);
        cur.heads.push_back(head);
        cur.rels.emplace_back(cols[7]);
    }
    flush();
    return out;
}

inline std::vector<DepTree> parse_conllu(std::string_view text) {
    std::istringstream is{std::string(text)};
    return parse_conllu(is);
}

/// Relation path from the aspect to a word: dep_1 .. dep_k plus the hop count.
struct ComposedTag {
    std::vector<std::string> path;
    std::size_t hops = 0;

    /// "dep1:dep2:...:depk:k"
    std::string str() const {
        std::string s;
        for (const auto& p : path) s += p + ":";
        return s + std::to_string(hops);
    }

    friend bool operator==(const ComposedTag&, const ComposedTag&) = default;
};

inline ComposedTag compose_tag(std::vector<std::string> path, std::size_t hops) {
    if (hops == 0) throw value_error("compose_tag: hop count must be at least 1");
    if (path.size() != hops)
        throw value_error("compose_tag: path has " + std::to_string(path.size()) + " tags but hop count is " +
                          std::to_string(hops));
    return ComposedTag{std::move(path), hops};
}

/// Inclusive token span [first, last].
struct Span {
    std::size_t first = 0;
    std::size_t last = 0;

    std::size_t length() const noexcept { return last - first + 1; }
    bool contains(std::size_t i) const noexcept { return i >= first && i <= last; }
};

inline void validate_span(Span s, std::size_t n) {
    if (s.first > s.last || s.last >= n)
        throw value_error("invalid aspect span [" + std::to_string(s.first) + "," + std::to_string(s.last) +
                          "] for sentence of length " + std::to_string(n));
}

/// Star graph around one (merged) aspect node.
struct Awig {
    struct Edge {
        std::size_t node = 0; // index into word_nodes
        ComposedTag tag;
        std::vector<std::size_t> via; // tokens visited from the aspect to the word, word last
    };

    std::vector<std::size_t> aspect_tokens;
    std::vector<std::size_t> word_nodes; // token index of each word node, ascending
    std::vector<Edge> edges;             // edges[i].node == i

    std::size_t size() const noexcept { return word_nodes.size(); }
};

struct AwigOptions {
    std::size_t kappa_max = 3;
    bool drop_punct = false;
};

/// Contracts the aspect tokens into one super-node and runs a BFS over the
/// undirected tree. Every token reached within kappa_max hops becomes a word
/// node whose composed tag lists the relations along the BFS path.
///
/// Frontiers are expanded in ascending token order, so when several shortest
/// paths exist the one through the smallest-index predecessor wins.
inline Awig build_awig(const DepTree& tree, Span span, const AwigOptions& opt = {}) {
    const std::size_t n = tree.size();
    validate_span(span, n);
    validate_tree(tree);

    // Undirected adjacency; each tree edge carries the dependent's relation.
    struct Nb {
        std::size_t tok;
        std::size_t via_child;
    };
    std::vector<std::vector<Nb>> adj(n);
    for (std::size_t c = 0; c < n; ++c) {
        if (tree.heads[c] == 0) continue;
        if (opt.drop_punct && tree.rels[c] == "punct") continue;
        const auto h = static_cast<std::size_t>(tree.heads[c] - 1);
        adj[c].push_back({h, c});
        adj[h].push_back({c, c});
    }
    for (auto& a : adj) std::sort(a.begin(), a.end(), [](const Nb& x, const Nb& y) { return x.tok < y.tok; });

    constexpr std::size_t unseen = static_cast<std::size_t>(-1);
    std::vector<std::size_t> dist(n, unseen), parent(n, unseen), edge_child(n, unseen);
    std::vector<std::size_t> frontier;
    for (std::size_t i = span.first; i <= span.last; ++i) {
        dist[i] = 0;
        frontier.push_back(i);
    }

    Awig g;
    for (std::size_t i = span.first; i <= span.last; ++i) g.aspect_tokens.push_back(i);

    for (std::size_t depth = 1; depth <= opt.kappa_max && !frontier.empty(); ++depth) {
        std::vector<std::size_t> next;
        for (std::size_t u : frontier)
            for (const Nb& nb : adj[u]) {
                if (dist[nb.tok] != unseen) continue;
                dist[nb.tok] = depth;
                parent[nb.tok] = u;
                edge_child[nb.tok] = nb.via_child;
                next.push_back(nb.tok);
            }
        std::sort(next.begin(), next.end());
        frontier = std::move(next);
    }

    for (std::size_t w = 0; w < n; ++w) {
        if (dist[w] == unseen || dist[w] == 0) continue;
        Awig::Edge e;
        e.node = g.word_nodes.size();
        std::vector<std::string> tags;
        for (std::size_t cur = w; dist[cur] != 0; cur = parent[cur]) {
            tags.push_back(tree.rels[edge_child[cur]]);
            e.via.push_back(cur);
        }
        std::reverse(tags.begin(), tags.end());
        std::reverse(e.via.begin(), e.via.end());
        e.tag = compose_tag(std::move(tags), dist[w]);
        g.word_nodes.push_back(w);
        g.edges.push_back(std::move(e));
    }
    return g;
}

} // namespace gdd

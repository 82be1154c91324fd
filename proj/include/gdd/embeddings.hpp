#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "gdd/dataset.hpp"
#include "gdd/dep_graph.hpp"
#include "gdd/tensor.hpp"

namespace gdd {

/// String <-> id map with two reserved ids. Unknown strings resolve to UNK.
class Vocab {
public:
    static constexpr std::size_t pad = 0;
    static constexpr std::size_t unk = 1;

    Vocab() : items_{"<pad>", "<unk>"} {
        index_.emplace(items_[pad], pad);
        index_.emplace(items_[unk], unk);
    }

    std::size_t add(const std::string& s) {
        auto [it, inserted] = index_.emplace(s, items_.size());
        if (inserted) items_.push_back(s);
        return it->second;
    }

    std::size_t id(const std::string& s) const {
        auto it = index_.find(s);
        return it == index_.end() ? unk : it->second;
    }

    bool contains(const std::string& s) const { return index_.count(s) != 0; }
    const std::string& str(std::size_t id) const { return items_.at(id); }
    std::size_t size() const noexcept { return items_.size(); }
    const std::vector<std::string>& items() const noexcept { return items_; }

    static Vocab from_items(const std::vector<std::string>& items) {
        if (items.size() < 2 || items[pad] != "<pad>" || items[unk] != "<unk>")
            throw value_error("vocabulary must start with <pad>, <unk>");
        Vocab v;
        for (std::size_t i = 2; i < items.size(); ++i)
            if (v.add(items[i]) != i) throw value_error("vocabulary has duplicate entry '" + items[i] + "'");
        return v;
    }

private:
    std::vector<std::string> items_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Dependency relation vocabulary plus the hop-count ids 1..kappa_max.
class TagVocab {
public:
    static constexpr std::size_t pad_tag = Vocab::pad;
    static constexpr std::size_t unk_tag = Vocab::unk;

    explicit TagVocab(std::size_t kappa_max = 3) : kappa_max_(kappa_max) {}
    TagVocab(Vocab tags, std::size_t kappa_max) : tags_(std::move(tags)), kappa_max_(kappa_max) {}

    std::size_t add(const std::string& tag) { return tags_.add(tag); }
    std::size_t id(const std::string& tag) const { return tags_.id(tag); }

    std::size_t hop_id(std::size_t hops) const {
        if (hops == 0 || hops > kappa_max_)
            throw value_error("hop count " + std::to_string(hops) + " outside 1.." + std::to_string(kappa_max_));
        return hops - 1;
    }

    std::size_t kappa_max() const noexcept { return kappa_max_; }
    std::size_t size() const noexcept { return tags_.size(); }
    const Vocab& tags() const noexcept { return tags_; }

private:
    Vocab tags_;
    std::size_t kappa_max_;
};

/// Trainable lookup table, one row per id.
struct EmbeddingTable {
    Tensor weights; // [rows x dim]

    std::size_t rows() const { return weights.dim(0); }
    std::size_t dim() const { return weights.dim(1); }

    Tensor lookup(std::size_t id) const {
        if (id >= rows())
            throw value_error("embedding lookup: id " + std::to_string(id) + " >= " + std::to_string(rows()) + " rows");
        const auto r = weights.row(id);
        return Tensor::vector(std::vector<double>(r.begin(), r.end()));
    }
};

inline std::vector<std::size_t> token_ids(const std::vector<std::string>& tokens, const Vocab& vocab) {
    std::vector<std::size_t> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(vocab.id(t));
    return ids;
}

/// Row i is the embedding of token i.
inline Tensor embed_tokens(const Example& ex, const Vocab& vocab, const EmbeddingTable& table) {
    if (ex.tokens.empty()) throw value_error("embed_tokens: empty token list");
    Tensor h({ex.tokens.size(), table.dim()});
    const auto ids = token_ids(ex.tokens, vocab);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const Tensor row = table.lookup(ids[i]);
        std::copy(row.data().begin(), row.data().end(), h.row(i).begin());
    }
    return h;
}

/// kappa_max tag-table ids (the path right-padded with PAD_TAG) followed by
/// the hop-table id. Fixed length regardless of path length.
inline std::vector<std::size_t> composed_tag_ids(const ComposedTag& tag, const TagVocab& tv) {
    if (tag.hops > tv.kappa_max())
        throw value_error("composed tag '" + tag.str() + "' exceeds kappa_max " + std::to_string(tv.kappa_max()));
    std::vector<std::size_t> ids(tv.kappa_max(), TagVocab::pad_tag);
    for (std::size_t i = 0; i < tag.path.size(); ++i) ids[i] = tv.id(tag.path[i]);
    ids.push_back(tv.hop_id(tag.hops));
    return ids;
}

/// concat(E[dep_1], ..., E[dep_k], E[PAD]..., Hop[k]); width (kappa_max + 1) * d_tag.
inline Tensor embed_composed_tag(const ComposedTag& tag, const TagVocab& tv, const EmbeddingTable& tag_table,
                                 const EmbeddingTable& hop_table) {
    if (tag_table.dim() != hop_table.dim()) throw shape_error("embed_composed_tag: tag and hop widths differ");
    const auto ids = composed_tag_ids(tag, tv);
    std::vector<double> out;
    out.reserve(ids.size() * tag_table.dim());
    for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
        const Tensor r = tag_table.lookup(ids[i]);
        out.insert(out.end(), r.data().begin(), r.data().end());
    }
    const Tensor hop = hop_table.lookup(ids.back());
    out.insert(out.end(), hop.data().begin(), hop.data().end());
    return Tensor::vector(std::move(out));
}

/// Externally computed per-token vectors (e.g. frozen contextual encoders),
/// keyed by the exact token sequence. JSONL: {"tokens": [...], "vectors": [[...], ...]}.
class PrecomputedEmbeddings {
public:
    static PrecomputedEmbeddings load(std::istream& in) {
        PrecomputedEmbeddings p;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                const auto j = nlohmann::json::parse(line);
                const auto tokens = j.at("tokens").get<std::vector<std::string>>();
                const auto vecs = j.at("vectors").get<std::vector<std::vector<double>>>();
                if (tokens.empty()) throw parse_error(lineno, "empty token list");
                if (vecs.size() != tokens.size())
                    throw parse_error(lineno, "vectors length " + std::to_string(vecs.size()) +
                                                  " differs from tokens length " + std::to_string(tokens.size()));
                const std::size_t d = vecs.front().size();
                if (d == 0) throw parse_error(lineno, "zero-width vectors");
                if (p.dim_ && d != p.dim_)
                    throw parse_error(lineno, "vector width " + std::to_string(d) + " differs from " + std::to_string(p.dim_));
                p.dim_ = d;
                Tensor h({tokens.size(), d});
                for (std::size_t i = 0; i < vecs.size(); ++i) {
                    if (vecs[i].size() != d) throw parse_error(lineno, "ragged vectors");
                    std::copy(vecs[i].begin(), vecs[i].end(), h.row(i).begin());
                }
                require_finite(h, "precomputed embeddings");
                p.table_[key(tokens)] = std::move(h);
            } catch (const nlohmann::json::exception& e) {
                throw parse_error(lineno, std::string("invalid record: ") + e.what());
            }
        }
        return p;
    }

    static PrecomputedEmbeddings load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw io_error("cannot open embeddings file '" + path + "'");
        try {
            return load(in);
        } catch (const parse_error& e) {
            throw e.with_source(path);
        }
    }

    const Tensor* find(const std::vector<std::string>& tokens) const {
        auto it = table_.find(key(tokens));
        return it == table_.end() ? nullptr : &it->second;
    }

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return table_.size(); }

private:
    static std::string key(const std::vector<std::string>& tokens) {
        std::string k;
        for (const auto& t : tokens) k += t + '\x1f';
        return k;
    }

    std::map<std::string, Tensor> table_;
    std::size_t dim_ = 0;
};

} // namespace gdd

#include <sstream>

#include <gtest/gtest.h>

#include "gdd/embeddings.hpp"
#include "gdd/ops.hpp"

using namespace gdd;

namespace {

EmbeddingTable numbered_table(std::size_t rows, std::size_t dim) {
    EmbeddingTable t{Tensor({rows, dim})};
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < dim; ++c) t.weights(r, c) = static_cast<double>(10 * r + c);
    return t;
}

Example sentence(std::vector<std::string> tokens) {
    Example e;
    const std::size_t n = tokens.size();
    e.tokens = std::move(tokens);
    e.aspect_start = 0;
    e.aspect_end = 1;
    e.dep_heads.assign(n, 1);
    e.dep_heads[0] = 0;
    e.dep_rels.assign(n, "dep");
    return e;
}

} // namespace

TEST(Vocab, ReservedIds) {
    Vocab v;
    EXPECT_EQ(v.id("<pad>"), Vocab::pad);
    EXPECT_EQ(v.id("<unk>"), Vocab::unk);
    EXPECT_EQ(v.add("food"), 2u);
    EXPECT_EQ(v.add("food"), 2u);
    EXPECT_EQ(v.id("never-seen"), Vocab::unk);
    EXPECT_EQ(Vocab::from_items(v.items()).items(), v.items());
    EXPECT_THROW(Vocab::from_items({"x", "y"}), value_error);
}

TEST(EmbedTokens, ShapesAndLookup) {
    Vocab v;
    v.add("good");
    v.add("food");
    const auto table = numbered_table(v.size(), 3);
    EXPECT_EQ(embed_tokens(sentence({"good"}), v, table).shape(), (Shape{1, 3}));
    const Tensor h = embed_tokens(sentence({"food", "food", "zzz"}), v, table);
    for (std::size_t c = 0; c < 3; ++c) {
        EXPECT_EQ(h(0, c), h(1, c));
        EXPECT_EQ(h(2, c), table.weights(Vocab::unk, c));
    }
    Example empty;
    EXPECT_THROW(embed_tokens(empty, v, table), value_error);
}

TEST(ComposedTagEmbedding, PaddingRule) {
    TagVocab tv(3);
    const std::size_t amod = tv.add("amod"), nsubj = tv.add("nsubj");
    const auto tags = numbered_table(tv.size(), 2), hops = numbered_table(3, 2);
    auto block = [](const EmbeddingTable& t, std::size_t row) { return std::vector<double>{t.weights(row, 0), t.weights(row, 1)}; };
    auto concat = [](std::initializer_list<std::vector<double>> parts) {
        std::vector<double> out;
        for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
        return Tensor::vector(out);
    };
    const auto pad = TagVocab::pad_tag;
    EXPECT_EQ(embed_composed_tag(compose_tag({"nsubj"}, 1), tv, tags, hops),
              concat({block(tags, nsubj), block(tags, pad), block(tags, pad), block(hops, 0)}));
    EXPECT_EQ(embed_composed_tag(compose_tag({"amod", "nsubj"}, 2), tv, tags, hops),
              concat({block(tags, amod), block(tags, nsubj), block(tags, pad), block(hops, 1)}));
    EXPECT_EQ(embed_composed_tag(compose_tag({"amod"}, 1), tv, tags, hops),
              embed_composed_tag(compose_tag({"amod"}, 1), tv, tags, hops));
    EXPECT_THROW(embed_composed_tag(compose_tag({"a", "b", "c", "d"}, 4), tv, tags, hops), value_error);
    // unseen relation falls back to UNK
    EXPECT_EQ(composed_tag_ids(compose_tag({"xcomp"}, 1), tv)[0], TagVocab::unk_tag);
}

TEST(Precomputed, LoadsAndValidates) {
    std::istringstream ok(R"({"tokens":["a","b"],"vectors":[[1,2,3],[4,5,6]]})"
                          "\n");
    const auto p = PrecomputedEmbeddings::load(ok);
    EXPECT_EQ(p.dim(), 3u);
    const Tensor* h = p.find({"a", "b"});
    ASSERT_NE(h, nullptr);
    EXPECT_EQ((*h)(1, 2), 6.0);
    EXPECT_EQ(p.find({"a"}), nullptr);

    std::istringstream ragged(R"({"tokens":["a","b"],"vectors":[[1,2,3],[4,5]]})"
                              "\n");
    EXPECT_THROW(PrecomputedEmbeddings::load(ragged), parse_error);
    std::istringstream short_rows(R"({"tokens":["a","b"],"vectors":[[1,2,3]]})"
                                  "\n");
    EXPECT_THROW(PrecomputedEmbeddings::load(short_rows), parse_error);
}

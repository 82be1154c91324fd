#pragma once

// Seeded toy corpus with hand-built dependency trees. The opinion word is
// either adjacent to the aspect or separated from it by a relative clause
// (far in token order, one hop in the tree), and two-aspect sentences carry
// different labels per aspect.

#include <array>
#include <string>
#include <vector>

#include "gdd/dataset.hpp"
#include "gdd/rng.hpp"

namespace gdd {

namespace detail {

inline const std::array<std::vector<std::string>, num_classes>& opinion_words() {
    static const std::array<std::vector<std::string>, num_classes> w = {{
        {"great", "tasty", "friendly", "excellent"},
        {"okay", "average", "standard", "ordinary"},
        {"awful", "bland", "rude", "terrible"},
    }};
    return w;
}

inline const std::vector<std::string>& aspect_words() {
    static const std::vector<std::string> w = {"food", "service", "staff", "pasta", "wine", "decor", "price", "menu"};
    return w;
}

inline const std::vector<std::string>& time_words() {
    static const std::vector<std::string> w = {"noon", "night", "lunch", "dinner"};
    return w;
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
    return v[rng.below(v.size())];
}

// the ASP was OP
inline Example near_template(Rng& rng, Label label) {
    Example e;
    e.tokens = {"the", pick(rng, aspect_words()), "was", pick(rng, opinion_words()[static_cast<std::size_t>(label)])};
    e.dep_heads = {2, 4, 4, 0};
    e.dep_rels = {"det", "nsubj", "cop", "root"};
    e.aspect_start = 1;
    e.aspect_end = 2;
    e.label = label;
    return e;
}

// the ASP , which we ordered at TIME , was OP
inline Example far_template(Rng& rng, Label label) {
    Example e;
    e.tokens = {"the", pick(rng, aspect_words()), ",",    "which", "we", "ordered",
                "at",  pick(rng, time_words()),   ",",    "was",
                pick(rng, opinion_words()[static_cast<std::size_t>(label)])};
    e.dep_heads = {2, 11, 6, 6, 6, 2, 8, 6, 6, 11, 0};
    e.dep_rels = {"det", "nsubj", "punct", "obj", "nsubj", "acl", "case", "obl", "punct", "cop", "root"};
    e.aspect_start = 1;
    e.aspect_end = 2;
    e.label = label;
    return e;
}

// the ASP1 was OP1 but the ASP2 was OP2; one example per aspect
inline std::array<Example, 2> pair_template(Rng& rng, Label first, Label second) {
    const auto& asp = aspect_words();
    const std::size_t a1 = rng.below(asp.size());
    const std::size_t a2 = (a1 + 1 + rng.below(asp.size() - 1)) % asp.size();
    Example e;
    e.tokens = {"the", asp[a1], "was", pick(rng, opinion_words()[static_cast<std::size_t>(first)]),
                "but", "the",   asp[a2], "was", pick(rng, opinion_words()[static_cast<std::size_t>(second)])};
    e.dep_heads = {2, 4, 4, 0, 9, 7, 9, 9, 4};
    e.dep_rels = {"det", "nsubj", "cop", "root", "cc", "det", "nsubj", "cop", "conj"};
    Example f = e;
    e.aspect_start = 1;
    e.aspect_end = 2;
    e.label = first;
    f.aspect_start = 6;
    f.aspect_end = 7;
    f.label = second;
    return {e, f};
}

} // namespace detail

/// `n` examples with labels cycling positive, neutral, negative.
inline std::vector<Example> generate_synthetic(std::size_t n, std::uint64_t seed) {
    Rng rng = Rng(seed).fork("synthetic");
    std::vector<Example> out;
    auto label_of = [](std::size_t i) { return static_cast<Label>(i % num_classes); };
    while (out.size() < n) {
        const Label label = label_of(out.size());
        const auto kind = rng.below(3);
        if (kind == 0) {
            out.push_back(detail::near_template(rng, label));
        } else if (kind == 1) {
            out.push_back(detail::far_template(rng, label));
        } else {
            const Label other = static_cast<Label>((static_cast<std::size_t>(label) + 1 + rng.below(2)) % num_classes);
            auto pair = detail::pair_template(rng, label, other);
            out.push_back(pair[0]);
            if (out.size() < n) out.push_back(pair[1]);
        }
    }
    return out;
}

} // namespace gdd

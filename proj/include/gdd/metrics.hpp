#pragma once

#include <array>
#include <vector>

#include <json.hpp>

#include "gdd/dataset.hpp"
#include "gdd/error.hpp"

namespace gdd {

struct ClassScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0; // gold count
};

struct Metrics {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::array<ClassScores, num_classes> per_class{};
    std::array<std::array<std::size_t, num_classes>, num_classes> confusion{}; // [gold][pred]
};

/// Precision/recall with a zero denominator are 0, so a class absent from
/// both predictions and gold scores F1 = 0 and still counts in the macro mean.
inline Metrics compute_metrics(const std::vector<Label>& pred, const std::vector<Label>& gold) {
    if (pred.size() != gold.size())
        throw shape_error("metrics: " + std::to_string(pred.size()) + " predictions for " + std::to_string(gold.size()) +
                          " gold labels");
    if (gold.empty()) throw value_error("metrics: empty dataset");
    Metrics m;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const auto g = static_cast<std::size_t>(gold[i]), p = static_cast<std::size_t>(pred[i]);
        ++m.confusion[g][p];
        correct += g == p;
    }
    m.accuracy = static_cast<double>(correct) / static_cast<double>(gold.size());
    for (std::size_t c = 0; c < num_classes; ++c) {
        std::size_t tp = m.confusion[c][c], predicted = 0, actual = 0;
        for (std::size_t k = 0; k < num_classes; ++k) {
            predicted += m.confusion[k][c];
            actual += m.confusion[c][k];
        }
        ClassScores& s = m.per_class[c];
        s.support = actual;
        s.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
        s.recall = actual ? static_cast<double>(tp) / static_cast<double>(actual) : 0.0;
        s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
        m.macro_f1 += s.f1 / static_cast<double>(num_classes);
    }
    return m;
}

inline nlohmann::json metrics_to_json(const Metrics& m) {
    nlohmann::json per = nlohmann::json::object();
    for (std::size_t c = 0; c < num_classes; ++c) {
        const auto& s = m.per_class[c];
        per[label_names[c]] = {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}, {"support", s.support}};
    }
    return {{"accuracy", m.accuracy}, {"macro_f1", m.macro_f1}, {"per_class", per}};
}

} // namespace gdd

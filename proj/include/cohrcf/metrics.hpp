#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>

#include "error.hpp"

namespace cohrcf {

struct PredictedPair {
    double predicted;
    double actual;
};

/// Mean absolute error.
inline double mae(std::span<const PredictedPair> pairs) {
    detail::require(!pairs.empty(), ErrorCode::EmptyInput, "MAE of no predictions");
    double s = 0.0;
    for (const auto& p : pairs) s += std::abs(p.predicted - p.actual);
    return s / static_cast<double>(pairs.size());
}

struct PrecisionRecall {
    double precision = 0.0;
    double recall = 0.0;
};

/// An entry is relevant when actual >= threshold and recommended when
/// predicted >= threshold. Empty denominators give 0.
inline PrecisionRecall precision_recall(std::span<const PredictedPair> pairs, double threshold) {
    detail::require(!pairs.empty(), ErrorCode::EmptyInput, "precision/recall of no predictions");
    std::size_t relevant = 0, recommended = 0, hits = 0;
    for (const auto& p : pairs) {
        const bool rel = p.actual >= threshold;
        const bool rec = p.predicted >= threshold;
        relevant += rel;
        recommended += rec;
        hits += rel && rec;
    }
    PrecisionRecall out;
    if (recommended) out.precision = static_cast<double>(hits) / static_cast<double>(recommended);
    if (relevant) out.recall = static_cast<double>(hits) / static_cast<double>(relevant);
    return out;
}

inline double f1(double precision, double recall) {
    const double s = precision + recall;
    return s == 0.0 ? 0.0 : 2.0 * precision * recall / s;
}

}  // namespace cohrcf

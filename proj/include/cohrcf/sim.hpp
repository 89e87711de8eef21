#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "spectral.hpp"

namespace cohrcf {

// Rating sequences are dense over a shared index set; 0 means unrated.
// In the pipeline the index set is the users of one cluster and each
// sequence is an item column.

namespace detail {

inline void require_same_length(std::span<const double> u, std::span<const double> v) {
    require(u.size() == v.size(), ErrorCode::LengthMismatch,
            "rating sequences of length " + std::to_string(u.size()) + " and " +
                std::to_string(v.size()));
}

}  // namespace detail

/// Pearson correlation over co-rated positions, means taken over those
/// positions. Fewer than two co-rated positions or a zero variance gives 0.
inline double pcc(std::span<const double> u, std::span<const double> v) {
    detail::require_same_length(u, v);
    std::size_t n = 0;
    double su = 0.0, sv = 0.0;
    for (std::size_t p = 0; p < u.size(); ++p) {
        if (u[p] == 0.0 || v[p] == 0.0) continue;
        ++n;
        su += u[p];
        sv += v[p];
    }
    if (n < 2) return 0.0;
    const double mu = su / static_cast<double>(n);
    const double mv = sv / static_cast<double>(n);
    double num = 0.0, du = 0.0, dv = 0.0;
    for (std::size_t p = 0; p < u.size(); ++p) {
        if (u[p] == 0.0 || v[p] == 0.0) continue;
        const double a = u[p] - mu, b = v[p] - mv;
        num += a * b;
        du += a * a;
        dv += b * b;
    }
    if (du == 0.0 || dv == 0.0) return 0.0;
    return std::clamp(num / (std::sqrt(du) * std::sqrt(dv)), -1.0, 1.0);
}

/// |rated(u) & rated(v)| / |rated(u) | rated(v)|; 0 when both are empty.
inline double jaccard(std::span<const double> u, std::span<const double> v) {
    detail::require_same_length(u, v);
    std::size_t both = 0, either = 0;
    for (std::size_t p = 0; p < u.size(); ++p) {
        const bool a = u[p] != 0.0, b = v[p] != 0.0;
        both += a && b;
        either += a || b;
    }
    return either == 0 ? 0.0 : static_cast<double>(both) / static_cast<double>(either);
}

/// Largest squared difference on the 1..5 scale.
inline constexpr double kMaxSquaredDiff = 16.0;

/// 1 - mean squared difference over co-rated positions / 16; 0 with no overlap.
inline double msd(std::span<const double> u, std::span<const double> v) {
    detail::require_same_length(u, v);
    std::size_t n = 0;
    double s = 0.0;
    for (std::size_t p = 0; p < u.size(); ++p) {
        if (u[p] == 0.0 || v[p] == 0.0) continue;
        const double d = u[p] - v[p];
        s += d * d;
        ++n;
    }
    if (n == 0) return 0.0;
    return std::clamp(1.0 - (s / static_cast<double>(n)) / kMaxSquaredDiff, 0.0, 1.0);
}

inline double jmsd(std::span<const double> u, std::span<const double> v) {
    return jaccard(u, v) * msd(u, v);
}

enum class MeasureKind { cohr, pcc, jaccard, msd, jmsd };

inline constexpr MeasureKind kAllMeasures[] = {MeasureKind::cohr, MeasureKind::pcc,
                                               MeasureKind::jaccard, MeasureKind::msd,
                                               MeasureKind::jmsd};

constexpr std::string_view to_string(MeasureKind kind) noexcept {
    switch (kind) {
    case MeasureKind::cohr: return "cohr";
    case MeasureKind::pcc: return "pcc";
    case MeasureKind::jaccard: return "jaccard";
    case MeasureKind::msd: return "msd";
    case MeasureKind::jmsd: return "jmsd";
    }
    return "?";
}

inline MeasureKind parse_measure(std::string_view name) {
    for (auto kind : kAllMeasures)
        if (to_string(kind) == name) return kind;
    detail::fail(ErrorCode::UnknownMeasure, "unknown similarity measure '" + std::string(name) + "'");
}

/// How coherence picks its Welch parameters for a sequence of length n:
/// see default_welch_params(); `segment_cap` bounds the segment length.
struct WelchPolicy {
    std::size_t segment_cap = 32;
    double overlap = 0.5;
    Window window = Window::hann;

    WelchParams for_length(std::size_t n) const {
        return default_welch_params(n, segment_cap, overlap, window);
    }
    /// False when fewer than two segments fit, i.e. coherence is undefined.
    bool feasible(std::size_t n) const { return for_length(n).segment_count(n) >= 2; }
};

struct SimilarityMeasure {
    MeasureKind kind = MeasureKind::cohr;
    WelchPolicy welch;  // only read for kind == cohr
};

inline double similarity(const SimilarityMeasure& measure, std::span<const double> a,
                         std::span<const double> b) {
    switch (measure.kind) {
    case MeasureKind::cohr:
        detail::require_same_length(a, b);
        return cohr_sim(a, b, measure.welch.for_length(a.size()));
    case MeasureKind::pcc: return pcc(a, b);
    case MeasureKind::jaccard: return jaccard(a, b);
    case MeasureKind::msd: return msd(a, b);
    case MeasureKind::jmsd: return jmsd(a, b);
    }
    detail::fail(ErrorCode::InvariantViolation, "unhandled measure kind");
}

}  // namespace cohrcf

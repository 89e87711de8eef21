#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "cluster.hpp"
#include "data.hpp"
#include "error.hpp"
#include "pipeline.hpp"
#include "sim.hpp"

namespace cohrcf {

struct ExperimentConfig {
    std::string dataset_path;
    std::uint64_t seed = 42;
    std::size_t folds = 5;
    std::vector<std::size_t> k_values{10, 15, 20, 25, 30, 35, 40, 45, 50, 55};
    std::vector<std::size_t> n_values{10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
    std::vector<double> sparsity_levels{0.18, 0.1, 0.05, 1.0};
    std::vector<MeasureKind> measures{std::begin(kAllMeasures), std::end(kAllMeasures)};
    SomConfig som;
    KMeansOptions kmeans;
    WelchPolicy welch;
    std::size_t hidden_per_user = 10;
    double relevance_threshold = 4.0;
    std::size_t min_ratings = 20;

    void validate() const {
        detail::require(folds >= 2, ErrorCode::InvalidFoldCount, "need at least 2 folds");
        detail::require(!k_values.empty() && !n_values.empty() && !sparsity_levels.empty() && !measures.empty(),
                        ErrorCode::InvalidArgument, "experiment grid has an empty axis");
        for (auto k : k_values) detail::require(k >= 1, ErrorCode::InvalidK, "K must be >= 1");
        for (auto n : n_values) detail::require(n >= 1, ErrorCode::InvalidArgument, "N must be >= 1");
        for (auto s : sparsity_levels)
            detail::require(s > 0.0 && s <= 1.0, ErrorCode::InvalidArgument, "sparsity keep-fraction outside (0, 1]");
        detail::require(relevance_threshold >= 1.0 && relevance_threshold <= 5.0, ErrorCode::InvalidArgument,
                        "relevance threshold outside 1..5");
        detail::require(hidden_per_user >= 1, ErrorCode::InvalidArgument, "hidden-per-user must be >= 1");
        som.validate();
    }
};

/// `fold` is the 1-based fold number, or nullopt for the mean row.
struct ReportRow {
    MeasureKind measure;
    std::size_t k;
    std::size_t n;
    double sparsity;
    std::optional<std::size_t> fold;
    double mae;
    double precision;
    double recall;
    double f1;
};

struct ExperimentReport {
    std::vector<ReportRow> rows;
    ExperimentConfig config;
    double wall_seconds = 0.0;

    std::vector<ReportRow> mean_rows() const {
        std::vector<ReportRow> out;
        for (const auto& r : rows)
            if (!r.fold) out.push_back(r);
        return out;
    }

    /// Mean row for one grid point.
    const ReportRow& mean(MeasureKind measure, std::size_t k, std::size_t n, double sparsity) const {
        for (const auto& r : rows)
            if (!r.fold && r.measure == measure && r.k == k && r.n == n && r.sparsity == sparsity) return r;
        detail::fail(ErrorCode::InvalidArgument, "no such grid point in report");
    }
};

namespace detail {

inline ReportRow mean_of(const std::vector<ReportRow>& fold_rows) {
    ReportRow m = fold_rows.front();
    m.fold.reset();
    m.mae = m.precision = m.recall = m.f1 = 0.0;
    for (const auto& r : fold_rows) {
        m.mae += r.mae;
        m.precision += r.precision;
        m.recall += r.recall;
        m.f1 += r.f1;
    }
    const double n = static_cast<double>(fold_rows.size());
    m.mae /= n;
    m.precision /= n;
    m.recall /= n;
    m.f1 /= n;
    return m;
}

inline void check_row(const ReportRow& r) {
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    require(r.mae >= 0.0 && unit(r.precision) && unit(r.recall) && unit(r.f1), ErrorCode::InvariantViolation,
            "report metrics out of range");
}

}  // namespace detail

/// Runs the full grid on an already-loaded matrix. For each sparsity level
/// the matrix is sparsified once and split into folds once; the SOM is
/// trained once per fold and k-means once per (fold, K), so every
/// measure and N sees identical clusters and hidden ratings.
inline ExperimentReport run_experiment(const RatingMatrix& full, const ExperimentConfig& config) {
    config.validate();
    const auto started = std::chrono::steady_clock::now();

    using Key = std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>;  // sparsity, measure, K, N
    std::map<Key, std::vector<ReportRow>> cells;

    for (std::size_t si = 0; si < config.sparsity_levels.size(); ++si) {
        const double keep = config.sparsity_levels[si];
        const RatingMatrix m = sparsify(full, keep, config.seed);
        const FoldPlan plan = make_folds(m, config.folds, config.seed);
        for (std::size_t f = 0; f < plan.folds.size(); ++f) {
            const std::uint64_t fold_seed = config.seed + f;
            const auto split = split_fold(m, plan.folds[f], config.hidden_per_user, fold_seed);
            detail::require(!split.hidden.entries.empty(), ErrorCode::NoHiddenRatings,
                            "fold " + std::to_string(f + 1) + " has no hidden ratings");
            const auto trained = train_user_som(split.masked, split.training_users, config.som,
                                                stage_seed(fold_seed, FoldStage::som));
            for (std::size_t ki = 0; ki < config.k_values.size(); ++ki) {
                const auto model = cluster_users(trained, split.masked, config.k_values[ki],
                                                 stage_seed(fold_seed, FoldStage::kmeans), config.kmeans);
                FoldPredictor predictor(split.masked, split.masked, model, split.hidden);
                for (std::size_t mi = 0; mi < config.measures.size(); ++mi) {
                    const SimilarityMeasure measure{config.measures[mi], config.welch};
                    for (std::size_t ni = 0; ni < config.n_values.size(); ++ni) {
                        const auto metrics = score_predictions(
                            predictor.predict_hidden(measure, config.n_values[ni]), config.relevance_threshold);
                        ReportRow row{measure.kind, config.k_values[ki], config.n_values[ni], keep, f + 1,
                                      metrics.mae, metrics.precision, metrics.recall, metrics.f1};
                        detail::check_row(row);
                        cells[{si, mi, ki, ni}].push_back(row);
                    }
                }
            }
        }
    }

    ExperimentReport report;
    report.config = config;
    for (const auto& [key, fold_rows] : cells) {
        report.rows.insert(report.rows.end(), fold_rows.begin(), fold_rows.end());
        report.rows.push_back(detail::mean_of(fold_rows));
    }
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

/// Loads and cleans the dataset named in the config, then runs the grid.
inline ExperimentReport run_experiment(const ExperimentConfig& config) {
    const auto m = clean_min_ratings(load_movielens(config.dataset_path), config.min_ratings);
    return run_experiment(m, config);
}

namespace detail {

inline std::string fixed4(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    return os.str();
}

}  // namespace detail

inline constexpr const char* kReportHeader = "measure,K,N,sparsity,fold,mae,precision,recall,f1";

inline std::string format_report(const ExperimentReport& report) {
    std::ostringstream os;
    os << kReportHeader << '\n';
    for (const auto& r : report.rows) {
        os << to_string(r.measure) << ',' << r.k << ',' << r.n << ',' << detail::fixed4(r.sparsity) << ','
           << (r.fold ? std::to_string(*r.fold) : std::string("mean")) << ',' << detail::fixed4(r.mae) << ','
           << detail::fixed4(r.precision) << ',' << detail::fixed4(r.recall) << ',' << detail::fixed4(r.f1)
           << '\n';
    }
    return os.str();
}

inline void write_text(const std::string& text, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    detail::require(out.good(), ErrorCode::IoFailure, "cannot write " + path);
    out << text;
    out.flush();
    detail::require(out.good(), ErrorCode::IoFailure, "write failed for " + path);
}

/// CSV with header `measure,K,N,sparsity,fold,mae,precision,recall,f1`,
/// four decimals per float.
inline void emit_report(const ExperimentReport& report, const std::string& path) {
    write_text(format_report(report), path);
}

// ---------------------------------------------------------------------------
// Clustering-stage comparison: k-means on users vs SOM -> k-means
// ---------------------------------------------------------------------------

enum class ClusterArm { kmeans, som_kmeans };

constexpr std::string_view to_string(ClusterArm arm) noexcept {
    return arm == ClusterArm::kmeans ? "kmeans" : "som+kmeans";
}

struct SilhouetteRow {
    std::size_t k;
    ClusterArm arm;
    std::size_t points;
    std::size_t negative_count;
    double mean_silhouette;
    double seconds;  // clustering wall-clock; kept out of the CSV
};

/// For each k, clusters the user profiles (a) by k-means directly and (b)
/// by SOM followed by k-means over the occupied prototypes, with users
/// inheriting their BMU's cluster. Both arms are scored on the users.
/// The SOM is trained once; its time is charged to every (b) row.
inline std::vector<SilhouetteRow> silhouette_comparison(const RatingMatrix& m, std::span<const std::size_t> k_values,
                                                        std::uint64_t seed, const SomConfig& som_config = {},
                                                        KMeansOptions options = {}) {
    for (auto k : k_values)
        detail::require(k >= 2 && k <= m.n_users(), ErrorCode::InvalidK,
                        "silhouette k outside [2, users]");
    std::vector<Vector> users;
    users.reserve(m.n_users());
    for (std::size_t u = 0; u < m.n_users(); ++u) users.push_back(m.dense_row(u));
    const auto dist = pairwise_distances(users);

    using clock = std::chrono::steady_clock;
    auto seconds_since = [](clock::time_point t0) {
        return std::chrono::duration<double>(clock::now() - t0).count();
    };

    const auto som_start = clock::now();
    const SomMap som = train_som(users, som_config, derive_seed(seed, 11));
    const SomProjection proj = map_to_input_space(som, users);
    const double som_seconds = seconds_since(som_start);

    auto summarize = [&](std::size_t k, ClusterArm arm, const std::vector<std::size_t>& labels, double secs) {
        const auto s = silhouette_from_distances(dist, labels);
        SilhouetteRow row{k, arm, s.size(), 0, 0.0, secs};
        for (double v : s) {
            row.negative_count += v < 0.0;
            row.mean_silhouette += v;
        }
        row.mean_silhouette /= static_cast<double>(s.size());
        return row;
    };

    std::vector<SilhouetteRow> rows;
    for (auto k : k_values) {
        auto t0 = clock::now();
        const auto direct = kmeans(users, k, derive_seed(seed, 12), options);
        const double direct_secs = seconds_since(t0);
        std::vector<std::size_t> labels(users.size());
        for (const auto& [i, c] : direct.assignment) labels[i] = c;
        rows.push_back(summarize(k, ClusterArm::kmeans, labels, direct_secs));

        t0 = clock::now();
        const auto proto = kmeans(proj.prototypes, k, derive_seed(seed, 13), options);
        const double proto_secs = seconds_since(t0) + som_seconds;
        std::map<std::size_t, std::size_t> neuron_cluster;
        for (std::size_t p = 0; p < proj.occupied.size(); ++p) neuron_cluster[proj.occupied[p]] = proto.assignment.at(p);
        for (std::size_t i = 0; i < users.size(); ++i) labels[i] = neuron_cluster.at(proj.bmu[i]);
        rows.push_back(summarize(k, ClusterArm::som_kmeans, labels, proto_secs));
    }
    return rows;
}

inline std::string format_silhouette(std::span<const SilhouetteRow> rows) {
    std::ostringstream os;
    os << "k,arm,points,negative_count,mean_silhouette\n";
    for (const auto& r : rows)
        os << r.k << ',' << to_string(r.arm) << ',' << r.points << ',' << r.negative_count << ','
           << detail::fixed4(r.mean_silhouette) << '\n';
    return os.str();
}

}  // namespace cohrcf

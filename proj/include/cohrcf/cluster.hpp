#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "random.hpp"

namespace cohrcf {

using Vector = std::vector<double>;

inline double squared_distance(std::span<const double> x, std::span<const double> w) {
    detail::require(x.size() == w.size(), ErrorCode::DimensionMismatch,
                    "distance between vectors of dimension " + std::to_string(x.size()) + " and " +
                        std::to_string(w.size()));
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - w[i];
        s += d * d;
    }
    return s;
}

inline double euclidean_distance(std::span<const double> x, std::span<const double> w) {
    return std::sqrt(squared_distance(x, w));
}

// ---------------------------------------------------------------------------
// Self-organizing map
// ---------------------------------------------------------------------------

/// Rectangular SOM lattice and its two-phase neighborhood schedule.
///
/// During the ordering phase the radius decays as sigma0 * exp(-t / tau);
/// during tuning it stays at tuning_sigma. When tau is unset it is chosen
/// so the decay lands on tuning_sigma exactly at the phase boundary.
struct SomConfig {
    std::size_t grid_rows = 10;
    std::size_t grid_cols = 10;
    double sigma0 = 5.0;
    std::optional<double> tau;
    std::size_t ordering_steps = 1000;
    std::size_t tuning_steps = 2000;
    double tuning_sigma = 1.0;

    void validate() const {
        detail::require(grid_rows * grid_cols >= 1, ErrorCode::InvalidArgument, "empty SOM grid");
        detail::require(tuning_sigma > 0.0 && sigma0 >= tuning_sigma, ErrorCode::InvalidArgument,
                        "need sigma0 >= tuning_sigma > 0");
        detail::require(ordering_steps >= 1 && tuning_steps >= 1, ErrorCode::InvalidArgument,
                        "SOM phases need at least one step each");
        detail::require(!tau || *tau > 0.0, ErrorCode::InvalidArgument, "tau must be positive");
    }

    std::size_t neuron_count() const noexcept { return grid_rows * grid_cols; }
    std::size_t total_steps() const noexcept { return ordering_steps + tuning_steps; }

    double decay_constant() const {
        if (tau) return *tau;
        if (sigma0 == tuning_sigma) return std::numeric_limits<double>::infinity();
        return static_cast<double>(ordering_steps) / std::log(sigma0 / tuning_sigma);
    }

    double sigma_at(std::size_t step) const;

    friend bool operator==(const SomConfig&, const SomConfig&) = default;
};

/// exp(-d^2 / (2 sigma^2)); 1 at the winning neuron.
inline double neighborhood(double lateral_distance, double sigma) {
    detail::require(sigma > 0.0, ErrorCode::InvalidArgument, "neighborhood sigma must be > 0");
    return std::exp(-(lateral_distance * lateral_distance) / (2.0 * sigma * sigma));
}

/// sigma0 * exp(-t / tau).
inline double sigma_schedule(double t, double sigma0, double tau) {
    detail::require(sigma0 > 0.0 && tau > 0.0 && t >= 0.0, ErrorCode::InvalidArgument,
                    "sigma schedule needs sigma0 > 0, tau > 0, t >= 0");
    return sigma0 * std::exp(-t / tau);
}

inline double SomConfig::sigma_at(std::size_t step) const {
    if (step < ordering_steps) return sigma_schedule(static_cast<double>(step), sigma0, decay_constant());
    return tuning_sigma;
}

/// Step factor sigma(t) * T applied to (x - w), clamped to at most 1 so the
/// update never overshoots the input.
inline double som_step_factor(std::size_t t, double winner_lateral_distance, const SomConfig& config) {
    const double sigma = config.sigma_at(t);
    return std::min(1.0, sigma * neighborhood(winner_lateral_distance, sigma));
}

/// w + sigma(t) * T * (x - w).
inline Vector som_update(std::span<const double> w, std::span<const double> x, std::size_t t,
                         double winner_lateral_distance, const SomConfig& config) {
    detail::require(w.size() == x.size(), ErrorCode::DimensionMismatch,
                    "SOM update with mismatched dimensions");
    const double factor = som_step_factor(t, winner_lateral_distance, config);
    Vector out(w.begin(), w.end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += factor * (x[i] - out[i]);
    return out;
}

class SomMap {
public:
    SomMap() = default;
    SomMap(SomConfig config, std::size_t dimension, std::vector<double> weights)
        : config_(config), dim_(dimension), weights_(std::move(weights)) {
        detail::require(weights_.size() == config_.neuron_count() * dim_,
                        ErrorCode::DimensionMismatch, "SOM weight block has the wrong size");
    }

    const SomConfig& config() const noexcept { return config_; }
    std::size_t dimension() const noexcept { return dim_; }
    std::size_t neuron_count() const noexcept { return config_.neuron_count(); }

    std::span<const double> weight(std::size_t neuron) const {
        return std::span<const double>(weights_).subspan(neuron * dim_, dim_);
    }
    std::span<double> weight(std::size_t neuron) {
        return std::span<double>(weights_).subspan(neuron * dim_, dim_);
    }
    const std::vector<double>& weights() const noexcept { return weights_; }

    /// Euclidean distance between two neurons' (row, col) grid positions.
    double lateral_distance(std::size_t a, std::size_t b) const {
        const auto cols = config_.grid_cols;
        const double dr = static_cast<double>(a / cols) - static_cast<double>(b / cols);
        const double dc = static_cast<double>(a % cols) - static_cast<double>(b % cols);
        return std::sqrt(dr * dr + dc * dc);
    }

    friend bool operator==(const SomMap&, const SomMap&) = default;

private:
    SomConfig config_;
    std::size_t dim_ = 0;
    std::vector<double> weights_;  // row-major neurons, each `dim_` wide
};

/// Neuron with the closest weight vector; ties go to the lowest flat index.
inline std::size_t best_matching_unit(const SomMap& som, std::span<const double> x) {
    detail::require(x.size() == som.dimension(), ErrorCode::DimensionMismatch,
                    "input dimension does not match SOM");
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < som.neuron_count(); ++j) {
        const double d = squared_distance(x, som.weight(j));
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    return best;
}

/// Online SOM training. Weights start uniform in each dimension's data
/// range; each step draws one input, finds its BMU, and moves every neuron
/// toward the input by its clamped step factor.
inline SomMap train_som(std::span<const Vector> data, const SomConfig& config, std::uint64_t seed) {
    config.validate();
    detail::require(!data.empty(), ErrorCode::EmptyInput, "SOM training data is empty");
    const std::size_t dim = data.front().size();
    for (const auto& v : data)
        detail::require(v.size() == dim, ErrorCode::DimensionMismatch,
                        "SOM training vectors differ in dimension");

    Vector lo(data.front()), hi(data.front());
    for (const auto& v : data)
        for (std::size_t i = 0; i < dim; ++i) {
            lo[i] = std::min(lo[i], v[i]);
            hi[i] = std::max(hi[i], v[i]);
        }

    Rng rng(seed);
    std::vector<double> weights(config.neuron_count() * dim);
    for (std::size_t j = 0; j < config.neuron_count(); ++j)
        for (std::size_t i = 0; i < dim; ++i) weights[j * dim + i] = uniform_real(rng, lo[i], hi[i]);
    SomMap som(config, dim, std::move(weights));

    std::vector<double> lateral(config.neuron_count());
    for (std::size_t t = 0; t < config.total_steps(); ++t) {
        const Vector& x = data[uniform_index(rng, data.size())];
        const std::size_t winner = best_matching_unit(som, x);
        for (std::size_t j = 0; j < som.neuron_count(); ++j) {
            const double factor = som_step_factor(t, som.lateral_distance(j, winner), config);
            auto w = som.weight(j);
            for (std::size_t i = 0; i < dim; ++i) w[i] += factor * (x[i] - w[i]);
        }
    }
    return som;
}

/// Inputs attached to each neuron after training.
struct SomProjection {
    std::vector<std::size_t> bmu;                // per input
    std::vector<std::size_t> occupied;           // neurons that won >= 1 input, ascending
    std::vector<Vector> prototypes;              // weights of `occupied`, same order
    std::map<std::size_t, std::vector<std::size_t>> membership;  // neuron -> input indices
};

inline SomProjection map_to_input_space(const SomMap& som, std::span<const Vector> data) {
    SomProjection p;
    p.bmu.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto j = best_matching_unit(som, data[i]);
        p.bmu.push_back(j);
        p.membership[j].push_back(i);
    }
    for (const auto& [neuron, members] : p.membership) {
        p.occupied.push_back(neuron);
        auto w = som.weight(neuron);
        p.prototypes.emplace_back(w.begin(), w.end());
    }
    return p;
}

// ---------------------------------------------------------------------------
// k-means and cluster models
// ---------------------------------------------------------------------------

/// k centroids plus a membership map. `assignment` is keyed by point index
/// straight out of kmeans(), and by user index once a pipeline has mapped
/// users onto the clustering. Member statistics (rating count and sum of the
/// users in each cluster) drive the cold-start rule of assign_cluster().
struct ClusterModel {
    std::size_t k = 0;
    std::vector<Vector> centroids;
    std::map<std::size_t, std::size_t> assignment;
    std::map<std::size_t, std::size_t> neuron_to_cluster;
    std::vector<std::size_t> member_rating_counts;
    std::vector<double> member_rating_sums;
    std::vector<double> sse_history;  // total within-cluster SSE after each Lloyd iteration
    std::size_t iterations = 0;

    friend bool operator==(const ClusterModel&, const ClusterModel&) = default;
};

struct KMeansOptions {
    std::size_t max_iter = 300;
    double tol = 1e-6;
};

namespace detail {

inline std::size_t nearest_centroid(std::span<const double> x, const std::vector<Vector>& centroids) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        const double d = squared_distance(x, centroids[c]);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

/// Indices of one representative per distinct point, in index order.
inline std::vector<std::size_t> distinct_representatives(std::span<const Vector> points) {
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
    std::vector<std::size_t> reps;
    for (std::size_t i = 0; i < order.size(); ++i)
        if (i == 0 || points[order[i]] != points[order[i - 1]]) reps.push_back(order[i]);
    std::sort(reps.begin(), reps.end());
    return reps;
}

inline double total_sse(std::span<const Vector> points, const std::vector<std::size_t>& labels,
                        const std::vector<Vector>& centroids) {
    double s = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) s += squared_distance(points[i], centroids[labels[i]]);
    return s;
}

}  // namespace detail

/// Lloyd's algorithm with Euclidean distance. Initial centroids are k
/// distinct points drawn without replacement; a cluster that goes empty is
/// re-seeded with the point farthest from its own centroid.
inline ClusterModel kmeans(std::span<const Vector> points, std::size_t k, std::uint64_t seed,
                           KMeansOptions options = {}) {
    detail::require(k >= 1, ErrorCode::InvalidK, "k must be >= 1");
    detail::require(!points.empty(), ErrorCode::EmptyInput, "k-means on no points");
    const std::size_t dim = points.front().size();
    for (const auto& p : points)
        detail::require(p.size() == dim, ErrorCode::DimensionMismatch, "points differ in dimension");
    auto reps = detail::distinct_representatives(points);
    detail::require(k <= reps.size(), ErrorCode::InvalidK,
                    "k = " + std::to_string(k) + " exceeds the " + std::to_string(reps.size()) +
                        " distinct points");

    Rng rng(seed);
    shuffle(std::span(reps), rng);
    ClusterModel model;
    model.k = k;
    for (std::size_t c = 0; c < k; ++c) model.centroids.push_back(points[reps[c]]);

    const std::size_t n = points.size();
    std::vector<std::size_t> labels(n, 0);
    for (std::size_t it = 0; it < options.max_iter; ++it) {
        for (std::size_t i = 0; i < n; ++i) labels[i] = detail::nearest_centroid(points[i], model.centroids);

        std::vector<std::size_t> sizes(k, 0);
        for (auto l : labels) ++sizes[l];
        for (std::size_t c = 0; c < k; ++c) {
            if (sizes[c] != 0) continue;
            std::size_t far = n;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (sizes[labels[i]] < 2) continue;
                const double d = squared_distance(points[i], model.centroids[labels[i]]);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            detail::require(far < n, ErrorCode::InvariantViolation, "no point available to re-seed");
            --sizes[labels[far]];
            labels[far] = c;
            sizes[c] = 1;
            model.centroids[c] = points[far];
        }

        std::vector<Vector> next(k, Vector(dim, 0.0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t d = 0; d < dim; ++d) next[labels[i]][d] += points[i][d];
        double movement = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            for (auto& v : next[c]) v /= static_cast<double>(sizes[c]);
            movement = std::max(movement, euclidean_distance(next[c], model.centroids[c]));
        }
        model.centroids = std::move(next);
        model.sse_history.push_back(detail::total_sse(points, labels, model.centroids));
        model.iterations = it + 1;
        if (movement < options.tol) break;
    }
    for (std::size_t i = 0; i < n; ++i) model.assignment[i] = labels[i];
    return model;
}

/// Per-point silhouette from a precomputed symmetric distance matrix.
/// Singleton-cluster members score 0.
inline std::vector<double> silhouette_from_distances(const std::vector<std::vector<double>>& dist,
                                                     std::span<const std::size_t> labels) {
    const std::size_t n = labels.size();
    detail::require(dist.size() == n, ErrorCode::DimensionMismatch,
                    "distance matrix does not match label count");
    const std::size_t k = n == 0 ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<std::size_t> sizes(k, 0);
    for (auto l : labels) ++sizes[l];
    const auto present = std::count_if(sizes.begin(), sizes.end(), [](auto s) { return s > 0; });
    detail::require(present >= 2, ErrorCode::TooFewClusters, "silhouette needs >= 2 clusters");

    std::vector<double> out(n, 0.0);
    std::vector<double> sums(k);
    for (std::size_t i = 0; i < n; ++i) {
        if (sizes[labels[i]] == 1) continue;
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) sums[labels[j]] += dist[i][j];
        const double a = sums[labels[i]] / static_cast<double>(sizes[labels[i]] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c)
            if (c != labels[i] && sizes[c] > 0) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
        const double denom = std::max(a, b);
        out[i] = denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return out;
}

inline std::vector<std::vector<double>> pairwise_distances(std::span<const Vector> points) {
    const std::size_t n = points.size();
    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) dist[i][j] = dist[j][i] = euclidean_distance(points[i], points[j]);
    return dist;
}

inline std::vector<double> silhouette(std::span<const Vector> points, std::span<const std::size_t> labels) {
    detail::require(points.size() == labels.size(), ErrorCode::DimensionMismatch,
                    "one label per point required");
    return silhouette_from_distances(pairwise_distances(points), labels);
}

/// Fills the per-cluster rating count and sum used by the cold-start rule.
/// `rows` are the users' rating vectors keyed like `model.assignment`.
template <typename RowLookup>
void attach_member_stats(ClusterModel& model, RowLookup&& rows) {
    model.member_rating_counts.assign(model.k, 0);
    model.member_rating_sums.assign(model.k, 0.0);
    for (const auto& [user, cluster] : model.assignment) {
        for (double r : rows(user)) {
            if (r == 0.0) continue;
            ++model.member_rating_counts[cluster];
            model.member_rating_sums[cluster] += r;
        }
    }
}

/// Nearest centroid (ties to the lowest index). An all-zero vector is a
/// cold-start user and goes to the cluster whose members supplied the
/// fewest ratings, then the smallest rating sum, then the lowest index.
inline std::size_t assign_cluster(std::span<const double> user_vector, const ClusterModel& model) {
    detail::require(!model.centroids.empty(), ErrorCode::InvalidArgument, "cluster model has no centroids");
    detail::require(user_vector.size() == model.centroids.front().size(), ErrorCode::DimensionMismatch,
                    "user vector dimension does not match centroids");
    const bool cold = std::all_of(user_vector.begin(), user_vector.end(), [](double v) { return v == 0.0; });
    if (!cold) return detail::nearest_centroid(user_vector, model.centroids);

    detail::require(model.member_rating_counts.size() == model.k && model.member_rating_sums.size() == model.k,
                    ErrorCode::InvalidArgument, "cold-start assignment needs member statistics");
    std::size_t best = 0;
    for (std::size_t c = 1; c < model.k; ++c) {
        const auto cc = model.member_rating_counts[c], bc = model.member_rating_counts[best];
        if (cc < bc || (cc == bc && model.member_rating_sums[c] < model.member_rating_sums[best])) best = c;
    }
    return best;
}

// ---------------------------------------------------------------------------
// Checkpoints
//
//   som <rows> <cols> <dim>
//   schedule <sigma0> <tau|auto> <ordering_steps> <tuning_steps> <tuning_sigma>
//   <dim weights of neuron 0>
//   ...
//
//   cluster_model <k> <dim>
//   <dim values of centroid 0>
//   ...
//   assignment <count>      then <count> lines "key cluster"
//   neurons <count>         then <count> lines "neuron cluster"
//   members                 then k lines "rating_count rating_sum"
// ---------------------------------------------------------------------------

namespace detail {

inline void expect_token(std::istream& in, const std::string& want) {
    std::string tok;
    in >> tok;
    require(in.good() && tok == want, ErrorCode::MalformedLine,
            "expected '" + want + "', found '" + tok + "'");
}

}  // namespace detail

inline void write_som(const SomMap& som, std::ostream& out) {
    const auto& c = som.config();
    out.precision(17);
    out << "som " << c.grid_rows << ' ' << c.grid_cols << ' ' << som.dimension() << '\n';
    out << "schedule " << c.sigma0 << ' ';
    if (c.tau) out << *c.tau; else out << "auto";
    out << ' ' << c.ordering_steps << ' ' << c.tuning_steps << ' ' << c.tuning_sigma << '\n';
    for (std::size_t j = 0; j < som.neuron_count(); ++j) {
        auto w = som.weight(j);
        for (std::size_t i = 0; i < w.size(); ++i) out << (i ? " " : "") << w[i];
        out << '\n';
    }
}

inline SomMap read_som(std::istream& in) {
    SomConfig c;
    std::size_t dim = 0;
    detail::expect_token(in, "som");
    in >> c.grid_rows >> c.grid_cols >> dim;
    detail::expect_token(in, "schedule");
    std::string tau;
    in >> c.sigma0 >> tau >> c.ordering_steps >> c.tuning_steps >> c.tuning_sigma;
    if (tau != "auto") c.tau = std::stod(tau);
    std::vector<double> w(c.neuron_count() * dim);
    for (auto& v : w) in >> v;
    detail::require(!in.fail(), ErrorCode::MalformedLine, "truncated SOM checkpoint");
    return SomMap(c, dim, std::move(w));
}

inline void write_cluster_model(const ClusterModel& m, std::ostream& out) {
    const std::size_t dim = m.centroids.empty() ? 0 : m.centroids.front().size();
    out.precision(17);
    out << "cluster_model " << m.k << ' ' << dim << '\n';
    for (const auto& c : m.centroids) {
        for (std::size_t i = 0; i < c.size(); ++i) out << (i ? " " : "") << c[i];
        out << '\n';
    }
    out << "assignment " << m.assignment.size() << '\n';
    for (const auto& [key, c] : m.assignment) out << key << ' ' << c << '\n';
    out << "neurons " << m.neuron_to_cluster.size() << '\n';
    for (const auto& [key, c] : m.neuron_to_cluster) out << key << ' ' << c << '\n';
    out << "members\n";
    for (std::size_t c = 0; c < m.member_rating_counts.size(); ++c)
        out << m.member_rating_counts[c] << ' ' << m.member_rating_sums[c] << '\n';
}

inline ClusterModel read_cluster_model(std::istream& in) {
    ClusterModel m;
    std::size_t dim = 0;
    detail::expect_token(in, "cluster_model");
    in >> m.k >> dim;
    m.centroids.assign(m.k, Vector(dim));
    for (auto& c : m.centroids)
        for (auto& v : c) in >> v;
    std::size_t count = 0;
    detail::expect_token(in, "assignment");
    in >> count;
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t key = 0, c = 0;
        in >> key >> c;
        m.assignment[key] = c;
    }
    detail::expect_token(in, "neurons");
    in >> count;
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t key = 0, c = 0;
        in >> key >> c;
        m.neuron_to_cluster[key] = c;
    }
    in >> std::ws;
    std::string tok;
    in >> tok;
    detail::require(tok == "members", ErrorCode::MalformedLine, "missing members section");
    std::size_t rc = 0;
    double rs = 0.0;
    while (in >> rc >> rs) {
        m.member_rating_counts.push_back(rc);
        m.member_rating_sums.push_back(rs);
    }
    detail::require(m.member_rating_counts.empty() || m.member_rating_counts.size() == m.k,
                    ErrorCode::MalformedLine, "member statistics do not match k");
    for (const auto& [key, c] : m.assignment)
        detail::require(c < m.k, ErrorCode::MalformedLine, "assignment outside 0..k");
    return m;
}

}  // namespace cohrcf

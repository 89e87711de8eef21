#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "cluster.hpp"
#include "data.hpp"
#include "error.hpp"
#include "metrics.hpp"
#include "random.hpp"
#include "sim.hpp"
#include "spectral.hpp"

namespace cohrcf {

inline constexpr double kMidpointRating = 3.0;

/// Item columns of one cluster over its users in ascending index order.
/// Only items with at least one rating inside the cluster are present.
/// Welch spectra are built on first use and cached; the cache is not
/// synchronized, so warm it with warm_spectra() before sharing an index
/// across threads.
class ClusterItemIndex {
public:
    std::size_t cluster = 0;
    std::vector<std::size_t> user_order;
    std::map<std::size_t, Vector> item_columns;

    bool contains(std::size_t item) const { return item_columns.contains(item); }

    const Vector& column(std::size_t item) const {
        auto it = item_columns.find(item);
        detail::require(it != item_columns.end(), ErrorCode::ItemNotIndexed,
                        "item " + std::to_string(item) + " has no ratings in cluster " +
                            std::to_string(cluster));
        return it->second;
    }

    std::vector<std::size_t> items() const {
        std::vector<std::size_t> out;
        out.reserve(item_columns.size());
        for (const auto& [item, col] : item_columns) out.push_back(item);
        return out;
    }

    const WelchSpectra& spectra(std::size_t item, const WelchPolicy& policy) const {
        reset_if_policy_changed(policy);
        auto it = spectra_.find(item);
        if (it == spectra_.end()) {
            const auto& col = column(item);
            it = spectra_.emplace(item, welch_spectra(col, policy.for_length(col.size()))).first;
        }
        return it->second;
    }

    void warm_spectra(const WelchPolicy& policy) const {
        if (!policy.feasible(user_order.size())) return;
        for (const auto& [item, col] : item_columns) spectra(item, policy);
    }

private:
    void reset_if_policy_changed(const WelchPolicy& policy) const {
        if (cached_policy_.segment_cap != policy.segment_cap || cached_policy_.overlap != policy.overlap ||
            cached_policy_.window != policy.window) {
            spectra_.clear();
            cached_policy_ = policy;
        }
    }

    mutable WelchPolicy cached_policy_;
    mutable std::map<std::size_t, WelchSpectra> spectra_;
};

/// `model.assignment` must be keyed by user index of `m`.
inline ClusterItemIndex build_cluster_index(const RatingMatrix& m, const ClusterModel& model,
                                            std::size_t cluster) {
    ClusterItemIndex index;
    index.cluster = cluster;
    for (const auto& [user, c] : model.assignment)
        if (c == cluster) index.user_order.push_back(user);
    detail::require(!index.user_order.empty(), ErrorCode::EmptyCluster,
                    "cluster " + std::to_string(cluster) + " has no members");
    const std::size_t len = index.user_order.size();
    for (std::size_t pos = 0; pos < len; ++pos) {
        for (const auto& cell : m.row(index.user_order[pos])) {
            auto [it, fresh] = index.item_columns.try_emplace(cell.item);
            if (fresh) it->second.assign(len, 0.0);
            it->second[pos] = cell.rating;
        }
    }
    return index;
}

struct Neighbor {
    std::size_t item;
    double similarity;
    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Ordered by similarity descending, ties by ascending item; only positive
/// similarities, never the target itself.
struct TopNList {
    std::size_t target_item = 0;
    std::vector<Neighbor> neighbors;
};

namespace detail {

inline bool neighbor_before(const Neighbor& a, const Neighbor& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.item < b.item;
}

}  // namespace detail

/// Every positive-similarity candidate in TopNList order.
inline std::vector<Neighbor> rank_neighbors(const ClusterItemIndex& index, std::size_t target,
                                            const SimilarityMeasure& measure,
                                            std::span<const std::size_t> candidates) {
    const Vector& target_col = index.column(target);
    std::vector<Neighbor> out;
    const bool spectral = measure.kind == MeasureKind::cohr;
    // coherence needs two Welch segments; tiny clusters carry no spectral evidence
    if (spectral && !measure.welch.feasible(index.user_order.size())) return out;
    for (auto item : candidates) {
        if (item == target) continue;
        double s = 0.0;
        if (spectral)
            s = cohr_sim(coherence(index.spectra(target, measure.welch), index.spectra(item, measure.welch)));
        else
            s = similarity(measure, target_col, index.column(item));
        if (s > 0.0) out.push_back({item, s});
    }
    std::sort(out.begin(), out.end(), detail::neighbor_before);
    return out;
}

inline TopNList item_topn(const ClusterItemIndex& index, std::size_t target, std::size_t n,
                          const SimilarityMeasure& measure, std::span<const std::size_t> candidates) {
    TopNList list{target, rank_neighbors(index, target, measure, candidates)};
    if (list.neighbors.size() > n) list.neighbors.resize(n);
    return list;
}

inline TopNList item_topn(const ClusterItemIndex& index, std::size_t target, std::size_t n,
                          const SimilarityMeasure& measure) {
    const auto all = index.items();
    return item_topn(index, target, n, measure, all);
}

/// Mean of the cluster's nonzero ratings for the item; the scale midpoint
/// when nobody in the cluster rated it.
inline double predict_cold(std::size_t target_item, const ClusterItemIndex& index) {
    auto it = index.item_columns.find(target_item);
    if (it == index.item_columns.end()) return kMidpointRating;
    double s = 0.0;
    std::size_t n = 0;
    for (double r : it->second) {
        if (r == 0.0) continue;
        s += r;
        ++n;
    }
    return n == 0 ? kMidpointRating : s / static_cast<double>(n);
}

/// Similarity-weighted average of the active user's ratings over the
/// neighbors they rated, clamped to [1, 5]. Falls back to predict_cold()
/// when the user rated none of the neighbors.
inline double predict(std::span<const double> active_user_ratings, std::size_t target_item,
                      const TopNList& topn, const ClusterItemIndex& index) {
    detail::require(topn.target_item == target_item, ErrorCode::InvalidArgument,
                    "top-N list belongs to a different target");
    double num = 0.0, den = 0.0;
    for (const auto& nb : topn.neighbors) {
        const double r = active_user_ratings[nb.item];
        if (r == 0.0) continue;
        num += r * nb.similarity;
        den += nb.similarity;
    }
    if (den <= 0.0) return predict_cold(target_item, index);
    return std::clamp(num / den, double(kMinRating), double(kMaxRating));
}

// ---------------------------------------------------------------------------
// Fold orchestration
// ---------------------------------------------------------------------------

struct PipelineParams {
    std::size_t k = 10;
    std::size_t n = 100;
    SimilarityMeasure measure;
    SomConfig som;
    KMeansOptions kmeans;
    std::size_t hidden_per_user = 10;
    double relevance_threshold = 4.0;
    std::uint64_t seed = 0;
};

enum class FoldStage : std::uint64_t { hide = 1, som = 2, kmeans = 3 };

inline std::uint64_t stage_seed(std::uint64_t fold_seed, FoldStage stage) {
    return derive_seed(fold_seed, static_cast<std::uint64_t>(stage));
}

struct FoldSplit {
    RatingMatrix masked;
    HiddenRatings hidden;
    std::vector<std::size_t> training_users;
    std::vector<std::size_t> test_users;
};

inline FoldSplit split_fold(const RatingMatrix& m, std::span<const std::size_t> test_users,
                            std::size_t hidden_per_user, std::uint64_t fold_seed) {
    std::set<std::size_t> test(test_users.begin(), test_users.end());
    FoldSplit split;
    split.test_users.assign(test.begin(), test.end());
    for (std::size_t u = 0; u < m.n_users(); ++u)
        if (!test.contains(u)) split.training_users.push_back(u);
    detail::require(!split.training_users.empty(), ErrorCode::InvalidArgument, "fold leaves no training users");
    auto masked = hide_ratings(m, split.test_users, hidden_per_user, stage_seed(fold_seed, FoldStage::hide));
    split.masked = std::move(masked.masked);
    split.hidden = std::move(masked.hidden);
    return split;
}

struct TrainedSom {
    SomMap som;
    SomProjection projection;             // indices refer to positions in `users`
    std::vector<std::size_t> users;       // user index per training vector
};

inline TrainedSom train_user_som(const RatingMatrix& m, std::span<const std::size_t> users,
                                 const SomConfig& config, std::uint64_t seed) {
    std::vector<Vector> data;
    data.reserve(users.size());
    for (auto u : users) data.push_back(m.dense_row(u));
    TrainedSom out;
    out.som = train_som(data, config, seed);
    out.projection = map_to_input_space(out.som, data);
    out.users.assign(users.begin(), users.end());
    return out;
}

/// k-means over the occupied SOM prototypes; each user inherits the
/// cluster of its BMU.
inline ClusterModel cluster_users(const TrainedSom& trained, const RatingMatrix& m, std::size_t k,
                                  std::uint64_t seed, KMeansOptions options = {}) {
    const auto& proj = trained.projection;
    ClusterModel proto = kmeans(proj.prototypes, k, seed, options);

    ClusterModel model;
    model.k = k;
    model.centroids = std::move(proto.centroids);
    model.sse_history = std::move(proto.sse_history);
    model.iterations = proto.iterations;
    for (std::size_t p = 0; p < proj.occupied.size(); ++p)
        model.neuron_to_cluster[proj.occupied[p]] = proto.assignment.at(p);
    for (std::size_t i = 0; i < trained.users.size(); ++i)
        model.assignment[trained.users[i]] = model.neuron_to_cluster.at(proj.bmu[i]);
    attach_member_stats(model, [&](std::size_t user) { return m.dense_row(user); });
    return model;
}

struct Prediction {
    std::size_t user;
    std::size_t item;
    double predicted;
    double actual;
};

struct FoldMetrics {
    double mae = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::vector<Prediction> predictions;
};

inline FoldMetrics score_predictions(std::vector<Prediction> predictions, double relevance_threshold) {
    detail::require(!predictions.empty(), ErrorCode::NoHiddenRatings, "fold has no hidden ratings to score");
    std::vector<PredictedPair> pairs;
    pairs.reserve(predictions.size());
    for (const auto& p : predictions) pairs.push_back({p.predicted, p.actual});
    FoldMetrics out;
    out.mae = mae(pairs);
    const auto pr = precision_recall(pairs, relevance_threshold);
    out.precision = pr.precision;
    out.recall = pr.recall;
    out.f1 = f1(pr.precision, pr.recall);
    out.predictions = std::move(predictions);
    return out;
}

/// Prediction phase for one fold and one clustering: assigns every test
/// user that has hidden entries, builds cluster indices on demand, and
/// predicts each hidden rating. Neighbor rankings are cached per
/// (measure, cluster, target) so several N values reuse one ranking.
class FoldPredictor {
public:
    /// `training` holds the training users' ratings (test users may be
    /// present; only users listed in `model.assignment` enter cluster
    /// indices). `masked` supplies the test users' visible ratings.
    FoldPredictor(const RatingMatrix& training, const RatingMatrix& masked, const ClusterModel& model,
                  const HiddenRatings& hidden)
        : training_(training), masked_(masked), model_(model), hidden_(hidden) {
        for (const auto& h : hidden_.entries) {
            if (test_cluster_.contains(h.user)) continue;
            test_cluster_[h.user] = assign_cluster(masked_.dense_row(h.user), model_);
        }
    }

    std::size_t cluster_of(std::size_t test_user) const { return test_cluster_.at(test_user); }

    const ClusterItemIndex& index(std::size_t cluster) {
        auto it = indices_.find(cluster);
        if (it == indices_.end()) it = indices_.emplace(cluster, build_cluster_index(training_, model_, cluster)).first;
        return it->second;
    }

    TopNList topn(std::size_t cluster, std::size_t target, std::size_t n, const SimilarityMeasure& measure) {
        const auto key = std::make_tuple(measure.kind, cluster, target);
        auto it = rankings_.find(key);
        if (it == rankings_.end()) {
            const auto& idx = index(cluster);
            const auto all = idx.items();
            it = rankings_.emplace(key, rank_neighbors(idx, target, measure, all)).first;
        }
        TopNList list{target, it->second};
        if (list.neighbors.size() > n) list.neighbors.resize(n);
        return list;
    }

    std::vector<Prediction> predict_hidden(const SimilarityMeasure& measure, std::size_t n) {
        std::vector<Prediction> out;
        out.reserve(hidden_.entries.size());
        std::size_t current_user = SIZE_MAX;
        Vector active;
        for (const auto& h : hidden_.entries) {
            if (h.user != current_user) {
                current_user = h.user;
                active = masked_.dense_row(h.user);
            }
            const std::size_t c = test_cluster_.at(h.user);
            const auto& idx = index(c);
            double p = kMidpointRating;
            if (idx.contains(h.item))
                p = predict(active, h.item, topn(c, h.item, n, measure), idx);
            out.push_back({h.user, h.item, p, static_cast<double>(h.rating)});
        }
        return out;
    }

private:
    const RatingMatrix& training_;
    const RatingMatrix& masked_;
    const ClusterModel& model_;
    const HiddenRatings& hidden_;
    std::map<std::size_t, std::size_t> test_cluster_;
    std::map<std::size_t, ClusterItemIndex> indices_;
    std::map<std::tuple<MeasureKind, std::size_t, std::size_t>, std::vector<Neighbor>> rankings_;
};

/// Learning and prediction phases for one cross-validation fold:
/// hide ratings of the test users, train the SOM on the training users,
/// k-means its prototypes, assign test users, rank item neighbors inside
/// their clusters, predict, and score.
inline FoldMetrics evaluate_fold(const RatingMatrix& m, std::span<const std::size_t> test_users,
                                 const PipelineParams& params) {
    const auto split = split_fold(m, test_users, params.hidden_per_user, params.seed);
    detail::require(!split.hidden.entries.empty(), ErrorCode::NoHiddenRatings,
                    "no test user has enough ratings to hide any");
    const auto trained = train_user_som(split.masked, split.training_users, params.som,
                                        stage_seed(params.seed, FoldStage::som));
    const auto model = cluster_users(trained, split.masked, params.k,
                                     stage_seed(params.seed, FoldStage::kmeans), params.kmeans);
    FoldPredictor predictor(split.masked, split.masked, model, split.hidden);
    return score_predictions(predictor.predict_hidden(params.measure, params.n), params.relevance_threshold);
}

}  // namespace cohrcf

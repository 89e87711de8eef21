#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "random.hpp"

namespace cohrcf {

using Rating = std::uint8_t;
inline constexpr Rating kMinRating = 1;
inline constexpr Rating kMaxRating = 5;

struct RatingEntry {
    std::size_t user = 0;
    std::size_t item = 0;
    Rating rating = 0;

    friend bool operator==(const RatingEntry&, const RatingEntry&) = default;
    friend auto operator<=>(const RatingEntry&, const RatingEntry&) = default;
};

/// Sparse user x item rating grid; absent cells are unrated (0). Rows are
/// kept sorted by item. Original dataset ids are carried alongside the
/// compact 0-based indices.
class RatingMatrix {
public:
    struct Cell {
        std::size_t item;
        Rating rating;
        friend bool operator==(const Cell&, const Cell&) = default;
    };

    RatingMatrix() = default;

    RatingMatrix(std::size_t n_users, std::size_t n_items, std::vector<RatingEntry> entries,
                 std::vector<long> user_ids = {}, std::vector<long> item_ids = {})
        : n_items_(n_items), rows_(n_users), user_ids_(std::move(user_ids)),
          item_ids_(std::move(item_ids)) {
        if (user_ids_.empty()) {
            user_ids_.resize(n_users);
            std::iota(user_ids_.begin(), user_ids_.end(), 1L);
        }
        if (item_ids_.empty()) {
            item_ids_.resize(n_items);
            std::iota(item_ids_.begin(), item_ids_.end(), 1L);
        }
        detail::require(user_ids_.size() == n_users && item_ids_.size() == n_items,
                        ErrorCode::InvalidArgument, "id map size does not match matrix shape");
        for (const auto& e : entries) {
            detail::require(e.user < n_users && e.item < n_items, ErrorCode::InvalidArgument,
                            "rating index outside matrix shape");
            detail::require(e.rating >= kMinRating && e.rating <= kMaxRating,
                            ErrorCode::OutOfRangeRating,
                            "rating " + std::to_string(int(e.rating)) + " outside 1..5");
            rows_[e.user].push_back({e.item, e.rating});
        }
        for (auto& row : rows_) {
            std::sort(row.begin(), row.end(),
                      [](const Cell& a, const Cell& b) { return a.item < b.item; });
            auto dup = std::adjacent_find(row.begin(), row.end(), [](const Cell& a, const Cell& b) {
                return a.item == b.item;
            });
            detail::require(dup == row.end(), ErrorCode::InvalidArgument,
                            "duplicate (user, item) rating");
            count_ += row.size();
        }
    }

    std::size_t n_users() const noexcept { return rows_.size(); }
    std::size_t n_items() const noexcept { return n_items_; }
    std::size_t rating_count() const noexcept { return count_; }

    std::span<const Cell> row(std::size_t user) const { return rows_.at(user); }

    Rating at(std::size_t user, std::size_t item) const {
        const auto& r = rows_.at(user);
        auto it = std::lower_bound(r.begin(), r.end(), item,
                                   [](const Cell& c, std::size_t i) { return c.item < i; });
        return (it != r.end() && it->item == item) ? it->rating : Rating{0};
    }

    /// Row materialized over all items with unrated cells as 0.
    std::vector<double> dense_row(std::size_t user) const {
        std::vector<double> out(n_items_, 0.0);
        for (const auto& c : row(user)) out[c.item] = c.rating;
        return out;
    }

    std::vector<RatingEntry> entries() const {
        std::vector<RatingEntry> out;
        out.reserve(count_);
        for (std::size_t u = 0; u < rows_.size(); ++u)
            for (const auto& c : rows_[u]) out.push_back({u, c.item, c.rating});
        return out;
    }

    long user_id(std::size_t user) const { return user_ids_.at(user); }
    long item_id(std::size_t item) const { return item_ids_.at(item); }
    const std::vector<long>& user_ids() const noexcept { return user_ids_; }
    const std::vector<long>& item_ids() const noexcept { return item_ids_; }

    /// Same shape and id maps, different ratings.
    RatingMatrix with_entries(std::vector<RatingEntry> entries) const {
        return RatingMatrix(n_users(), n_items_, std::move(entries), user_ids_, item_ids_);
    }

    friend bool operator==(const RatingMatrix&, const RatingMatrix&) = default;

private:
    std::size_t n_items_ = 0;
    std::size_t count_ = 0;
    std::vector<std::vector<Cell>> rows_;
    std::vector<long> user_ids_;
    std::vector<long> item_ids_;
};

struct FoldPlan {
    std::vector<std::vector<std::size_t>> folds;  // each ascending
    std::uint64_t seed = 0;
};

struct HiddenRating {
    std::size_t user;
    std::size_t item;
    Rating rating;
    friend bool operator==(const HiddenRating&, const HiddenRating&) = default;
};

struct HiddenRatings {
    std::vector<HiddenRating> entries;  // sorted by (user, item)
    std::uint64_t seed = 0;
};

namespace detail {

inline long parse_long(std::string_view field, std::size_t line_no) {
    long value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    require(ec == std::errc{} && ptr == field.data() + field.size(), ErrorCode::MalformedLine,
            "line " + std::to_string(line_no) + ": non-integer field '" + std::string(field) + "'");
    return value;
}

}  // namespace detail

/// Parses a MovieLens `u.data` style file: four tab-separated integers
/// `user item rating timestamp` per line. Users and items are indexed in
/// ascending order of their original ids; timestamps are dropped.
inline RatingMatrix load_movielens(const std::string& path) {
    std::ifstream in(path);
    detail::require(in.good(), ErrorCode::MissingFile, "cannot open " + path);

    struct Raw {
        long user, item, rating;
    };
    std::vector<Raw> raw;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string_view> fields;
        std::string_view rest(line);
        for (;;) {
            auto tab = rest.find('\t');
            fields.push_back(rest.substr(0, tab));
            if (tab == std::string_view::npos) break;
            rest.remove_prefix(tab + 1);
        }
        detail::require(fields.size() == 4, ErrorCode::MalformedLine,
                        "line " + std::to_string(line_no) + ": expected 4 tab-separated fields, got " +
                            std::to_string(fields.size()));
        Raw r{detail::parse_long(fields[0], line_no), detail::parse_long(fields[1], line_no),
              detail::parse_long(fields[2], line_no)};
        detail::parse_long(fields[3], line_no);
        detail::require(r.rating >= kMinRating && r.rating <= kMaxRating,
                        ErrorCode::OutOfRangeRating,
                        "line " + std::to_string(line_no) + ": rating " +
                            std::to_string(r.rating) + " outside 1..5");
        raw.push_back(r);
    }
    detail::require(!raw.empty(), ErrorCode::EmptyMatrix, path + " holds no ratings");

    std::vector<long> user_ids, item_ids;
    for (const auto& r : raw) {
        user_ids.push_back(r.user);
        item_ids.push_back(r.item);
    }
    auto compact = [](std::vector<long>& ids) {
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    };
    compact(user_ids);
    compact(item_ids);
    auto index_of = [](const std::vector<long>& ids, long id) {
        return static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
    };

    std::vector<RatingEntry> entries;
    entries.reserve(raw.size());
    for (const auto& r : raw)
        entries.push_back({index_of(user_ids, r.user), index_of(item_ids, r.item),
                           static_cast<Rating>(r.rating)});
    const auto n_users = user_ids.size();
    const auto n_items = item_ids.size();
    return RatingMatrix(n_users, n_items, std::move(entries), std::move(user_ids),
                        std::move(item_ids));
}

/// Drops users with fewer than `min_count` ratings and re-compacts user
/// indices. Items keep their indices even if they lose every rating.
inline RatingMatrix clean_min_ratings(const RatingMatrix& m, std::size_t min_count) {
    detail::require(min_count >= 1, ErrorCode::InvalidArgument, "min_count must be >= 1");
    std::vector<long> kept_ids;
    std::vector<RatingEntry> entries;
    for (std::size_t u = 0; u < m.n_users(); ++u) {
        auto row = m.row(u);
        if (row.size() < min_count) continue;
        const std::size_t nu = kept_ids.size();
        kept_ids.push_back(m.user_id(u));
        for (const auto& c : row) entries.push_back({nu, c.item, c.rating});
    }
    detail::require(!kept_ids.empty(), ErrorCode::EmptyMatrix,
                    "no user has at least " + std::to_string(min_count) + " ratings");
    const auto n_users = kept_ids.size();
    return RatingMatrix(n_users, m.n_items(), std::move(entries), std::move(kept_ids),
                        m.item_ids());
}

/// R / (users * items) * 100.
inline double sparsity_level(const RatingMatrix& m) {
    detail::require(m.n_users() > 0 && m.n_items() > 0, ErrorCode::EmptyMatrix,
                    "sparsity of an empty shape");
    return static_cast<double>(m.rating_count()) /
           (static_cast<double>(m.n_users()) * static_cast<double>(m.n_items())) * 100.0;
}

/// Keeps exactly round(keep_fraction * R) ratings chosen uniformly at random.
inline RatingMatrix sparsify(const RatingMatrix& m, double keep_fraction, std::uint64_t seed) {
    detail::require(keep_fraction > 0.0 && keep_fraction <= 1.0, ErrorCode::InvalidArgument,
                    "keep_fraction must lie in (0, 1]");
    auto entries = m.entries();
    const auto keep = static_cast<std::size_t>(
        std::llround(keep_fraction * static_cast<double>(entries.size())));
    if (keep == entries.size()) return m;
    Rng rng(seed);
    shuffle(std::span(entries), rng);
    entries.resize(keep);
    return m.with_entries(std::move(entries));
}

/// Random partition of the users into k folds whose sizes differ by at most one.
inline FoldPlan make_folds(const RatingMatrix& m, std::size_t k, std::uint64_t seed) {
    detail::require(k >= 2 && k <= m.n_users(), ErrorCode::InvalidFoldCount,
                    "fold count " + std::to_string(k) + " outside [2, " +
                        std::to_string(m.n_users()) + "]");
    std::vector<std::size_t> users(m.n_users());
    std::iota(users.begin(), users.end(), std::size_t{0});
    Rng rng(seed);
    shuffle(std::span(users), rng);

    FoldPlan plan{std::vector<std::vector<std::size_t>>(k), seed};
    for (std::size_t i = 0; i < users.size(); ++i) plan.folds[i % k].push_back(users[i]);
    for (auto& f : plan.folds) std::sort(f.begin(), f.end());
    return plan;
}

struct MaskedRatings {
    RatingMatrix masked;
    HiddenRatings hidden;
};

/// Hides min(per_user, floor(c / 2)) ratings of each test user (c = that
/// user's rating count). Non-test users are untouched.
inline MaskedRatings hide_ratings(const RatingMatrix& m, std::span<const std::size_t> test_users,
                                  std::size_t per_user, std::uint64_t seed) {
    detail::require(per_user >= 1, ErrorCode::InvalidArgument, "per_user must be >= 1");
    std::vector<std::size_t> users(test_users.begin(), test_users.end());
    std::sort(users.begin(), users.end());
    users.erase(std::unique(users.begin(), users.end()), users.end());
    for (auto u : users)
        detail::require(u < m.n_users(), ErrorCode::InvalidArgument, "test user outside matrix");

    Rng rng(seed);
    std::set<std::pair<std::size_t, std::size_t>> removed;
    HiddenRatings hidden{{}, seed};
    for (auto u : users) {
        auto row = m.row(u);
        const std::size_t take = std::min(per_user, row.size() / 2);
        if (take == 0) continue;
        std::vector<std::size_t> picks(row.size());
        std::iota(picks.begin(), picks.end(), std::size_t{0});
        // partial Fisher-Yates: first `take` slots are a uniform sample
        for (std::size_t i = 0; i < take; ++i)
            std::swap(picks[i], picks[i + uniform_index(rng, picks.size() - i)]);
        picks.resize(take);
        std::sort(picks.begin(), picks.end());
        for (auto p : picks) {
            hidden.entries.push_back({u, row[p].item, row[p].rating});
            removed.insert({u, row[p].item});
        }
    }

    std::vector<RatingEntry> kept;
    kept.reserve(m.rating_count() - removed.size());
    for (const auto& e : m.entries())
        if (!removed.contains({e.user, e.item})) kept.push_back(e);
    return {m.with_entries(std::move(kept)), std::move(hidden)};
}

/// Puts hidden ratings back; inverse of hide_ratings.
inline RatingMatrix restore_hidden(const RatingMatrix& masked, const HiddenRatings& hidden) {
    auto entries = masked.entries();
    for (const auto& h : hidden.entries) entries.push_back({h.user, h.item, h.rating});
    return masked.with_entries(std::move(entries));
}

// Plain-text layout shared by every rating dump: the u.data four-column
// format with original ids and a zero timestamp, sorted by (user, item).

inline void write_ratings(const RatingMatrix& m, const std::string& path) {
    std::ofstream out(path);
    detail::require(out.good(), ErrorCode::IoFailure, "cannot write " + path);
    for (const auto& e : m.entries())
        out << m.user_id(e.user) << '\t' << m.item_id(e.item) << '\t' << int(e.rating) << "\t0\n";
    detail::require(out.good(), ErrorCode::IoFailure, "write failed for " + path);
}

inline void write_hidden(const HiddenRatings& hidden, const RatingMatrix& m,
                         const std::string& path) {
    std::ofstream out(path);
    detail::require(out.good(), ErrorCode::IoFailure, "cannot write " + path);
    for (const auto& h : hidden.entries)
        out << m.user_id(h.user) << '\t' << m.item_id(h.item) << '\t' << int(h.rating) << "\t0\n";
    detail::require(out.good(), ErrorCode::IoFailure, "write failed for " + path);
}

}  // namespace cohrcf

// cohrcf: command-line driver for the clustering + spectral-similarity
// recommender experiments.
//
//   cohrcf ingest     --data u.data --min-ratings 20 --out clean.data
//   cohrcf sweep-k    --data u.data --n 100 --k 10:55:5 --measures cohr,pcc --sparsity 0.18,0.1 --seed 1 --out k.csv
//   cohrcf sweep-n    --data u.data --k 55 --n 10:100:10 ... --out n.csv
//   cohrcf silhouette --data u.data --k 10,20,30,40 --seed 1 --out sil.csv
//   cohrcf evaluate   --data u.data --k 10 --n 100 --measure cohr --sparsity 0.18 --seed 1 --out eval.csv
//
// Every flag may also come from `--config file` (key=value lines, keys are
// the long flag names); flags given on the command line win.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cohrcf/cohrcf.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int exit_code_for(cohrcf::ErrorCode code) {
    using cohrcf::ErrorCode;
    switch (code) {
    case ErrorCode::MissingFile:
    case ErrorCode::MalformedLine:
    case ErrorCode::OutOfRangeRating:
    case ErrorCode::EmptyMatrix:
    case ErrorCode::IoFailure:
    case ErrorCode::NoHiddenRatings:
        return kData;
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidFoldCount:
    case ErrorCode::InvalidK:
    case ErrorCode::UnknownMeasure:
    case ErrorCode::DegenerateEstimate:
        return kUsage;
    default:
        return kInternal;
    }
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, sep))
        if (!part.empty()) out.push_back(part);
    return out;
}

std::size_t parse_count(const std::string& text, const std::string& flag) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(text, &used);
        if (used != text.size() || v < 0) throw std::invalid_argument(text);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw UsageError("--" + flag + ": '" + text + "' is not a non-negative integer");
    }
}

/// "a:b:s" (inclusive range), "a,b,c", or a single value.
std::vector<std::size_t> parse_counts(const std::string& text, const std::string& flag) {
    std::vector<std::size_t> out;
    if (text.find(':') != std::string::npos) {
        auto parts = split(text, ':');
        if (parts.size() != 3) throw UsageError("--" + flag + ": ranges are start:stop:step");
        const auto start = parse_count(parts[0], flag), stop = parse_count(parts[1], flag),
                   step = parse_count(parts[2], flag);
        if (step == 0 || stop < start) throw UsageError("--" + flag + ": empty range '" + text + "'");
        for (auto v = start; v <= stop; v += step) out.push_back(v);
        return out;
    }
    for (const auto& p : split(text, ',')) out.push_back(parse_count(p, flag));
    if (out.empty()) throw UsageError("--" + flag + " is empty");
    return out;
}

std::vector<double> parse_fractions(const std::string& text) {
    std::vector<double> out;
    for (const auto& p : split(text, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(p, &used));
            if (used != p.size()) throw std::invalid_argument(p);
        } catch (const std::exception&) {
            throw UsageError("--sparsity: '" + p + "' is not a number");
        }
    }
    if (out.empty()) throw UsageError("--sparsity is empty");
    return out;
}

struct Options {
    std::string data;
    std::string out;
    std::uint64_t seed = 42;
    std::string k;
    std::string n;
    std::string measures = "cohr,pcc,jaccard,msd,jmsd";
    std::string measure;
    std::string sparsity;
    std::size_t folds = 5;
    std::size_t min_ratings = 20;
    std::string som_grid = "10x10";
    double som_sigma0 = 5.0;
    double som_tuning_sigma = 1.0;
    std::size_t som_ordering_steps = 1000;
    std::size_t som_tuning_steps = 2000;
    std::size_t hidden_per_user = 10;
    double relevance_threshold = 4.0;
    std::size_t welch_segment = 32;
    double welch_overlap = 0.5;
};

cohrcf::SomConfig som_config(const Options& o) {
    auto dims = split(o.som_grid, 'x');
    if (dims.size() != 2) throw UsageError("--som-grid expects RxC, e.g. 10x10");
    cohrcf::SomConfig c;
    c.grid_rows = parse_count(dims[0], "som-grid");
    c.grid_cols = parse_count(dims[1], "som-grid");
    c.sigma0 = o.som_sigma0;
    c.tuning_sigma = o.som_tuning_sigma;
    c.ordering_steps = o.som_ordering_steps;
    c.tuning_steps = o.som_tuning_steps;
    c.validate();
    return c;
}

void require_flag(const std::string& value, const std::string& flag, const std::string& command) {
    if (value.empty()) throw UsageError(command + " requires --" + flag);
}

cohrcf::ExperimentConfig experiment_config(const Options& o) {
    cohrcf::ExperimentConfig c;
    c.dataset_path = o.data;
    c.seed = o.seed;
    c.folds = o.folds;
    c.min_ratings = o.min_ratings;
    c.som = som_config(o);
    c.hidden_per_user = o.hidden_per_user;
    c.relevance_threshold = o.relevance_threshold;
    if (o.welch_segment < 2) throw UsageError("--welch-segment must be >= 2");
    if (!(o.welch_overlap >= 0.0 && o.welch_overlap < 1.0)) throw UsageError("--welch-overlap must lie in [0, 1)");
    c.welch.segment_cap = o.welch_segment;
    c.welch.overlap = o.welch_overlap;
    c.measures.clear();
    for (const auto& m : split(o.measures, ',')) c.measures.push_back(cohrcf::parse_measure(m));
    if (!o.sparsity.empty()) c.sparsity_levels = parse_fractions(o.sparsity);
    return c;
}

nlohmann::json config_echo(const std::string& command, const cohrcf::ExperimentConfig& c) {
    nlohmann::json j;
    j["command"] = command;
    j["dataset"] = c.dataset_path;
    j["seed"] = c.seed;
    j["folds"] = c.folds;
    j["fold_seeds"] = nlohmann::json::array();
    for (std::size_t f = 0; f < c.folds; ++f) j["fold_seeds"].push_back(c.seed + f);
    j["K"] = c.k_values;
    j["N"] = c.n_values;
    j["sparsity"] = c.sparsity_levels;
    std::vector<std::string> measures;
    for (auto m : c.measures) measures.emplace_back(cohrcf::to_string(m));
    j["measures"] = measures;
    j["som"] = {{"rows", c.som.grid_rows},
                {"cols", c.som.grid_cols},
                {"sigma0", c.som.sigma0},
                {"tau", c.som.decay_constant()},
                {"ordering_steps", c.som.ordering_steps},
                {"tuning_steps", c.som.tuning_steps},
                {"tuning_sigma", c.som.tuning_sigma}};
    j["welch"] = {{"segment_cap", c.welch.segment_cap}, {"overlap", c.welch.overlap}, {"window", "hann"}};
    j["hidden_per_user"] = c.hidden_per_user;
    j["relevance_threshold"] = c.relevance_threshold;
    j["min_ratings"] = c.min_ratings;
    return j;
}

void write_meta(const std::string& csv_path, const nlohmann::json& meta) {
    cohrcf::write_text(meta.dump(2) + "\n", csv_path + ".meta.json");
}

int run_grid(const std::string& command, cohrcf::ExperimentConfig config, const Options& o) {
    const auto report = cohrcf::run_experiment(config);
    cohrcf::emit_report(report, o.out);
    auto meta = config_echo(command, config);
    meta["wall_seconds"] = report.wall_seconds;
    write_meta(o.out, meta);
    std::cout << "wrote " << report.rows.size() << " rows to " << o.out << " in " << report.wall_seconds << " s\n";
    return kOk;
}

int cmd_ingest(const Options& o) {
    require_flag(o.data, "data", "ingest");
    require_flag(o.out, "out", "ingest");
    const auto raw = cohrcf::load_movielens(o.data);
    const auto clean = cohrcf::clean_min_ratings(raw, o.min_ratings);
    cohrcf::write_ratings(clean, o.out);
    std::cout << "users " << clean.n_users() << " (of " << raw.n_users() << "), items " << clean.n_items()
              << ", ratings " << clean.rating_count() << ", density " << cohrcf::sparsity_level(clean) << "%\n";
    return kOk;
}

int cmd_sweep_k(const Options& o) {
    require_flag(o.data, "data", "sweep-k");
    require_flag(o.out, "out", "sweep-k");
    auto c = experiment_config(o);
    c.k_values = parse_counts(o.k.empty() ? "10:55:5" : o.k, "k");
    c.n_values = {parse_count(o.n.empty() ? "100" : o.n, "n")};
    return run_grid("sweep-k", c, o);
}

int cmd_sweep_n(const Options& o) {
    require_flag(o.data, "data", "sweep-n");
    require_flag(o.out, "out", "sweep-n");
    auto c = experiment_config(o);
    c.k_values = {parse_count(o.k.empty() ? "55" : o.k, "k")};
    c.n_values = parse_counts(o.n.empty() ? "10:100:10" : o.n, "n");
    return run_grid("sweep-n", c, o);
}

int cmd_evaluate(const Options& o) {
    require_flag(o.data, "data", "evaluate");
    require_flag(o.out, "out", "evaluate");
    require_flag(o.k, "k", "evaluate");
    require_flag(o.n, "n", "evaluate");
    require_flag(o.measure, "measure", "evaluate");
    require_flag(o.sparsity, "sparsity", "evaluate");
    auto c = experiment_config(o);
    c.k_values = {parse_count(o.k, "k")};
    c.n_values = {parse_count(o.n, "n")};
    c.measures = {cohrcf::parse_measure(o.measure)};
    c.sparsity_levels = parse_fractions(o.sparsity);
    if (c.sparsity_levels.size() != 1) throw UsageError("evaluate takes a single --sparsity value");
    return run_grid("evaluate", c, o);
}

int cmd_silhouette(const Options& o) {
    require_flag(o.data, "data", "silhouette");
    require_flag(o.out, "out", "silhouette");
    const auto ks = parse_counts(o.k.empty() ? "10,20,30,40" : o.k, "k");
    const auto m = cohrcf::clean_min_ratings(cohrcf::load_movielens(o.data), o.min_ratings);
    const auto som = som_config(o);
    const auto rows = cohrcf::silhouette_comparison(m, ks, o.seed, som);
    cohrcf::write_text(cohrcf::format_silhouette(rows), o.out);

    nlohmann::json meta;
    meta["command"] = "silhouette";
    meta["dataset"] = o.data;
    meta["seed"] = o.seed;
    meta["k"] = ks;
    meta["som"] = {{"rows", som.grid_rows}, {"cols", som.grid_cols}};
    meta["timing"] = nlohmann::json::array();
    for (const auto& r : rows)
        meta["timing"].push_back({{"k", r.k}, {"arm", std::string(cohrcf::to_string(r.arm))}, {"seconds", r.seconds}});
    write_meta(o.out, meta);
    for (const auto& r : rows)
        std::cout << "k=" << r.k << ' ' << cohrcf::to_string(r.arm) << " negative=" << r.negative_count
                  << " mean=" << r.mean_silhouette << " seconds=" << r.seconds << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Collaborative filtering with SOM/k-means clustering and spectral coherence similarity"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value file mirroring the long flags");

    Options o;
    app.add_option("--data", o.data, "ratings file in u.data layout");
    app.add_option("--out", o.out, "output path");
    app.add_option("--seed", o.seed, "base random seed")->capture_default_str();
    app.add_option("--k", o.k, "cluster count(s): single value, list a,b,c, or range a:b:s");
    app.add_option("--n", o.n, "top-N neighbor count(s): single value, list, or range");
    app.add_option("--measures", o.measures, "comma-separated measures (cohr,pcc,jaccard,msd,jmsd)")->capture_default_str();
    app.add_option("--measure", o.measure, "single measure for evaluate");
    app.add_option("--sparsity", o.sparsity, "comma-separated keep-fractions in (0,1]");
    app.add_option("--folds", o.folds, "cross-validation folds")->capture_default_str();
    app.add_option("--min-ratings", o.min_ratings, "drop users with fewer ratings")->capture_default_str();
    app.add_option("--som-grid", o.som_grid, "SOM lattice RxC")->capture_default_str();
    app.add_option("--som-sigma0", o.som_sigma0, "initial neighborhood radius")->capture_default_str();
    app.add_option("--som-tuning-sigma", o.som_tuning_sigma, "tuning-phase radius")->capture_default_str();
    app.add_option("--som-ordering-steps", o.som_ordering_steps, "ordering-phase steps")->capture_default_str();
    app.add_option("--som-tuning-steps", o.som_tuning_steps, "tuning-phase steps")->capture_default_str();
    app.add_option("--hidden-per-user", o.hidden_per_user, "ratings hidden per test user")->capture_default_str();
    app.add_option("--relevance-threshold", o.relevance_threshold, "rating at or above which an item is relevant")
        ->capture_default_str();
    app.add_option("--welch-segment", o.welch_segment, "upper bound on the Welch segment length")->capture_default_str();
    app.add_option("--welch-overlap", o.welch_overlap, "Welch segment overlap fraction")->capture_default_str();

    std::string command;
    for (const char* name : {"ingest", "sweep-k", "sweep-n", "silhouette", "evaluate"}) {
        auto* sub = app.add_subcommand(name);
        sub->fallthrough();
        sub->callback([&command, name] { command = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (command == "ingest") return cmd_ingest(o);
        if (command == "sweep-k") return cmd_sweep_k(o);
        if (command == "sweep-n") return cmd_sweep_n(o);
        if (command == "silhouette") return cmd_silhouette(o);
        if (command == "evaluate") return cmd_evaluate(o);
        std::cerr << "unknown command\n";
        return kUsage;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const cohrcf::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kInternal;
    }
}

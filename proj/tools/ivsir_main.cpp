// ivsir — sparse sliced inverse regression with instrumental variables.
//
// Subcommands: simulate (replicated experiments), fit (estimate a basis of
// the dimension-reduction subspace from CSV data), select-dim (choose the
// structural dimension), stability (selection probabilities over seeded
// half-samples).  Every command is a pure function of (configuration, input
// files, seed): repeated runs produce byte-identical outputs; timing notes
// go to stderr only.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ivsir/csv.hpp"
#include "ivsir/errors.hpp"
#include "ivsir/lasso.hpp"
#include "ivsir/matrix.hpp"
#include "ivsir/rng.hpp"
#include "ivsir/simlab.hpp"
#include "ivsir/sir.hpp"
#include "ivsir/twostage.hpp"

namespace {

using json = nlohmann::json;
using namespace ivsir;

// --- shared plumbing ------------------------------------------------------

struct Common {
    std::uint64_t seed = 1;
    int threads = 1;
    std::string out_dir = ".";
};

void add_common(CLI::App* sub, Common& c) {
    // long-form help only: --h is the slice-count option
    sub->set_help_flag("--help", "Print this help message and exit");
    sub->add_option("--seed", c.seed, "Master seed for all randomized steps")
        ->capture_default_str();
    sub->add_option("--threads", c.threads,
                    "Worker threads for replicated runs (never changes results)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--out-dir", c.out_dir, "Directory for output files")
        ->capture_default_str();
    sub->set_config("--config", "",
                    "Flat key=value file (# comments); command-line flags take "
                    "precedence over file values");
    sub->allow_config_extras(CLI::config_extras_mode::error);
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::config: return 2;
        case ErrorKind::data: return 3;
        default: return 4;
    }
}

const char* kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::config: return "config";
        case ErrorKind::data: return "data";
        default: return "numeric";
    }
}

void emit_error_record(const std::string& code, const char* kind,
                       const std::string& message) {
    json j;
    j["error"] = code;
    j["kind"] = kind;
    j["message"] = message;
    std::cerr << j.dump() << "\n";
}

std::string out_path(const Common& c, const char* name) {
    std::error_code ec;
    std::filesystem::create_directories(c.out_dir, ec);
    if (ec)
        throw DataError("IoError",
                        "cannot create directory " + c.out_dir + ": " + ec.message());
    return (std::filesystem::path(c.out_dir) / name).string();
}

void write_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw DataError("IoError", "cannot write " + path);
    out << j.dump(2) << "\n";
    if (!out) throw DataError("IoError", "short write to " + path);
}

// --- tuning flags shared by simulate / fit / stability --------------------

struct TuningArgs {
    std::string stage1 = "bic";
    double stage1_fixed = 0.0;
    double stage1_c0 = 1.0;
    std::string stage2 = "cv1se";
    double stage2_fixed = 0.0;
    int folds = 10;
    int grid_points = 100;
};

void add_tuning(CLI::App* sub, TuningArgs& t) {
    sub->add_option("--stage1-tuning", t.stage1,
                    "First-stage penalty policy: bic | cv | cv1se | theory | "
                    "fixed")
        ->capture_default_str();
    sub->add_option("--stage1-fixed", t.stage1_fixed,
                    "Penalty value when stage1-tuning=fixed")
        ->capture_default_str();
    sub->add_option("--stage1-c0", t.stage1_c0,
                    "Rate constant when stage1-tuning=theory")
        ->capture_default_str();
    sub->add_option("--stage2-tuning", t.stage2,
                    "Second-stage penalty policy: cv1se | cv | bic | fixed")
        ->capture_default_str();
    sub->add_option("--stage2-fixed", t.stage2_fixed,
                    "Penalty value when stage2-tuning=fixed")
        ->capture_default_str();
    sub->add_option("--folds", t.folds, "Cross-validation folds")
        ->capture_default_str()
        ->check(CLI::Range(2, 1000000));
    sub->add_option("--grid-points", t.grid_points, "Penalty grid size")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
}

TuneMode parse_mode(const std::string& value, bool allow_theory,
                    const char* key) {
    if (value == "cv") return TuneMode::cv;
    if (value == "cv1se") return TuneMode::cv1se;
    if (value == "bic") return TuneMode::bic;
    if (value == "fixed") return TuneMode::fixed;
    if (allow_theory && value == "theory") return TuneMode::theory;
    throw ConfigError("ConfigInvalid", std::string("key '") + key + "': '" +
                                           value +
                                           "' is not a recognized tuning mode");
}

TwoStageSpec make_spec(const TuningArgs& t) {
    TwoStageSpec spec;
    spec.stage1.mode = parse_mode(t.stage1, true, "stage1-tuning");
    spec.stage1.fixed_value = t.stage1_fixed;
    spec.stage1.c0 = t.stage1_c0;
    spec.stage1.folds = t.folds;
    spec.stage1.grid_points = t.grid_points;
    spec.stage2.mode = parse_mode(t.stage2, false, "stage2-tuning");
    spec.stage2.fixed_value = t.stage2_fixed;
    spec.stage2.folds = t.folds;
    spec.stage2.grid_points = t.grid_points;
    return spec;
}

// --- CSV ingestion --------------------------------------------------------

struct Loaded {
    Vec y;
    Matrix x;                          // constant columns removed
    std::vector<std::string> names;    // surviving x column names
    std::vector<std::string> dropped;  // removed x column names
    Matrix z;                          // empty when no instrument file given
    std::vector<std::string> z_names;
};

// Reads y (single column), x, and optionally z; checks row alignment and
// removes constant x columns (zero variance after centering) with a warning.
Loaded load_data(const std::string& y_path, const std::string& x_path,
                 const std::string& z_path, bool need_x) {
    Loaded data;
    data.y = csv::to_vector(csv::read(y_path));
    const int n = static_cast<int>(data.y.size());

    if (need_x) {
        csv::Table tx = csv::read(x_path);
        if (tx.size() != n)
            throw DataError("SchemaMismatch",
                            x_path + " has " + std::to_string(tx.size()) +
                                " rows but " + y_path + " has " +
                                std::to_string(n));
        Matrix full = csv::to_matrix(tx);
        std::vector<int> keep;
        for (int j = 0; j < full.cols(); ++j) {
            bool constant = true;
            for (int i = 1; i < full.rows() && constant; ++i)
                constant = full(i, j) == full(0, j);
            if (constant) {
                data.dropped.push_back(tx.header[j]);
                std::cerr << "warning: dropping constant column '"
                          << tx.header[j] << "' (zero variance after centering)\n";
            } else {
                keep.push_back(j);
            }
        }
        if (keep.empty())
            throw DataError("SchemaMismatch",
                            x_path + ": every column is constant");
        data.x = Matrix(n, static_cast<int>(keep.size()));
        for (int i = 0; i < n; ++i)
            for (std::size_t j = 0; j < keep.size(); ++j)
                data.x(i, static_cast<int>(j)) = full(i, keep[j]);
        for (int j : keep) data.names.push_back(tx.header[j]);
    }

    if (!z_path.empty()) {
        csv::Table tz = csv::read(z_path);
        if (tz.size() != n)
            throw DataError("SchemaMismatch",
                            z_path + " has " + std::to_string(tz.size()) +
                                " rows but " + y_path + " has " +
                                std::to_string(n));
        data.z = csv::to_matrix(tz);
        data.z_names = tz.header;
    }
    return data;
}

// --- simulate -------------------------------------------------------------

struct SimulateArgs {
    std::string design = "main";
    std::string model = "i";
    int scenario = 1;
    std::string link = "linear";
    int n = 200;
    int p = 40;
    int q = 40;
    int s = 5;
    int r = 5;
    int h = 10;
    std::string z = "continuous";
    int replicates = 100;
    std::string estimators = "lasso,lsir,2slasso,2slsir";
    TuningArgs tuning;
    // options whose presence is only meaningful for one design
    std::vector<std::pair<CLI::Option*, const char*>> main_only;
    std::vector<std::pair<CLI::Option*, const char*>> endo_only;
};

std::vector<Estimator> parse_estimator_list(const std::string& text) {
    std::vector<Estimator> out;
    std::vector<char> seen(4, 0);
    std::size_t start = 0;
    for (;;) {
        std::size_t pos = text.find(',', start);
        std::string token = pos == std::string::npos
                                ? text.substr(start)
                                : text.substr(start, pos - start);
        if (token.empty())
            throw ConfigError("ConfigInvalid",
                              "key 'estimators': empty entry in '" + text + "'");
        Estimator e;
        try {
            e = parse_estimator(token);
        } catch (const Error& err) {
            throw ConfigError("ConfigInvalid",
                              std::string("key 'estimators': ") + err.what());
        }
        if (seen[static_cast<int>(e)])
            throw ConfigError("ConfigInvalid",
                              "key 'estimators': duplicate '" + token + "'");
        seen[static_cast<int>(e)] = 1;
        out.push_back(e);
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

void print_summary_table(const ExperimentResult& result,
                         const std::string& label) {
    std::printf("%-9s %-12s %10s %10s %8s %9s %7s %8s\n", "estimator", "model",
                "replicates", "mean_error", "sd_error", "mean_auc", "sd_auc",
                "failures");
    for (const EstimatorSummary& s : result.summaries)
        std::printf("%-9s %-12s %10d %10.3f %8.3f %9.3f %7.3f %8d\n",
                    estimator_name(s.estimator), label.c_str(), s.replicates,
                    s.mean_error, s.sd_error, s.mean_auc, s.sd_auc, s.failures);
    std::fflush(stdout);
}

void write_experiment_files(const ExperimentResult& result,
                            const std::string& label, int n, int p, int q,
                            const std::string& z_kind, const Common& c) {
    std::vector<std::vector<std::string>> srows;
    for (const EstimatorSummary& s : result.summaries)
        srows.push_back({estimator_name(s.estimator), label, std::to_string(n),
                         std::to_string(p), std::to_string(q), z_kind,
                         std::to_string(s.replicates), csv::fmt3(s.mean_error),
                         csv::fmt3(s.sd_error), csv::fmt3(s.mean_auc),
                         csv::fmt3(s.sd_auc), std::to_string(s.failures)});
    csv::write(out_path(c, "summary.csv"),
               {"estimator", "model", "n", "p", "q", "z_kind", "replicates",
                "mean_error", "sd_error", "mean_auc", "sd_auc", "failures"},
               srows);

    std::vector<std::vector<std::string>> rrows;
    for (const ReplicateRow& r : result.rows)
        rrows.push_back({std::to_string(r.replicate + 1),
                         estimator_name(r.estimator),
                         r.failed ? "nan" : csv::fmt17(r.error),
                         r.failed ? "nan" : csv::fmt17(r.auc),
                         r.failed ? r.error_code : "ok"});
    csv::write(out_path(c, "replicates.csv"),
               {"replicate", "estimator", "error", "auc", "status"}, rrows);
}

int cmd_simulate(const SimulateArgs& a, const Common& c) {
    const auto t0 = std::chrono::steady_clock::now();
    if (a.design != "main" && a.design != "endo")
        throw ConfigError("ConfigInvalid", "key 'design': '" + a.design +
                                               "' is not 'main' or 'endo'");
    const bool endo = a.design == "endo";
    for (const auto& [opt, key] : endo ? a.main_only : a.endo_only)
        if (opt->count() > 0)
            throw ConfigError("ConfigInvalid",
                              std::string("key '") + key +
                                  "' does not apply to design=" + a.design);

    ExperimentResult result;
    std::string label, z_kind;
    int p = 0, q = 0;
    if (endo) {
        EndoConfig cfg;
        if (a.scenario < 1 || a.scenario > 3)
            throw ConfigError("ConfigInvalid",
                              "key 'scenario': must be 1, 2, or 3");
        cfg.scenario = static_cast<EndoScenario>(a.scenario - 1);
        if (a.link == "linear") cfg.link = Link::linear;
        else if (a.link == "sine") cfg.link = Link::sine;
        else
            throw ConfigError("ConfigInvalid", "key 'link': '" + a.link +
                                                   "' is not 'linear' or 'sine'");
        cfg.n = a.n;
        cfg.h = a.h;
        cfg.seed = c.seed;
        result = run_endo_experiment(cfg, a.replicates, c.threads);
        label = "endo" + std::to_string(a.scenario) + "-" + a.link;
        z_kind = "none";
        p = 4;
        q = 0;
    } else {
        SimulationConfig cfg;
        try {
            cfg.model = parse_model(a.model);
        } catch (const Error& err) {
            throw ConfigError("ConfigInvalid",
                              std::string("key 'model': ") + err.what());
        }
        if (a.z == "continuous") cfg.z_kind = ZKind::continuous;
        else if (a.z == "bernoulli") cfg.z_kind = ZKind::bernoulli;
        else
            throw ConfigError("ConfigInvalid",
                              "key 'z': '" + a.z +
                                  "' is not 'continuous' or 'bernoulli'");
        cfg.n = a.n;
        cfg.p = a.p;
        cfg.q = a.q;
        cfg.s = a.s;
        cfg.r = a.r;
        cfg.h = a.h;
        cfg.seed = c.seed;
        cfg.tuning = make_spec(a.tuning);
        std::vector<Estimator> estimators = parse_estimator_list(a.estimators);
        result = run_experiment(cfg, estimators, a.replicates, c.threads);
        label = model_name(cfg.model);
        z_kind = a.z;
        p = a.p;
        q = a.q;
    }

    write_experiment_files(result, label, a.n, p, q, z_kind, c);
    print_summary_table(result, label);
    if (result.resampled > 0)
        std::cerr << "note: " << result.resampled
                  << " observations resampled for a near-zero denominator\n";
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::fprintf(stderr, "simulate: %d replicates in %.1f s\n", a.replicates,
                 secs);
    return 0;
}

// --- fit ------------------------------------------------------------------

struct FitArgs {
    std::string y_path, x_path, z_path;
    std::string estimator = "auto";  // 2slsir with --z, lsir without
    int h = 10;
    int d = 1;
    TuningArgs tuning;
};

// Plain cross-validated lasso of y on x (the linear comparator).
LassoFit plain_lasso(const Vec& y, const Matrix& x, const TuningArgs& t,
                     SeededRng& rng) {
    Matrix xc = x;
    Vec yc = y;
    center_columns(xc);
    center(yc);
    LassoProblem prob(xc, yc);
    Vec grid = default_grid(prob, t.grid_points);
    CvOptions copt;
    copt.folds = t.folds;
    TuningReport rep = tune_cv(xc, yc, copt, rng, &grid);
    TuneMode rule = parse_mode(t.stage2, false, "stage2-tuning");
    int idx = rule == TuneMode::cv ? rep.chosen_index : rep.chosen_1se_index;
    std::vector<LassoFit> fits = path(prob, &grid);
    return fits[idx];
}

int cmd_fit(const FitArgs& a, const Common& c) {
    Loaded data = load_data(a.y_path, a.x_path, a.z_path, true);
    const bool have_z = data.z.rows() > 0;
    std::string est = a.estimator;
    if (est == "auto") est = have_z ? "2slsir" : "lsir";

    if ((est == "2slsir" || est == "2slasso") && !have_z)
        throw ConfigError("ConfigInvalid",
                          "estimator " + est + " needs --z (instrument file)");
    if ((est == "lsir" || est == "lasso") && have_z)
        std::cerr << "note: estimator " << est << " ignores --z\n";
    if ((est == "2slasso" || est == "lasso") && a.d != 1)
        throw ConfigError("ConfigInvalid",
                          "estimator " + est + " fits a single linear index; "
                          "use --d 1");

    TwoStageSpec spec = make_spec(a.tuning);
    SeededRng rng(c.seed);

    Matrix b_hat;
    Vec eigenvalues, adjusted, penalties;
    std::vector<int> support;
    std::string stage = "one_stage";
    if (est == "lsir") {
        SdrEstimate e = lasso_sir(data.y, data.x, a.h, a.d, spec.stage2, rng);
        b_hat = std::move(e.b_hat);
        eigenvalues = std::move(e.eigenvalues);
        adjusted = std::move(e.adjusted_eigenvalues);
        penalties = std::move(e.penalties);
        support = std::move(e.support);
    } else if (est == "2slsir") {
        SdrEstimate e =
            two_stage_lasso_sir(data.y, data.x, data.z, a.h, a.d, spec, rng);
        b_hat = std::move(e.b_hat);
        eigenvalues = std::move(e.eigenvalues);
        adjusted = std::move(e.adjusted_eigenvalues);
        penalties = std::move(e.penalties);
        support = std::move(e.support);
        stage = "two_stage";
    } else if (est == "2slasso") {
        Vec beta = two_stage_lasso(data.y, data.x, data.z, spec, rng);
        b_hat = Matrix(static_cast<int>(beta.size()), 1);
        for (std::size_t j = 0; j < beta.size(); ++j) {
            b_hat(static_cast<int>(j), 0) = beta[j];
            if (beta[j] != 0.0) support.push_back(static_cast<int>(j));
        }
        stage = "two_stage";
    } else if (est == "lasso") {
        LassoFit fit = plain_lasso(data.y, data.x, a.tuning, rng);
        b_hat = Matrix(static_cast<int>(fit.beta.size()), 1);
        for (std::size_t j = 0; j < fit.beta.size(); ++j)
            b_hat(static_cast<int>(j), 0) = fit.beta[j];
        support = fit.active;
        penalties = {fit.penalty};
    } else {
        throw ConfigError("ConfigInvalid",
                          "key 'estimator': '" + est +
                              "' is not one of lasso, lsir, 2slasso, 2slsir");
    }

    std::vector<std::string> support_names;
    for (int j : support) support_names.push_back(data.names[j]);

    json j;
    j["estimator"] = est;
    j["stage"] = stage;
    j["n"] = static_cast<int>(data.y.size());
    j["p"] = static_cast<int>(data.names.size());
    if (have_z) j["q"] = data.z.cols();
    j["d"] = b_hat.cols();
    if (est == "lsir" || est == "2slsir") j["h"] = a.h;
    j["eigenvalues"] = eigenvalues;
    j["adjusted_eigenvalues"] = adjusted;
    j["penalties"] = penalties;
    j["support"] = support_names;
    j["dropped_columns"] = data.dropped;
    write_json(out_path(c, "estimate.json"), j);

    std::vector<std::string> header{"variable"};
    for (int k = 0; k < b_hat.cols(); ++k)
        header.push_back("beta_" + std::to_string(k + 1));
    std::vector<std::vector<std::string>> rows;
    for (int jcol = 0; jcol < b_hat.rows(); ++jcol) {
        std::vector<std::string> row{data.names[jcol]};
        for (int k = 0; k < b_hat.cols(); ++k)
            row.push_back(csv::fmt17(b_hat(jcol, k)));
        rows.push_back(std::move(row));
    }
    csv::write(out_path(c, "coefficients.csv"), header, rows);

    std::printf("estimator: %s\n", est.c_str());
    std::printf("support (%d of %d variables):", static_cast<int>(support.size()),
                static_cast<int>(data.names.size()));
    for (const std::string& name : support_names)
        std::printf(" %s", name.c_str());
    std::printf("\n");
    std::fflush(stdout);
    return 0;
}

// --- select-dim -----------------------------------------------------------

struct SelectDimArgs {
    std::string y_path, x_path, z_path;
    std::string regressor;  // Z | X | Xhat
    int h = 10;
    int repeats = 50;
    int folds = 5;
};

int cmd_select_dim(const SelectDimArgs& a, const Common& c) {
    if (a.regressor != "Z" && a.regressor != "X" && a.regressor != "Xhat")
        throw ConfigError("ConfigInvalid", "key 'regressor': '" + a.regressor +
                                               "' is not Z, X, or Xhat");
    const bool need_x = a.regressor != "Z";
    const bool need_z = a.regressor != "X";
    if (need_x && a.x_path.empty())
        throw ConfigError("ConfigInvalid",
                          "regressor " + a.regressor + " needs --x");
    if (need_z && a.z_path.empty())
        throw ConfigError("ConfigInvalid",
                          "regressor " + a.regressor + " needs --z");

    Loaded data = load_data(a.y_path, a.x_path, a.z_path, need_x);
    Matrix regressors;
    if (a.regressor == "Z") {
        regressors = std::move(data.z);
    } else if (a.regressor == "X") {
        regressors = std::move(data.x);
    } else {
        Matrix xc = data.x;
        Matrix zc = data.z;
        center_columns(xc);
        center_columns(zc);
        regressors = stage_one(xc, zc).fitted;
    }

    SeededRng rng(c.seed);
    DimensionVote vote =
        select_dimension(data.y, regressors, a.h, a.repeats, a.folds, rng);
    vote.regressor_choice = a.regressor;

    json j;
    j["regressor"] = a.regressor;
    j["h"] = a.h;
    j["repeats"] = a.repeats;
    j["folds"] = a.folds;
    j["votes"] = vote.votes;
    j["final_d"] = vote.final_d;
    j["degenerate_count"] = vote.degenerate_count;
    write_json(out_path(c, "dimension.json"), j);

    std::printf("regressor: %s\n", a.regressor.c_str());
    std::printf("votes:");
    for (int v : vote.votes) std::printf(" %d", v);
    std::printf("\n");
    std::printf("degenerate repeats: %d\n", vote.degenerate_count);
    std::printf("estimated dimension: %d\n", vote.final_d);
    std::fflush(stdout);
    return 0;
}

// --- stability ------------------------------------------------------------

struct StabilityArgs {
    std::string y_path, x_path, z_path;
    std::string estimator = "2slsir";  // lsir | 2slsir | 2slasso
    int subsamples = 100;
    double cutoff = 0.75;
    double pfer = 1.0;
    double threshold = 0.5;
    int d = 1;
    int h = 10;
    int grid_points = 100;
};

int cmd_stability(const StabilityArgs& a, const Common& c) {
    StabilityEstimator which;
    if (a.estimator == "lsir") which = StabilityEstimator::one_stage;
    else if (a.estimator == "2slsir") which = StabilityEstimator::two_stage;
    else if (a.estimator == "2slasso")
        which = StabilityEstimator::two_stage_linear;
    else
        throw ConfigError("ConfigInvalid",
                          "key 'estimator': '" + a.estimator +
                              "' is not one of lsir, 2slsir, 2slasso");
    if (which != StabilityEstimator::one_stage && a.z_path.empty())
        throw ConfigError("ConfigInvalid",
                          "estimator " + a.estimator + " needs --z");

    Loaded data = load_data(a.y_path, a.x_path, a.z_path, true);
    StabilityOptions opt;
    opt.subsamples = a.subsamples;
    opt.cutoff = a.cutoff;
    opt.pfer = a.pfer;
    opt.threshold = a.threshold;
    opt.d = a.d;
    opt.h = a.h;
    opt.grid_points = a.grid_points;

    SeededRng rng(c.seed);
    StabilityPath path =
        stability_selection(data.y, data.x, data.z, which, opt, rng);

    const int p = path.probability.rows();
    const int g = path.probability.cols();
    std::vector<std::vector<std::string>> rows;
    for (int j = 0; j < p; ++j)
        for (int k = 0; k < g; ++k)
            rows.push_back({data.names[j], std::to_string(k + 1),
                            csv::fmt17(path.grid[k]),
                            csv::fmt17(path.probability(j, k))});
    csv::write(out_path(c, "stability.csv"),
               {"variable", "grid_index", "penalty", "probability"}, rows);

    std::vector<std::string> selected_names;
    for (int j : path.selected) selected_names.push_back(data.names[j]);

    json j;
    j["estimator"] = a.estimator;
    j["d"] = a.d;
    j["h"] = a.h;
    j["subsamples"] = path.subsamples;
    j["failures"] = path.failures;
    j["cutoff"] = a.cutoff;
    j["pfer"] = a.pfer;
    j["threshold"] = a.threshold;
    j["size_cap"] = path.size_cap;
    j["selected"] = selected_names;
    write_json(out_path(c, "stability.json"), j);

    std::printf("subsamples: %d (failures: %d)\n", path.subsamples,
                path.failures);
    std::printf("model size cap: %s\n", csv::fmt3(path.size_cap).c_str());
    std::printf("selected (max probability >= %s):",
                csv::fmt3(a.threshold).c_str());
    if (selected_names.empty()) std::printf(" none");
    for (const std::string& name : selected_names)
        std::printf(" %s", name.c_str());
    std::printf("\n");
    std::fflush(stdout);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Sparse sliced inverse regression with instrumental variables"};
    app.require_subcommand(1);
    app.set_help_flag("--help", "Print this help message and exit");
    app.set_version_flag("--version", "ivsir 1.0.0");

    Common common;
    SimulateArgs sim;
    FitArgs fit;
    SelectDimArgs dim;
    StabilityArgs stab;

    CLI::App* s_sim = app.add_subcommand(
        "simulate", "Run a replicated simulation experiment");
    add_common(s_sim, common);
    CLI::Option* o_design =
        s_sim->add_option("--design", sim.design,
                          "main (instrument design) or endo (endogeneity demo)")
            ->capture_default_str();
    (void)o_design;
    CLI::Option* o_model =
        s_sim->add_option("--model", sim.model, "Outcome model: i, ii, iii, iv, v")
            ->capture_default_str();
    CLI::Option* o_scenario =
        s_sim->add_option("--scenario", sim.scenario,
                          "Endogeneity scenario 1-3 (design=endo)")
            ->capture_default_str();
    CLI::Option* o_link = s_sim->add_option("--link", sim.link,
                                            "linear or sine (design=endo)")
                              ->capture_default_str();
    s_sim->add_option("--n", sim.n, "Observations per replicate")
        ->capture_default_str();
    CLI::Option* o_p =
        s_sim->add_option("--p", sim.p, "Covariates")->capture_default_str();
    CLI::Option* o_q =
        s_sim->add_option("--q", sim.q, "Instruments")->capture_default_str();
    CLI::Option* o_s =
        s_sim->add_option("--s", sim.s, "Active covariates")->capture_default_str();
    CLI::Option* o_r =
        s_sim->add_option("--r", sim.r, "Instruments per covariate")
            ->capture_default_str();
    s_sim->add_option("--h", sim.h, "Slices")->capture_default_str();
    CLI::Option* o_z =
        s_sim->add_option("--z", sim.z, "Instrument law: continuous or bernoulli")
            ->capture_default_str();
    s_sim->add_option("--replicates", sim.replicates, "Monte Carlo replicates")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    CLI::Option* o_est =
        s_sim->add_option("--estimators", sim.estimators,
                          "Comma list from lasso, lsir, 2slasso, 2slsir")
            ->capture_default_str();
    add_tuning(s_sim, sim.tuning);
    sim.main_only = {{o_model, "model"}, {o_p, "p"}, {o_q, "q"}, {o_s, "s"},
                     {o_r, "r"}, {o_z, "z"}, {o_est, "estimators"}};
    sim.endo_only = {{o_scenario, "scenario"}, {o_link, "link"}};

    CLI::App* s_fit = app.add_subcommand(
        "fit", "Estimate the dimension-reduction subspace from CSV data");
    add_common(s_fit, common);
    s_fit->add_option("--y", fit.y_path, "Response CSV (single column)")
        ->required();
    s_fit->add_option("--x", fit.x_path, "Covariate CSV")->required();
    s_fit->add_option("--z", fit.z_path, "Instrument CSV");
    s_fit->add_option("--estimator", fit.estimator,
                      "lasso, lsir, 2slasso, or 2slsir "
                      "(default: 2slsir with --z, lsir without)");
    s_fit->add_option("--h", fit.h, "Slices")->capture_default_str();
    s_fit->add_option("--d", fit.d, "Directions to estimate")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    add_tuning(s_fit, fit.tuning);

    CLI::App* s_dim = app.add_subcommand(
        "select-dim", "Estimate the structural dimension by clustering "
                      "adjusted eigenvalues over repeated cross-validation");
    add_common(s_dim, common);
    s_dim->add_option("--y", dim.y_path, "Response CSV (single column)")
        ->required();
    s_dim->add_option("--x", dim.x_path, "Covariate CSV");
    s_dim->add_option("--z", dim.z_path, "Instrument CSV");
    s_dim->add_option("--regressor", dim.regressor,
                      "Regressor set: Z, X, or Xhat (first-stage fitted values)")
        ->required();
    s_dim->add_option("--h", dim.h, "Slices")->capture_default_str();
    s_dim->add_option("--repeats", dim.repeats, "Cross-validation repeats")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    s_dim->add_option("--folds", dim.folds, "Cross-validation folds")
        ->capture_default_str()
        ->check(CLI::Range(2, 1000000));

    CLI::App* s_stab = app.add_subcommand(
        "stability", "Selection probabilities over seeded half-samples");
    add_common(s_stab, common);
    s_stab->add_option("--y", stab.y_path, "Response CSV (single column)")
        ->required();
    s_stab->add_option("--x", stab.x_path, "Covariate CSV")->required();
    s_stab->add_option("--z", stab.z_path, "Instrument CSV");
    s_stab->add_option("--estimator", stab.estimator,
                       "lsir, 2slsir, or 2slasso")
        ->capture_default_str();
    s_stab->add_option("--subsamples", stab.subsamples, "Half-sample count")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    s_stab->add_option("--cutoff", stab.cutoff, "Model-size cap factor")
        ->capture_default_str();
    s_stab->add_option("--pfer", stab.pfer, "Per-family error budget")
        ->capture_default_str();
    s_stab->add_option("--threshold", stab.threshold,
                       "Selection probability threshold")
        ->capture_default_str();
    s_stab->add_option("--d", stab.d, "Directions")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    s_stab->add_option("--h", stab.h, "Slices")->capture_default_str();
    s_stab->add_option("--grid-points", stab.grid_points, "Penalty grid size")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        emit_error_record("ConfigInvalid", "config", e.what());
        return 2;
    }

    try {
        if (*s_sim) return cmd_simulate(sim, common);
        if (*s_fit) return cmd_fit(fit, common);
        if (*s_dim) return cmd_select_dim(dim, common);
        if (*s_stab) return cmd_stability(stab, common);
    } catch (const Error& e) {
        emit_error_record(e.code(), kind_name(e.kind()), e.what());
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        emit_error_record("Internal", "numeric", e.what());
        return 4;
    }
    return 0;
}

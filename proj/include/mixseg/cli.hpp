#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mixseg/baselines.hpp"
#include "mixseg/detail/parallel.hpp"
#include "mixseg/em.hpp"
#include "mixseg/io.hpp"
#include "mixseg/metrics.hpp"
#include "mixseg/random.hpp"
#include "mixseg/selection.hpp"
#include "mixseg/simulate.hpp"
#include "mixseg/wavelet.hpp"

// Command-line front end. Every subcommand accepts --config FILE holding a
// JSON object whose keys are the long flag names (either '-' or '_' as the
// word separator); flags given on the command line take precedence.
//
// Exit codes: 0 success, 1 numerical or degenerate failure, 2 usage or input
// error.

namespace mixseg::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr int exit_ok = 0;
inline constexpr int exit_failure = 1;
inline constexpr int exit_usage = 2;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Reads JSON config files for CLI11. Keys are routed to whichever
// subcommand was selected on the command line.
class JsonConfig : public CLI::Config {
public:
    explicit JsonConfig(const CLI::App* root) : root_(root) {}

    std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
        json out = json::object();
        for (const CLI::Option* opt : app->get_options()) {
            if (opt->get_lnames().empty() || opt->get_configurable() == false) continue;
            const auto& name = opt->get_lnames().front();
            if (opt->count() > 0)
                out[name] = opt->results().size() == 1 ? json(opt->results().front()) : json(opt->results());
            else if (default_also && !opt->get_default_str().empty())
                out[name] = opt->get_default_str();
        }
        return out.dump(2) + "\n";
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        json j;
        try {
            j = json::parse(input);
        } catch (const json::exception& e) {
            throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
        }
        if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
        std::vector<std::string> parents;
        for (const CLI::App* sub : root_->get_subcommands()) parents.push_back(sub->get_name());
        std::vector<CLI::ConfigItem> items;
        for (const auto& [key, value] : j.items()) {
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            std::replace(item.name.begin(), item.name.end(), '_', '-');
            if (value.is_array()) {
                for (const auto& v : value) item.inputs.push_back(scalar(key, v));
            } else {
                item.inputs.push_back(scalar(key, value));
            }
            items.push_back(std::move(item));
        }
        return items;
    }

private:
    const CLI::App* root_;

    static std::string scalar(const std::string& key, const json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        if (v.is_number()) return v.dump();
        throw CLI::ConversionError("config key '" + key + "' must be a scalar or an array of scalars");
    }
};

// ---------------------------------------------------------------- options

struct EmOptions {
    int max_iter = 200;
    double rel_tol = 1e-6;
    int restarts = 10;
    std::string init = "random";
    int threads = 0;
    bool swap_polish = true;
    int min_segment_len = 1;

    void add_to(CLI::App& app) {
        app.add_option("--max-iter", max_iter, "EM iteration cap per restart")->capture_default_str();
        app.add_option("--rel-tol", rel_tol, "relative log-likelihood change that stops EM")->capture_default_str();
        app.add_option("--restarts", restarts, "number of EM restarts")->capture_default_str();
        app.add_option("--init", init, "initialization: random | kmeans")
            ->check(CLI::IsMember({"random", "kmeans"}))
            ->capture_default_str();
        app.add_option("--threads", threads, "worker threads for restarts (0 = all cores)")->capture_default_str();
        app.add_option("--swap-polish", swap_polish, "retry EM with swapped cluster roles after the restarts")
            ->capture_default_str();
        app.add_option("--min-segment-len", min_segment_len, "shortest allowed segment")->capture_default_str();
    }

    EMConfig em(std::uint64_t seed) const {
        EMConfig c;
        c.max_iter = max_iter;
        c.rel_tol = rel_tol;
        c.n_restarts = restarts;
        c.seed = seed;
        c.init = init == "kmeans" ? InitMethod::KMeansSummary : InitMethod::RandomResp;
        c.threads = threads;
        c.swap_polish = swap_polish;
        return c;
    }
};

struct SimulateOptions {
    std::string scenario;
    int n = 0, d = 0, H = 0, level = -1;
    double alpha = 1.0, noise_sd = 1.0;
    std::vector<int> L;
    std::vector<double> pi;
    std::string grid = "unit";
    std::uint64_t seed = 0;
    std::string out;
};

struct ProjectOptions {
    std::string input, output;
    int level = 3;
    int threads = 1;
};

struct FitOptions {
    std::string input, output, partition;
    std::vector<int> L;
    int K = 0;
    std::uint64_t seed = 0;
    EmOptions em;
};

struct SelectOptions {
    std::string input, output;
    std::vector<int> L{1, 1};
    int budget = 20;
    std::uint64_t seed = 0;
    EmOptions em;
};

struct EvaluateOptions {
    std::string truth, fit, output;
};

struct BenchmarkOptions {
    std::vector<int> n{100}, d{50};
    std::vector<double> alpha{1.0};
    int replicates = 20;
    std::vector<std::string> methods{"mixseg"};
    std::vector<int> L{1, 2, 3};
    int H = 32, level = 3;
    double noise_sd = 1.0;
    int simpleseg_breakpoints = 5;
    int jobs = 1;
    std::uint64_t seed = 0;
    std::string out;
    EmOptions em;
};

// ---------------------------------------------------------------- helpers

inline void write_output(const std::string& path, const std::string& content) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    io::write_file_atomic(p, content);
}

inline CoefficientTensor read_coefficients(const std::string& path) {
    try {
        return io::coefficients_from_csv(io::read_file(path));
    } catch (const io::FormatError& e) {
        throw io::FormatError(path + ": " + e.what());
    }
}

inline json read_json(const std::string& path) {
    try {
        return json::parse(io::read_file(path));
    } catch (const json::exception& e) {
        throw io::FormatError(path + ": " + e.what());
    }
}

inline std::string join(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

// ---------------------------------------------------------------- commands

inline int cmd_simulate(const SimulateOptions& o, const CLI::App& app, std::ostream& out, std::ostream& err) {
    const Scenario sc = io::scenario_from_name(o.scenario);
    SimSpec spec = sc == Scenario::CosineDGP ? SimSpec{} : SimSpec::toy(o.seed);
    auto given = [&](const char* name) { return app.get_option(name)->count() > 0; };
    if (given("--n")) spec.n = o.n;
    if (given("--d")) spec.d = o.d;
    if (given("--H")) spec.H = o.H;
    if (given("--level")) spec.level = o.level;
    if (given("--alpha")) spec.alpha = o.alpha;
    if (given("--noise-sd")) spec.noise_sd = o.noise_sd;
    if (given("--L")) {
        spec.L = o.L;
        spec.K = static_cast<int>(o.L.size());
    }
    if (given("--pi")) spec.pi = o.pi;
    spec.grid = io::grid_from_name(o.grid);
    spec.seed = o.seed;
    if (sc == Scenario::CosineDGP && !(spec.alpha > 0.0)) throw UsageError("--alpha must be > 0 for the cosine scenario");

    const SimBundle b = simulate(spec);
    // the toy layout repeats neutral segments by construction, so only the
    // cosine truth is held to the identifiability checks
    if (sc == Scenario::CosineDGP && !b.violations.empty()) {
        std::string msg = "true parameters are not identifiable:";
        for (const auto& v : b.violations) msg += " " + v.tag() + " (" + v.message + ")";
        throw UsageError(msg);
    }
    const fs::path dir(o.out);
    fs::create_directories(dir);
    io::write_file_atomic(dir / "dataset.csv", io::dataset_to_csv(b.dataset));
    io::write_file_atomic(dir / "truth.json", io::truth_to_json(b).dump(2) + "\n");
    for (const auto& v : b.violations) err << "warning: true parameters violate " << v.tag() << ": " << v.message << "\n";
    out << "seed " << spec.seed << "\n";
    out << "wrote " << (dir / "dataset.csv").string() << " and " << (dir / "truth.json").string() << "\n";
    return exit_ok;
}

inline int cmd_project(const ProjectOptions& o, std::ostream& out) {
    FunctionalDataset ds;
    try {
        ds = io::dataset_from_csv(io::read_file(o.input));
    } catch (const io::FormatError& e) {
        throw io::FormatError(o.input + ": " + e.what());
    }
    WaveletConfig cfg;
    cfg.level = o.level;
    const auto y = project_dataset(ds, cfg, o.threads);
    write_output(o.output, io::coefficients_to_csv(y));
    out << "projected n=" << y.n() << " d=" << y.d() << " H=" << ds.H() << " to level " << o.level << " (p=" << y.p()
        << ")\n";
    return exit_ok;
}

inline void report_warnings(const FitReport& f, std::ostream& err) {
    for (const auto& v : f.warnings) err << "warning: " << v.tag() << ": " << v.message << "\n";
}

inline int cmd_fit(const FitOptions& o, std::ostream& out, std::ostream& err) {
    const auto y = read_coefficients(o.input);
    if (o.K > 0 && static_cast<std::size_t>(o.K) != o.L.size())
        throw UsageError("--K=" + std::to_string(o.K) + " does not match the " + std::to_string(o.L.size()) +
                         " entries of --L");
    const auto config = ModelConfig::make(o.L, o.em.min_segment_len);
    const auto report = fit(y, config, o.em.em(o.seed));
    write_output(o.output, io::to_json(report).dump(2) + "\n");
    if (!o.partition.empty()) write_output(o.partition, io::partition_to_csv(report.partition));
    report_warnings(report, err);
    out << "K=" << config.K << " L=" << join(config.L) << " loglik " << io::format_double(report.loglik()) << " after "
        << report.n_iter << " iterations" << (report.converged ? "" : " (not converged)") << "\n";
    return exit_ok;
}

inline int cmd_select(const SelectOptions& o, std::ostream& out, std::ostream& err) {
    const auto y = read_coefficients(o.input);
    if (o.budget < 0) throw UsageError("--budget must be >= 0");
    const auto initial = ModelConfig::make(o.L, o.em.min_segment_len);
    const auto res = search(y, initial, o.em.em(o.seed), o.budget);
    write_output(o.output, io::to_json(res).dump(2) + "\n");
    report_warnings(res.best_fit, err);
    if (res.budget_exhausted) err << "warning: search budget exhausted after " << res.rounds << " rounds\n";
    out << "selected K=" << res.best_config.K << " L=" << join(res.best_config.L) << " BIC "
        << io::format_double(res.bic) << "\n";
    return exit_ok;
}

inline int cmd_evaluate(const EvaluateOptions& o, std::ostream& out) {
    const auto truth = io::truth_from_json(read_json(o.truth));
    const json fj = read_json(o.fit);
    const auto f = io::fit_report_from_json(fj.contains("best_fit") ? fj.at("best_fit") : fj);
    if (f.partition.size() != truth.z_true.size())
        throw io::FormatError("fit has " + std::to_string(f.partition.size()) + " individuals, truth has " +
                              std::to_string(truth.z_true.size()));
    const auto rep = evaluate(truth.z_true, truth.params_true, f.partition, f.params, truth.spec.d);
    const std::string text = io::to_json(rep).dump(2) + "\n";
    if (o.output.empty())
        out << text;
    else
        write_output(o.output, text);
    return exit_ok;
}

// ---------------------------------------------------------------- benchmark

namespace detail {

struct ReplicateResult {
    std::optional<double> ari, nce, hausdorff, mu_error;
    std::string status = "ok";
};

struct Summary {
    std::optional<double> mean, sd;
    std::size_t count = 0;
};

// Mean and sample standard deviation (0 for a single value).
inline Summary summarize(const std::vector<std::optional<double>>& xs) {
    std::vector<double> v;
    for (const auto& x : xs)
        if (x) v.push_back(*x);
    Summary s;
    s.count = v.size();
    if (v.empty()) return s;
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    s.mean = m;
    s.sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    return s;
}

inline std::string opt_str(const std::optional<double>& v) { return v ? io::format_double(*v) : "NA"; }

inline ReplicateResult run_method(const std::string& method, const SimBundle& b, const CoefficientTensor& y,
                                  const BenchmarkOptions& o, std::uint64_t fit_seed) {
    ReplicateResult r;
    EMConfig em = o.em.em(fit_seed);
    em.threads = 1;
    try {
        if (method == "mixseg") {
            const auto f = fit(y, ModelConfig::make(o.L, o.em.min_segment_len), em);
            const auto e = evaluate(b.z_true, b.params_true, f.partition, f.params, b.spec.d);
            r.ari = e.ari;
            r.nce = e.nce;
            r.hausdorff = e.hausdorff;
            if (e.hausdorff) r.mu_error = e.median_mu_error();
        } else if (method == "simplemix") {
            const auto f = fit_simple_mix(y, static_cast<int>(o.L.size()), em);
            r.ari = ari(b.z_true, f.partition);
            r.nce = nce(b.z_true, f.partition, static_cast<int>(o.L.size()));
        } else {
            const auto seg = fit_simple_seg(y, o.simpleseg_breakpoints, o.em.min_segment_len);
            r.hausdorff = nearest_breakpoint_distance(b.params_true.T, seg.breakpoints, b.spec.d).value;
        }
    } catch (const std::exception& e) {
        r = ReplicateResult{};
        r.status = std::string("failed: ") + e.what();
    }
    return r;
}

}  // namespace detail

inline int cmd_benchmark(const BenchmarkOptions& o, std::ostream& out, std::ostream& err) {
    if (o.replicates < 1) throw UsageError("--replicates must be >= 1");
    for (const auto& m : o.methods)
        if (m != "mixseg" && m != "simplemix" && m != "simpleseg")
            throw UsageError("unknown method '" + m + "' (expected mixseg, simplemix, simpleseg)");
    if (o.n.empty() || o.d.empty() || o.alpha.empty() || o.methods.empty())
        throw UsageError("grid needs at least one n, d, alpha and method");

    struct Cell {
        int n, d;
        double alpha;
    };
    std::vector<Cell> cells;
    for (int n : o.n)
        for (int d : o.d)
            for (double a : o.alpha) {
                SimSpec s = SimSpec::cosine(n, d, a, 0);
                s.L = o.L;
                s.K = static_cast<int>(o.L.size());
                s.H = o.H;
                s.level = o.level;
                s.noise_sd = o.noise_sd;
                s.check();
                if (!(a > 0.0)) throw UsageError("alpha values must be > 0");
                cells.push_back({n, d, a});
            }

    const SeedStream seeds(o.seed);
    const std::size_t R = static_cast<std::size_t>(o.replicates), M = o.methods.size();
    // results[cell][method][replicate]
    std::vector<std::vector<std::vector<detail::ReplicateResult>>> results(
        cells.size(), std::vector<std::vector<detail::ReplicateResult>>(M, std::vector<detail::ReplicateResult>(R)));
    std::vector<std::atomic<std::size_t>> remaining(cells.size());
    for (auto& r : remaining) r = R;

    const fs::path dir(o.out);
    fs::create_directories(dir / "cells");
    auto cell_name = [&](const Cell& c) {
        return "n" + std::to_string(c.n) + "_d" + std::to_string(c.d) + "_alpha" + io::format_double(c.alpha);
    };

    auto write_cell = [&](std::size_t ci) {
        json j = {{"n", cells[ci].n}, {"d", cells[ci].d}, {"alpha", cells[ci].alpha}, {"methods", json::object()}};
        for (std::size_t m = 0; m < M; ++m) {
            json reps = json::array();
            for (const auto& r : results[ci][m])
                reps.push_back({{"ari", r.ari ? json(*r.ari) : json(nullptr)},
                                {"nce", r.nce ? json(*r.nce) : json(nullptr)},
                                {"hausdorff", r.hausdorff ? json(*r.hausdorff) : json(nullptr)},
                                {"mu_median_error", r.mu_error ? json(*r.mu_error) : json(nullptr)},
                                {"status", r.status}});
            j["methods"][o.methods[m]] = reps;
        }
        io::write_file_atomic(dir / "cells" / (cell_name(cells[ci]) + ".json"), j.dump(2) + "\n");
    };

    mixseg::detail::parallel_for(cells.size() * R, o.jobs, [&](std::size_t task) {
        const std::size_t ci = task / R, rep = task % R;
        const auto& c = cells[ci];
        SimSpec s = SimSpec::cosine(c.n, c.d, c.alpha, seeds.derive("simulate " + cell_name(c), rep));
        s.L = o.L;
        s.K = static_cast<int>(o.L.size());
        s.H = o.H;
        s.level = o.level;
        s.noise_sd = o.noise_sd;
        const auto b = simulate(s);
        WaveletConfig wc;
        wc.level = o.level;
        const auto y = project_dataset(b.dataset, wc);
        const auto fit_seed = seeds.derive("fit " + cell_name(c), rep);
        for (std::size_t m = 0; m < M; ++m) results[ci][m][rep] = detail::run_method(o.methods[m], b, y, o, fit_seed);
        if (--remaining[ci] == 0) write_cell(ci);
    });

    std::string table =
        "n,d,alpha,method,replicates,failures,ari_mean,ari_sd,nce_mean,nce_sd,hausdorff_mean,hausdorff_sd,"
        "hausdorff_count\n";
    std::string plot = "n,d,alpha,method,replicate,ari,nce,hausdorff,mu_median_error,status\n";
    std::size_t failures_total = 0;
    for (std::size_t ci = 0; ci < cells.size(); ++ci)
        for (std::size_t m = 0; m < M; ++m) {
            const auto& rs = results[ci][m];
            std::vector<std::optional<double>> a, e, h;
            std::size_t failures = 0;
            for (std::size_t rep = 0; rep < R; ++rep) {
                const auto& r = rs[rep];
                a.push_back(r.ari);
                e.push_back(r.nce);
                h.push_back(r.hausdorff);
                if (r.status != "ok") {
                    ++failures;
                    err << "warning: " << cell_name(cells[ci]) << " " << o.methods[m] << " replicate " << rep + 1
                        << " " << r.status << "\n";
                }
                std::string status = r.status;
                std::replace(status.begin(), status.end(), ',', ';');
                std::replace(status.begin(), status.end(), '\n', ' ');
                plot += std::to_string(cells[ci].n) + "," + std::to_string(cells[ci].d) + "," +
                        io::format_double(cells[ci].alpha) + "," + o.methods[m] + "," + std::to_string(rep + 1) + "," +
                        detail::opt_str(r.ari) + "," + detail::opt_str(r.nce) + "," + detail::opt_str(r.hausdorff) +
                        "," + detail::opt_str(r.mu_error) + "," + status + "\n";
            }
            failures_total += failures;
            const auto sa = detail::summarize(a), se = detail::summarize(e), sh = detail::summarize(h);
            table += std::to_string(cells[ci].n) + "," + std::to_string(cells[ci].d) + "," +
                     io::format_double(cells[ci].alpha) + "," + o.methods[m] + "," + std::to_string(R) + "," +
                     std::to_string(failures) + "," + detail::opt_str(sa.mean) + "," + detail::opt_str(sa.sd) + "," +
                     detail::opt_str(se.mean) + "," + detail::opt_str(se.sd) + "," + detail::opt_str(sh.mean) + "," +
                     detail::opt_str(sh.sd) + "," + std::to_string(sh.count) + "\n";
            out << cell_name(cells[ci]) << " " << o.methods[m] << ": ARI " << detail::opt_str(sa.mean) << " ("
                << detail::opt_str(sa.sd) << "), Hausdorff " << detail::opt_str(sh.mean) << "\n";
        }
    io::write_file_atomic(dir / "results.csv", table);
    io::write_file_atomic(dir / "plot_data.csv", plot);
    if (failures_total) err << "warning: " << failures_total << " replicate fits failed (see plot_data.csv)\n";
    return exit_ok;
}

// ---------------------------------------------------------------- entry

inline void add_config(CLI::App& sub) { sub.allow_config_extras(false); }

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Mixture of segmentations for functional data", "mixseg"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "JSON file with option values for the subcommand (flags override)");
    app.config_formatter(std::make_shared<JsonConfig>(&app));
    app.allow_config_extras(false);

    SimulateOptions so;
    auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset and its ground truth");
    add_config(*sim);
    sim->add_option("--scenario", so.scenario, "cosine | toy")->required()->check(CLI::IsMember({"cosine", "toy"}));
    sim->add_option("--n", so.n, "individuals");
    sim->add_option("--d", so.d, "time units");
    sim->add_option("--H", so.H, "samples per time unit");
    sim->add_option("--alpha", so.alpha, "cosine amplitude");
    sim->add_option("--L", so.L, "breakpoints per cluster, e.g. 1,2,3")->delimiter(',');
    sim->add_option("--pi", so.pi, "mixing proportions")->delimiter(',');
    sim->add_option("--noise-sd", so.noise_sd, "noise standard deviation per sample");
    sim->add_option("--level", so.level, "wavelet level used for the stored truth");
    sim->add_option("--grid", so.grid, "cosine time grid: unit | global")->check(CLI::IsMember({"unit", "global"}));
    sim->add_option("--seed", so.seed, "random seed");
    sim->add_option("--out", so.out, "output directory")->required();

    ProjectOptions po;
    auto* proj = app.add_subcommand("project", "project a dataset CSV onto Haar approximation coefficients");
    add_config(*proj);
    proj->add_option("--input", po.input, "dataset CSV")->required();
    proj->add_option("--output", po.output, "coefficient CSV")->required();
    proj->add_option("--level", po.level, "decomposition level J (p = H / 2^J)")->capture_default_str();
    proj->add_option("--threads", po.threads, "worker threads")->capture_default_str();

    FitOptions fo;
    auto* fitc = app.add_subcommand("fit", "fit a mixture of segmentations with fixed K and L");
    add_config(*fitc);
    fitc->add_option("--input", fo.input, "coefficient CSV")->required();
    fitc->add_option("--L", fo.L, "breakpoints per cluster, e.g. 1,2,3")->required()->delimiter(',');
    fitc->add_option("--K", fo.K, "number of clusters (must match --L)");
    fitc->add_option("--seed", fo.seed, "random seed");
    fitc->add_option("--output", fo.output, "fit report JSON")->required();
    fitc->add_option("--partition", fo.partition, "partition CSV");
    fo.em.add_to(*fitc);

    SelectOptions se;
    auto* sel = app.add_subcommand("select", "choose K and L by BIC local search");
    add_config(*sel);
    sel->add_option("--input", se.input, "coefficient CSV")->required();
    sel->add_option("--L", se.L, "starting configuration")->delimiter(',')->capture_default_str();
    sel->add_option("--budget", se.budget, "maximum search rounds")->capture_default_str();
    sel->add_option("--seed", se.seed, "random seed");
    sel->add_option("--output", se.output, "selection result JSON")->required();
    se.em.add_to(*sel);

    EvaluateOptions eo;
    auto* ev = app.add_subcommand("evaluate", "score a fit against simulation truth");
    add_config(*ev);
    ev->add_option("--truth", eo.truth, "truth JSON from simulate")->required();
    ev->add_option("--fit", eo.fit, "fit report or selection result JSON")->required();
    ev->add_option("--output", eo.output, "evaluation JSON (default: stdout)");

    BenchmarkOptions bo;
    auto* bench = app.add_subcommand("benchmark", "run a simulation grid and tabulate metrics");
    add_config(*bench);
    bench->add_option("--n", bo.n, "individuals (list)")->delimiter(',')->capture_default_str();
    bench->add_option("--d", bo.d, "time units (list)")->delimiter(',')->capture_default_str();
    bench->add_option("--alpha", bo.alpha, "amplitudes (list)")->delimiter(',')->capture_default_str();
    bench->add_option("--replicates", bo.replicates, "replicates per cell")->capture_default_str();
    bench->add_option("--methods", bo.methods, "mixseg, simplemix, simpleseg")->delimiter(',')->capture_default_str();
    bench->add_option("--L", bo.L, "true breakpoints per cluster")->delimiter(',')->capture_default_str();
    bench->add_option("--H", bo.H, "samples per time unit")->capture_default_str();
    bench->add_option("--level", bo.level, "wavelet level")->capture_default_str();
    bench->add_option("--noise-sd", bo.noise_sd, "noise standard deviation")->capture_default_str();
    bench->add_option("--simpleseg-breakpoints", bo.simpleseg_breakpoints, "breakpoints for the pooled baseline")
        ->capture_default_str();
    bench->add_option("--jobs", bo.jobs, "concurrent replicates (0 = all cores)")->capture_default_str();
    bench->add_option("--seed", bo.seed, "base seed");
    bench->add_option("--out", bo.out, "output directory")->required();
    bo.em.add_to(*bench);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*sim) return cmd_simulate(so, *sim, out, err);
        if (*proj) return cmd_project(po, out);
        if (*fitc) return cmd_fit(fo, out, err);
        if (*sel) return cmd_select(se, out, err);
        if (*ev) return cmd_evaluate(eo, out);
        if (*bench) return cmd_benchmark(bo, out, err);
    } catch (const DegenerateFitError& e) {
        err << "error: degenerate fit: " << e.what() << "\n";
        return exit_failure;
    } catch (const EmptyClusterError& e) {
        err << "error: degenerate fit: " << e.what() << "\n";
        return exit_failure;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const io::FormatError& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const json::exception& e) {
        err << "error: malformed JSON input: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_failure;
    }
    return exit_usage;
}

}  // namespace mixseg::cli

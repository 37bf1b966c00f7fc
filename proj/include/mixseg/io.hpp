#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"
#include "mixseg/em.hpp"
#include "mixseg/metrics.hpp"
#include "mixseg/selection.hpp"
#include "mixseg/simulate.hpp"
#include "mixseg/types.hpp"

// File formats. CSV files are UTF-8 with '.' decimals, '\n' line endings and
// a mandatory header row:
//   dataset       individual_id,time_index,sample_index,value   (1-based ids)
//   coefficients  # mixseg-coefficients level=J p=P source_H=H
//                 individual_id,time_index,c1,...,cP
//   partition     individual_id,cluster
// Breakpoints in JSON are offsets in 0..d: segment l of cluster k covers
// time units T[k][l]+1 .. T[k][l+1] in 1-based numbering.

namespace mixseg::io {

using json = nlohmann::json;

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shortest round-trip decimal representation.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out) throw std::runtime_error("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------- JSON

// -inf (e.g. a degenerate BIC) is written as null.
inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const ModelConfig& c) {
    return {{"K", c.K}, {"L", c.L}, {"min_segment_len", c.min_segment_len}};
}

inline ModelConfig config_from_json(const json& j) {
    ModelConfig c = ModelConfig::make(j.at("L").get<std::vector<int>>(), j.value("min_segment_len", 1));
    if (j.contains("K") && j.at("K").get<int>() != c.K) throw FormatError("config: K does not match length of L");
    return c;
}

inline json to_json(const ModelParams& p) {
    return {{"pi", p.pi}, {"T", p.T}, {"mu", p.mu}, {"sigma", p.sigma}};
}

inline ModelParams params_from_json(const json& j) {
    ModelParams p;
    p.pi = j.at("pi").get<std::vector<double>>();
    p.T = j.at("T").get<std::vector<std::vector<int>>>();
    p.mu = j.at("mu").get<std::vector<std::vector<std::vector<double>>>>();
    p.sigma = j.at("sigma").get<std::vector<std::vector<std::vector<double>>>>();
    return p;
}

inline json to_json(const std::vector<Violation>& vs) {
    json out = json::array();
    for (const auto& v : vs)
        out.push_back({{"assumption", v.tag()}, {"cluster", v.cluster}, {"other", v.other}, {"message", v.message}});
    return out;
}

inline json to_json(const Responsibilities& r) {
    json rows = json::array();
    for (std::size_t i = 0; i < r.n(); ++i) {
        auto row = r.row(i);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return rows;
}

inline Responsibilities responsibilities_from_json(const json& j) {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    const std::size_t K = rows.empty() ? 0 : rows.front().size();
    Responsibilities r(rows.size(), K);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != K) throw FormatError("responsibilities: ragged rows");
        for (std::size_t k = 0; k < K; ++k) r(i, k) = rows[i][k];
    }
    return r;
}

inline json to_json(const FitReport& f) {
    return {{"params", to_json(f.params)},
            {"config", to_json(f.config())},
            {"responsibilities", to_json(f.responsibilities)},
            {"partition", f.partition.z},
            {"loglik_trace", f.loglik_trace},
            {"n_iter", f.n_iter},
            {"converged", f.converged},
            {"best_restart", f.best_restart},
            {"degenerate_restarts", f.degenerate_restarts},
            {"warnings", to_json(f.warnings)}};
}

inline FitReport fit_report_from_json(const json& j) {
    FitReport f;
    f.params = params_from_json(j.at("params"));
    if (j.contains("responsibilities")) f.responsibilities = responsibilities_from_json(j.at("responsibilities"));
    f.partition.z = j.at("partition").get<std::vector<int>>();
    f.loglik_trace = j.value("loglik_trace", std::vector<double>{});
    f.n_iter = j.value("n_iter", 0);
    f.converged = j.value("converged", false);
    f.best_restart = j.value("best_restart", 0);
    f.degenerate_restarts = j.value("degenerate_restarts", 0);
    if (j.contains("config")) f.min_segment_len = j.at("config").value("min_segment_len", 1);
    return f;
}

inline json to_json(const EvalReport& e) {
    return {{"ari", e.ari},
            {"nce", e.nce},
            {"hausdorff", e.hausdorff ? json(*e.hausdorff) : json(nullptr)},
            {"hausdorff_reason", e.hausdorff_reason},
            {"mu_abs_errors", e.mu_abs_errors},
            {"permutation", e.permutation}};
}

inline const char* scenario_name(Scenario s) { return s == Scenario::CosineDGP ? "cosine" : "toy"; }

inline Scenario scenario_from_name(std::string_view s) {
    if (s == "cosine") return Scenario::CosineDGP;
    if (s == "toy") return Scenario::ToyNeutralActive;
    throw FormatError("unknown scenario '" + std::string(s) + "' (expected cosine or toy)");
}

inline TimeGrid grid_from_name(std::string_view s) {
    if (s == "unit") return TimeGrid::WithinUnit;
    if (s == "global") return TimeGrid::Global;
    throw FormatError("unknown time grid '" + std::string(s) + "' (expected unit or global)");
}

inline json to_json(const SimSpec& s) {
    return {{"scenario", scenario_name(s.scenario)},
            {"n", s.n},
            {"d", s.d},
            {"H", s.H},
            {"alpha", s.alpha},
            {"K", s.K},
            {"L", s.L},
            {"pi", s.resolved_pi()},
            {"T", s.resolved_T()},
            {"noise_sd", s.noise_sd},
            {"seed", s.seed},
            {"level", s.level},
            {"grid", s.grid == TimeGrid::WithinUnit ? "unit" : "global"},
            {"neutral_mean", s.neutral_mean},
            {"neutral_var", s.neutral_var},
            {"active_mean", s.active_mean},
            {"active_var", s.active_var}};
}

inline SimSpec sim_spec_from_json(const json& j) {
    const Scenario sc = scenario_from_name(j.value("scenario", std::string("cosine")));
    SimSpec s = sc == Scenario::CosineDGP ? SimSpec{} : SimSpec::toy(0);
    s.n = j.value("n", s.n);
    s.d = j.value("d", s.d);
    s.H = j.value("H", s.H);
    s.alpha = j.value("alpha", s.alpha);
    s.L = j.value("L", s.L);
    s.K = j.value("K", static_cast<int>(s.L.size()));
    s.pi = j.value("pi", s.pi);
    s.T = j.value("T", s.T);
    s.noise_sd = j.value("noise_sd", s.noise_sd);
    s.seed = j.value("seed", s.seed);
    s.level = j.value("level", s.level);
    s.grid = grid_from_name(j.value("grid", std::string("unit")));
    s.neutral_mean = j.value("neutral_mean", s.neutral_mean);
    s.neutral_var = j.value("neutral_var", s.neutral_var);
    s.active_mean = j.value("active_mean", s.active_mean);
    s.active_var = j.value("active_var", s.active_var);
    return s;
}

// Ground truth without the raw curves.
inline json truth_to_json(const SimBundle& b) {
    return {{"spec", to_json(b.spec)},
            {"z_true", b.z_true.z},
            {"params_true", to_json(b.params_true)},
            {"violations", to_json(b.violations)}};
}

struct Truth {
    SimSpec spec;
    Partition z_true;
    ModelParams params_true;
};

inline Truth truth_from_json(const json& j) {
    Truth t;
    t.spec = sim_spec_from_json(j.at("spec"));
    t.z_true.z = j.at("z_true").get<std::vector<int>>();
    t.params_true = params_from_json(j.at("params_true"));
    return t;
}

inline json to_json(const SelectionResult& r) {
    json trace = json::array();
    for (const auto& s : r.search_trace)
        trace.push_back({{"config", to_json(s.config)},
                         {"bic", finite_or_null(s.bic)},
                         {"accepted", s.accepted},
                         {"move", s.move},
                         {"round", s.round}});
    return {{"best_config", to_json(r.best_config)},
            {"bic", finite_or_null(r.bic)},
            {"best_fit", to_json(r.best_fit)},
            {"search_trace", trace},
            {"rounds", r.rounds},
            {"budget_exhausted", r.budget_exhausted}};
}

// ---------------------------------------------------------------- CSV

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <class T>
T parse_number(std::string_view field, std::size_t line_no, std::string_view what) {
    field = trim(field);
    T value{};
    const char* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc() || ptr != end || field.empty())
        throw FormatError("line " + std::to_string(line_no) + ": invalid " + std::string(what) + " '" +
                          std::string(field) + "'");
    return value;
}

// Iterates non-empty lines, giving 1-based line numbers.
template <class Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t line_no = 0, start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        ++line_no;
        auto line = trim(text.substr(start, end - start));
        if (!line.empty()) fn(line, line_no);
        start = end + 1;
    }
}

inline std::size_t checked_index(long long v, std::size_t line_no, std::string_view what) {
    if (v < 1) throw FormatError("line " + std::to_string(line_no) + ": " + std::string(what) + " must be >= 1");
    return static_cast<std::size_t>(v - 1);
}

}  // namespace detail

inline std::string dataset_to_csv(const FunctionalDataset& ds) {
    std::string out = "individual_id,time_index,sample_index,value\n";
    for (std::size_t i = 0; i < ds.n(); ++i)
        for (std::size_t j = 0; j < ds.d(); ++j)
            for (std::size_t h = 0; h < ds.H(); ++h) {
                out += std::to_string(i + 1);
                out += ',';
                out += std::to_string(j + 1);
                out += ',';
                out += std::to_string(h + 1);
                out += ',';
                out += format_double(ds.curves(i, j, h));
                out += '\n';
            }
    return out;
}

inline FunctionalDataset dataset_from_csv(std::string_view text) {
    struct Row {
        std::size_t i, j, h;
        double v;
    };
    std::vector<Row> rows;
    bool header = false;
    std::size_t n = 0, d = 0, H = 0;
    detail::for_each_line(text, [&](std::string_view line, std::size_t no) {
        if (line.front() == '#') return;
        const auto f = detail::split_csv(line);
        if (!header) {
            if (f.size() != 4 || detail::trim(f[0]) != "individual_id" || detail::trim(f[1]) != "time_index" ||
                detail::trim(f[2]) != "sample_index" || detail::trim(f[3]) != "value")
                throw FormatError("line " + std::to_string(no) +
                                  ": expected header individual_id,time_index,sample_index,value");
            header = true;
            return;
        }
        if (f.size() != 4)
            throw FormatError("line " + std::to_string(no) + ": expected 4 fields, got " + std::to_string(f.size()));
        Row r{detail::checked_index(detail::parse_number<long long>(f[0], no, "individual_id"), no, "individual_id"),
              detail::checked_index(detail::parse_number<long long>(f[1], no, "time_index"), no, "time_index"),
              detail::checked_index(detail::parse_number<long long>(f[2], no, "sample_index"), no, "sample_index"),
              detail::parse_number<double>(f[3], no, "value")};
        if (!std::isfinite(r.v)) throw FormatError("line " + std::to_string(no) + ": non-finite value");
        n = std::max(n, r.i + 1);
        d = std::max(d, r.j + 1);
        H = std::max(H, r.h + 1);
        rows.push_back(r);
    });
    if (!header) throw FormatError("dataset CSV: missing header");
    if (rows.size() != n * d * H)
        throw FormatError("dataset CSV: expected " + std::to_string(n * d * H) + " rows for n=" + std::to_string(n) +
                          ", d=" + std::to_string(d) + ", H=" + std::to_string(H) + ", got " +
                          std::to_string(rows.size()));
    FunctionalDataset ds;
    ds.curves = Tensor3<double>(n, d, H, std::numeric_limits<double>::quiet_NaN());
    for (const auto& r : rows) ds.curves(r.i, r.j, r.h) = r.v;
    if (!ds.curves.all_finite()) throw FormatError("dataset CSV: duplicate or missing (individual, time, sample) cells");
    return ds;
}

inline std::string coefficients_to_csv(const CoefficientTensor& y) {
    std::string out = "# mixseg-coefficients level=" + std::to_string(y.level) + " p=" + std::to_string(y.p()) +
                      " source_H=" + std::to_string(y.source_H) + "\n";
    out += "individual_id,time_index";
    for (std::size_t r = 0; r < y.p(); ++r) out += ",c" + std::to_string(r + 1);
    out += '\n';
    for (std::size_t i = 0; i < y.n(); ++i)
        for (std::size_t j = 0; j < y.d(); ++j) {
            out += std::to_string(i + 1);
            out += ',';
            out += std::to_string(j + 1);
            for (std::size_t r = 0; r < y.p(); ++r) {
                out += ',';
                out += format_double(y.y(i, j, r));
            }
            out += '\n';
        }
    return out;
}

inline CoefficientTensor coefficients_from_csv(std::string_view text) {
    std::map<std::string, long long> meta;
    std::size_t p = 0, n = 0, d = 0;
    bool header = false;
    std::vector<std::pair<std::pair<std::size_t, std::size_t>, std::vector<double>>> rows;
    detail::for_each_line(text, [&](std::string_view line, std::size_t no) {
        if (line.front() == '#') {
            std::istringstream ss{std::string(line.substr(1))};
            std::string tok;
            while (ss >> tok) {
                const auto eq = tok.find('=');
                if (eq == std::string::npos) continue;
                meta[tok.substr(0, eq)] = detail::parse_number<long long>(std::string_view(tok).substr(eq + 1), no, tok);
            }
            return;
        }
        const auto f = detail::split_csv(line);
        if (!header) {
            if (f.size() < 3 || detail::trim(f[0]) != "individual_id" || detail::trim(f[1]) != "time_index")
                throw FormatError("line " + std::to_string(no) + ": expected header individual_id,time_index,c1,...");
            p = f.size() - 2;
            header = true;
            return;
        }
        if (f.size() != p + 2)
            throw FormatError("line " + std::to_string(no) + ": expected " + std::to_string(p + 2) + " fields, got " +
                              std::to_string(f.size()));
        const auto i = detail::checked_index(detail::parse_number<long long>(f[0], no, "individual_id"), no, "individual_id");
        const auto j = detail::checked_index(detail::parse_number<long long>(f[1], no, "time_index"), no, "time_index");
        std::vector<double> v(p);
        for (std::size_t r = 0; r < p; ++r) {
            v[r] = detail::parse_number<double>(f[r + 2], no, "coefficient");
            if (!std::isfinite(v[r])) throw FormatError("line " + std::to_string(no) + ": non-finite coefficient");
        }
        n = std::max(n, i + 1);
        d = std::max(d, j + 1);
        rows.push_back({{i, j}, std::move(v)});
    });
    if (!header) throw FormatError("coefficient CSV: missing header");
    if (meta.count("p") && static_cast<std::size_t>(meta["p"]) != p)
        throw FormatError("coefficient CSV: header says p=" + std::to_string(meta["p"]) + " but rows have " +
                          std::to_string(p) + " coefficients");
    if (rows.size() != n * d)
        throw FormatError("coefficient CSV: expected " + std::to_string(n * d) + " rows, got " +
                          std::to_string(rows.size()));
    CoefficientTensor y;
    y.y = Tensor3<double>(n, d, p, std::numeric_limits<double>::quiet_NaN());
    for (const auto& [ij, v] : rows) std::copy(v.begin(), v.end(), y.y.cell(ij.first, ij.second).begin());
    if (!y.y.all_finite()) throw FormatError("coefficient CSV: duplicate or missing (individual, time) cells");
    y.level = static_cast<int>(meta.count("level") ? meta["level"] : 0);
    y.source_H = static_cast<int>(meta.count("source_H") ? meta["source_H"] : static_cast<long long>(p));
    return y;
}

inline std::string partition_to_csv(const Partition& z) {
    std::string out = "individual_id,cluster\n";
    for (std::size_t i = 0; i < z.size(); ++i) out += std::to_string(i + 1) + "," + std::to_string(z.z[i]) + "\n";
    return out;
}

}  // namespace mixseg::io

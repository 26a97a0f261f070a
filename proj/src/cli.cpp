#include "ergolab/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "ergolab/decay.hpp"
#include "ergolab/error.hpp"
#include "ergolab/function_space.hpp"
#include "ergolab/gordin.hpp"
#include "ergolab/maps.hpp"
#include "ergolab/montecarlo.hpp"
#include "ergolab/observable.hpp"
#include "ergolab/stats.hpp"
#include "ergolab/transfer.hpp"

namespace ergolab {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kSchema = "ergolab/1";

struct Settings {
    std::string command;
    std::string map;
    std::string obs = "cos1";
    std::size_t cells = 4096;
    std::size_t n = 4096;
    std::size_t samples = 100000;
    std::size_t burnin = 10000;
    std::uint64_t seed = 0;
    bool has_seed = false;
    unsigned threads = 1;
    std::string out = ".";
    std::string mode;  // empty: map default
    std::size_t nmax = 256;
    int kmax = 12;
    std::size_t m = 64;
    std::size_t lag = 256;
    double tol = 1e-12;
    double cob_tol = 1e-3;
};

// Thrown for failed verdicts after every report has been written.
struct VerificationFailure {
    std::string what;
};

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidInput:
        case ErrorKind::Configuration:
        case ErrorKind::Parameter:
        case ErrorKind::Io:
            return kExitConfig;
        case ErrorKind::Convergence:
        case ErrorKind::Truncation:
            return kExitConvergence;
        default:
            return kExitAnalysis;
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, "cannot write " + path.string());
    f << text;
    if (!f) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

template <typename Writer>
void write_stream(const fs::path& path, Writer&& writer) {
    std::ostringstream s;
    s << std::setprecision(17);
    writer(s);
    write_text(path, s.str());
}

void write_report(const Settings& st, const std::string& stem, json report) {
    report["schema"] = kSchema;
    write_text(fs::path(st.out) / (stem + ".json"), report.dump(2) + "\n");
}

// Wall-clock data lives here so the reports themselves stay reproducible.
void write_meta(const Settings& st, const std::string& stem, const std::vector<std::string>& argv, double seconds) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    std::ostringstream stamp;
    stamp << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ");
    json meta{{"schema", kSchema},
              {"report", stem + ".json"},
              {"timestamp", stamp.str()},
              {"elapsed_seconds", seconds},
              {"threads", st.threads},
              {"argv", argv}};
    write_text(fs::path(st.out) / (stem + ".meta.json"), meta.dump(2) + "\n");
}

json config_json(const Settings& st, bool stochastic) {
    json c{{"map", st.map}, {"obs", st.obs}, {"cells", st.cells}};
    if (stochastic) {
        c["n"] = st.n;
        c["samples"] = st.samples;
        c["burnin"] = st.burnin;
        c["seed"] = st.seed;
    }
    return c;
}

// Measure used by the branch-sum operator: closed form when the map has
// one, otherwise the Ulam estimate.
struct Density {
    std::shared_ptr<const MeasureDensity> measure;
    std::shared_ptr<const MeasureDensity> fine;
    json meta;
};

Density analysis_density(const IntervalMap& map, const Settings& st) {
    if (map.law) {
        auto m = MeasureDensity::from_cdf(map.name + "/closed-form", default_grid(map, st.cells), map.law->cdf,
                                          map.law->pdf);
        return {m, m, json{{"backend", "closed-form"}, {"cells", st.cells}}};
    }
    const auto r = invariant_density(map, st.cells, st.tol);
    json meta{{"backend", "ulam"},
              {"cells", st.cells},
              {"fine_cells", r.fine->grid().size()},
              {"iterations", r.iterations},
              {"last_change", r.last_change}};
    return {r.density, r.fine, meta};
}

struct Setup {
    IntervalMap map;
    Observable raw;
    Observable mc;  // raw minus its fine-measure mean, for orbit sums
    Density density;
    double mean;
    GridFunction h;
};

Setup prepare(const Settings& st) {
    if (st.map.empty()) throw Error(ErrorKind::Configuration, "--map is required");
    auto map = builtin_map(st.map);
    auto raw = parse_observable(st.obs, map);
    auto density = analysis_density(map, st);
    const double mean = observable_mean(raw, *density.fine);
    // Means below this are quadrature noise of an already centered observable.
    const bool shift = std::abs(mean) > 1e-12;
    if (shift) {
        std::cerr << "notice: observable '" << raw.name << "' centered by subtracting its mean " << mean << "\n";
    }
    auto mc = shift ? raw.shifted(-mean) : raw;
    auto h = centered(GridFunction::sample(density.measure, raw.fn));
    return Setup{std::move(map), std::move(raw), std::move(mc), std::move(density), shift ? mean : 0.0, std::move(h)};
}

EnsembleConfig ensemble_config(const Settings& st, const IntervalMap& map) {
    EnsembleConfig c;
    c.samples = st.samples;
    c.length = st.n;
    c.burn_in = st.burnin;
    c.seed = st.seed;
    c.mode = st.mode.empty() ? default_mode(map) : parse_sampler_mode(st.mode);
    c.threads = st.threads;
    validate(c, map);
    return c;
}

void require_seed(const Settings& st) {
    if (!st.has_seed) throw Error(ErrorKind::Configuration, "--seed is mandatory for " + st.command);
}

json observable_json(const Setup& s) {
    return json{{"name", s.raw.name}, {"mean_subtracted", s.mean}, {"l2", lp_norm(s.h, Norm::L2)}};
}

// ---------------------------------------------------------------- density

int cmd_density(const Settings& st, std::string& stage) {
    stage = "density";
    if (st.map.empty()) throw Error(ErrorKind::Configuration, "--map is required");
    const auto map = builtin_map(st.map);
    const auto r = invariant_density(map, st.cells, st.tol);
    const auto& d = *r.density;
    const auto nodes = d.grid().nodes();
    const auto edges = d.grid().edges();
    const auto values = d.values();

    json report{{"command", "density"},
                {"config", config_json(st, false)},
                {"map", map.name},
                {"backend", "ulam"},
                {"grid", to_string(d.grid().kind())},
                {"cells", st.cells},
                {"fine_cells", r.fine->grid().size()},
                {"iterations", r.iterations},
                {"last_change", r.last_change},
                {"total_mass", d.total_mass()}};

    const std::size_t tail_cells = std::min<std::size_t>(8, d.grid().size() / 2);
    try {
        const auto tail = fit_left_power_law(d, tail_cells);
        report["local_exponent"] = json_number(tail.exponent);
    } catch (const Error& e) {
        report["local_exponent"] = nullptr;
        report["diagnostics"].push_back(e.what());
    }

    std::vector<double> closed(values.size(), std::nan(""));
    if (map.law) {
        // Compare cell averages; the interior leaves out 1% of the domain at each end.
        const double span = map.upper - map.lower;
        double worst = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double w = edges[i + 1] - edges[i];
            closed[i] = (map.law->cdf(edges[i + 1]) - map.law->cdf(edges[i])) / w;
            const double u = (nodes[i] - map.lower) / span;
            if (u < 0.01 || u > 0.99) continue;
            worst = std::max(worst, std::abs(values[i] - closed[i]) / closed[i]);
        }
        report["closed_form_max_rel_error"] = worst;
    }

    fs::create_directories(st.out);
    write_stream(fs::path(st.out) / "density.csv", [&](std::ostream& o) { write_csv(o, d); });
    write_stream(fs::path(st.out) / "density.dat", [&](std::ostream& o) {
        o << "# node density closed_form\n";
        for (std::size_t i = 0; i < values.size(); ++i) {
            o << nodes[i] << ' ' << values[i] << ' ';
            if (std::isnan(closed[i])) {
                o << "NaN\n";
            } else {
                o << closed[i] << '\n';
            }
        }
    });
    write_report(st, "density", report);
    return kExitPass;
}

// ---------------------------------------------------------------- decay

struct DecayStage {
    DecayReport primary;
    std::optional<DecayReport> ulam;
    json disagreement;
};

DecayStage run_decay(const Setup& s, const TransferOperator& op, const Settings& st) {
    DecayOptions opts;
    opts.n_max = st.nmax;
    DecayStage out{classify_conditions(s.map.name, s.raw.name, op, s.h, opts), std::nullopt, nullptr};
    if (s.map.law) return out;

    // Numerical density: cross-check against a plain Ulam operator with its own measure.
    InvariantDensityOptions plain;
    plain.oversample = 1;
    const auto r = invariant_density(s.map, st.cells, st.tol, plain);
    const auto h_u = centered(GridFunction::sample(r.density, s.raw.fn));
    const auto op_u = TransferOperator::ulam(ulam_matrix(s.map, r.density->grid_ptr()), r.density);
    out.ulam = classify_conditions(s.map.name, s.raw.name, op_u, h_u, opts);

    const auto& a = out.primary.l2;
    const auto& b = out.ulam->l2;
    const std::size_t hi = std::min({opts.fit_hi, a.size(), b.size()});
    double worst = 0.0;
    for (std::size_t n = opts.fit_lo; n <= hi; ++n) {
        if (a[n - 1] > 0.0) worst = std::max(worst, std::abs(a[n - 1] - b[n - 1]) / a[n - 1]);
    }
    out.disagreement = json{{"max_relative_l2", worst}, {"flagged", worst > 0.1}, {"threshold", 0.1}};
    return out;
}

json decay_json(const DecayStage& d) {
    json j = to_json(d.primary);
    if (d.ulam) {
        j["ulam"] = to_json(*d.ulam);
        j["backend_disagreement"] = d.disagreement;
    }
    return j;
}

bool fit_failed(const DecayReport& r) {
    return std::any_of(r.diagnostics.begin(), r.diagnostics.end(), [](const std::string& m) {
        return m.rfind("decay fit:", 0) == 0 || m.rfind("Cesaro fit:", 0) == 0;
    });
}

int cmd_decay(const Settings& st, std::string& stage) {
    stage = "density";
    const auto s = prepare(st);
    stage = "decay";
    const auto op = TransferOperator::branch_sum(s.map, s.density.measure);
    const auto d = run_decay(s, op, st);
    json report = decay_json(d);
    report["command"] = "decay";
    report["config"] = config_json(st, false);
    report["density"] = s.density.meta;
    report["mean_subtracted"] = s.mean;

    fs::create_directories(st.out);
    write_stream(fs::path(st.out) / "decay.csv", [&](std::ostream& o) { write_decay_csv(o, d.primary); });
    write_stream(fs::path(st.out) / "decay.dat", [&](std::ostream& o) {
        o << "# n l1 l2 cesaro\n";
        for (std::size_t i = 0; i < d.primary.l1.size(); ++i) {
            o << i + 1 << ' ' << d.primary.l1[i] << ' ' << d.primary.l2[i] << ' ' << d.primary.cesaro[i] << '\n';
        }
    });
    if (d.ulam) {
        write_stream(fs::path(st.out) / "decay_ulam.csv", [&](std::ostream& o) { write_decay_csv(o, *d.ulam); });
    }
    write_report(st, "decay", report);
    if (fit_failed(d.primary) || (d.ulam && fit_failed(*d.ulam))) {
        std::cerr << "ergolab: decay: rate fit failed, see diagnostics in decay.json\n";
        return kExitAnalysis;
    }
    return kExitPass;
}

// ---------------------------------------------------------------- gordin

void write_gordin_files(const Settings& st, const GordinDecomposition& g) {
    write_stream(fs::path(st.out) / "gordin.csv", [&](std::ostream& o) {
        o << "k,delta,terms,f_norm,resolvent_residual,martingale_residual,cauchy_increment,cauchy_bound\n";
        for (std::size_t k = 0; k < g.schedule.size(); ++k) {
            o << k << ',' << g.schedule[k] << ',' << g.terms[k] << ',' << g.f_norms[k] << ','
              << g.resolvent_residuals[k] << ',' << g.martingale_residuals[k] << ',';
            if (k >= 1 && k - 1 < g.cauchy.size()) {
                o << g.cauchy[k - 1].increment << ',' << g.cauchy[k - 1].bound << '\n';
            } else {
                o << ",\n";
            }
        }
    });
    write_stream(fs::path(st.out) / "h_tilde.csv", [&](std::ostream& o) { write_csv(o, g.h_tilde); });
}

int cmd_gordin(const Settings& st, std::string& stage) {
    stage = "density";
    const auto s = prepare(st);
    stage = "gordin";
    const auto op = TransferOperator::branch_sum(s.map, s.density.measure);
    GordinOptions go;
    go.k_max = st.kmax;
    const auto g = gordin_decompose(s.map, op, s.h, go);
    const auto cob = coboundary_detect(s.map, op, s.h, st.nmax, st.cob_tol);
    json report = to_json(g);
    report["command"] = "gordin";
    report["config"] = config_json(st, false);
    report["observable"] = observable_json(s);
    report["coboundary"] = to_json(cob);
    fs::create_directories(st.out);
    write_gordin_files(st, g);
    write_report(st, "gordin", report);
    return kExitPass;
}

// ---------------------------------------------------------------- sigma and limit tests

struct LimitStage {
    GreenKubo gk;
    double h_l2 = 0.0;
    double sigma = 0.0;  // used for the tests; 0 on the degenerate branch
    bool degenerate = false;
    std::optional<CoboundaryResult> coboundary;
    std::vector<SigmaPoint> growth;
    EnsembleResult ensemble;
    std::vector<PathSample> paths;
    LimitTestReport report;
    json notes = json::array();
};

std::vector<std::size_t> growth_checkpoints(std::size_t n) {
    std::vector<std::size_t> c;
    for (std::size_t d : {16u, 4u, 1u}) {
        if (n / d >= 1 && (c.empty() || n / d > c.back())) c.push_back(n / d);
    }
    return c;
}

/// Green-Kubo sigma, one ensemble, then the requested tests. A Green-Kubo
/// sigma below 0.05 ||h||_2 is only treated as zero when coboundary_detect
/// confirms it.
LimitStage run_limits(const Setup& s, const TransferOperator& op, const Settings& st, bool clt, bool fclt,
                      std::optional<double> sigma_mart, std::string& stage) {
    LimitStage L;
    stage = "sigma";
    const auto config = ensemble_config(st, s.map);
    L.gk = sigma_green_kubo(op, s.h, st.lag);
    L.h_l2 = lp_norm(s.h, Norm::L2);
    const double sigma_gk = std::sqrt(std::max(0.0, L.gk.sigma2));
    L.sigma = sigma_gk;
    bool unresolved = false;
    if (sigma_gk < 0.05 * L.h_l2) {
        L.coboundary = coboundary_detect(s.map, op, s.h, st.nmax, st.cob_tol);
        if (L.coboundary->verdict == Verdict::Coboundary) {
            L.degenerate = true;
            L.sigma = 0.0;
            L.notes.push_back("coboundary detected: sigma = 0, CLT limit is the point mass at 0, FCLT skipped");
        } else {
            unresolved = true;
            L.notes.push_back("sigma below 0.05 ||h||_2 but coboundary not confirmed");
        }
    }

    EnsembleRequest request;
    request.checkpoints = growth_checkpoints(st.n);
    const bool paths = fclt && !L.degenerate && !unresolved;
    if (paths) {
        request.functionals = true;
        request.path_points = st.m;
    }
    L.ensemble = run_ensemble(s.map, s.mc, config, request);
    for (std::size_t c = 0; c < L.ensemble.checkpoints.size(); ++c) {
        double sq = 0.0;
        for (double v : L.ensemble.sums[c]) sq += v * v;
        const double n = static_cast<double>(L.ensemble.checkpoints[c]);
        L.growth.push_back({L.ensemble.checkpoints[c], std::sqrt(sq / static_cast<double>(L.ensemble.sums[c].size()) / n)});
    }
    const double sigma_vg = L.growth.back().sigma;

    L.report.sigma_used = "green_kubo";
    L.report.sigmas.push_back({"green_kubo", sigma_gk});
    L.report.sigmas.push_back({"variance_growth", sigma_vg});
    if (sigma_mart) L.report.sigmas.push_back({"martingale_norm", *sigma_mart});

    if (unresolved) {
        L.report.tests.push_back({"sigma_positive", sigma_gk, 0.05 * L.h_l2, false,
                                  "possible coboundary: sigma estimate small and coboundary_detect not conclusive"});
    } else if (!L.degenerate) {
        const double rel = std::abs(sigma_gk - sigma_vg) / sigma_gk;
        L.report.tests.push_back(
            {"sigma_agreement", rel, 0.05, rel < 0.05, "relative gap between Green-Kubo and variance-growth sigma"});
    }
    if (clt && !unresolved) {
        stage = "clt";
        L.report.tests.push_back(clt_test(L.ensemble.sums.back(), st.n, L.sigma, L.h_l2));
    }
    if (paths) {
        stage = "fclt";
        L.paths = to_paths(L.ensemble, L.sigma, st.n);
        for (auto& t : fclt_test(L.paths, st.n)) L.report.tests.push_back(std::move(t));
    }
    return L;
}

json sigma_json(const LimitStage& L) {
    json growth = json::array();
    for (const auto& p : L.growth) growth.push_back({{"n", p.n}, {"sigma", json_number(p.sigma)}});
    json j{{"green_kubo", to_json(L.gk)},
           {"variance_growth", growth},
           {"h_l2", L.h_l2},
           {"degenerate", L.degenerate},
           {"dropped_samples", L.ensemble.dropped}};
    if (L.coboundary) j["coboundary"] = to_json(*L.coboundary);
    return j;
}

void write_sample_files(const Settings& st, const LimitStage& L) {
    write_stream(fs::path(st.out) / "birkhoff.csv",
                 [&](std::ostream& o) { write_birkhoff_csv(o, L.ensemble.index, L.ensemble.sums.back()); });
    if (!L.paths.empty()) {
        // A bounded subset keeps the file usable for plotting.
        const std::size_t keep = std::min<std::size_t>(L.paths.size(), 1000);
        const std::vector<PathSample> head(L.paths.begin(), L.paths.begin() + static_cast<std::ptrdiff_t>(keep));
        write_stream(fs::path(st.out) / "paths.csv", [&](std::ostream& o) { write_paths_csv(o, head); });
    }
    write_stream(fs::path(st.out) / "sigma.dat", [&](std::ostream& o) {
        o << "# lag green_kubo_partial_sum\n";
        for (std::size_t l = 0; l < L.gk.partial.size(); ++l) o << l << ' ' << L.gk.partial[l] << '\n';
    });
}

// Names the stage owning the first failed test and throws.
[[noreturn]] void fail_verification(const LimitTestReport& report, std::string& stage) {
    std::string failed;
    for (const auto& t : report.tests) {
        if (t.pass) continue;
        if (failed.empty()) stage = t.name.substr(0, t.name.find('_'));
        failed += (failed.empty() ? "" : ", ") + t.name;
    }
    throw VerificationFailure{"failed tests: " + failed};
}

int limit_command(const Settings& st, std::string& stage, bool clt, bool fclt) {
    require_seed(st);
    stage = "density";
    const auto s = prepare(st);
    const auto op = TransferOperator::branch_sum(s.map, s.density.measure);
    const auto L = run_limits(s, op, st, clt, fclt, std::nullopt, stage);
    json report{{"command", st.command},
                {"config", config_json(st, true)},
                {"observable", observable_json(s)},
                {"sigma", sigma_json(L)},
                {"notes", L.notes}};
    if (clt || fclt) report["limit_tests"] = to_json(L.report);
    fs::create_directories(st.out);
    write_sample_files(st, L);
    write_report(st, st.command, report);
    if ((clt || fclt) && !L.report.all_pass()) fail_verification(L.report, stage);
    return kExitPass;
}

// ---------------------------------------------------------------- verify

int cmd_verify(const Settings& st, std::string& stage) {
    require_seed(st);
    stage = "density";
    const auto s = prepare(st);
    const auto op = TransferOperator::branch_sum(s.map, s.density.measure);

    stage = "decay";
    const auto d = run_decay(s, op, st);

    stage = "gordin";
    GordinOptions go;
    go.k_max = st.kmax;
    const auto g = gordin_decompose(s.map, op, s.h, go);
    const auto cob = coboundary_detect(s.map, op, s.h, st.nmax, st.cob_tol);

    const auto L = run_limits(s, op, st, true, true, g.sigma_mart, stage);

    stage = "report";
    json config = config_json(st, true);
    config["m"] = st.m;
    config["mode"] = st.mode.empty() ? to_string(default_mode(s.map)) : st.mode;
    json report{{"command", "verify"},
                {"config", config},
                {"density", s.density.meta},
                {"observable", observable_json(s)},
                {"decay", decay_json(d)},
                {"gordin", to_json(g)},
                {"coboundary", to_json(cob)},
                {"sigma", sigma_json(L)},
                {"limit_tests", to_json(L.report)},
                {"notes", L.notes},
                {"verdict", L.report.all_pass() ? "pass" : "fail"}};
    fs::create_directories(st.out);
    write_stream(fs::path(st.out) / "decay.csv", [&](std::ostream& o) { write_decay_csv(o, d.primary); });
    write_gordin_files(st, g);
    write_sample_files(st, L);
    write_report(st, "verify", report);
    if (!L.report.all_pass()) fail_verification(L.report, stage);
    return kExitPass;
}

// ---------------------------------------------------------------- report

int cmd_report(const Settings& st, std::string& stage) {
    stage = "report";
    if (!fs::is_directory(st.out)) throw Error(ErrorKind::Io, "no report directory " + st.out);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(st.out)) {
        const auto name = e.path().filename().string();
        if (e.path().extension() == ".json" && name.find(".meta.") == std::string::npos) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error(ErrorKind::Io, "no JSON reports in " + st.out);
    for (const auto& p : files) {
        std::ifstream f(p);
        json j;
        try {
            j = json::parse(f);
        } catch (const json::exception& e) {
            throw Error(ErrorKind::Io, p.string() + ": " + e.what());
        }
        std::cout << p.filename().string() << ": " << j.value("command", std::string("?"));
        if (j.contains("config")) std::cout << "  map=" << j["config"].value("map", std::string("?"));
        if (j.contains("config") && j["config"].contains("obs")) std::cout << " obs=" << j["config"]["obs"].get<std::string>();
        std::cout << '\n';
        if (j.contains("flags")) {
            for (const auto& [k, v] : j["flags"].items()) std::cout << "  flag " << k << ": " << v.get<std::string>() << '\n';
        }
        const json* tests = nullptr;
        if (j.contains("limit_tests")) tests = &j["limit_tests"]["tests"];
        if (tests) {
            for (const auto& t : *tests) {
                std::cout << "  " << t["name"].get<std::string>() << ": " << t["statistic"] << " vs " << t["threshold"]
                          << " -> " << t["verdict"].get<std::string>() << '\n';
            }
        }
        if (j.contains("sigma_mart")) std::cout << "  sigma_mart: " << j["sigma_mart"] << '\n';
        if (j.contains("verdict")) std::cout << "  verdict: " << j["verdict"].get<std::string>() << '\n';
    }
    return kExitPass;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    Settings st;
    const unsigned hw = std::thread::hardware_concurrency();
    st.threads = hw == 0 ? 1 : hw;

    CLI::App app{"ergolab: transfer operators, martingale approximation and limit theorems for interval maps"};
    app.fallthrough();
    app.require_subcommand(1);
    app.set_config("--config", "", "flat key=value file; flags on the command line override it");
    app.add_option("--map", st.map, "lsv:G, mp:G, doubling, chebyshev:N");
    app.add_option("--obs", st.obs, "builtin (y, cos1, cos2, lip1, holder1, coboundary:NAME) or expression in y")
        ->capture_default_str();
    app.add_option("--cells", st.cells, "grid cells N")->capture_default_str()->check(CLI::Range(std::size_t{8}, std::size_t{1} << 24));
    app.add_option("--n", st.n, "Birkhoff length")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--samples", st.samples, "ensemble size M")->capture_default_str();
    app.add_option("--burnin", st.burnin, "burn-in steps")->capture_default_str();
    auto* seed = app.add_option("--seed", st.seed, "master seed (mandatory for stochastic commands)");
    app.add_option("--threads", st.threads, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--out", st.out, "output directory")->capture_default_str();
    app.add_option("--mode", st.mode, "sampler: inverse-cdf, burn-in-orbit, bit-queue");
    app.add_option("--nmax", st.nmax, "transfer iterates for decay and coboundary tests")->capture_default_str();
    app.add_option("--kmax", st.kmax, "last dyadic resolvent parameter 2^-k")->capture_default_str();
    app.add_option("--m", st.m, "stored path points")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--lag", st.lag, "Green-Kubo lag cap")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--tol", st.tol, "invariant density L1 tolerance")->capture_default_str();
    app.add_option("--cob-tol", st.cob_tol, "coboundary residual tolerance")->capture_default_str();

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"density", "invariant density by Ulam power iteration"},
        {"decay", "transfer-operator decay sequences and condition flags"},
        {"gordin", "resolvent martingale approximation and coboundary check"},
        {"sigma", "Green-Kubo and variance-growth sigma"},
        {"clt", "KS test of S_n / sqrt(n) against the normal law"},
        {"fclt", "KS tests of path functionals against Brownian laws"},
        {"verify", "full pipeline with a single limit-test report"},
        {"report", "summarize the JSON reports in --out"},
    };
    for (const auto& [name, help] : commands) {
        app.add_subcommand(name, help)->fallthrough();
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitPass : kExitConfig;
    }
    st.command = app.get_subcommands().front()->get_name();
    st.has_seed = seed->count() > 0;

    std::string stage = "setup";
    const auto t0 = std::chrono::steady_clock::now();
    int code = kExitPass;
    try {
        if (st.command == "density") {
            code = cmd_density(st, stage);
        } else if (st.command == "decay") {
            code = cmd_decay(st, stage);
        } else if (st.command == "gordin") {
            code = cmd_gordin(st, stage);
        } else if (st.command == "sigma") {
            code = limit_command(st, stage, false, false);
        } else if (st.command == "clt") {
            code = limit_command(st, stage, true, false);
        } else if (st.command == "fclt") {
            code = limit_command(st, stage, false, true);
        } else if (st.command == "verify") {
            code = cmd_verify(st, stage);
        } else {
            return cmd_report(st, stage);
        }
    } catch (const Error& e) {
        std::cerr << "ergolab: stage " << stage << " failed: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const VerificationFailure& f) {
        std::cerr << "ergolab: stage " << stage << " verification failed: " << f.what << '\n';
        code = kExitVerification;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "ergolab: stage " << stage << " failed: " << e.what() << '\n';
        return kExitConfig;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    try {
        write_meta(st, st.command, args, seconds);
    } catch (const Error& e) {
        std::cerr << "ergolab: could not write metadata: " << e.what() << '\n';
    }
    return code;
}

int run_cli(int argc, const char* const* argv) {
    return run_cli(std::vector<std::string>(argv, argv + argc));
}

}  // namespace ergolab

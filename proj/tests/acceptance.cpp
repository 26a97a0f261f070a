// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance PATH_TO_ERGOLAB WORK_DIR

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <array>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>
#include <optional>
#include <sstream>
#include <thread>

#include "ergolab/decay.hpp"
#include "ergolab/error.hpp"
#include "ergolab/gordin.hpp"
#include "ergolab/maps.hpp"
#include "ergolab/montecarlo.hpp"
#include "ergolab/observable.hpp"
#include "ergolab/stats.hpp"
#include "ergolab/transfer.hpp"

using namespace ergolab;
namespace fs = std::filesystem;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

// Largest ||f||_2 - sqrt(||f||_inf ||f||_1) over every iterate seen so far.
double worst_interpolation_gap = -INFINITY;

void track(const GridFunction& f) {
    const double gap = lp_norm(f, Norm::L2) - std::sqrt(lp_norm(f, Norm::Linf) * lp_norm(f, Norm::L1));
    worst_interpolation_gap = std::max(worst_interpolation_gap, gap);
}

void track(const DecayReport& r) { worst_interpolation_gap = std::max(worst_interpolation_gap, r.interpolation_gap); }

void criterion(int id, const std::string& title, double budget_seconds, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream line;
    line << "criterion " << std::setw(2) << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << title << "  ["
         << o.detail << "]  " << std::fixed << std::setprecision(1) << s << " s";
    if (budget_seconds > 0 && s > budget_seconds) line << " (over the " << budget_seconds << " s budget)";
    std::cout << line.str() << std::endl;
    if (!o.pass) ++failures;
}

std::shared_ptr<const MeasureDensity> closed(const IntervalMap& map, std::size_t cells) {
    return MeasureDensity::from_cdf(map.name, default_grid(map, cells), map.law->cdf, map.law->pdf);
}

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(4) << v;
    return s.str();
}

double sample_std(const std::vector<double>& v, double scale) {
    double mean = 0.0;
    for (double x : v) mean += x * scale;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x * scale - mean) * (x * scale - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

int run_cli(const std::string& exe, const std::string& args) {
    const std::string cmd = exe + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::cerr << "usage: acceptance ERGOLAB_BINARY WORK_DIR\n";
        return 2;
    }
    const std::string exe = argv[1];
    const fs::path work = argv[2];
    fs::create_directories(work);
    const unsigned threads = std::max(1u, std::thread::hardware_concurrency());

    criterion(1, "P y = 0 for chebyshev(2)", 1.0, [] {
        const auto map = builtin_map("chebyshev:2");
        const auto m = closed(map, 4096);
        const auto h = GridFunction::sample(m, [](double y) { return y; });
        const auto ph = transfer_apply(map, h);
        track(ph);
        const double norm = lp_norm(ph, Norm::L2);
        return Outcome{norm < 1e-6, "||P h||_2 = " + fmt(norm)};
    });

    criterion(2, "operator duality at N = 4096 and refinement to 16384", 30.0, [] {
        std::mt19937_64 rng(20240601);
        std::uniform_real_distribution<double> coef(-1.0, 1.0);
        auto random_smooth = [&] {
            std::array<double, 7> c{};
            for (double& x : c) x = coef(rng);
            return [c](double y) {
                double v = c[0];
                for (int k = 1; k <= 3; ++k) v += c[2 * k - 1] * std::cos(k * 2.0 * y) + c[2 * k] * std::sin(k * 1.5 * y);
                return v;
            };
        };
        double worst = 0.0;
        double worst_ratio = INFINITY;
        int below_floor = 0;
        bool ok = true;
        for (const char* spec : {"doubling", "chebyshev:2"}) {
            const auto map = builtin_map(spec);
            const auto m4 = closed(map, 4096);
            const auto m16 = closed(map, 16384);
            const auto op4 = TransferOperator::branch_sum(map, m4);
            const auto op16 = TransferOperator::branch_sum(map, m16);
            for (int pair = 0; pair < 10; ++pair) {
                const auto f = random_smooth();
                const auto g = random_smooth();
                const auto f4 = GridFunction::sample(m4, f);
                const auto g4 = GridFunction::sample(m4, g);
                const auto f16 = GridFunction::sample(m16, f);
                const auto g16 = GridFunction::sample(m16, g);
                for (const auto& p : transfer_power(op4, f4, 3)) track(p);
                for (std::size_t n = 1; n <= 3; ++n) {
                    const double r4 = duality_residual(map, op4, f4, g4, n);
                    const double r16 = duality_residual(map, op16, f16, g16, n);
                    worst = std::max(worst, r4);
                    if (r4 >= 5e-4) ok = false;
                    // Residuals already at rounding level cannot shrink further.
                    if (r4 < 1e-12) {
                        ++below_floor;
                        continue;
                    }
                    worst_ratio = std::min(worst_ratio, r4 / std::max(r16, 1e-300));
                    if (r16 * 3.0 > r4) ok = false;
                }
            }
        }
        std::string detail = "max residual " + fmt(worst) + ", min shrink " + fmt(worst_ratio) + "x";
        if (below_floor > 0) detail += ", " + std::to_string(below_floor) + " at rounding level";
        return Outcome{ok, detail};
    });

    // Criteria 3 to 5 share one doubling ensemble.
    const auto doubling = builtin_map("doubling");
    const Observable cos1{"cos1", [](double y) { return std::cos(kTwoPi * y); }};
    std::optional<EnsembleResult> shared;
    EnsembleConfig dc;
    dc.samples = 100000;
    dc.length = 4096;
    dc.seed = 7;
    dc.mode = SamplerMode::BitQueue;
    dc.threads = threads;

    criterion(3, "std of S_n / sqrt(n) in [0.693, 0.721] at n = 16, 256, 4096", 120.0, [&] {
        EnsembleRequest req;
        req.checkpoints = {16, 256, 4096};
        req.functionals = true;
        req.path_points = 64;
        shared = run_ensemble(doubling, cos1, dc, req);
        bool ok = true;
        std::string detail;
        for (std::size_t c = 0; c < 3; ++c) {
            const double s = sample_std(shared->sums[c], 1.0 / std::sqrt(static_cast<double>(shared->checkpoints[c])));
            ok = ok && s >= 0.693 && s <= 0.721;
            detail += (c ? ", " : "") + std::string("n=") + std::to_string(shared->checkpoints[c]) + ": " + fmt(s);
        }
        return Outcome{ok, detail};
    });

    criterion(4, "CLT: KS against normal(sqrt 0.5) < 0.02", 0.0, [&] {
        if (!shared) return Outcome{false, "ensemble unavailable"};
        std::vector<double> z(shared->sums[2]);
        for (double& v : z) v /= std::sqrt(4096.0);
        const double ks = ks_statistic(z, ReferenceLaw::normal(std::sqrt(0.5))).statistic;
        return Outcome{ks < 0.02, "KS " + fmt(ks)};
    });

    criterion(5, "FCLT functionals at m = 64", 180.0, [&] {
        if (!shared) return Outcome{false, "ensemble unavailable"};
        const auto paths = to_paths(*shared, std::sqrt(0.5), 4096);
        const auto t = fclt_test(paths, 4096);
        const bool ok = t[0].statistic < 0.02 && t[1].statistic < 0.03 && t[2].statistic < 0.04;
        return Outcome{ok, "terminal " + fmt(t[0].statistic) + ", sup " + fmt(t[1].statistic) + ", occupation " +
                               fmt(t[2].statistic)};
    });
    shared.reset();

    criterion(6, "resolvent identity, martingale residual and Cauchy bounds on lsv(0.25)", 120.0, [] {
        const auto map = builtin_map("lsv:0.25");
        const auto d = invariant_density(map, 4096, 1e-12);
        const auto op = TransferOperator::branch_sum(map, d.density);
        const auto h = centered(GridFunction::sample(d.density, parse_observable("lip1", map).fn));
        GordinOptions o;
        o.k_max = 12;
        const auto g = gordin_decompose(map, op, h, o);
        track(g.h_tilde);
        track(g.f_eps);
        const double worst_res = *std::max_element(g.resolvent_residuals.begin(), g.resolvent_residuals.end());
        double worst_slack = INFINITY;
        for (const auto& p : g.cauchy) worst_slack = std::min(worst_slack, p.slack);
        const double mart = g.martingale_residuals.back();
        const bool ok = worst_res < 2 * g.tail_tol && mart < 5e-3 && worst_slack >= -1e-8 && g.cauchy.size() == 12;
        return Outcome{ok, "max resolvent residual " + fmt(worst_res) + " vs 2 tail_tol " + fmt(2 * g.tail_tol) +
                               ", ||P h_eps|| " + fmt(mart) + ", min slack " + fmt(worst_slack)};
    });

    criterion(7, "coboundary detection on doubling", 60.0, [] {
        const auto map = builtin_map("doubling");
        const auto m = closed(map, 4096);
        const auto op = TransferOperator::branch_sum(map, m);
        const auto h = centered(GridFunction::sample(m, parse_observable("coboundary:cos1", map).fn));
        const auto c = coboundary_detect(map, op, h);
        const auto gk = sigma_green_kubo(op, h);
        const auto r = classify_conditions(map.name, "coboundary:cos1", op, h);
        track(r);
        const double bound = 2.0 * std::sqrt(0.5) + 1e-3;
        const double worst = *std::max_element(c.cesaro.begin(), c.cesaro.end());
        const bool ok = c.verdict == Verdict::Coboundary && c.residual < 1e-3 && std::abs(gk.sigma2) <= 1e-3 &&
                        worst <= bound;
        return Outcome{ok, std::string("verdict ") + to_string(c.verdict) + ", residual " + fmt(c.residual) +
                               ", GK sigma^2 " + fmt(gk.sigma2) + ", max Cesaro " + fmt(worst) + " vs " + fmt(bound)};
    });

    criterion(8, "sigma cross-validation and limit tests on lsv(0.25), n = 2^14, M = 5e4", 600.0, [&] {
        const auto map = builtin_map("lsv:0.25");
        const auto d = invariant_density(map, 4096, 1e-12);
        const auto op = TransferOperator::branch_sum(map, d.density);
        const auto holder = parse_observable("holder1", map);
        const auto h = centered(GridFunction::sample(d.density, holder.fn));
        const double h_l2 = lp_norm(h, Norm::L2);
        const auto gk = sigma_green_kubo(op, h);
        for (const auto& p : transfer_power(op, h, 64)) track(p);
        const double sigma = std::sqrt(gk.sigma2);
        const auto mc = holder.shifted(-observable_mean(holder, *d.fine));

        EnsembleConfig c;
        c.samples = 50000;
        c.length = 1 << 14;
        c.burn_in = 10000;
        c.seed = 7;
        c.mode = SamplerMode::BurnInOrbit;
        c.threads = threads;
        EnsembleRequest req;
        req.checkpoints = {c.length};
        req.functionals = true;
        req.path_points = 64;
        const auto e = run_ensemble(map, mc, c, req);
        double sq = 0.0;
        for (double v : e.sums[0]) sq += v * v;
        const double sigma_vg = std::sqrt(sq / static_cast<double>(e.sums[0].size()) / static_cast<double>(c.length));
        const double rel = std::abs(sigma - sigma_vg) / sigma;
        const auto clt = clt_test(e.sums[0], c.length, sigma, h_l2);
        const auto fclt = fclt_test(to_paths(e, sigma, c.length), c.length);
        bool ok = rel < 0.05 && clt.pass;
        std::string detail = "GK " + fmt(sigma) + ", VG " + fmt(sigma_vg) + ", rel " + fmt(rel) + ", clt " +
                             fmt(clt.statistic) + "/" + fmt(clt.threshold);
        for (const auto& t : fclt) {
            ok = ok && t.pass;
            detail += ", " + t.name.substr(5) + " " + fmt(t.statistic) + "/" + fmt(t.threshold);
        }
        return Outcome{ok, detail};
    });

    criterion(9, "Ulam backend L1 decay exponent on lsv(0.25) in [-4, -2]", 120.0, [] {
        const auto map = builtin_map("lsv:0.25");
        InvariantDensityOptions plain;
        plain.oversample = 1;
        const auto d = invariant_density(map, 4096, 1e-12, plain);
        const auto op = TransferOperator::ulam(ulam_matrix(map, d.density->grid_ptr()), d.density);
        const auto h = centered(GridFunction::sample(d.density, parse_observable("lip1", map).fn));
        const auto r = classify_conditions(map.name, "lip1", op, h);
        track(r);
        const double e = r.l1_fit.exponent;
        return Outcome{e >= -4.0 && e <= -2.0, "fitted exponent " + fmt(e) + " over n in [8, 64]"};
    });

    criterion(10, "interpolation inequality across all iterates", 0.0, [] {
        return Outcome{worst_interpolation_gap <= 1e-8, "max ||f||_2 - sqrt(||f||_inf ||f||_1) = " +
                                                            fmt(worst_interpolation_gap)};
    });

    criterion(11, "verify reports are byte-identical across --threads", 0.0, [&] {
        struct Case {
            std::string tag;
            std::string args;
        };
        const std::vector<Case> cases = {
            {"doubling", "--map doubling --obs cos1 --cells 2048 --n 1024 --samples 5000 --seed 7"},
            {"lsv", "--map lsv:0.25 --obs lip1 --cells 1024 --n 1024 --samples 2000 --burnin 2000 --seed 7 --kmax 8"},
        };
        std::string detail;
        bool ok = true;
        for (const auto& c : cases) {
            std::vector<std::string> reports;
            for (unsigned t : {1u, 3u, 8u}) {
                const fs::path out = work / (c.tag + "_t" + std::to_string(t));
                fs::remove_all(out);
                const int code = run_cli(exe, "verify " + c.args + " --threads " + std::to_string(t) + " --out " +
                                                  out.string());
                if (code != 0 && code != 5) {
                    ok = false;
                    detail += c.tag + ": exit " + std::to_string(code) + "; ";
                }
                reports.push_back(slurp(out / "verify.json") + slurp(out / "birkhoff.csv"));
            }
            const bool same = !reports[0].empty() && reports[0] == reports[1] && reports[0] == reports[2];
            ok = ok && same;
            detail += c.tag + (same ? " identical at 1/3/8 threads" : " differs across threads") + "; ";
        }
        return Outcome{ok, detail.substr(0, detail.size() - 2)};
    });

    std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criteria fail") << std::endl;
    return failures == 0 ? 0 : 1;
}

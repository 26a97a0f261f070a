#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "ergolab/function_space.hpp"
#include "ergolab/maps.hpp"
#include "ergolab/observable.hpp"
#include "ergolab/transfer.hpp"

namespace ergolab {

enum class SamplerMode { InverseCdf, BurnInOrbit, BitQueue };
const char* to_string(SamplerMode m) noexcept;
SamplerMode parse_sampler_mode(const std::string& name);

/// Doubling: bit-queue; maps with a closed-form law: inverse-cdf; otherwise burn-in.
SamplerMode default_mode(const IntervalMap& map) noexcept;

struct EnsembleConfig {
    std::size_t samples = 100000;
    std::size_t length = 4096;
    std::size_t burn_in = 10000;
    std::uint64_t seed = 0;
    SamplerMode mode = SamplerMode::InverseCdf;
    unsigned threads = 1;
};

void validate(const EnsembleConfig& config, const IntervalMap& map);

/// Independent generator for sample `index`; the stream depends only on
/// (seed, index), never on the worker that draws it.
std::mt19937_64 sample_stream(std::uint64_t seed, std::uint64_t index);

/// M initial points distributed (approximately, for burn-in) by the invariant law.
std::vector<double> sample_invariant(const IntervalMap& map, const EnsembleConfig& config);

struct EnsembleRequest {
    std::vector<std::size_t> checkpoints;  // record S_c for each c <= length
    bool functionals = false;              // sup and occupation of the full-resolution path
    std::size_t path_points = 0;           // m > 0: store S at times j * length / m
};

struct EnsembleResult {
    std::vector<std::size_t> checkpoints;
    std::vector<std::vector<double>> sums;  // sums[c][s]: S_{checkpoints[c]} of kept sample s
    std::vector<double> sup;                // max_{0<=j<=n} S_j
    std::vector<double> occupation;         // fraction of j in [0, n) with S_j > 0, ties 1/2
    std::vector<std::vector<double>> paths;  // paths[s][k] = S_{k n / m}
    std::vector<std::size_t> index;         // original sample index of each kept sample
    std::size_t dropped = 0;
};

/// Runs M orbits of length n and collects Birkhoff sums S_j = sum_{i<j} h(T^i y0).
/// Orbits that leave the domain are dropped; more than 0.1% drops is an error.
EnsembleResult run_ensemble(const IntervalMap& map, const Observable& h, const EnsembleConfig& config,
                            const EnsembleRequest& request);

/// M unscaled sums S_n.
std::vector<double> birkhoff_ensemble(const IntervalMap& map, const Observable& h, const EnsembleConfig& config);

struct GreenKubo {
    double sigma2;
    std::vector<double> partial;  // partial[L] = ∫h² + 2 sum_{k=1}^{L} <P^k h, h>
    bool warning;
    double oscillation;  // max - min of the last quarter of the partial sums
};

/// sigma^2 through transfer iterates: correlations <h, h∘T^k> = <P^k h, h>.
GreenKubo sigma_green_kubo(const TransferOperator& op, const GridFunction& h, std::size_t lag_max = 256);

struct SigmaPoint {
    std::size_t n;
    double sigma;
};

/// sqrt(mean(S_n^2) / n) for each n in n_list, all from one ensemble of
/// length max(n_list).
std::vector<SigmaPoint> sigma_variance_growth(const IntervalMap& map, const Observable& h,
                                              const std::vector<std::size_t>& n_list, EnsembleConfig config);

struct PathSample {
    std::size_t index;         // sample index in the ensemble
    std::vector<double> path;  // psi at t = k/m, k = 0..m
    double sup;
    double terminal;
    double occupation;
};

/// psi_n(t) = S_[nt] / (sigma sqrt n); the sup and occupation functionals are
/// taken over every j <= n, the stored path over the m grid times.
std::vector<PathSample> path_ensemble(const IntervalMap& map, const Observable& h, double sigma,
                                      const EnsembleConfig& config, std::size_t m);

/// Path samples from an ensemble run with functionals and path points;
/// S_n is taken from the checkpoint equal to the ensemble length.
std::vector<PathSample> to_paths(const EnsembleResult& result, double sigma, std::size_t n);

void write_birkhoff_csv(std::ostream& out, const std::vector<std::size_t>& index, const std::vector<double>& values);
void write_paths_csv(std::ostream& out, const std::vector<PathSample>& paths);

nlohmann::json to_json(const GreenKubo& gk);

}  // namespace ergolab

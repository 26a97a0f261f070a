#include "ergolab/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <thread>

#include "ergolab/decay.hpp"
#include "ergolab/error.hpp"

namespace ergolab {

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Open-interval uniform from 53 random bits, so 0 and 1 never occur.
inline double open_uniform(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
}

// One orbit source per sample. The bit queue keeps a 64-bit window on an
// infinite random binary expansion; shifting it is the doubling map.
class OrbitState {
public:
    OrbitState(const IntervalMap& map, const EnsembleConfig& config, std::mt19937_64& rng)
        : map_(map), rng_(rng), mode_(config.mode) {
        switch (mode_) {
            case SamplerMode::BitQueue:
                window_ = rng_();
                queue_ = rng_();
                left_ = 64;
                y_ = static_cast<double>(window_ >> 11) * 0x1p-53;
                break;
            case SamplerMode::InverseCdf:
                y_ = std::clamp(map_.law->sampler(open_uniform(rng_)), map_.lower, map_.upper);
                break;
            case SamplerMode::BurnInOrbit:
                y_ = map_.lower + (map_.upper - map_.lower) * open_uniform(rng_);
                for (std::size_t j = 0; j < config.burn_in && ok_; ++j) advance();
                break;
        }
    }

    double y() const noexcept { return y_; }
    bool ok() const noexcept { return ok_; }

    void advance() {
        if (mode_ == SamplerMode::BitQueue) {
            window_ = (window_ << 1) | (queue_ >> 63);
            queue_ <<= 1;
            if (--left_ == 0) {
                queue_ = rng_();
                left_ = 64;
            }
            y_ = static_cast<double>(window_ >> 11) * 0x1p-53;
            return;
        }
        const double next = map_(y_);
        if (!(next >= map_.lower - 1e-12 && next <= map_.upper + 1e-12)) {
            ok_ = false;
            return;
        }
        y_ = std::clamp(next, map_.lower, map_.upper);
    }

private:
    const IntervalMap& map_;
    std::mt19937_64& rng_;
    SamplerMode mode_;
    double y_ = 0.0;
    std::uint64_t window_ = 0;
    std::uint64_t queue_ = 0;
    int left_ = 0;
    bool ok_ = true;
};

template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, count));
    if (workers == 1) {
        fn(0, count);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t t = 0; t < workers; ++t) {
        const std::size_t begin = count * t / workers;
        const std::size_t end = count * (t + 1) / workers;
        pool.emplace_back([&, t, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace

const char* to_string(SamplerMode m) noexcept {
    switch (m) {
        case SamplerMode::InverseCdf: return "inverse-cdf";
        case SamplerMode::BurnInOrbit: return "burn-in-orbit";
        case SamplerMode::BitQueue: return "bit-queue";
    }
    return "inverse-cdf";
}

SamplerMode parse_sampler_mode(const std::string& name) {
    if (name == "inverse-cdf") return SamplerMode::InverseCdf;
    if (name == "burn-in-orbit") return SamplerMode::BurnInOrbit;
    if (name == "bit-queue") return SamplerMode::BitQueue;
    throw Error(ErrorKind::Configuration, "unknown sampler mode '" + name + "'");
}

SamplerMode default_mode(const IntervalMap& map) noexcept {
    if (map.family == MapFamily::Doubling) return SamplerMode::BitQueue;
    if (map.law) return SamplerMode::InverseCdf;
    return SamplerMode::BurnInOrbit;
}

void validate(const EnsembleConfig& config, const IntervalMap& map) {
    if (config.samples < 100) throw Error(ErrorKind::Configuration, "ensembles need at least 100 samples");
    if (config.length < 1) throw Error(ErrorKind::Configuration, "Birkhoff length must be at least 1");
    if (config.mode == SamplerMode::BurnInOrbit && config.burn_in < 1000) {
        throw Error(ErrorKind::Configuration, "burn-in sampling needs at least 1000 burn-in steps");
    }
    if (config.mode == SamplerMode::InverseCdf && !map.law) {
        throw Error(ErrorKind::Configuration, map.name + " has no closed-form sampler; use burn-in-orbit");
    }
    if (config.mode == SamplerMode::BitQueue && map.family != MapFamily::Doubling) {
        throw Error(ErrorKind::Configuration, "bit-queue sampling only realizes the doubling map");
    }
}

std::mt19937_64 sample_stream(std::uint64_t seed, std::uint64_t index) {
    const std::uint64_t key = splitmix64(seed ^ splitmix64(index + 0x632be59bd9b4e019ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

std::vector<double> sample_invariant(const IntervalMap& map, const EnsembleConfig& config) {
    validate(config, map);
    std::vector<double> out(config.samples);
    std::vector<char> ok(config.samples, 1);
    parallel_for(config.samples, config.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t s = begin; s < end; ++s) {
            auto rng = sample_stream(config.seed, s);
            OrbitState state(map, config, rng);
            out[s] = state.y();
            ok[s] = state.ok();
        }
    });
    std::vector<double> kept;
    kept.reserve(out.size());
    for (std::size_t s = 0; s < out.size(); ++s) {
        if (ok[s]) kept.push_back(out[s]);
    }
    if (out.size() - kept.size() > out.size() / 1000) {
        throw Error(ErrorKind::NumericalEscape, "too many burn-in orbits left the domain");
    }
    return kept;
}

EnsembleResult run_ensemble(const IntervalMap& map, const Observable& h, const EnsembleConfig& config,
                            const EnsembleRequest& request) {
    validate(config, map);
    const std::size_t n = config.length;
    const std::size_t M = config.samples;

    std::vector<std::size_t> checkpoints = request.checkpoints;
    std::sort(checkpoints.begin(), checkpoints.end());
    checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
    for (std::size_t c : checkpoints) {
        if (c < 1 || c > n) throw Error(ErrorKind::InvalidInput, "checkpoint " + std::to_string(c) + " outside [1, n]");
    }
    const std::size_t m = request.path_points;
    if (m > 0 && (m > n || n % m != 0)) {
        throw Error(ErrorKind::InvalidInput, "path resolution m must divide the Birkhoff length");
    }
    const std::size_t stride = m > 0 ? n / m : 0;
    const std::size_t C = checkpoints.size();

    std::vector<double> sums(M * C);
    std::vector<double> sup(request.functionals ? M : 0);
    std::vector<double> occupation(request.functionals ? M : 0);
    std::vector<double> paths(m > 0 ? M * (m + 1) : 0);
    std::vector<char> ok(M, 1);

    parallel_for(M, config.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t s = begin; s < end; ++s) {
            auto rng = sample_stream(config.seed, s);
            OrbitState state(map, config, rng);
            double S = 0.0;
            double best = 0.0;
            std::size_t positive_halves = 0;
            std::size_t next_c = 0;
            double* path = m > 0 ? &paths[s * (m + 1)] : nullptr;
            for (std::size_t j = 0; j < n && state.ok(); ++j) {
                // S holds S_j here.
                if (request.functionals) positive_halves += S > 0.0 ? 2 : (S == 0.0 ? 1 : 0);
                if (path && j % stride == 0) path[j / stride] = S;
                S += h(state.y());
                if (S > best) best = S;
                if (next_c < C && checkpoints[next_c] == j + 1) sums[s * C + next_c++] = S;
                if (j + 1 < n) state.advance();
            }
            if (!state.ok() || !std::isfinite(S)) {
                ok[s] = 0;
                continue;
            }
            if (path) path[m] = S;
            if (request.functionals) {
                sup[s] = best;
                occupation[s] = 0.5 * static_cast<double>(positive_halves) / static_cast<double>(n);
            }
        }
    });

    EnsembleResult r;
    r.checkpoints = checkpoints;
    r.sums.assign(C, {});
    for (std::size_t s = 0; s < M; ++s) {
        if (!ok[s]) {
            ++r.dropped;
            continue;
        }
        r.index.push_back(s);
        for (std::size_t c = 0; c < C; ++c) r.sums[c].push_back(sums[s * C + c]);
        if (request.functionals) {
            r.sup.push_back(sup[s]);
            r.occupation.push_back(occupation[s]);
        }
        if (m > 0) r.paths.emplace_back(paths.begin() + s * (m + 1), paths.begin() + (s + 1) * (m + 1));
    }
    if (r.dropped > M / 1000) {
        std::ostringstream msg;
        msg << r.dropped << " of " << M << " orbits of " << map.name << " left the domain (limit 0.1%)";
        throw Error(ErrorKind::NumericalEscape, msg.str());
    }
    return r;
}

std::vector<double> birkhoff_ensemble(const IntervalMap& map, const Observable& h, const EnsembleConfig& config) {
    EnsembleRequest request;
    request.checkpoints = {config.length};
    return std::move(run_ensemble(map, h, config, request).sums.front());
}

GreenKubo sigma_green_kubo(const TransferOperator& op, const GridFunction& h, std::size_t lag_max) {
    if (lag_max < 1) throw Error(ErrorKind::InvalidInput, "lag_max must be at least 1");
    const double mean = integrate(h);
    if (std::abs(mean) > 1e-6) {
        std::ostringstream msg;
        msg << "Green-Kubo needs a centered observable (mean " << mean << ")";
        throw Error(ErrorKind::Precondition, msg.str());
    }
    GreenKubo gk;
    const double h2 = inner_product(h, h);
    double level = h2;
    gk.partial.push_back(level);
    std::vector<double> v(h.values().begin(), h.values().end());
    std::vector<double> next(v.size());
    const auto w = op.measure().masses();
    for (std::size_t k = 1; k <= lag_max; ++k) {
        op.apply(v, next);
        v.swap(next);
        double corr = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) corr += v[i] * h[i] * w[i];
        level += 2.0 * corr;
        gk.partial.push_back(level);
    }
    gk.sigma2 = level;
    const std::size_t from = (3 * lag_max) / 4;
    const auto [lo, hi] = std::minmax_element(gk.partial.begin() + static_cast<std::ptrdiff_t>(from), gk.partial.end());
    gk.oscillation = *hi - *lo;
    gk.warning = gk.oscillation > 0.1 * std::max(std::abs(level), 1e-3 * h2);
    return gk;
}

std::vector<SigmaPoint> sigma_variance_growth(const IntervalMap& map, const Observable& h,
                                              const std::vector<std::size_t>& n_list, EnsembleConfig config) {
    if (n_list.empty()) throw Error(ErrorKind::InvalidInput, "empty n list");
    for (std::size_t i = 1; i < n_list.size(); ++i) {
        if (n_list[i] <= n_list[i - 1]) throw Error(ErrorKind::InvalidInput, "n list must be increasing");
    }
    config.length = n_list.back();
    EnsembleRequest request;
    request.checkpoints = n_list;
    const auto r = run_ensemble(map, h, config, request);
    std::vector<SigmaPoint> out;
    for (std::size_t c = 0; c < r.checkpoints.size(); ++c) {
        double second = 0.0;
        for (double s : r.sums[c]) second += s * s;
        second /= static_cast<double>(r.sums[c].size());
        out.push_back({r.checkpoints[c], std::sqrt(second / static_cast<double>(r.checkpoints[c]))});
    }
    return out;
}

std::vector<PathSample> path_ensemble(const IntervalMap& map, const Observable& h, double sigma,
                                      const EnsembleConfig& config, std::size_t m) {
    if (!(sigma > 0.0)) {
        throw Error(ErrorKind::Precondition,
                    "path ensemble needs sigma > 0; a vanishing sigma points to a coboundary (run coboundary detection)");
    }
    EnsembleRequest request;
    request.checkpoints = {config.length};
    request.functionals = true;
    request.path_points = m;
    return to_paths(run_ensemble(map, h, config, request), sigma, config.length);
}

std::vector<PathSample> to_paths(const EnsembleResult& r, double sigma, std::size_t n) {
    if (!(sigma > 0.0)) throw Error(ErrorKind::Precondition, "path rescaling needs sigma > 0");
    const auto last = std::find(r.checkpoints.begin(), r.checkpoints.end(), n);
    if (last == r.checkpoints.end() || r.sup.size() != r.index.size()) {
        throw Error(ErrorKind::InvalidInput, "ensemble lacks the terminal checkpoint or path functionals");
    }
    const auto& terminal = r.sums[static_cast<std::size_t>(last - r.checkpoints.begin())];
    const double scale = 1.0 / (sigma * std::sqrt(static_cast<double>(n)));
    std::vector<PathSample> out;
    out.reserve(r.index.size());
    for (std::size_t s = 0; s < r.index.size(); ++s) {
        PathSample p;
        p.index = r.index[s];
        if (!r.paths.empty()) p.path = r.paths[s];
        for (double& v : p.path) v *= scale;
        p.sup = r.sup[s] * scale;
        p.terminal = terminal[s] * scale;
        p.occupation = r.occupation[s];
        out.push_back(std::move(p));
    }
    return out;
}

void write_birkhoff_csv(std::ostream& out, const std::vector<std::size_t>& index, const std::vector<double>& values) {
    const auto old = out.precision(17);
    out << "sample_index,value\n";
    for (std::size_t s = 0; s < values.size(); ++s) out << index[s] << ',' << values[s] << '\n';
    out.precision(old);
}

void write_paths_csv(std::ostream& out, const std::vector<PathSample>& paths) {
    const auto old = out.precision(17);
    out << "sample_index,sup,terminal,occupation\n";
    for (const auto& p : paths) out << p.index << ',' << p.sup << ',' << p.terminal << ',' << p.occupation << '\n';
    out.precision(old);
}

nlohmann::json to_json(const GreenKubo& gk) {
    return nlohmann::json{{"sigma2", json_number(gk.sigma2)},
                          {"lag_max", gk.partial.size() - 1},
                          {"oscillation", json_number(gk.oscillation)},
                          {"warning", gk.warning}};
}

}  // namespace ergolab

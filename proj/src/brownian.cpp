#include "projlab/brownian.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "projlab/parallel.hpp"

namespace projlab {

namespace {

void check_params(double T, double dt) {
    if (!(dt > 0.0) || dt > 0.01) throw precondition_error("dt out of range", "time step must satisfy 0 < dt <= 0.01");
    if (!(T >= 0.0) || T > 1e4) throw precondition_error("T out of range", "horizon must satisfy 0 <= T <= 1e4");
}

} // namespace

HalfPlanePoint sample_step(const HalfPlanePoint& tau, double dt, Rng& rng) {
    if (!(dt > 0.0) || dt > 0.01) throw precondition_error("dt out of range", "time step must satisfy 0 < dt <= 0.01");
    std::normal_distribution<double> normal(0.0, 1.0);
    const double s = std::sqrt(2.0 * dt);
    const double guard = 6.0 * std::sqrt(dt);
    for (;;) {
        double xi1 = normal(rng), xi2 = normal(rng);
        double y = tau.im();
        cplx next{tau.re() + y * s * xi1, y * std::exp(s * xi2 - dt)};
        if (hyp_distance(tau.value(), next) <= guard) return HalfPlanePoint(next);
    }
}

TrackedPath run_from(const FuchsianGroup& g, const TrackedPath& start, double T, std::uint64_t seed, bool keep_points) {
    check_params(T, start.dt);
    TrackedPath out;
    out.seed = seed;
    out.dt = start.dt;
    out.deck_word = start.deck_word;
    double t = start.times.empty() ? 0.0 : start.times.back();
    HalfPlanePoint p = start.points.empty() ? g.base_point() : start.points.back();
    Rng rng(splitmix64(seed));
    const long steps = std::lround(T / start.dt);
    if (keep_points) {
        out.times.reserve(static_cast<std::size_t>(steps) + 1);
        out.points.reserve(static_cast<std::size_t>(steps) + 1);
        out.word_deltas.reserve(static_cast<std::size_t>(steps) + 1);
    }
    out.times.push_back(t);
    out.points.push_back(p);
    out.word_deltas.emplace_back();
    for (long k = 0; k < steps; ++k) {
        Reduction r = reduce(g, sample_step(p, start.dt, rng));
        p = r.point;
        if (!r.deck.word.empty()) append_reduced(out.deck_word, r.deck.word);
        t += start.dt;
        if (keep_points) {
            out.times.push_back(t);
            out.points.push_back(p);
            out.word_deltas.push_back(r.deck.word);
        }
    }
    if (!keep_points) {
        out.times.back() = t;
        out.points.back() = p;
    }
    return out;
}

TrackedPath run(const FuchsianGroup& g, double T, double dt, std::uint64_t seed, bool keep_points) {
    check_params(T, dt);
    TrackedPath start;
    start.dt = dt;
    start.times = {0.0};
    start.points = {g.base_point()};
    TrackedPath out = run_from(g, start, T, seed, keep_points);
    out.seed = seed;
    return out;
}

std::string path_csv(const TrackedPath& path) {
    std::ostringstream os;
    os << std::setprecision(17) << "t,re,im,word_delta\n";
    for (std::size_t k = 0; k < path.points.size(); ++k)
        os << path.times[k] << ',' << path.points[k].re() << ',' << path.points[k].im() << ','
           << (k < path.word_deltas.size() ? path.word_deltas[k] : "") << '\n';
    return os.str();
}

BrownianEnsemble run_ensemble(const FuchsianGroup& g, double T, double dt, int n, std::uint64_t seed, int workers) {
    check_params(T, dt);
    if (n <= 0) throw precondition_error("n out of range", "ensemble size must be positive");
    BrownianEnsemble e{T, dt, seed, std::vector<std::string>(static_cast<std::size_t>(n))};
    parallel_for(static_cast<std::size_t>(n), workers, [&](std::size_t i) {
        e.words[i] = run(g, T, dt, stream_seed(seed, i), false).deck_word;
    });
    return e;
}

} // namespace projlab

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "projlab/brownian.hpp"
#include "projlab/devmap.hpp"
#include "projlab/fuchsian.hpp"
#include "projlab/moebius.hpp"

namespace projlab {

struct Estimate {
    double value = 0.0;
    double stderr_ = 0.0;  // sample standard deviation / sqrt(n)
    int n = 0;
    std::map<std::string, double> params;
    std::map<std::string, std::string> notes;

    /// {"value":..,"stderr":..,"n":..,"params":{..}}; notes are merged into params.
    std::string to_json() const;
};

/// Mean and standard error of a sample. Requires at least one value.
Estimate summarize(const std::vector<double>& values);

/// Finite non-elementarity test on the generators: some word among A, B, AB, Ab has
/// tr^2 outside [0, 4] and the generators share no fixed point.
bool is_non_elementary(const Representation& rep);

/// (1/T) log ||rho(deck(T))|| averaged over Brownian paths from the base point, with the
/// norm adapted to the base point. Throws "elementary representation".
Estimate lyapunov_brownian(const Representation& rep, const FuchsianGroup& g, double T, int n, double dt,
                           std::uint64_t seed, int workers = 1);
/// The same statistic over a precomputed ensemble (common random numbers across structures).
Estimate lyapunov_brownian(const Representation& rep, const FuchsianGroup& g, const BrownianEnsemble& e);
/// Per-path values (1/T) log ||rho(deck)||, in ensemble order.
std::vector<double> lyapunov_samples(const Representation& rep, const FuchsianGroup& g, const BrownianEnsemble& e);

/// log ||rho(gamma)|| / d(b, gamma b) for gamma drawn uniformly from the ball of radius R
/// minus the identity. Requires R <= 14; throws "empty ball" if only the identity remains.
Estimate lyapunov_ball(const Representation& rep, const FuchsianGroup& g, double R, int n, std::uint64_t seed);
/// The same over a precomputed ball.
Estimate lyapunov_ball(const Representation& rep, const FuchsianGroup& g, const std::vector<GroupElement>& ball,
                       int n, std::uint64_t seed);

/// Default evaluation points: three centers in the thick part and three targets off the
/// closure of the Fuchsian limit set, so the c = 0 count is exactly zero.
std::vector<HalfPlanePoint> default_centers();
std::vector<SpherePoint> default_targets();

/// Mean over (center, z) of #dev^-1(z) in B(center, R) divided by 4 pi sinh^2(R/2).
/// params carry deg = 2 pi delta. Requires 6 <= R <= 12.
Estimate degree_estimate(const ProjectiveStructure& s, double R, const std::vector<HalfPlanePoint>& centers,
                         const std::vector<SpherePoint>& zs);
/// As above with an existing counter (its max radius must cover R).
Estimate degree_estimate(const PreimageCounter& counter, double R, const std::vector<HalfPlanePoint>& centers,
                         const std::vector<SpherePoint>& zs);

struct NevanlinnaFit {
    double slope = 0.0;
    double intercept = 0.0;
    std::vector<double> r, log_inv, N;  // disk radii, log(1/(1-r)), averaged N(r)
};

/// Least-squares slope of N(r) against log(1/(1 - r)), N averaged over (center, z), at
/// `points` radii r = tanh(R/2) with R evenly spaced in [R_lo, R_hi]. R_hi must not
/// exceed the counter's max radius.
NevanlinnaFit nevanlinna_slope(const PreimageCounter& counter, const std::vector<HalfPlanePoint>& centers,
                               const std::vector<SpherePoint>& zs, double R_lo, double R_hi, int points = 9);

struct HarmonicSample {
    std::vector<SpherePoint> points;
    HalfPlanePoint x{0.0, 1.0};
    double T = 0.0;
    cplx c{};
    int resampled = 0;       // paths redrawn because of a degenerate singular gap
    double median_log_gap = 0.0;  // median of log(sigma_1 / sigma_2) over the accepted paths
};

/// One point per Brownian path: the attracting direction of rho(deck(T)), which is where
/// rho(deck) sends almost every point of P^1. `start` is the starting word: paths start at
/// start * base.
HarmonicSample sample_harmonic(const Representation& rep, const FuchsianGroup& g, double T, int n, double dt,
                               std::uint64_t seed, const std::string& start = "", int workers = 1);

/// Correlation dimension of the sample under the chordal metric. Throws "no scaling window".
/// Requires at least 2000 points.
Estimate dimension_estimate(const HarmonicSample& h);
Estimate dimension_estimate(const std::vector<SpherePoint>& points, std::uint64_t bootstrap_seed = 1);

/// 1/2 + 2 pi delta - k for the once-punctured torus (|eu| = 1).
double predict_chi(double delta, int k = 0);

/// Chordal distance-preserving embedding of P^1 into the unit sphere of R^3.
std::array<double, 3> sphere_coordinates(const SpherePoint& p);

/// Kolmogorov-Smirnov statistics.
double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf);
double ks_two_sample(std::vector<double> x, std::vector<double> y);
/// Asymptotic p-value of a two-sample statistic.
double ks_two_sample_pvalue(double d, std::size_t n, std::size_t m);

} // namespace projlab

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "projlab/fuchsian.hpp"
#include "projlab/moebius.hpp"
#include "projlab/rng.hpp"

namespace projlab {

/// Brownian path on the surface, stored as points of the Dirichlet domain together with
/// the running deck word: the unreduced lift of the current point is deck * point.
struct TrackedPath {
    std::vector<double> times;
    std::vector<HalfPlanePoint> points;
    std::string deck_word;
    std::vector<std::string> word_deltas;  // deck change at each stored step (empty if none)
    std::uint64_t seed = 0;
    double dt = 0.0;

    /// Deck element as a matrix; may throw "cocycle overflow" for very long paths.
    GroupElement deck(const FuchsianGroup& g) const { return g.element(deck_word); }
};

/// Debug dump with columns t, re, im, word_delta.
std::string path_csv(const TrackedPath& path);

/// One step of the diffusion with generator y^2 (d_xx + d_yy). log y is advanced exactly
/// (Brownian motion with variance 2 dt and drift -dt) and x by y sqrt(2 dt) xi. Draws whose
/// step exceeds 6 sqrt(dt) in hyperbolic distance are redrawn. Requires dt <= 0.01.
HalfPlanePoint sample_step(const HalfPlanePoint& tau, double dt, Rng& rng);

/// Runs from the base point for time T, reducing after every step.
/// keep_points = false stores only the final point (times/points have one entry).
TrackedPath run(const FuchsianGroup& g, double T, double dt, std::uint64_t seed, bool keep_points = true);

/// Continues an existing path for a further time T with a fresh stream.
TrackedPath run_from(const FuchsianGroup& g, const TrackedPath& start, double T, std::uint64_t seed,
                     bool keep_points = true);

/// Deck words of n independent paths; path i uses stream_seed(seed, i). The words do not
/// depend on the structure, so one ensemble serves every slice parameter.
struct BrownianEnsemble {
    double T = 0.0;
    double dt = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::string> words;
};

BrownianEnsemble run_ensemble(const FuchsianGroup& g, double T, double dt, int n, std::uint64_t seed,
                              int workers = 1);

} // namespace projlab

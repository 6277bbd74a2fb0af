#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "projlab/bifurcation.hpp"
#include "projlab/estimators.hpp"

namespace projlab {

/// Flat key = value configuration. Every key has a default; unknown keys are rejected.
struct ExperimentConfig {
    std::string command;  // lyapunov, degree, harmonic, dimension, verify-formula, scan, traceloci, compare
    cplx c{};
    double T = 200.0;
    double dt = 0.005;
    int n = 400;
    std::uint64_t seed = 1;
    double R = 10.0;        // degree radius
    double r_trunc = 14.0;  // Poincare series truncation
    int workers = 1;
    double ball_R = 12.0;
    int ball_n = 2000;
    double harmonic_T = 30.0;
    int harmonic_n = 5000;
    GridSpec grid{cplx(-1.0, -1.0), 0.1, 21, 21};
    std::vector<double> locus_lengths{4.0, 6.0, 8.0};
    int loci_per_length = 2;
    cplx trace_t{4.0, 0.0};
    int bootstrap = 100;
    std::string out_dir = "out";
    std::string cache_dir;  // empty: no cache; PROJLAB_CACHE overrides
    double inject_delta = -1.0;  // test hook: when >= 0 replaces the degree estimate

    /// Canonical key = value text; parse_config(to_text()) reproduces the config.
    std::string to_text() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Throws a precondition error naming the first violated constraint.
void validate(const ExperimentConfig& cfg);

cplx parse_complex(const std::string& s);

struct FormulaReport {
    Estimate chi;
    Estimate delta;
    double predicted = 0.0;
    double combined_stderr = 0.0;
    double margin = 0.0;  // 3 * combined_stderr - |chi - predicted|
    bool pass = false;
};

/// chi against 1/2 + 2 pi delta; pass iff |chi - predicted| <= 3 combined stderr.
FormulaReport verify_formula(const FuchsianGroup& g, const CuspForm4& form, const ExperimentConfig& cfg);

/// The form for cfg.r_trunc, from the cache directory when available.
CuspForm4 obtain_form(const FuchsianGroup& g, const ExperimentConfig& cfg);

/// Runs the configured command and writes results.json, manifest.json and the command's
/// CSV files into cfg.out_dir. Nothing is written when the run fails.
/// Returns 0, 2 on precondition violations or 3 on numerical failures.
int run_experiment(const ExperimentConfig& cfg, std::ostream& log);

} // namespace projlab

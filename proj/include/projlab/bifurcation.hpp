#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "projlab/autoform.hpp"
#include "projlab/devmap.hpp"
#include "projlab/fuchsian.hpp"

namespace projlab {

/// Square grid of slice parameters; cell (i, j) sits at origin + spacing * (i + i j).
struct GridSpec {
    cplx origin{};
    double spacing = 0.1;
    int nx = 1, ny = 1;

    cplx at(int i, int j) const { return origin + spacing * cplx(i, j); }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
    std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
};

struct ScanParams {
    double T = 200.0;
    double dt = 0.005;
    int n = 400;
    std::uint64_t seed = 1;
    int workers = 1;
};

struct ScanGrid {
    GridSpec spec;
    ScanParams params;
    std::vector<double> values;   // chi per cell
    std::vector<double> stderrs;
    std::vector<unsigned char> mask;  // 1 where the cell failed
    std::vector<double> parabolicity;  // |tr^2 rho([A, B]) - 4|
    std::vector<Representation> reps;
    std::vector<double> samples;  // per-path values, cell-major, params.n per cell
    std::vector<std::string> errors;  // message per failed cell, empty otherwise
};

/// chi on every cell from one shared Brownian ensemble (common random numbers).
/// Requires at most 101 x 101 cells. Failing cells are masked.
ScanGrid scan(const FuchsianGroup& g, const CuspForm4& form, const GridSpec& spec, const ScanParams& params);

/// 5-point Laplacian divided by spacing^2, then one 3x3 box average. Cells without a full
/// stencil (or touching masked cells) are NaN.
std::vector<double> laplacian_density(const std::vector<double>& field, const std::vector<unsigned char>& mask,
                                      int nx, int ny, double spacing);
std::vector<double> laplacian_density(const ScanGrid& grid);

/// Per-cell standard deviation of the density over bootstrap resamples of the paths.
/// The same resample is used on every cell.
std::vector<double> density_noise_floor(const ScanGrid& grid, int resamples, std::uint64_t seed);

struct TraceLocus {
    GroupElement word;
    cplx t{};
    std::vector<cplx> points;
    std::vector<int> multiplicities;
    int stalled = 0;  // Newton seeds that failed to converge
};

/// tr^2 rho_c(word) - t.
cplx trace_function(const FuchsianGroup& g, const CuspForm4& form, const std::string& word, cplx t, cplx c);
/// |f_x + i f_y| / max(|f_x|, |f_y|) with central differences of step h.
double cauchy_riemann_residual(const FuchsianGroup& g, const CuspForm4& form, const std::string& word, cplx t,
                               cplx c, double h = 1e-4);

/// Roots of tr^2 rho_c(word) = t inside the scanned window, seeded from grid squares where
/// the sampled values wind around zero, refined by Newton and deduplicated within
/// spacing / 10. Requires a word that is hyperbolic at c = 0.
TraceLocus trace_locus(const FuchsianGroup& g, const CuspForm4& form, const ScanGrid& grid, const GroupElement& word,
                       cplx t);

struct EquidistributionRow {
    std::string word;
    double length = 0.0;
    double mass = 0.0;  // sum of multiplicities / (4 length) inside the window
    double tv = 0.0;
};

struct EquidistributionReport {
    std::vector<EquidistributionRow> rows;
    double spearman = 0.0;  // rank correlation of tv against length
};

/// Compares each locus measure (sum mult delta_c) / (4 length) with the density mass
/// (Laplacian / 2 pi times cell area) on a 10 x 10 coarse binning, by total variation.
EquidistributionReport equidistribution_compare(const std::vector<TraceLocus>& loci, const std::vector<double>& density,
                                                const GridSpec& spec);

double spearman(const std::vector<double>& x, const std::vector<double>& y);

/// CSV text with the frozen column sets, and file writers for it.
std::string scan_csv(const ScanGrid& grid);
std::string loci_csv(const std::vector<TraceLocus>& loci);
void write_scan_csv(const ScanGrid& grid, const std::string& path);
void write_loci_csv(const std::vector<TraceLocus>& loci, const std::string& path);

} // namespace projlab

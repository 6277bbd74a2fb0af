#include "projlab/bifurcation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "projlab/brownian.hpp"
#include "projlab/estimators.hpp"
#include "projlab/parallel.hpp"

namespace projlab {

namespace {

constexpr double kTwoPi = 6.283185307179586;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

cplx trace_sq(const Representation& rep, const std::string& word) { return rep.evaluate(word).trace_squared(); }

Representation rep_at(const FuchsianGroup& g, const CuspForm4& form, cplx c) {
    ProjectiveStructure s(g, form, c);
    return holonomy(s);
}

double wrap(double a) { return std::remainder(a, kTwoPi); }

// Winding of f around the circle |c - center| = r, refining arcs where arg jumps.
int winding_on_circle(const std::function<cplx(cplx)>& f, cplx center, double r) {
    auto value = [&](double th) { return f(center + r * std::polar(1.0, th)); };
    double total = 0.0;
    std::function<void(double, double, cplx, cplx, int)> arc = [&](double t0, double t1, cplx f0, cplx f1, int depth) {
        double step = wrap(std::arg(f1) - std::arg(f0));
        if (std::abs(step) > M_PI / 3.0 && depth < 6) {
            double tm = 0.5 * (t0 + t1);
            cplx fm = value(tm);
            arc(t0, tm, f0, fm, depth + 1);
            arc(tm, t1, fm, f1, depth + 1);
            return;
        }
        total += step;
    };
    const int n = 16;
    cplx first = value(0.0), prev = first;
    for (int k = 1; k <= n; ++k) {
        double t0 = kTwoPi * (k - 1) / n, t1 = kTwoPi * k / n;
        cplx cur = k == n ? first : value(t1);
        arc(t0, t1, prev, cur, 0);
        prev = cur;
    }
    return static_cast<int>(std::lround(total / kTwoPi));
}

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

std::string format_complex(cplx z) {
    std::ostringstream os;
    os << std::setprecision(17) << z.real() << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag()) << "i";
    return os.str();
}

} // namespace

ScanGrid scan(const FuchsianGroup& g, const CuspForm4& form, const GridSpec& spec, const ScanParams& params) {
    if (spec.nx < 1 || spec.ny < 1 || spec.nx > 101 || spec.ny > 101)
        throw precondition_error("grid too large", "scan grid must have between 1 and 101 cells per side");
    if (!(spec.spacing > 0.0)) throw precondition_error("spacing out of range", "grid spacing must be positive");
    BrownianEnsemble ens = run_ensemble(g, params.T, params.dt, params.n, params.seed, params.workers);
    ScanGrid out;
    out.spec = spec;
    out.params = params;
    const std::size_t cells = spec.size();
    out.values.assign(cells, kNaN);
    out.stderrs.assign(cells, kNaN);
    out.mask.assign(cells, 1);
    out.parabolicity.assign(cells, kNaN);
    out.reps.assign(cells, Representation{MoebiusMap::identity(), MoebiusMap::identity(), cplx{}});
    out.samples.assign(cells * static_cast<std::size_t>(params.n), kNaN);
    out.errors.assign(cells, "");
    parallel_for(cells, params.workers, [&](std::size_t k) {
        int i = static_cast<int>(k % static_cast<std::size_t>(spec.nx));
        int j = static_cast<int>(k / static_cast<std::size_t>(spec.nx));
        cplx c = spec.at(i, j);
        try {
            Representation rep = rep_at(g, form, c);
            out.reps[k] = rep;
            out.parabolicity[k] = std::abs(trace_sq(rep, "ABab") - 4.0);
            Estimate e = lyapunov_brownian(rep, g, ens);
            std::vector<double> vals = lyapunov_samples(rep, g, ens);
            std::copy(vals.begin(), vals.end(), out.samples.begin() + static_cast<std::ptrdiff_t>(k * vals.size()));
            out.values[k] = e.value;
            out.stderrs[k] = e.stderr_;
            out.mask[k] = 0;
        } catch (const Error& err) {
            out.errors[k] = err.what();
        }
    });
    return out;
}

std::vector<double> laplacian_density(const std::vector<double>& field, const std::vector<unsigned char>& mask,
                                      int nx, int ny, double spacing) {
    auto at = [&](int i, int j) { return static_cast<std::size_t>(j) * nx + i; };
    auto ok = [&](int i, int j) {
        return i >= 0 && j >= 0 && i < nx && j < ny && (mask.empty() || !mask[at(i, j)]) && std::isfinite(field[at(i, j)]);
    };
    std::vector<double> lap(field.size(), kNaN);
    for (int j = 1; j + 1 < ny; ++j)
        for (int i = 1; i + 1 < nx; ++i) {
            if (!(ok(i, j) && ok(i - 1, j) && ok(i + 1, j) && ok(i, j - 1) && ok(i, j + 1))) continue;
            lap[at(i, j)] = (field[at(i - 1, j)] + field[at(i + 1, j)] + field[at(i, j - 1)] + field[at(i, j + 1)] -
                             4.0 * field[at(i, j)]) /
                            (spacing * spacing);
        }
    std::vector<double> out(field.size(), kNaN);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            double sum = 0.0;
            bool full = true;
            for (int dj = -1; dj <= 1 && full; ++dj)
                for (int di = -1; di <= 1; ++di) {
                    int a = i + di, b = j + dj;
                    if (a < 0 || b < 0 || a >= nx || b >= ny || !std::isfinite(lap[at(a, b)])) {
                        full = false;
                        break;
                    }
                    sum += lap[at(a, b)];
                }
            if (full) out[at(i, j)] = sum / 9.0;
        }
    return out;
}

std::vector<double> laplacian_density(const ScanGrid& grid) {
    return laplacian_density(grid.values, grid.mask, grid.spec.nx, grid.spec.ny, grid.spec.spacing);
}

std::vector<double> density_noise_floor(const ScanGrid& grid, int resamples, std::uint64_t seed) {
    if (resamples < 2) throw precondition_error("resamples out of range", "need at least two bootstrap resamples");
    const std::size_t cells = grid.spec.size();
    const std::size_t n = static_cast<std::size_t>(grid.params.n);
    Rng rng(splitmix64(seed));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<double> sum(cells, 0.0), sum2(cells, 0.0);
    std::vector<int> hits(cells, 0);
    std::vector<double> field(cells);
    std::vector<std::size_t> draw(n);
    for (int r = 0; r < resamples; ++r) {
        for (auto& d : draw) d = pick(rng);
        for (std::size_t k = 0; k < cells; ++k) {
            if (grid.mask[k]) {
                field[k] = kNaN;
                continue;
            }
            double s = 0.0;
            for (std::size_t d : draw) s += grid.samples[k * n + d];
            field[k] = s / static_cast<double>(n);
        }
        auto dens = laplacian_density(field, grid.mask, grid.spec.nx, grid.spec.ny, grid.spec.spacing);
        for (std::size_t k = 0; k < cells; ++k)
            if (std::isfinite(dens[k])) {
                sum[k] += dens[k];
                sum2[k] += dens[k] * dens[k];
                ++hits[k];
            }
    }
    std::vector<double> out(cells, kNaN);
    for (std::size_t k = 0; k < cells; ++k)
        if (hits[k] > 1) {
            double m = sum[k] / hits[k];
            out[k] = std::sqrt(std::max(0.0, (sum2[k] - hits[k] * m * m) / (hits[k] - 1)));
        }
    return out;
}

cplx trace_function(const FuchsianGroup& g, const CuspForm4& form, const std::string& word, cplx t, cplx c) {
    return trace_sq(rep_at(g, form, c), word) - t;
}

double cauchy_riemann_residual(const FuchsianGroup& g, const CuspForm4& form, const std::string& word, cplx t, cplx c,
                               double h) {
    auto f = [&](cplx z) { return trace_function(g, form, word, t, z); };
    cplx fx = (f(c + h) - f(c - h)) / (2.0 * h);
    cplx fy = (f(c + cplx(0, h)) - f(c - cplx(0, h))) / (2.0 * h);
    double scale = std::max({std::abs(fx), std::abs(fy), 1e-300});
    return std::abs(fx + cplx(0, 1) * fy) / scale;
}

TraceLocus trace_locus(const FuchsianGroup& g, const CuspForm4& form, const ScanGrid& grid, const GroupElement& word,
                       cplx t) {
    if (!(std::abs(word.matrix.trace()) > 2.0 + 1e-9) || word.word.empty())
        throw precondition_error("word not hyperbolic", "trace locus needs a word hyperbolic at c = 0");
    const GridSpec& sp = grid.spec;
    TraceLocus out{word, t, {}, {}, 0};
    auto f = [&](cplx c) { return trace_function(g, form, word.word, t, c); };

    std::vector<cplx> seeds;
    std::vector<cplx> fv(sp.size(), cplx(kNaN, kNaN));
    for (std::size_t k = 0; k < sp.size(); ++k)
        if (!grid.mask[k]) fv[k] = trace_sq(grid.reps[k], word.word) - t;
    for (int j = 0; j + 1 < sp.ny; ++j)
        for (int i = 0; i + 1 < sp.nx; ++i) {
            std::array<std::size_t, 4> corner{sp.index(i, j), sp.index(i + 1, j), sp.index(i + 1, j + 1),
                                              sp.index(i, j + 1)};
            bool usable = true;
            for (auto k : corner) usable = usable && !grid.mask[k];
            if (!usable) continue;
            double wind = 0.0;
            bool re_pos = false, re_neg = false, im_pos = false, im_neg = false;
            for (int e = 0; e < 4; ++e) {
                cplx a = fv[corner[static_cast<std::size_t>(e)]], b = fv[corner[static_cast<std::size_t>((e + 1) % 4)]];
                wind += wrap(std::arg(b) - std::arg(a));
                (a.real() >= 0 ? re_pos : re_neg) = true;
                (a.imag() >= 0 ? im_pos : im_neg) = true;
            }
            if (std::abs(wind) > M_PI || (re_pos && re_neg && im_pos && im_neg))
                seeds.push_back(sp.at(i, j) + 0.5 * sp.spacing * cplx(1.0, 1.0));
        }

    const double lo_re = sp.origin.real(), hi_re = sp.at(sp.nx - 1, 0).real();
    const double lo_im = sp.origin.imag(), hi_im = sp.at(0, sp.ny - 1).imag();
    auto inside = [&](cplx c) {
        return c.real() >= lo_re && c.real() <= hi_re && c.imag() >= lo_im && c.imag() <= hi_im;
    };
    const double h = 1e-5;
    for (cplx c : seeds) {
        bool converged = false;
        try {
            for (int it = 0; it < 40; ++it) {
                cplx fc = f(c);
                if (std::abs(fc) < 1e-9) {
                    converged = true;
                    break;
                }
                cplx df = (f(c + h) - f(c - h)) / (2.0 * h);
                if (std::abs(df) == 0.0) break;
                cplx step = fc / df;
                if (std::abs(step) > sp.spacing) step *= sp.spacing / std::abs(step);
                c -= step;
                if (std::abs(c - sp.origin) > 10.0 * sp.spacing * (sp.nx + sp.ny)) break;
            }
            if (!converged && std::abs(f(c)) < 1e-6) converged = true;
        } catch (const Error&) {
            converged = false;
        }
        if (!converged) {
            ++out.stalled;
            continue;
        }
        if (!inside(c)) continue;
        bool dup = false;
        for (cplx p : out.points) dup = dup || std::abs(p - c) < sp.spacing / 10.0;
        if (!dup) out.points.push_back(c);
    }
    std::sort(out.points.begin(), out.points.end(),
              [](cplx a, cplx b) { return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag(); });
    for (cplx p : out.points) {
        double r = sp.spacing / 4.0;
        for (cplx q : out.points)
            if (q != p) r = std::min(r, 0.3 * std::abs(q - p));
        out.multiplicities.push_back(std::max(1, winding_on_circle(f, p, r)));
    }
    return out;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw precondition_error("size mismatch", "spearman needs paired data");
    auto rx = ranks(x), ry = ranks(y);
    double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / rx.size();
    double my = std::accumulate(ry.begin(), ry.end(), 0.0) / ry.size();
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    return sxx > 0 && syy > 0 ? sxy / std::sqrt(sxx * syy) : 0.0;
}

EquidistributionReport equidistribution_compare(const std::vector<TraceLocus>& loci, const std::vector<double>& density,
                                                const GridSpec& spec) {
    constexpr int kBins = 10;
    auto coarse = [&](cplx c) -> int {
        double u = (c.real() - spec.origin.real() + 0.5 * spec.spacing) / (spec.nx * spec.spacing);
        double v = (c.imag() - spec.origin.imag() + 0.5 * spec.spacing) / (spec.ny * spec.spacing);
        if (u < 0 || v < 0 || u >= 1 || v >= 1) return -1;
        return static_cast<int>(v * kBins) * kBins + static_cast<int>(u * kBins);
    };
    std::vector<double> ref(kBins * kBins, 0.0);
    for (int j = 0; j < spec.ny; ++j)
        for (int i = 0; i < spec.nx; ++i) {
            double d = density[spec.index(i, j)];
            int b = coarse(spec.at(i, j));
            if (std::isfinite(d) && b >= 0) ref[static_cast<std::size_t>(b)] += d / kTwoPi * spec.spacing * spec.spacing;
        }
    EquidistributionReport rep;
    std::vector<double> lengths, tvs;
    for (const auto& locus : loci) {
        EquidistributionRow row;
        row.word = locus.word.word;
        row.length = translation_length(locus.word.matrix);
        std::vector<double> mu(kBins * kBins, 0.0);
        for (std::size_t k = 0; k < locus.points.size(); ++k) {
            int b = coarse(locus.points[k]);
            if (b < 0) continue;
            double m = locus.multiplicities[k] / (4.0 * row.length);
            mu[static_cast<std::size_t>(b)] += m;
            row.mass += m;
        }
        for (std::size_t b = 0; b < mu.size(); ++b) row.tv += 0.5 * std::abs(mu[b] - ref[b]);
        lengths.push_back(row.length);
        tvs.push_back(row.tv);
        rep.rows.push_back(row);
    }
    rep.spearman = loci.size() >= 2 ? spearman(lengths, tvs) : 0.0;
    return rep;
}

std::string scan_csv(const ScanGrid& grid) {
    std::ostringstream os;
    os << std::setprecision(17) << "re_c,im_c,chi,stderr,mask\n";
    for (int j = 0; j < grid.spec.ny; ++j)
        for (int i = 0; i < grid.spec.nx; ++i) {
            std::size_t k = grid.spec.index(i, j);
            cplx c = grid.spec.at(i, j);
            os << c.real() << ',' << c.imag() << ',' << grid.values[k] << ',' << grid.stderrs[k] << ','
               << static_cast<int>(grid.mask[k]) << '\n';
        }
    return os.str();
}

std::string loci_csv(const std::vector<TraceLocus>& loci) {
    std::ostringstream os;
    os << std::setprecision(17) << "re_c,im_c,mult,word,t\n";
    for (const auto& l : loci)
        for (std::size_t k = 0; k < l.points.size(); ++k)
            os << l.points[k].real() << ',' << l.points[k].imag() << ',' << l.multiplicities[k] << ',' << l.word.word
               << ',' << format_complex(l.t) << '\n';
    return os.str();
}

namespace {

void write_text(const std::string& text, const std::string& path) {
    std::ofstream os(path);
    os << text;
    if (!os) throw precondition_error("unwritable output", "cannot write " + path);
}

} // namespace

void write_scan_csv(const ScanGrid& grid, const std::string& path) { write_text(scan_csv(grid), path); }

void write_loci_csv(const std::vector<TraceLocus>& loci, const std::string& path) { write_text(loci_csv(loci), path); }

} // namespace projlab

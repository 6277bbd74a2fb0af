#include "projlab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "projlab/parallel.hpp"

namespace projlab {

namespace {

constexpr double kTwoPi = 6.283185307179586;

// Paths whose log singular gap falls below this are redrawn.
constexpr double kDegenerateLogGap = 2.0;
// Below this median log gap the sample is flagged as under-converged.
constexpr double kWarnLogGap = 10.0;

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

// Fixed points of a Moebius map as homogeneous vectors; empty for +-identity.
std::vector<SpherePoint> fixed_points(const MoebiusMap& m) {
    std::vector<SpherePoint> out;
    cplx tr = m.trace();
    cplx disc = std::sqrt(tr * tr - 4.0);
    for (cplx lam : {(tr + disc) / 2.0, (tr - disc) / 2.0}) {
        cplx v1 = m.b(), v2 = lam - m.a();
        if (std::abs(v1) + std::abs(v2) < 1e-12) {
            v1 = lam - m.d();
            v2 = m.c();
        }
        if (std::abs(v1) + std::abs(v2) < 1e-12) return {};
        out.emplace_back(v1, v2);
    }
    return out;
}

bool fixes(const MoebiusMap& m, const SpherePoint& p) { return sphere_distance(apply(m, p), p) < 1e-6; }

void require_non_elementary(const Representation& rep) {
    if (!is_non_elementary(rep))
        throw precondition_error("elementary representation", "holonomy must be non-elementary");
}

} // namespace

std::string Estimate::to_json() const {
    nlohmann::ordered_json j;
    j["value"] = value;
    j["stderr"] = stderr_;
    j["n"] = n;
    nlohmann::ordered_json p = nlohmann::ordered_json::object();
    for (const auto& [k, v] : params) p[k] = v;
    for (const auto& [k, v] : notes) p[k] = v;
    j["params"] = p;
    return j.dump();
}

Estimate summarize(const std::vector<double>& values) {
    if (values.empty()) throw precondition_error("empty sample", "cannot summarize an empty sample");
    Estimate e;
    e.n = static_cast<int>(values.size());
    double mean = std::accumulate(values.begin(), values.end(), 0.0) / e.n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    e.value = mean;
    e.stderr_ = e.n > 1 ? std::sqrt(ss / (e.n - 1)) / std::sqrt(static_cast<double>(e.n)) : 0.0;
    return e;
}

bool is_non_elementary(const Representation& rep) {
    bool loxodromic = false;
    for (const char* w : {"A", "B", "AB", "Ab"}) {
        cplx t2 = rep.evaluate(w).trace_squared();
        if (std::abs(t2.imag()) > 1e-9 || t2.real() < -1e-9 || t2.real() > 4.0 + 1e-9) loxodromic = true;
    }
    if (!loxodromic) return false;
    auto fa = fixed_points(rep.rho_a);
    if (fa.empty()) return false;
    for (const auto& p : fa)
        if (fixes(rep.rho_b, p)) return false;
    return true;
}

std::vector<double> lyapunov_samples(const Representation& rep, const FuchsianGroup& g, const BrownianEnsemble& e) {
    std::vector<double> out(e.words.size());
    for (std::size_t i = 0; i < e.words.size(); ++i) out[i] = rep.log_norm(e.words[i], g.base_point()) / e.T;
    return out;
}

Estimate lyapunov_brownian(const Representation& rep, const FuchsianGroup& g, const BrownianEnsemble& e) {
    require_non_elementary(rep);
    if (!(e.T > 0.0)) throw precondition_error("T out of range", "Lyapunov estimate needs T > 0");
    Estimate est = summarize(lyapunov_samples(rep, g, e));
    est.params = {{"T", e.T}, {"dt", e.dt}, {"seed", static_cast<double>(e.seed)},
                  {"c_re", rep.c.real()}, {"c_im", rep.c.imag()}};
    est.notes["estimator"] = "brownian";
    return est;
}

Estimate lyapunov_brownian(const Representation& rep, const FuchsianGroup& g, double T, int n, double dt,
                           std::uint64_t seed, int workers) {
    require_non_elementary(rep);
    if (!(T > 0.0)) throw precondition_error("T out of range", "Lyapunov estimate needs T > 0");
    return lyapunov_brownian(rep, g, run_ensemble(g, T, dt, n, seed, workers));
}

Estimate lyapunov_ball(const Representation& rep, const FuchsianGroup& g, const std::vector<GroupElement>& ball,
                       int n, std::uint64_t seed) {
    require_non_elementary(rep);
    if (n <= 0) throw precondition_error("n out of range", "number of draws must be positive");
    std::vector<const GroupElement*> pool;
    for (const auto& el : ball)
        if (!el.word.empty()) pool.push_back(&el);
    if (pool.empty()) throw precondition_error("empty ball", "ball contains only the identity");
    Rng rng = make_stream(seed, 0);
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    const HalfPlanePoint& b = g.base_point();
    std::vector<double> vals(static_cast<std::size_t>(n));
    for (auto& v : vals) {
        const GroupElement& el = *pool[pick(rng)];
        double d = hyp_distance(b, apply(el.matrix, b));
        v = rep.log_norm(el.word, b) / d;
    }
    Estimate est = summarize(vals);
    est.params = {{"seed", static_cast<double>(seed)}, {"ball_size", static_cast<double>(pool.size())},
                  {"c_re", rep.c.real()}, {"c_im", rep.c.imag()}};
    est.notes["estimator"] = "ball";
    return est;
}

Estimate lyapunov_ball(const Representation& rep, const FuchsianGroup& g, double R, int n, std::uint64_t seed) {
    if (!(R <= 14.0)) throw precondition_error("R out of range", "ball radius must be <= 14");
    require_non_elementary(rep);
    Estimate est = lyapunov_ball(rep, g, enumerate_ball(g, R), n, seed);
    est.params["R"] = R;
    return est;
}

std::vector<HalfPlanePoint> default_centers() {
    return {HalfPlanePoint(0.0, 2.0), HalfPlanePoint(0.4, 1.6), HalfPlanePoint(-0.3, 2.5)};
}

std::vector<SpherePoint> default_targets() {
    return {SpherePoint::from_complex({0.0, -1.0}), SpherePoint::from_complex({0.5, -2.0}),
            SpherePoint::from_complex({-1.0, -0.5})};
}

Estimate degree_estimate(const PreimageCounter& counter, double R, const std::vector<HalfPlanePoint>& centers,
                         const std::vector<SpherePoint>& zs) {
    if (!(R >= 6.0 && R <= 12.0)) throw precondition_error("R out of range", "degree estimate needs 6 <= R <= 12");
    if (centers.empty() || zs.empty()) throw precondition_error("empty input", "need centers and targets");
    const double vol = 4.0 * M_PI * std::sinh(R / 2.0) * std::sinh(R / 2.0);
    std::vector<double> vals;
    for (const auto& x : centers)
        for (const auto& z : zs) {
            long k = 0;
            for (const auto& h : counter.cell_counts(z, x, R)) k += h.count;
            vals.push_back(static_cast<double>(k) / vol);
        }
    Estimate est = summarize(vals);
    est.params = {{"R", R}, {"deg", kTwoPi * est.value}, {"deg_stderr", kTwoPi * est.stderr_},
                  {"n_centers", static_cast<double>(centers.size())}, {"n_targets", static_cast<double>(zs.size())}};
    return est;
}

Estimate degree_estimate(const ProjectiveStructure& s, double R, const std::vector<HalfPlanePoint>& centers,
                         const std::vector<SpherePoint>& zs) {
    if (!(R >= 6.0 && R <= 12.0)) throw precondition_error("R out of range", "degree estimate needs 6 <= R <= 12");
    PreimageCounter counter(s, R);
    Estimate est = degree_estimate(counter, R, centers, zs);
    est.params["c_re"] = s.c().real();
    est.params["c_im"] = s.c().imag();
    return est;
}

NevanlinnaFit nevanlinna_slope(const PreimageCounter& counter, const std::vector<HalfPlanePoint>& centers,
                               const std::vector<SpherePoint>& zs, double R_lo, double R_hi, int points) {
    if (!(R_lo > 0.0 && R_hi > R_lo) || points < 2)
        throw precondition_error("bad radii", "Nevanlinna fit needs 0 < R_lo < R_hi and two radii");
    NevanlinnaFit fit;
    fit.N.assign(static_cast<std::size_t>(points), 0.0);
    for (int k = 0; k < points; ++k) {
        double R = R_lo + (R_hi - R_lo) * k / (points - 1);
        double r = std::tanh(R / 2.0);
        fit.r.push_back(r);
        fit.log_inv.push_back(-std::log1p(-r));
    }
    double pairs = 0.0;
    for (const auto& x : centers)
        for (const auto& z : zs) {
            auto hits = counter.cell_counts(z, x, R_hi);
            for (int k = 0; k < points; ++k) fit.N[static_cast<std::size_t>(k)] += nevanlinna_N(hits, fit.r[static_cast<std::size_t>(k)]);
            pairs += 1.0;
        }
    for (auto& v : fit.N) v /= pairs;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int k = 0; k < points; ++k) {
        double x = fit.log_inv[static_cast<std::size_t>(k)], y = fit.N[static_cast<std::size_t>(k)];
        sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    fit.slope = (points * sxy - sx * sy) / (points * sxx - sx * sx);
    fit.intercept = (sy - fit.slope * sx) / points;
    return fit;
}

HarmonicSample sample_harmonic(const Representation& rep, const FuchsianGroup& g, double T, int n, double dt,
                               std::uint64_t seed, const std::string& start, int workers) {
    require_non_elementary(rep);
    if (n <= 0) throw precondition_error("n out of range", "sample size must be positive");
    if (!(T > 0.0)) throw precondition_error("T out of range", "harmonic sampling needs T > 0");
    HarmonicSample h;
    h.T = T;
    h.c = rep.c;
    h.x = HalfPlanePoint(act(g.evaluate(start), g.base_point().value()));
    h.points.resize(static_cast<std::size_t>(n), SpherePoint::infinity());
    std::vector<double> gaps(static_cast<std::size_t>(n));
    std::vector<int> redraws(static_cast<std::size_t>(n), 0);
    TrackedPath origin;
    origin.dt = dt;
    origin.times = {0.0};
    origin.points = {g.base_point()};
    origin.deck_word = free_reduce(start);
    parallel_for(static_cast<std::size_t>(n), workers, [&](std::size_t i) {
        for (std::uint64_t attempt = 0;; ++attempt) {
            std::uint64_t s = attempt == 0 ? stream_seed(seed, i) : stream_seed(seed ^ splitmix64(attempt), i);
            TrackedPath p = run_from(g, origin, T, s, false);
            LogNormProduct prod = rep.product(p.deck_word);
            // sigma_1 sigma_2 = 1, so log(sigma_1 / sigma_2) ~ 2 log ||M||_F for large norms.
            double log_gap = 2.0 * prod.log_frobenius() - std::log(2.0);
            if (log_gap < kDegenerateLogGap) {
                ++redraws[i];
                continue;
            }
            h.points[i] = attracting_direction(prod.scaled());
            gaps[i] = log_gap;
            return;
        }
    });
    h.resampled = std::accumulate(redraws.begin(), redraws.end(), 0);
    h.median_log_gap = median(gaps);
    return h;
}

std::array<double, 3> sphere_coordinates(const SpherePoint& p) {
    // (z1, z2) unit-normalized: Hopf map to the unit sphere, so |X - Y| is the chordal distance.
    cplx z1 = p.z1(), z2 = p.z2();
    cplx w = 2.0 * z1 * std::conj(z2);
    return {w.real(), w.imag(), std::norm(z1) - std::norm(z2)};
}

namespace {

constexpr double kLogRMin = -12.0;
constexpr double kLogRMax = 0.30103;  // log10(2)
constexpr int kBinsPerDecade = 20;
constexpr int kBlocks = 20;
constexpr int kBootstrap = 200;
constexpr double kMinPairs = 200.0;
// Local slopes are chords of one, two or three decades, the shortest that admits a window:
// the correlation integral of a non-Fuchsian sample oscillates log-periodically, with a
// period that depends on c and can reach two decades.
constexpr int kSlopeHalfWidths[] = {10, 20, 30};
constexpr double kMinWindowDecades = 1.0;

int bin_count() { return static_cast<int>(std::ceil((kLogRMax - kLogRMin) * kBinsPerDecade)) + 1; }

int bin_of(double r) {
    if (r <= 0.0) return 0;
    double t = (std::log10(r) - kLogRMin) * kBinsPerDecade;
    if (t <= 0.0) return 0;
    return std::min(bin_count() - 1, static_cast<int>(std::ceil(t)));
}

double edge(int k) { return kLogRMin + static_cast<double>(k) / kBinsPerDecade; }

std::vector<double> cumulative(const std::vector<double>& hist) {
    std::vector<double> c(hist.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < hist.size(); ++k) c[k] = acc += hist[k];
    return c;
}

double fit_slope(const std::vector<double>& cum, int lo, int hi) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (int k = lo; k <= hi; ++k) {
        double x = edge(k), y = std::log10(cum[static_cast<std::size_t>(k)]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

} // namespace

Estimate dimension_estimate(const std::vector<SpherePoint>& points, std::uint64_t bootstrap_seed) {
    const std::size_t n = points.size();
    if (n < 2000) throw precondition_error("sample too small", "dimension estimate needs at least 2000 points");
    std::vector<std::array<double, 3>> xyz(n);
    for (std::size_t i = 0; i < n; ++i) xyz[i] = sphere_coordinates(points[i]);
    const int nb = bin_count();
    auto block_of = [&](std::size_t i) { return static_cast<int>(i * kBlocks / n); };
    // hist[b1][b2] over unordered block pairs b1 <= b2.
    std::vector<std::vector<double>> hist(kBlocks * kBlocks, std::vector<double>(static_cast<std::size_t>(nb), 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        int bi = block_of(i);
        for (std::size_t j = i + 1; j < n; ++j) {
            double dx = xyz[i][0] - xyz[j][0], dy = xyz[i][1] - xyz[j][1], dz = xyz[i][2] - xyz[j][2];
            double r = std::sqrt(dx * dx + dy * dy + dz * dz);
            int bj = block_of(j);
            hist[static_cast<std::size_t>(std::min(bi, bj) * kBlocks + std::max(bi, bj))]
                [static_cast<std::size_t>(bin_of(r))] += 1.0;
        }
    }
    auto combine = [&](const std::vector<int>& mult) {
        std::vector<double> h(static_cast<std::size_t>(nb), 0.0);
        for (int a = 0; a < kBlocks; ++a)
            for (int b = a; b < kBlocks; ++b) {
                double w = static_cast<double>(mult[static_cast<std::size_t>(a)]) * mult[static_cast<std::size_t>(b)];
                if (w == 0.0) continue;
                const auto& src = hist[static_cast<std::size_t>(a * kBlocks + b)];
                for (int k = 0; k < nb; ++k) h[static_cast<std::size_t>(k)] += w * src[static_cast<std::size_t>(k)];
            }
        return cumulative(h);
    };
    std::vector<double> cum = combine(std::vector<int>(kBlocks, 1));

    // Widest run of edges whose local slopes vary by less than 10%.
    int best_lo = -1, best_hi = -1, chord = 0;
    for (int half : kSlopeHalfWidths) {
        std::vector<double> slope(static_cast<std::size_t>(nb), std::nan(""));
        for (int k = half; k + half < nb; ++k) {
            double lo = cum[static_cast<std::size_t>(k - half)];
            double hi = cum[static_cast<std::size_t>(k + half)];
            if (lo < kMinPairs) continue;
            slope[static_cast<std::size_t>(k)] =
                (std::log10(hi) - std::log10(lo)) / (edge(k + half) - edge(k - half));
        }
        for (int lo = 0; lo < nb; ++lo) {
            if (std::isnan(slope[static_cast<std::size_t>(lo)])) continue;
            double smin = slope[static_cast<std::size_t>(lo)], smax = smin, sum = 0.0;
            for (int hi = lo; hi < nb; ++hi) {
                double s = slope[static_cast<std::size_t>(hi)];
                if (std::isnan(s)) break;
                smin = std::min(smin, s);
                smax = std::max(smax, s);
                sum += s;
                double mean = sum / (hi - lo + 1);
                if (smax - smin > 0.1 * std::max(std::abs(mean), 0.1)) break;
                if (hi - lo > best_hi - best_lo) {
                    best_lo = lo;
                    best_hi = hi;
                }
            }
        }
        if (best_lo >= 0 && (best_hi - best_lo) >= kMinWindowDecades * kBinsPerDecade) {
            chord = half;
            break;
        }
        best_lo = best_hi = -1;
    }
    if (chord == 0) throw numerical_error("no scaling window", "correlation integral has no window of stable slope");

    Estimate est;
    est.n = static_cast<int>(n);
    est.value = fit_slope(cum, best_lo, best_hi);
    Rng rng(splitmix64(bootstrap_seed));
    std::uniform_int_distribution<int> pick(0, kBlocks - 1);
    std::vector<double> boot;
    for (int b = 0; b < kBootstrap; ++b) {
        std::vector<int> mult(kBlocks, 0);
        for (int k = 0; k < kBlocks; ++k) ++mult[static_cast<std::size_t>(pick(rng))];
        auto c = combine(mult);
        if (c[static_cast<std::size_t>(best_lo)] <= 0.0) continue;
        boot.push_back(fit_slope(c, best_lo, best_hi));
    }
    Estimate bs = summarize(boot);
    est.stderr_ = bs.stderr_ * std::sqrt(static_cast<double>(bs.n));  // bootstrap standard deviation
    est.params = {{"r_lo", std::pow(10.0, edge(best_lo))}, {"r_hi", std::pow(10.0, edge(best_hi))},
                  {"blocks", kBlocks}, {"bootstrap", static_cast<double>(bs.n)},
                  {"chord_decades", static_cast<double>(2 * chord) / kBinsPerDecade}};
    est.notes["caveat"] = "correlation dimension; a lower bound for the Hausdorff dimension of exact-dimensional measures";
    return est;
}

Estimate dimension_estimate(const HarmonicSample& h) {
    Estimate est = dimension_estimate(h.points);
    est.params["T"] = h.T;
    est.params["c_re"] = h.c.real();
    est.params["c_im"] = h.c.imag();
    return est;
}

double predict_chi(double delta, int k) {
    if (!(delta >= 0.0)) throw precondition_error("negative delta", "predict_chi requires delta >= 0");
    if (k < 0) throw precondition_error("negative k", "branch count must be nonnegative");
    return 0.5 + kTwoPi * delta - static_cast<double>(k);
}

double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
    if (sample.empty()) throw precondition_error("empty sample", "KS statistic needs data");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        double f = cdf(sample[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}

double ks_two_sample(std::vector<double> x, std::vector<double> y) {
    if (x.empty() || y.empty()) throw precondition_error("empty sample", "KS statistic needs data");
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] <= v) ++i;
        while (j < y.size() && y[j] <= v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / x.size() - static_cast<double>(j) / y.size()));
    }
    return d;
}

double ks_two_sample_pvalue(double d, std::size_t n, std::size_t m) {
    double ne = static_cast<double>(n) * m / (static_cast<double>(n) + m);
    double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
    if (lambda < 0.2) return 1.0;
    double q = 0.0;
    for (int j = 1; j <= 100; ++j) {
        double term = std::exp(-2.0 * j * j * lambda * lambda);
        q += (j % 2 ? 2.0 : -2.0) * term;
        if (term < 1e-16) break;
    }
    return std::clamp(q, 0.0, 1.0);
}

} // namespace projlab

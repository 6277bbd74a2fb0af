#include "projlab/autoform.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include <Eigen/Dense>

#include "json.hpp"

namespace projlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kFourierTerms = 60;
constexpr double kSampleHeight = 0.1;
constexpr int kSamplePoints = 240;

} // namespace

MoebiusMap to_cusp_coordinates(const FuchsianGroup& group, const MoebiusMap& m) {
    const MoebiusMap& n = group.cusp_normalizer();
    return n * m * n.inverse();
}

cplx CuspForm4::raw_series(cplx w, double max_displacement) const {
    cplx sum = 0.0;
    const cplx twopi_im{0.0, kTwoPi * mode_};
    for (const auto& g : cosets_) {
        if (g.displacement > max_displacement) continue;
        cplx j = g.c * w + g.d;
        cplx gw = (g.a * w + g.b) / j;
        cplx j2 = j * j;
        sum += std::exp(twopi_im * gw) / (j2 * j2);
    }
    return sum;
}

namespace {

// The truncated series is accurate near the Ford domain; the form itself has period 1.
cplx to_strip(cplx w) { return {w.real() - std::round(w.real()), w.imag()}; }

} // namespace

cplx CuspForm4::evaluate(cplx w) const {
    if (!(w.imag() >= 0.05))
        throw precondition_error("too deep", "direct series needs Im w >= 0.05 in cusp coordinates");
    return raw_series(to_strip(w), r_trunc_);
}

cplx CuspForm4::partial_sum(cplx w, double R) const {
    if (!(w.imag() >= 0.05))
        throw precondition_error("too deep", "direct series needs Im w >= 0.05 in cusp coordinates");
    if (!(R <= r_trunc_)) throw precondition_error("radius beyond truncation", "partial sums stop at R_trunc");
    return raw_series(to_strip(w), R);
}

double CuspForm4::tail_bound(cplx w) const {
    // Shell contributions between successive truncation radii shrink geometrically; the
    // omitted tail is bounded by the last shell times ratio / (1 - ratio).
    cplx shell0 = 0.0, shell1 = 0.0;
    const cplx twopi_im{0.0, kTwoPi * mode_};
    for (const auto& g : cosets_) {
        if (g.displacement <= r_trunc_ - 4.0) continue;
        cplx j = g.c * w + g.d;
        cplx j2 = j * j;
        cplx term = std::exp(twopi_im * ((g.a * w + g.b) / j)) / (j2 * j2);
        (g.displacement > r_trunc_ - 2.0 ? shell0 : shell1) += term;
    }
    double ratio = std::abs(shell1) > 0.0 ? std::min(std::abs(shell0) / std::abs(shell1), 0.5) : 0.5;
    return std::abs(shell0) * ratio / (1.0 - ratio);
}

double CuspForm4::floor_height(double x) const {
    double h = 0.0;
    for (double c : arc_centers_) {
        double dx = x - c;
        if (std::abs(dx) < arc_radius_) h = std::max(h, std::sqrt(arc_radius_ * arc_radius_ - dx * dx));
    }
    return h;
}

MoebiusMap CuspForm4::ford_reduce(cplx w, cplx& reduced) const {
    Mat2 acc{};
    for (int step = 0; step < 100000; ++step) {
        double shift = std::round(w.real());
        if (shift != 0.0) {
            w -= shift;
            acc = Mat2{1.0, -shift, 0.0, 1.0} * acc;
        }
        std::size_t best = arc_maps_.size();
        double best_abs = 1.0 - 1e-13;
        for (std::size_t i = 0; i < arc_maps_.size(); ++i) {
            if (std::abs(w.real() - arc_centers_[i]) > arc_radius_) continue;
            const Mat2& m = arc_maps_[i].matrix();
            double j = std::abs(m.c * w + m.d);
            if (j < best_abs) {
                best_abs = j;
                best = i;
            }
        }
        if (best == arc_maps_.size()) {
            reduced = w;
            return MoebiusMap(acc);
        }
        const Mat2& m = arc_maps_[best].matrix();
        w = (m.a * w + m.b) / (m.c * w + m.d);
        acc = m * acc;
    }
    throw numerical_error("non-termination", "Ford reduction did not terminate");
}

cplx CuspForm4::fourier_sum(cplx w, cplx* derivative) const {
    cplx q = std::exp(cplx{0.0, kTwoPi} * w);
    cplx f = 0.0, df = 0.0;
    for (std::size_t k = fourier_.size(); k-- > 0;) {
        double n = static_cast<double>(k + 1);
        f = f * q + fourier_[k];
        df = df * q + n * fourier_[k];
    }
    f *= q;
    df *= q;
    if (derivative) *derivative = cplx{0.0, kTwoPi} * df;
    return f;
}

cplx CuspForm4::value(cplx w) const {
    cplx f, df;
    value_and_derivative(w, f, df);
    return f;
}

void CuspForm4::value_and_derivative(cplx w, cplx& f, cplx& df) const {
    cplx wr;
    MoebiusMap g = ford_reduce(w, wr);
    // f(w) = f(g w) (c w + d)^-4 with (g w)' = (c w + d)^-2.
    cplx j = g.c() * w + g.d();
    cplx j2 = j * j, j4 = j2 * j2;
    cplx dfr;
    cplx fr = fourier_sum(wr, &dfr);
    f = fr / j4;
    df = dfr / (j4 * j2) - 4.0 * g.c() * fr / (j4 * j);
}

CuspForm4 build(const FuchsianGroup& group, double r_trunc) {
    if (!(r_trunc >= 6.0)) throw precondition_error("truncation too small", "build requires R_trunc >= 6");
    CuspForm4 f;
    f.group_ = &group;
    f.r_trunc_ = r_trunc;

    // Cosets of the cusp stabilizer are determined by the bottom row up to sign.
    const cplx base = group.base_point().value();
    std::map<std::pair<long long, long long>, std::size_t> index;
    for (const auto& e : enumerate_ball(group, r_trunc)) {
        MoebiusMap m = to_cusp_coordinates(group, e.matrix);
        double a = m.a().real(), b = m.b().real(), c = m.c().real(), d = m.d().real();
        if (c < -1e-9 || (std::abs(c) <= 1e-9 && d < 0.0)) {
            a = -a, b = -b, c = -c, d = -d;
        }
        auto key = std::make_pair(std::llround(c * 1e8), std::llround(d * 1e8));
        double disp = hyp_distance(base, act(e.matrix, base));
        auto it = index.find(key);
        if (it == index.end()) {
            index.emplace(key, f.cosets_.size());
            f.cosets_.push_back({a, b, c, d, disp});
        } else {
            auto& slot = f.cosets_[it->second];
            slot.displacement = std::min(slot.displacement, disp);
        }
    }

    // Ford domain: the largest isometric circles |c w + d| = 1 and their translates.
    double cmin = HUGE_VAL;
    for (const auto& g : f.cosets_)
        if (std::abs(g.c) > 1e-9) cmin = std::min(cmin, std::abs(g.c));
    f.arc_radius_ = 1.0 / cmin;
    std::map<long long, MoebiusMap> arcs;
    for (const auto& g : f.cosets_) {
        if (std::abs(std::abs(g.c) - cmin) > 1e-9 * cmin) continue;
        double center = -g.d / g.c;
        for (int shift = -2; shift <= 2; ++shift) {
            // g composed with translation by `shift` has its circle moved by -shift.
            double cs = center - shift;
            if (std::abs(cs) > 0.5 + f.arc_radius_ + 1e-12) continue;
            long long key = std::llround(cs * 1e8);
            if (arcs.count(key)) continue;
            arcs.emplace(key, MoebiusMap(g.a, g.a * shift + g.b, g.c, g.c * shift + g.d));
        }
    }
    for (const auto& [key, m] : arcs) {
        f.arc_maps_.push_back(m);
        f.arc_centers_.push_back(-(m.d() / m.c()).real());
    }
    for (std::size_t i = 0; i + 1 < f.arc_centers_.size(); ++i)
        if (f.arc_centers_[i + 1] - f.arc_centers_[i] >= 2.0 * f.arc_radius_)
            throw numerical_error("broken domain", "isometric circles do not cover the Ford domain floor");

    // Automorphy fit of the Fourier coefficients: for samples w_j below the domain,
    // sum_n a_n (e(n w_j) - J_j^-4 e(n w_j*)) = 0 with w_j* the reduced point.
    const int M = kFourierTerms;
    Eigen::MatrixXcd V(kSamplePoints, M);
    for (int j = 0; j < kSamplePoints; ++j) {
        cplx w{-0.5 + (j + 0.5) / kSamplePoints, kSampleHeight};
        cplx wr;
        MoebiusMap g = f.ford_reduce(w, wr);
        cplx jac = g.c() * w + g.d();
        cplx j4 = jac * jac * jac * jac;
        for (int n = 1; n <= M; ++n) {
            // Columns scaled by e^{2 pi n Y} for conditioning.
            cplx lhs = std::exp(cplx{0.0, kTwoPi * n} * cplx{w.real(), 0.0});
            cplx rhs = std::exp(cplx{0.0, kTwoPi * n} * wr + kTwoPi * n * kSampleHeight) / j4;
            V(j, n - 1) = lhs - rhs;
        }
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(V, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (!(sv(M - 1) < 1e-6 * sv(M - 2)))
        throw numerical_error("degenerate expansion", "automorphy system does not have a 1-dimensional kernel");
    Eigen::VectorXcd kernel = svd.matrixV().col(M - 1);
    f.fourier_.resize(M);
    for (int n = 1; n <= M; ++n) f.fourier_[n - 1] = kernel(n - 1) * std::exp(kTwoPi * n * kSampleHeight);

    // Scale and phase from the Poincare series at points where it is accurate.
    f.raw_sup_norm_ = 1.0;
    // Least-squares ratio over a row of probes; only its phase survives normalization.
    cplx num = 0.0;
    double den = 0.0;
    std::vector<cplx> ratios;
    for (int i = 0; i < 8; ++i) {
        cplx p{-0.5 + (i + 0.5) / 8.0, 0.3};
        cplx direct = f.raw_series(p, r_trunc), fit = f.fourier_sum(p, nullptr);
        num += direct * std::conj(fit);
        den += std::norm(fit);
        ratios.push_back(direct / fit);
    }
    cplx ratio = num / den;
    for (cplx r : ratios)
        if (std::abs(r - ratio) > 1e-3 * std::abs(ratio))
            throw numerical_error("insufficient truncation", "Poincare series and expansion disagree");
    for (auto& a : f.fourier_) a *= ratio;

    // Hyperbolic sup-norm over the Ford domain: grid search then local refinement.
    auto invariant = [&](double x, double y) { return std::abs(f.fourier_sum({x, y}, nullptr)) * y * y; };
    double best = 0.0, bx = 0.0, by = 0.3;
    const double ymin = std::sqrt(f.arc_radius_ * f.arc_radius_ - 0.25 * f.arc_radius_ * f.arc_radius_);
    for (int i = 0; i <= 100; ++i) {
        for (int k = 0; k <= 60; ++k) {
            double x = -0.5 + i / 100.0;
            double y = ymin * std::exp(k * 0.05);
            cplx wr;
            f.ford_reduce({x, y}, wr);
            double v = invariant(wr.real(), wr.imag());
            if (v > best) best = v, bx = wr.real(), by = wr.imag();
        }
    }
    for (double h = 0.01; h > 1e-9; h *= 0.5) {
        bool moved = true;
        while (moved) {
            moved = false;
            for (auto [dx, dy] : {std::pair{h, 0.0}, {-h, 0.0}, {0.0, h}, {0.0, -h}}) {
                cplx wr;
                f.ford_reduce({bx + dx, by + dy}, wr);
                double v = invariant(wr.real(), wr.imag());
                if (v > best) best = v, bx = wr.real(), by = wr.imag(), moved = true;
            }
        }
    }
    f.raw_sup_norm_ = best;

    for (cplx p : {cplx{0.0, 1.0}, cplx{0.0, 2.0}, cplx{1.0, 1.0}}) {
        cplx diff = f.raw_series(p, r_trunc) - f.raw_series(p, r_trunc - 2.0);
        if (std::abs(diff) > 1e-6)
            throw numerical_error("insufficient truncation", "series at R and R - 2 differ by more than 1e-6");
    }
    double tail = 0.0;
    for (int i = 0; i <= 20; ++i) tail = std::max(tail, f.tail_bound({-0.5 + i / 20.0, 0.2}));
    f.tail_estimate_ = tail;
    return f;
}

namespace {

nlohmann::json mat_json(const MoebiusMap& m) {
    nlohmann::json j = nlohmann::json::array();
    for (cplx v : {m.a(), m.b(), m.c(), m.d()}) j.push_back({v.real(), v.imag()});
    return j;
}

MoebiusMap mat_from(const nlohmann::json& j) {
    auto v = [&](int k) { return cplx(j.at(k).at(0).get<double>(), j.at(k).at(1).get<double>()); };
    return MoebiusMap(v(0), v(1), v(2), v(3));
}

} // namespace

std::string CuspForm4::to_json() const {
    nlohmann::json j;
    j["schema"] = 1;
    j["r_trunc"] = r_trunc_;
    j["mode"] = mode_;
    j["tail_estimate"] = tail_estimate_;
    j["sup_norm"] = raw_sup_norm_;
    j["arc_radius"] = arc_radius_;
    j["arc_centers"] = arc_centers_;
    nlohmann::json arcs = nlohmann::json::array();
    for (const auto& m : arc_maps_) arcs.push_back(mat_json(m));
    j["arc_maps"] = arcs;
    nlohmann::json coeffs = nlohmann::json::array();
    for (cplx a : fourier_) coeffs.push_back({a.real(), a.imag()});
    j["fourier"] = coeffs;
    nlohmann::json cos = nlohmann::json::array();
    for (const auto& c : cosets_) cos.push_back({c.a, c.b, c.c, c.d, c.displacement});
    j["cosets"] = cos;
    j["generators"] = {mat_json(group_->gen_a()), mat_json(group_->gen_b())};
    return j.dump();
}

CuspForm4 load_form(const FuchsianGroup& group, const std::string& text) {
    try {
        auto j = nlohmann::json::parse(text);
        if (j.at("schema").get<int>() != 1) throw numerical_error("corrupt cache", "unknown form cache schema");
        if (!mat_from(j.at("generators").at(0)).approx_equal(group.gen_a(), 1e-12) ||
            !mat_from(j.at("generators").at(1)).approx_equal(group.gen_b(), 1e-12))
            throw numerical_error("corrupt cache", "cached form belongs to another group");
        CuspForm4 f;
        f.group_ = &group;
        f.r_trunc_ = j.at("r_trunc").get<double>();
        f.mode_ = j.at("mode").get<int>();
        f.tail_estimate_ = j.at("tail_estimate").get<double>();
        f.raw_sup_norm_ = j.at("sup_norm").get<double>();
        f.arc_radius_ = j.at("arc_radius").get<double>();
        f.arc_centers_ = j.at("arc_centers").get<std::vector<double>>();
        for (const auto& m : j.at("arc_maps")) f.arc_maps_.push_back(mat_from(m));
        for (const auto& a : j.at("fourier")) f.fourier_.emplace_back(a.at(0).get<double>(), a.at(1).get<double>());
        for (const auto& c : j.at("cosets"))
            f.cosets_.push_back({c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>(),
                                 c.at(3).get<double>(), c.at(4).get<double>()});
        if (f.fourier_.empty() || f.arc_maps_.size() != f.arc_centers_.size())
            throw numerical_error("corrupt cache", "form cache is incomplete");
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw numerical_error("corrupt cache", e.what());
    }
}

} // namespace projlab

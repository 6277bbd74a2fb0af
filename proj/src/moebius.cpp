#include "projlab/moebius.hpp"

#include <cmath>

namespace projlab {

namespace {

constexpr double kOverflow = 1e150;

bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

// Unit null vector of H - lam for H = [[p, r], [conj r, q]]. Each row of H - lam gives a
// candidate; the longer one is better conditioned.
void hermitian_eigvec(double p, double q, cplx r, double lam, cplx& v1, cplx& v2) {
    cplx x1{lam - q}, x2 = std::conj(r);
    cplx y1 = r, y2{lam - p};
    if (std::norm(x1) + std::norm(x2) >= std::norm(y1) + std::norm(y2)) {
        v1 = x1;
        v2 = x2;
    } else {
        v1 = y1;
        v2 = y2;
    }
    double n = std::sqrt(std::norm(v1) + std::norm(v2));
    if (n == 0.0) {
        v1 = 1.0;
        v2 = 0.0;
        return;
    }
    v1 /= n;
    v2 /= n;
}

struct TopSingular {
    double lam_max;  // largest eigenvalue of m^H m
    double trace;    // p + q
    cplx v1, v2;     // top right-singular vector
};

TopSingular top_right_singular(const Mat2& m) {
    double p = std::norm(m.a) + std::norm(m.c);
    double q = std::norm(m.b) + std::norm(m.d);
    cplx r = std::conj(m.a) * m.b + std::conj(m.c) * m.d;
    double half = 0.5 * (p - q);
    double lam = 0.5 * (p + q) + std::sqrt(half * half + std::norm(r));
    TopSingular out{lam, p + q, {}, {}};
    hermitian_eigvec(p, q, r, lam, out.v1, out.v2);
    return out;
}

} // namespace

double Mat2::frobenius() const {
    return std::sqrt(std::norm(a) + std::norm(b) + std::norm(c) + std::norm(d));
}

MoebiusMap::MoebiusMap(cplx a, cplx b, cplx c, cplx d) {
    if (!finite(a) || !finite(b) || !finite(c) || !finite(d))
        throw precondition_error("non-finite matrix", "Moebius map entries must be finite");
    cplx det = a * d - b * c;
    double scale = std::norm(a) + std::norm(b) + std::norm(c) + std::norm(d);
    if (std::abs(det) <= 1e-14 * scale || scale == 0.0)
        throw precondition_error("singular matrix", "Moebius map must have nonzero determinant");
    cplx s = std::sqrt(det);
    m_ = {a / s, b / s, c / s, d / s};
}

MoebiusMap MoebiusMap::inverse() const {
    MoebiusMap out;
    out.m_ = m_.adjugate();
    return out;
}

bool MoebiusMap::is_real(double tol) const {
    // The representative is defined up to sign; a real map may carry a global factor i.
    auto max_im = [&](cplx f) {
        return std::max({std::abs((f * m_.a).imag()), std::abs((f * m_.b).imag()),
                         std::abs((f * m_.c).imag()), std::abs((f * m_.d).imag())});
    };
    return std::min(max_im(1.0), max_im(cplx{0.0, 1.0})) <= tol * std::max(1.0, m_.frobenius());
}

bool MoebiusMap::approx_equal(const MoebiusMap& o, double tol) const {
    double plus = (m_ - o.m_).frobenius();
    double minus = (m_ + o.m_).frobenius();
    return std::min(plus, minus) <= tol;
}

MoebiusMap compose(const MoebiusMap& m1, const MoebiusMap& m2) {
    Mat2 p = m1.matrix() * m2.matrix();
    if (!(std::abs(p.a) < kOverflow && std::abs(p.b) < kOverflow && std::abs(p.c) < kOverflow &&
          std::abs(p.d) < kOverflow))
        throw numerical_error("cocycle overflow", "matrix entry exceeded 1e150 in product");
    // The product of determinant-one factors needs no renormalization; recomputing det
    // would lose all precision once the entries grow.
    MoebiusMap out;
    out.m_ = p;
    return out;
}

SpherePoint::SpherePoint(cplx z1, cplx z2) {
    double n = std::sqrt(std::norm(z1) + std::norm(z2));
    if (!(n > 0.0) || !std::isfinite(n))
        throw precondition_error("invalid point", "homogeneous coordinates must be finite and nonzero");
    z1_ = z1 / n;
    z2_ = z2 / n;
}

cplx SpherePoint::to_complex() const {
    if (z2_ == cplx{0.0}) return {HUGE_VAL, 0.0};
    return z1_ / z2_;
}

HalfPlanePoint::HalfPlanePoint(cplx tau) : tau_(tau) {
    if (!(tau.imag() > 0.0) || !finite(tau))
        throw precondition_error("outside half-plane", "point must satisfy Im tau > 0");
}

SpherePoint apply(const MoebiusMap& m, const SpherePoint& z) {
    const Mat2& x = m.matrix();
    return {x.a * z.z1() + x.b * z.z2(), x.c * z.z1() + x.d * z.z2()};
}

cplx act(const MoebiusMap& m, cplx z) {
    const Mat2& x = m.matrix();
    return (x.a * z + x.b) / (x.c * z + x.d);
}

HalfPlanePoint apply(const MoebiusMap& m, const HalfPlanePoint& tau) {
    if (!m.is_real(1e-9))
        throw precondition_error("not real", "half-plane action requires a real Moebius map");
    const Mat2& x = m.matrix();
    cplx j = x.c * tau.value() + x.d;
    // Im of the quotient in closed form: the complex division loses it to cancellation
    // once the entries are large. A representative i M with M real has det M = -1.
    double re_mass = std::abs(x.a.real()) + std::abs(x.b.real()) + std::abs(x.c.real()) + std::abs(x.d.real());
    double im_mass = std::abs(x.a.imag()) + std::abs(x.b.imag()) + std::abs(x.c.imag()) + std::abs(x.d.imag());
    double sign = im_mass > re_mass ? -1.0 : 1.0;
    return HalfPlanePoint(cplx{act(m, tau.value()).real(), sign * tau.im() / std::norm(j)});
}

double hyp_distance(cplx t1, cplx t2) {
    return 2.0 * std::asinh(std::abs(t1 - t2) / (2.0 * std::sqrt(t1.imag() * t2.imag())));
}

double hyp_distance(const HalfPlanePoint& t1, const HalfPlanePoint& t2) {
    return hyp_distance(t1.value(), t2.value());
}

double matrix_norm(const MoebiusMap& m) { return m.matrix().frobenius(); }

double matrix_norm_at(const Mat2& m, const HalfPlanePoint& base) {
    double sy = std::sqrt(base.im());
    double x = base.re();
    Mat2 mb{sy, x / sy, 0.0, 1.0 / sy};
    Mat2 mb_inv{1.0 / sy, -x / sy, 0.0, sy};
    return (mb_inv * m * mb).frobenius();
}

double sphere_distance(const SpherePoint& p, const SpherePoint& q) {
    return 2.0 * std::abs(p.z1() * q.z2() - p.z2() * q.z1());
}

std::string to_string(MoebiusKind kind) {
    switch (kind) {
    case MoebiusKind::Identity: return "identity";
    case MoebiusKind::Elliptic: return "elliptic";
    case MoebiusKind::Parabolic: return "parabolic";
    case MoebiusKind::Loxodromic: return "loxodromic";
    }
    return "unknown";
}

Classification classify(const MoebiusMap& m, double tol) {
    cplx t2 = m.trace_squared();
    if (m.approx_equal(MoebiusMap::identity(), tol)) return {MoebiusKind::Identity, t2};
    if (std::abs(t2 - 4.0) <= tol) return {MoebiusKind::Parabolic, t2};
    if (std::abs(t2.imag()) <= tol && t2.real() >= 0.0 && t2.real() < 4.0)
        return {MoebiusKind::Elliptic, t2};
    return {MoebiusKind::Loxodromic, t2};
}

SingularValues singular_values(const MoebiusMap& m) {
    TopSingular t = top_right_singular(m.matrix());
    double s1 = std::sqrt(t.lam_max);
    return {s1, 1.0 / s1};
}

SpherePoint contracting_direction(const MoebiusMap& m) {
    SingularValues sv = singular_values(m);
    if (sv.largest / sv.smallest <= 1.0 + 1e-6)
        throw numerical_error("degenerate gap", "singular values too close for a contracting direction");
    return contracting_direction(m.matrix());
}

SpherePoint contracting_direction(const Mat2& m) {
    TopSingular t = top_right_singular(m);
    double lam_min = t.trace - t.lam_max;
    if (lam_min >= t.lam_max * (1.0 - 1e-6) * (1.0 - 1e-6))
        throw numerical_error("degenerate gap", "singular values too close for a contracting direction");
    return {-std::conj(t.v2), std::conj(t.v1)};
}

SpherePoint attracting_direction(const Mat2& m) {
    // Left singular vectors of m are right singular vectors of m^H.
    TopSingular t = top_right_singular(m.conj_transpose());
    double lam_min = t.trace - t.lam_max;
    if (lam_min >= t.lam_max * (1.0 - 1e-6) * (1.0 - 1e-6))
        throw numerical_error("degenerate gap", "singular values too close for an attracting direction");
    return {t.v1, t.v2};
}

void LogNormProduct::right_multiply(const Mat2& m) {
    scaled_ = scaled_ * m;
    renormalize();
}

void LogNormProduct::left_multiply(const Mat2& m) {
    scaled_ = m * scaled_;
    renormalize();
}

void LogNormProduct::renormalize() {
    double n = scaled_.frobenius();
    if (!(n > 0.0) || !std::isfinite(n))
        throw numerical_error("cocycle overflow", "running product lost finiteness");
    scaled_ = cplx{1.0 / n} * scaled_;
    log_scale_ += std::log(n);
}

} // namespace projlab

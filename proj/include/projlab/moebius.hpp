#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <string>

#include "projlab/error.hpp"

namespace projlab {

using cplx = std::complex<double>;

/// Plain 2x2 complex matrix with no determinant constraint.
struct Mat2 {
    cplx a{1.0}, b{0.0}, c{0.0}, d{1.0};

    cplx det() const { return a * d - b * c; }
    cplx trace() const { return a + d; }
    double frobenius() const;
    Mat2 adjugate() const { return {d, -b, -c, a}; }
    Mat2 conj_transpose() const { return {std::conj(a), std::conj(c), std::conj(b), std::conj(d)}; }

    friend Mat2 operator*(const Mat2& x, const Mat2& y) {
        return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d,
                x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
    }
    friend Mat2 operator*(cplx s, const Mat2& x) { return {s * x.a, s * x.b, s * x.c, s * x.d}; }
    friend Mat2 operator+(const Mat2& x, const Mat2& y) {
        return {x.a + y.a, x.b + y.b, x.c + y.c, x.d + y.d};
    }
    friend Mat2 operator-(const Mat2& x, const Mat2& y) {
        return {x.a - y.a, x.b - y.b, x.c - y.c, x.d - y.d};
    }
};

/// Element of PSL(2,C) stored as a determinant-one representative.
class MoebiusMap {
public:
    MoebiusMap() = default;
    /// Normalizes the entries to determinant one. Throws on singular or non-finite input.
    MoebiusMap(cplx a, cplx b, cplx c, cplx d);
    explicit MoebiusMap(const Mat2& m) : MoebiusMap(m.a, m.b, m.c, m.d) {}

    static MoebiusMap identity() { return {}; }

    cplx a() const { return m_.a; }
    cplx b() const { return m_.b; }
    cplx c() const { return m_.c; }
    cplx d() const { return m_.d; }
    const Mat2& matrix() const { return m_; }

    cplx trace() const { return m_.trace(); }
    cplx trace_squared() const { return m_.trace() * m_.trace(); }
    MoebiusMap inverse() const;
    bool is_real(double tol = 1e-12) const;

    /// Equality in PSL(2,C): entries agree up to a global sign.
    bool approx_equal(const MoebiusMap& other, double tol) const;

private:
    friend MoebiusMap compose(const MoebiusMap& m1, const MoebiusMap& m2);
    Mat2 m_{};
};

/// Matrix product renormalized to determinant one.
/// Throws "cocycle overflow" when an entry exceeds 1e150.
MoebiusMap compose(const MoebiusMap& m1, const MoebiusMap& m2);
inline MoebiusMap operator*(const MoebiusMap& x, const MoebiusMap& y) { return compose(x, y); }

/// Point of the Riemann sphere in unit-normalized homogeneous coordinates [z1 : z2].
class SpherePoint {
public:
    SpherePoint() : SpherePoint(cplx{0.0}, cplx{1.0}) {}
    SpherePoint(cplx z1, cplx z2);

    static SpherePoint from_complex(cplx z) { return {z, cplx{1.0}}; }
    static SpherePoint infinity() { return {cplx{1.0}, cplx{0.0}}; }

    cplx z1() const { return z1_; }
    cplx z2() const { return z2_; }
    bool is_infinity(double tol = 1e-300) const { return std::abs(z2_) <= tol; }
    /// Affine chart value z1/z2; infinite for the point at infinity.
    cplx to_complex() const;

private:
    cplx z1_, z2_;
};

class HalfPlanePoint {
public:
    /// Throws a precondition error unless Im tau > 0.
    explicit HalfPlanePoint(cplx tau);
    HalfPlanePoint(double x, double y) : HalfPlanePoint(cplx{x, y}) {}

    cplx value() const { return tau_; }
    double re() const { return tau_.real(); }
    double im() const { return tau_.imag(); }

private:
    cplx tau_;
};

SpherePoint apply(const MoebiusMap& m, const SpherePoint& z);
/// Affine action (az + b)/(cz + d) for finite z with cz + d != 0.
cplx act(const MoebiusMap& m, cplx z);
/// Action of a real map on the upper half-plane.
HalfPlanePoint apply(const MoebiusMap& m, const HalfPlanePoint& tau);

/// Curvature -1 distance: d(i, yi) = |log y|.
double hyp_distance(const HalfPlanePoint& t1, const HalfPlanePoint& t2);
double hyp_distance(cplx t1, cplx t2);

/// Frobenius norm of the determinant-one representative.
double matrix_norm(const MoebiusMap& m);
/// Frobenius norm in the frame adapted to a base point x + iy, i.e. ||M_b^{-1} m M_b||
/// with M_b = [[sqrt y, x/sqrt y], [0, 1/sqrt y]]. For real m this equals
/// sqrt(2 cosh d(base, m base)).
double matrix_norm_at(const Mat2& m, const HalfPlanePoint& base);

/// Chordal distance 2|z1 w2 - z2 w1|, values in [0, 2].
double sphere_distance(const SpherePoint& p, const SpherePoint& q);

enum class MoebiusKind { Identity, Elliptic, Parabolic, Loxodromic };
std::string to_string(MoebiusKind kind);

struct Classification {
    MoebiusKind kind;
    cplx trace_squared;
};

Classification classify(const MoebiusMap& m, double tol = 1e-8);

struct SingularValues {
    double largest;
    double smallest;
};
SingularValues singular_values(const MoebiusMap& m);

/// Projectivized right-singular vector of the smallest singular value.
/// Throws "degenerate gap" when s1/s2 <= 1 + 1e-6.
SpherePoint contracting_direction(const MoebiusMap& m);
/// Same, for an arbitrarily scaled matrix. The direction is obtained as the orthogonal
/// complement of the top right-singular vector, so it stays accurate for near-singular input.
SpherePoint contracting_direction(const Mat2& m);
/// Projectivized left-singular vector of the largest singular value: where m sends
/// almost every point of the sphere.
SpherePoint attracting_direction(const Mat2& m);

/// Running matrix product kept at unit Frobenius norm with the log scale accumulated
/// separately. Long cocycle products never overflow.
class LogNormProduct {
public:
    LogNormProduct() = default;

    void right_multiply(const Mat2& m);
    void left_multiply(const Mat2& m);

    /// The product divided by exp(log_scale()).
    const Mat2& scaled() const { return scaled_; }
    double log_scale() const { return log_scale_; }
    double log_frobenius() const { return log_scale_ + std::log(scaled_.frobenius()); }

private:
    void renormalize();

    Mat2 scaled_{};
    double log_scale_ = 0.0;
};

} // namespace projlab

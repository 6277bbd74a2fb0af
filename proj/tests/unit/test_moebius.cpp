#include <array>
#include <random>

#include "doctest.h"
#include "support.hpp"

using namespace projlab;
using projlab::testing::error_code_of;

namespace {

using IMat = std::array<long long, 4>;

IMat imul(const IMat& x, const IMat& y) {
    return {x[0] * y[0] + x[1] * y[2], x[0] * y[1] + x[1] * y[3], x[2] * y[0] + x[3] * y[2],
            x[2] * y[1] + x[3] * y[3]};
}

cplx rand_c(std::mt19937_64& rng, double scale) {
    std::uniform_real_distribution<double> u(-scale, scale);
    return {u(rng), u(rng)};
}

MoebiusMap rand_map(std::mt19937_64& rng, double scale = 10.0) {
    for (;;) {
        cplx a = rand_c(rng, scale), b = rand_c(rng, scale), c = rand_c(rng, scale), d = rand_c(rng, scale);
        if (std::abs(a * d - b * c) > 1e-2) return MoebiusMap(a, b, c, d);
    }
}

double max_entry_diff(const MoebiusMap& x, const MoebiusMap& y) {
    double plus = 0, minus = 0;
    for (auto [p, q] : {std::pair{x.a(), y.a()}, {x.b(), y.b()}, {x.c(), y.c()}, {x.d(), y.d()}}) {
        plus = std::max(plus, std::abs(p - q));
        minus = std::max(minus, std::abs(p + q));
    }
    return std::min(plus, minus);
}

} // namespace

TEST_CASE("construction normalizes the determinant") {
    MoebiusMap m(2.0, 0.0, 0.0, 8.0);
    CHECK(std::abs(m.matrix().det() - 1.0) < 1e-12);
    CHECK(error_code_of([] { MoebiusMap(1.0, 2.0, 2.0, 4.0); }) == "singular matrix");
    CHECK(error_code_of([] { MoebiusMap(NAN, 0.0, 0.0, 1.0); }) == "non-finite matrix");
}

TEST_CASE("compose examples") {
    MoebiusMap id = MoebiusMap::identity();
    CHECK(max_entry_diff(compose(id, id), id) < 1e-15);
    std::mt19937_64 rng(3);
    MoebiusMap g = rand_map(rng);
    CHECK(max_entry_diff(compose(g, g.inverse()), id) < 1e-12);

    IMat ai{1, 1, 1, 2}, bi{1, -1, -1, 2};
    IMat prod = imul(ai, bi);
    CHECK(prod == IMat{0, 1, -1, 3});
    MoebiusMap ab = compose(MoebiusMap(1.0, 1.0, 1.0, 2.0), MoebiusMap(1.0, -1.0, -1.0, 2.0));
    CHECK(max_entry_diff(ab, MoebiusMap(0.0, 1.0, -1.0, 3.0)) < 1e-14);
}

TEST_CASE("compose reports overflow") {
    MoebiusMap step(1e3, 0.0, 0.0, 1e-3);
    CHECK(error_code_of([&] {
        MoebiusMap p = step;
        for (int k = 0; k < 60; ++k) p = compose(p, step);
    }) == "cocycle overflow");
    MoebiusMap p = step;
    for (int k = 0; k < 40; ++k) p = compose(p, step);
    CHECK(std::abs(p.matrix().det() - cplx(1.0)) < 1e-12);
}

TEST_CASE("half-plane action keeps the height for large entries") {
    MoebiusMap a(1.0, 1.0, 1.0, 2.0), p = a;
    for (int k = 0; k < 29; ++k) p = compose(p, a);
    HalfPlanePoint tau(-0.61803, 1e-4);
    // Long-double oracle for Im = y / |c tau + d|^2.
    long double c = p.c().real(), d = p.d().real();
    long double jr = c * -0.61803L + d, ji = c * 1e-4L;
    long double im = 1e-4L / (jr * jr + ji * ji);
    HalfPlanePoint out = apply(p, tau);
    CHECK(std::abs(out.im() - static_cast<double>(im)) <= 1e-12 * static_cast<double>(im));
}

TEST_CASE("apply examples") {
    SpherePoint z = SpherePoint::from_complex({0.3, -1.2});
    CHECK(sphere_distance(apply(MoebiusMap::identity(), z), z) < 1e-15);
    CHECK(apply(MoebiusMap(1.0, 1.0, 0.0, 1.0), SpherePoint::infinity()).is_infinity(1e-15));
    CHECK(apply(MoebiusMap(0.0, -1.0, 1.0, 0.0), SpherePoint::from_complex(0.0)).is_infinity(1e-15));
}

TEST_CASE("hyperbolic distance examples") {
    HalfPlanePoint i(0.0, 1.0);
    CHECK(hyp_distance(i, i) == doctest::Approx(0.0));
    CHECK(hyp_distance(i, HalfPlanePoint(0.0, 4.0)) == doctest::Approx(std::log(4.0)).epsilon(1e-14));
    MoebiusMap g(2.0, 1.0, 3.0, 2.0);
    HalfPlanePoint p(0.3, 0.7), q(-1.2, 2.5);
    CHECK(std::abs(hyp_distance(apply(g, p), apply(g, q)) - hyp_distance(p, q)) < 1e-10);
    CHECK(error_code_of([] { HalfPlanePoint(1.0, 0.0); }) == "outside half-plane");
}

TEST_CASE("matrix norm examples") {
    CHECK(matrix_norm(MoebiusMap::identity()) == doctest::Approx(std::sqrt(2.0)));
    CHECK(matrix_norm(MoebiusMap(2.0, 0.0, 0.0, 0.5)) == doctest::Approx(std::sqrt(17.0) / 2.0));
    std::mt19937_64 rng(5);
    for (int k = 0; k < 20; ++k) {
        MoebiusMap m = rand_map(rng);
        CHECK(matrix_norm(m) == doctest::Approx(matrix_norm(m.inverse())).epsilon(1e-12));
        CHECK(matrix_norm(m) >= std::sqrt(2.0) - 1e-12);
    }
}

TEST_CASE("base-adapted norm of a real map is determined by the displacement") {
    MoebiusMap g(2.0, 1.0, 3.0, 2.0);
    HalfPlanePoint b(0.4, 1.7);
    double d = hyp_distance(b, apply(g, b));
    CHECK(matrix_norm_at(g.matrix(), b) == doctest::Approx(std::sqrt(2.0 * std::cosh(d))).epsilon(1e-12));
}

TEST_CASE("sphere distance examples") {
    CHECK(sphere_distance(SpherePoint::from_complex(0.0), SpherePoint::infinity()) == doctest::Approx(2.0));
    SpherePoint z = SpherePoint::from_complex({1.0, 2.0});
    CHECK(sphere_distance(z, z) == doctest::Approx(0.0));
    CHECK(sphere_distance(SpherePoint::from_complex(0.0), SpherePoint::from_complex(1.0)) ==
          doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("classify examples") {
    auto p = classify(MoebiusMap(1.0, 1.0, 0.0, 1.0));
    CHECK(p.kind == MoebiusKind::Parabolic);
    CHECK(std::abs(p.trace_squared - 4.0) < 1e-14);
    auto h = classify(MoebiusMap(2.0, 0.0, 0.0, 0.5));
    CHECK(h.kind == MoebiusKind::Loxodromic);
    CHECK(std::abs(h.trace_squared - 6.25) < 1e-14);
    auto id = classify(MoebiusMap::identity());
    CHECK(id.kind == MoebiusKind::Identity);
    CHECK(std::abs(id.trace_squared - 4.0) < 1e-14);
    CHECK(classify(MoebiusMap(std::cos(0.3), -std::sin(0.3), std::sin(0.3), std::cos(0.3))).kind ==
          MoebiusKind::Elliptic);
    CHECK(to_string(MoebiusKind::Loxodromic) == "loxodromic");
}

TEST_CASE("contracting direction of a diagonal map is the second axis") {
    // ||m Y|| is minimized by Y = (0, 1), which is the homogeneous pair [0 : 1].
    SpherePoint p = contracting_direction(MoebiusMap(10.0, 0.0, 0.0, 0.1));
    CHECK(std::abs(p.z1()) < 1e-14);
    CHECK(std::abs(std::abs(p.z2()) - 1.0) < 1e-14);
}

TEST_CASE("contracting direction is equivariant under rotations") {
    double th = 0.7;
    MoebiusMap rot(std::cos(th), -std::sin(th), std::sin(th), std::cos(th));
    MoebiusMap m = compose(compose(rot, MoebiusMap(10.0, 0.0, 0.0, 0.1)), rot.inverse());
    SpherePoint expected = apply(rot, SpherePoint(0.0, 1.0));
    CHECK(sphere_distance(contracting_direction(m), expected) < 1e-12);
}

TEST_CASE("contracting direction minimizes the image norm (dense sampling oracle)") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        MoebiusMap m = rand_map(rng, 3.0);
        SpherePoint v = contracting_direction(m);
        auto image_norm = [&](cplx y1, cplx y2) {
            const Mat2& x = m.matrix();
            return std::hypot(std::abs(x.a * y1 + x.b * y2), std::abs(x.c * y1 + x.d * y2));
        };
        double at_v = image_norm(v.z1(), v.z2());
        double best = HUGE_VAL, worst = 0.0;
        // Unit vectors (cos t, e^{i p} sin t) cover the projective line.
        for (int i = 0; i <= 400; ++i)
            for (int j = 0; j < 80; ++j) {
                double t = M_PI / 2 * i / 400, ph = 2 * M_PI * j / 80;
                double n = image_norm(std::cos(t), std::polar(std::sin(t), ph));
                best = std::min(best, n);
                worst = std::max(worst, n);
            }
        CHECK(at_v <= best * (1.0 + 1e-9));
        auto sv = singular_values(m);
        CHECK(at_v / worst == doctest::Approx(sv.smallest / sv.largest).epsilon(1e-3));
    }
}

TEST_CASE("contracting direction rejects a rotation") {
    MoebiusMap rot(std::cos(0.4), -std::sin(0.4), std::sin(0.4), std::cos(0.4));
    CHECK(error_code_of([&] { contracting_direction(rot); }) == "degenerate gap");
}

TEST_CASE("attracting direction is where a large power sends generic points") {
    MoebiusMap m(2.0, 1.0, 1.0, 1.0);
    MoebiusMap p = m;
    for (int k = 0; k < 20; ++k) p = compose(p, m);
    SpherePoint a = attracting_direction(p.matrix());
    CHECK(sphere_distance(apply(p, SpherePoint::from_complex({0.3, 0.4})), a) < 1e-8);
}

TEST_CASE("log-norm products match direct products and do not overflow") {
    MoebiusMap m(2.0, 1.0, 1.0, 1.0);
    LogNormProduct prod;
    MoebiusMap direct = MoebiusMap::identity();
    for (int k = 0; k < 10; ++k) {
        prod.right_multiply(m.matrix());
        direct = compose(direct, m);
    }
    CHECK(prod.log_frobenius() == doctest::Approx(std::log(matrix_norm(direct))).epsilon(1e-12));
    for (int k = 0; k < 2000; ++k) prod.right_multiply(m.matrix());
    CHECK(std::isfinite(prod.log_frobenius()));
    CHECK(prod.log_frobenius() > 1000.0);
}

TEST_SUITE("properties") {
    TEST_CASE("compose is associative") {
        std::mt19937_64 rng(21);
        for (int k = 0; k < 200; ++k) {
            MoebiusMap x = rand_map(rng), y = rand_map(rng), z = rand_map(rng);
            MoebiusMap l = compose(compose(x, y), z), r = compose(x, compose(y, z));
            CHECK(max_entry_diff(l, r) < 1e-9 * std::max(1.0, matrix_norm(l)));
        }
    }

    TEST_CASE("action is a homomorphism") {
        std::mt19937_64 rng(22);
        for (int k = 0; k < 200; ++k) {
            MoebiusMap x = rand_map(rng), y = rand_map(rng);
            SpherePoint z = SpherePoint::from_complex(rand_c(rng, 3.0));
            CHECK(sphere_distance(apply(compose(x, y), z), apply(x, apply(y, z))) < 1e-9);
        }
    }

    TEST_CASE("distance matches the arccosh closed form") {
        std::mt19937_64 rng(23);
        std::uniform_real_distribution<double> ux(-5, 5), uy(0.01, 5);
        for (int k = 0; k < 500; ++k) {
            cplx p{ux(rng), uy(rng)}, q{ux(rng), uy(rng)};
            double closed = std::acosh(1.0 + std::norm(p - q) / (2.0 * p.imag() * q.imag()));
            CHECK(hyp_distance(p, q) == doctest::Approx(closed).epsilon(1e-9));
        }
    }

    TEST_CASE("norms are submultiplicative") {
        std::mt19937_64 rng(24);
        for (int k = 0; k < 200; ++k) {
            MoebiusMap x = rand_map(rng), y = rand_map(rng);
            CHECK(matrix_norm(compose(x, y)) <= matrix_norm(x) * matrix_norm(y) * (1 + 1e-12));
            double op = singular_values(compose(x, y)).largest;
            CHECK(op <= singular_values(x).largest * singular_values(y).largest * (1 + 1e-12));
        }
    }

    TEST_CASE("classification is conjugation invariant") {
        std::mt19937_64 rng(25);
        std::vector<MoebiusMap> samples{MoebiusMap(1.0, 1.0, 0.0, 1.0), MoebiusMap(2.0, 0.0, 0.0, 0.5),
                                        MoebiusMap(std::cos(0.3), -std::sin(0.3), std::sin(0.3), std::cos(0.3)),
                                        MoebiusMap(cplx(1.0, 1.0), 0.0, 0.0, 1.0 / cplx(1.0, 1.0))};
        for (const auto& m : samples)
            for (int k = 0; k < 20; ++k) {
                MoebiusMap g = rand_map(rng, 2.0);
                MoebiusMap conj = compose(compose(g, m), g.inverse());
                CHECK(classify(conj).kind == classify(m).kind);
            }
    }
}

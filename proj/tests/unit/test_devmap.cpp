#include <random>

#include "doctest.h"
#include "support.hpp"

using namespace projlab;
using projlab::testing::error_code_of;
using projlab::testing::structure;
using projlab::testing::torus;

namespace {

const cplx kMid{1.0, 0.5};
const cplx kDeep{3.0, 0.3};

double chordal(const SpherePoint& p, const SpherePoint& q) { return sphere_distance(p, q); }

HalfPlanePoint from_w(cplx w) { return apply(torus().cusp_normalizer().inverse(), HalfPlanePoint(w)); }

// Five laps of a closed loop, total hyperbolic length above 10, through the thick part, in tau coordinates.
std::vector<HalfPlanePoint> long_loop() {
    std::vector<HalfPlanePoint> path;
    for (int lap = 0; lap < 5; ++lap)
        for (int k = 1; k <= 40; ++k) {
            double t = 2.0 * M_PI * k / 40.0;
            path.emplace_back(0.9 * std::sin(t), 2.0 * std::exp(0.8 * (1.0 - std::cos(t)) / 2.0));
        }
    return path;
}

double path_length(const HalfPlanePoint& start, const std::vector<HalfPlanePoint>& path) {
    double len = 0.0;
    HalfPlanePoint prev = start;
    for (const auto& p : path) {
        len += hyp_distance(prev, p);
        prev = p;
    }
    return len;
}

} // namespace

TEST_CASE("the Fuchsian structure develops to the identity") {
    const ProjectiveStructure& s = structure(0.0);
    for (cplx tau : {cplx(0.3, 1.2), cplx(-1.1, 0.4), cplx(2.0, 3.0)}) {
        SpherePoint d = develop(s, HalfPlanePoint(tau));
        CHECK(std::abs(d.to_complex() - tau) < 1e-12);
    }
    Representation rep = holonomy(s);
    CHECK(rep.rho_a.approx_equal(torus().gen_a(), 1e-8));
    CHECK(rep.rho_b.approx_equal(torus().gen_b(), 1e-8));
}

TEST_CASE("the Wronskian is conserved along a long path") {
    const ProjectiveStructure& s = structure(kMid);
    DevFrame start = base_frame(s);
    auto path = long_loop();
    CHECK(path_length(start.base, path) >= 10.0);
    DevFrame end = continue_frame(s, start, path);
    CHECK(std::abs(end.wronskian - 1.0) < 1e-7);
}

TEST_CASE("finite-difference Schwarzian matches the potential") {
    for (cplx c : {kMid, kDeep}) {
        const ProjectiveStructure& s = structure(c);
        const MoebiusMap& n = torus().cusp_normalizer();
        for (cplx w0 : {cplx(0.1, 0.35), cplx(-0.3, 0.8), cplx(0.45, 0.6)}) {
            // Continue to the midpoint once, then take short hops so the differences are clean.
            DevFrame mid = continue_frame(s, base_frame(s), {from_w(w0)});
            auto dev_w = [&](cplx w) {
                return act(n, continue_frame(s, mid, {from_w(w)}).dev_value.to_complex());
            };
            const double h = 1e-3;
            cplx f2m = dev_w(w0 - 2 * h), fm = dev_w(w0 - h), f0 = dev_w(w0), fp = dev_w(w0 + h), f2p = dev_w(w0 + 2 * h);
            cplx d1 = (fp - fm) / (2 * h);
            cplx d2 = (fp - 2.0 * f0 + fm) / (h * h);
            cplx d3 = (f2p - 2.0 * fp + 2.0 * fm - f2m) / (2 * h * h * h);
            cplx schwarzian = d3 / d1 - 1.5 * (d2 / d1) * (d2 / d1);
            cplx expected = c * s.form().value(w0) / s.form().sup_norm();
            CHECK(std::abs(schwarzian - expected) < 1e-3 * std::max(1.0, std::abs(expected)));
        }
    }
}

TEST_CASE("holonomy is parabolic at the cusp") {
    for (cplx c : {cplx(0.3), cplx(1.0, 0.5)}) {
        Representation rep = holonomy(structure(c));
        MoebiusMap comm = rep.evaluate("ABab");
        CHECK(std::abs(comm.trace_squared() - 4.0) < 1e-6);
    }
}

TEST_CASE("the trace of rho(A) is holomorphic in c") {
    const double h = 1e-3;
    auto tr = [&](cplx c) {
        ProjectiveStructure s(torus(), projlab::testing::form(), c);
        MoebiusMap m = holonomy(s).rho_a;
        cplx t = m.trace();
        // Fix the sign of the lift continuously from the Fuchsian value 3.
        return t.real() < 0 ? -t : t;
    };
    for (cplx c0 : {kMid, cplx(-0.4, 0.7)}) {
        cplx dx = (tr(c0 + h) - tr(c0 - h)) / (2 * h);
        cplx dy = (tr(c0 + cplx(0, h)) - tr(c0 - cplx(0, h))) / (2 * h);
        CHECK(std::abs(dx + cplx(0, 1) * dy) < 1e-4);
    }
}

TEST_CASE("dev is equivariant at the generators") {
    const ProjectiveStructure& s = structure(kMid);
    Representation rep = holonomy(s);
    const cplx pts[] = {{0.0, 2.0}, {0.3, 1.5}, {-0.4, 2.6}, {0.2, 3.1}, {-0.1, 1.8}};
    for (char l : std::string("AB"))
        for (cplx tau : pts) {
            SpherePoint lhs = develop(s, apply(torus().letter(l), HalfPlanePoint(tau)));
            SpherePoint rhs = apply(rep.letter(l), develop(s, HalfPlanePoint(tau)));
            CHECK(chordal(lhs, rhs) < 1e-6);
        }
}

TEST_CASE("preimage counts for the Fuchsian structure") {
    const ProjectiveStructure& s = structure(0.0);
    const HalfPlanePoint center(0.0, 2.0);
    PreimageCounter counter(s, 6.0);
    auto count = [&](cplx z) {
        int n = 0;
        for (const auto& h : counter.cell_counts(SpherePoint::from_complex(z), center, 6.0)) n += h.count;
        return n;
    };
    CHECK(count({0.37, 1.13}) == 1);
    CHECK(count({-2.93, 0.41}) == 1);
    CHECK(count({0.0, 2.0 * std::exp(8.0)}) == 0);
    CHECK(count({0.2, 2.0 * std::exp(-8.0)}) == 0);
    CHECK(count({0.3, -1.0}) == 0);
    CHECK(count({-2.0, -0.01}) == 0);
    CHECK(count_preimages(s, SpherePoint::from_complex({0.37, 1.13}), center, 4.0) == 1);
    CHECK(error_code_of([&] { count_preimages(s, SpherePoint::from_complex({0.5, 1.0}), center, 13.0); }) ==
          "radius out of range");
}

TEST_CASE("half-ball counts add up") {
    const ProjectiveStructure& s = structure(kDeep);
    PreimageCounter counter(s, 6.0);
    int whole_total = 0;
    for (const auto& x : default_centers())
        for (const auto& z : default_targets()) {
            int whole = 0, halves = 0;
            for (const auto& h : counter.cell_counts(z, x, 6.0)) whole += h.count;
            for (int side : {1, -1})
                for (const auto& h : counter.cell_counts_split(z, x, 6.0, side)) halves += h.count;
            CHECK(whole == halves);
            whole_total += whole;
        }
    CHECK(whole_total > 0);
}

TEST_CASE("Nevanlinna counting function") {
    const HalfPlanePoint center(0.0, 2.0);
    const ProjectiveStructure& fuchs = structure(0.0);
    for (double r : {0.5, 0.9, 0.99}) CHECK(nevanlinna_N(fuchs, SpherePoint::from_complex({0.1, -2.0}), center, r) == 0.0);

    const ProjectiveStructure& s = structure(kDeep);
    PreimageCounter counter(s, 8.0);
    auto hits = counter.cell_counts(default_targets()[0], center, 8.0);
    double prev = 0.0;
    for (int k = 1; k <= 60; ++k) {
        double r = std::tanh(8.0 * k / 120.0);
        double n = nevanlinna_N(hits, r);
        CHECK(n >= prev);
        prev = n;
    }
    // Its slope against log 1/(1 - r) recovers 2 pi times the degree.
    Estimate deg = degree_estimate(counter, 8.0, default_centers(), default_targets());
    NevanlinnaFit fit = nevanlinna_slope(counter, default_centers(), default_targets(), 2.0 * std::atanh(0.9),
                                         2.0 * std::atanh(0.995));
    CHECK(deg.value > 0.0);
    CHECK(fit.slope == doctest::Approx(2.0 * M_PI * deg.value).epsilon(0.15));
}

TEST_SUITE("properties") {
    TEST_CASE("continuation is path independent") {
        const ProjectiveStructure& s = structure(kDeep);
        std::mt19937_64 rng(61);
        std::uniform_real_distribution<double> ux(-0.8, 0.8), uy(1.0, 3.0);
        for (int k = 0; k < 10; ++k) {
            cplx p(ux(rng), uy(rng)), q(ux(rng), uy(rng));
            DevFrame one = continue_frame(s, base_frame(s), {HalfPlanePoint(p.real(), p.imag()), HalfPlanePoint(q.real(), p.imag()),
                                                             HalfPlanePoint(q)});
            DevFrame two = continue_frame(s, base_frame(s), {HalfPlanePoint(p), HalfPlanePoint(p.real(), q.imag()),
                                                             HalfPlanePoint(q)});
            double scale = std::max(1.0, matrix_norm(one.frame));
            CHECK(one.frame.approx_equal(two.frame, 1e-7 * scale));
        }
    }

    TEST_CASE("holonomy respects the commutator") {
        for (cplx c : {kMid, kDeep}) {
            const ProjectiveStructure& s = structure(c);
            Representation rep = holonomy(s);
            MoebiusMap direct = holonomy_of(s, torus().commutator());
            CHECK(rep.evaluate("ABab").approx_equal(direct, 1e-6 * std::max(1.0, matrix_norm(direct))));
        }
    }

    TEST_CASE("equivariance over a ball of group elements") {
        const ProjectiveStructure& s = structure(kDeep);
        Representation rep = holonomy(s);
        auto ball = enumerate_ball(torus(), 4.0);
        REQUIRE(ball.size() >= 10);
        std::mt19937_64 rng(62);
        std::uniform_real_distribution<double> ux(-0.6, 0.6), uy(1.2, 3.0);
        for (std::size_t k = 1; k <= 10; ++k) {
            const GroupElement& e = ball[k];
            HalfPlanePoint tau(ux(rng), uy(rng));
            SpherePoint lhs = develop(s, apply(e.matrix, tau));
            SpherePoint rhs = apply(rep.evaluate(e.word), develop(s, tau));
            CHECK(chordal(lhs, rhs) < 1e-6);
        }
    }

    TEST_CASE("counts are equivariant") {
        const ProjectiveStructure& s = structure(kDeep);
        Representation rep = holonomy(s);
        PreimageCounter counter(s, 6.0);
        const HalfPlanePoint x(0.2, 1.9);
        for (const char* w : {"A", "b", "AB", "baa"}) {
            MoebiusMap gam = torus().evaluate(w);
            MoebiusMap rho = rep.evaluate(w);
            for (const auto& z : default_targets()) {
                int before = 0, after = 0;
                for (const auto& h : counter.cell_counts(z, x, 6.0)) before += h.count;
                for (const auto& h : counter.cell_counts(apply(rho, z), apply(gam, x), 6.0)) after += h.count;
                CHECK(before == after);
            }
        }
    }
}

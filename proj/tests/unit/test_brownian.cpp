#include <algorithm>
#include <random>

#include "doctest.h"
#include "support.hpp"

using namespace projlab;
using projlab::testing::error_code_of;
using projlab::testing::torus;

namespace {

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double>& v) {
    double m = mean(v), s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

// Distance from the base point to the unreduced lift deck * point.
double lift_distance(const FuchsianGroup& g, const TrackedPath& p) {
    HalfPlanePoint lift = apply(g.evaluate(p.deck_word), p.points.back());
    return hyp_distance(g.base_point(), lift);
}

double deck_displacement(const FuchsianGroup& g, const std::string& word) {
    return hyp_distance(g.base_point(), apply(g.evaluate(word), g.base_point()));
}

} // namespace

TEST_CASE("second moment of a small step") {
    Rng rng = make_stream(3, 0);
    const double dt = 1e-4;
    for (double y : {1.0, 0.3}) {
        HalfPlanePoint tau(0.2, y);
        std::vector<double> r;
        for (int k = 0; k < 100000; ++k) r.push_back(std::norm(sample_step(tau, dt, rng).value() - tau.value()) / dt);
        CHECK(mean(r) == doctest::Approx(4.0 * y * y).epsilon(0.02));
    }
    CHECK(error_code_of([&] { sample_step(HalfPlanePoint(0, 1), 0.02, rng); }) == "dt out of range");
}

TEST_CASE("steps scale with the height") {
    for (double y : {0.01, 3.0, 250.0}) {
        for (std::uint64_t s = 0; s < 20; ++s) {
            Rng r1 = make_stream(s, 1), r2 = make_stream(s, 1);
            cplx unit = sample_step(HalfPlanePoint(0.0, 1.0), 0.01, r1).value();
            cplx scaled = sample_step(HalfPlanePoint(0.0, y), 0.01, r2).value();
            CHECK(std::abs(scaled - y * unit) <= 1e-12 * y);
        }
    }
}

TEST_CASE("radial drift has unit speed") {
    const FuchsianGroup& g = torus();
    std::vector<double> d;
    for (int i = 0; i < 200; ++i) d.push_back(lift_distance(g, run(g, 100.0, 0.01, stream_seed(7, i), false)) / 100.0);
    CHECK(mean(d) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("run contract") {
    const FuchsianGroup& g = torus();
    TrackedPath zero = run(g, 0.0, 0.01, 5);
    CHECK(zero.deck_word.empty());
    CHECK(zero.points.size() == 1);
    TrackedPath a = run(g, 5.0, 0.005, 99), b = run(g, 5.0, 0.005, 99);
    CHECK(a.deck_word == b.deck_word);
    CHECK(a.points.back().value() == b.points.back().value());
    CHECK(a.points.size() == 1001);
    CHECK(error_code_of([&] { run(g, 1e4 + 1, 0.01, 1); }) == "T out of range");
    CHECK(error_code_of([&] { run(g, -1.0, 0.01, 1); }) == "T out of range");
    CHECK(error_code_of([&] { run(g, 1.0, 0.05, 1); }) == "dt out of range");

    std::string csv = path_csv(a);
    CHECK(csv.rfind("t,re,im,word_delta\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1002);
}

TEST_CASE("deck displacement grows linearly") {
    const FuchsianGroup& g = torus();
    BrownianEnsemble e = run_ensemble(g, 50.0, 0.01, 100, 11);
    std::vector<double> rate;
    for (const auto& w : e.words) rate.push_back(deck_displacement(g, w) / 50.0);
    CHECK(mean(rate) >= 0.7);
    CHECK(mean(rate) <= 1.3);
    // The ensemble reproduces individual runs.
    CHECK(e.words[3] == run(g, 50.0, 0.01, stream_seed(11, 3), false).deck_word);
    BrownianEnsemble par = run_ensemble(g, 5.0, 0.01, 16, 11, 4);
    BrownianEnsemble seq = run_ensemble(g, 5.0, 0.01, 16, 11, 1);
    CHECK(par.words == seq.words);
}

TEST_SUITE("properties") {
    TEST_CASE("restarting at the midpoint preserves the law") {
        const FuchsianGroup& g = torus();
        const double T = 20.0;
        std::vector<double> whole, split;
        for (int i = 0; i < 500; ++i) {
            whole.push_back(deck_displacement(g, run(g, T, 0.01, stream_seed(21, i), false).deck_word));
            TrackedPath half = run(g, T / 2, 0.01, stream_seed(22, i), false);
            TrackedPath rest = run_from(g, half, T / 2, stream_seed(splitmix64(22), i), false);
            split.push_back(deck_displacement(g, rest.deck_word));
        }
        CHECK(ks_two_sample_pvalue(ks_two_sample(whole, split), whole.size(), split.size()) > 0.01);
    }

    TEST_CASE("halving dt leaves the Fuchsian exponent unchanged") {
        const FuchsianGroup& g = torus();
        Representation fuchs{g.gen_a(), g.gen_b(), 0.0};
        auto exponents = [&](double dt, std::uint64_t seed) {
            std::vector<double> v;
            for (const auto& w : run_ensemble(g, 100.0, dt, 500, seed).words)
                v.push_back(fuchs.log_norm(w, g.base_point()) / 100.0);
            return v;
        };
        auto coarse = exponents(0.01, 31), fine = exponents(0.005, 32);
        double se = std::hypot(stderr_of(coarse), stderr_of(fine));
        CHECK(std::abs(mean(coarse) - mean(fine)) < 2.0 * se);
    }

    TEST_CASE("stored points are positive, reduced and close together") {
        const FuchsianGroup& g = torus();
        for (std::uint64_t seed : {1, 2, 3}) {
            TrackedPath p = run(g, 20.0, 0.01, seed);
            std::string rebuilt;
            for (std::size_t k = 0; k < p.points.size(); ++k) {
                CHECK(p.points[k].im() > 0.0);
                CHECK(g.in_domain(p.points[k].value(), 1e-9));
                append_reduced(rebuilt, p.word_deltas[k]);
                if (k > 0) {
                    HalfPlanePoint moved = apply(g.evaluate(p.word_deltas[k]), p.points[k]);
                    CHECK(hyp_distance(p.points[k - 1], moved) <= 6.0 * std::sqrt(p.dt) + 1e-9);
                }
            }
            CHECK(rebuilt == p.deck_word);
        }
    }
}

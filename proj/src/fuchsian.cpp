#include "projlab/fuchsian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_set>

#include "json.hpp"

namespace projlab {

namespace {

char inverse_letter(char c) {
    switch (c) {
    case 'A': return 'a';
    case 'a': return 'A';
    case 'B': return 'b';
    case 'b': return 'B';
    }
    throw precondition_error("invalid word", std::string("unknown letter '") + c + "'");
}

// Minkowski model coordinates with the base point at (1, 0, 0).
struct Hyp {
    double x0, x1, x2;
};

double minkowski(const Hyp& p, const Hyp& q) { return -p.x0 * q.x0 + p.x1 * q.x1 + p.x2 * q.x2; }

Hyp to_hyperboloid(cplx tau, const HalfPlanePoint& base) {
    cplx t = (tau - base.re()) / base.im();
    double y = t.imag(), r2 = std::norm(t);
    return {(r2 + 1.0) / (2.0 * y), (r2 - 1.0) / (2.0 * y), t.real() / y};
}

struct Klein {
    double k1, k2;
};

// Inverse of the Klein chart; points with |k| close to 1 are treated as ideal.
SpherePoint klein_to_sphere(const Klein& k, const HalfPlanePoint& base, bool& ideal) {
    double r2 = k.k1 * k.k1 + k.k2 * k.k2;
    ideal = r2 >= (1.0 - 1e-9) * (1.0 - 1e-9);
    cplx t;
    if (ideal) {
        double r = std::sqrt(r2);
        double k1 = k.k1 / r, k2 = k.k2 / r;
        if (1.0 - k1 < 1e-13) return SpherePoint::infinity();
        t = {k2 / (1.0 - k1), 0.0};
    } else {
        double s = 1.0 / std::sqrt(1.0 - r2);
        double x0 = s, x1 = k.k1 * s, x2 = k.k2 * s;
        double y = 1.0 / (x0 - x1);
        t = {x2 * y, y};
    }
    return SpherePoint::from_complex(base.re() + base.im() * t);
}

struct PolyVertex {
    Klein p;
    int label;  // face index of the edge leaving this vertex, -1 for the initial box
};

std::vector<PolyVertex> clip(const std::vector<PolyVertex>& poly, double n1, double n2, double h,
                             int label) {
    std::vector<PolyVertex> out;
    std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const PolyVertex& cur = poly[i];
        const PolyVertex& nxt = poly[(i + 1) % n];
        double fc = n1 * cur.p.k1 + n2 * cur.p.k2 - h;
        double fn = n1 * nxt.p.k1 + n2 * nxt.p.k2 - h;
        auto cross = [&] {
            double t = fc / (fc - fn);
            return Klein{cur.p.k1 + t * (nxt.p.k1 - cur.p.k1), cur.p.k2 + t * (nxt.p.k2 - cur.p.k2)};
        };
        if (fc <= 0.0) {
            out.push_back(cur);
            if (fn > 0.0) out.push_back({cross(), label});
        } else if (fn <= 0.0) {
            out.push_back({cross(), cur.label});
        }
    }
    return out;
}

void drop_degenerate_edges(std::vector<PolyVertex>& poly, double tol) {
    bool changed = true;
    while (changed && poly.size() > 2) {
        changed = false;
        for (std::size_t i = 0; i < poly.size(); ++i) {
            const PolyVertex& a = poly[i];
            const PolyVertex& b = poly[(i + 1) % poly.size()];
            if (std::hypot(a.p.k1 - b.p.k1, a.p.k2 - b.p.k2) < tol) {
                poly.erase(poly.begin() + static_cast<long>(i));
                changed = true;
                break;
            }
        }
    }
}

void enumerate_words(const std::string& prefix, int max_len, std::vector<std::string>& out) {
    if (!prefix.empty()) out.push_back(prefix);
    if (static_cast<int>(prefix.size()) == max_len) return;
    for (char c : {'A', 'a', 'B', 'b'}) {
        if (!prefix.empty() && prefix.back() == inverse_letter(c)) continue;
        enumerate_words(prefix + c, max_len, out);
    }
}

// |tau - p|^2 / Im p, monotone in d(tau, p) for fixed tau.
double orbit_gauge(cplx tau, cplx p) { return std::norm(tau - p) / p.imag(); }

// Matrix entries quantized to 2^-20 after fixing the sign ambiguity of PSL(2).
using MatrixKey = std::array<long long, 4>;

MatrixKey matrix_key(const MoebiusMap& m) {
    std::array<double, 4> e = {m.a().real(), m.b().real(), m.c().real(), m.d().real()};
    double sign = 1.0;
    for (double v : e) {
        if (std::abs(v) > 1e-6) {
            sign = v > 0 ? 1.0 : -1.0;
            break;
        }
    }
    MatrixKey k;
    for (int i = 0; i < 4; ++i) k[i] = std::llround(sign * e[i] * 1048576.0);
    return k;
}

struct MatrixKeyHash {
    std::size_t operator()(const MatrixKey& k) const {
        std::uint64_t h = 0;
        for (long long v : k) h = splitmix64(h ^ static_cast<std::uint64_t>(v));
        return static_cast<std::size_t>(h);
    }
};

} // namespace

void append_reduced(std::string& w, const std::string& suffix) {
    for (char c : suffix) {
        if (!w.empty() && w.back() == inverse_letter(c))
            w.pop_back();
        else
            w.push_back(c);
    }
}

std::string free_reduce(const std::string& word) {
    std::string out;
    append_reduced(out, word);
    return out;
}

std::string inverse_word(const std::string& word) {
    std::string out(word.rbegin(), word.rend());
    for (char& c : out) c = inverse_letter(c);
    return out;
}

std::string canonical_cyclic_word(const std::string& word) {
    auto cyclic = [](std::string w) {
        w = free_reduce(w);
        while (w.size() >= 2 && w.front() == inverse_letter(w.back())) w = w.substr(1, w.size() - 2);
        return w;
    };
    auto least_rotation = [](const std::string& w) {
        std::string best = w;
        for (std::size_t i = 1; i < w.size(); ++i) best = std::min(best, w.substr(i) + w.substr(0, i));
        return best;
    };
    std::string w = cyclic(word);
    return std::min(least_rotation(w), least_rotation(inverse_word(w)));
}

bool is_primitive_cyclic(const std::string& w) {
    std::size_t n = w.size();
    if (n == 0) return false;
    for (std::size_t p = 1; p < n; ++p) {
        if (n % p != 0) continue;
        bool periodic = true;
        for (std::size_t i = p; i < n && periodic; ++i) periodic = w[i] == w[i - p];
        if (periodic) return false;
    }
    return true;
}

GroupElement operator*(const GroupElement& x, const GroupElement& y) {
    std::string w = x.word;
    append_reduced(w, y.word);
    return {compose(x.matrix, y.matrix), std::move(w)};
}

GroupElement inverse(const GroupElement& g) { return {g.matrix.inverse(), inverse_word(g.word)}; }

FuchsianGroup::FuchsianGroup(MoebiusMap gen_a, MoebiusMap gen_b, HalfPlanePoint base)
    : gen_a_(gen_a), gen_b_(gen_b), inv_a_(gen_a.inverse()), inv_b_(gen_b.inverse()), base_(base) {
    if (!gen_a_.is_real() || !gen_b_.is_real())
        throw precondition_error("not real", "generators must lie in PSL(2,R)");
    commutator_ = gen_a_ * gen_b_ * inv_a_ * inv_b_;
    Classification cls = classify(commutator_, 1e-10);
    if (cls.kind != MoebiusKind::Parabolic)
        throw precondition_error("no cusp", "commutator of the generators must be parabolic");

    // Fixed point xi of the commutator: (a - d) / (2c), or infinity when c = 0.
    const Mat2& k = commutator_.matrix();
    MoebiusMap to_inf;
    if (std::abs(k.c) < 1e-14) {
        to_inf = MoebiusMap::identity();
    } else {
        double xi = ((k.a - k.d) / (2.0 * k.c)).real();
        to_inf = MoebiusMap(0.0, -1.0, 1.0, -xi);
    }
    // to_inf K to_inf^-1 = +-[[1, s], [0, 1]]; rescale s to 1 in absolute value.
    MoebiusMap conj = to_inf * commutator_ * to_inf.inverse();
    double s = (conj.b() / conj.a()).real();
    double sq = std::sqrt(std::abs(s));
    cusp_normalizer_ = MoebiusMap(1.0 / sq, 0.0, 0.0, sq) * to_inf;
    if (!cusp_normalizer_.is_real()) cusp_normalizer_ = MoebiusMap(cplx{0.0, 1.0} * cusp_normalizer_.matrix());

    build_domain();
}

const MoebiusMap& FuchsianGroup::letter(char c) const {
    switch (c) {
    case 'A': return gen_a_;
    case 'a': return inv_a_;
    case 'B': return gen_b_;
    case 'b': return inv_b_;
    }
    throw precondition_error("invalid word", std::string("unknown letter '") + c + "'");
}

MoebiusMap FuchsianGroup::evaluate(const std::string& word) const {
    MoebiusMap m;
    for (char c : word) m = m * letter(c);
    return m;
}

GroupElement FuchsianGroup::element(const std::string& word) const {
    std::string w = free_reduce(word);
    return {evaluate(w), w};
}

void FuchsianGroup::build_domain() {
    const cplx b = base_.value();
    std::vector<std::string> words;
    enumerate_words("", 8, words);

    struct Candidate {
        std::string word;
        MoebiusMap m;
        cplx image;
        double dist;
    };
    std::vector<Candidate> cands;
    for (const auto& w : words) {
        MoebiusMap m = evaluate(w);
        cplx p = act(m, b);
        double d = hyp_distance(b, p);
        if (d <= 8.0 && d > 1e-9) cands.push_back({w, m, p, d});
    }
    std::sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) {
        return x.dist != y.dist ? x.dist < y.dist : x.word < y.word;
    });

    std::vector<PolyVertex> poly = {{{-2.0, -2.0}, -1}, {{2.0, -2.0}, -1}, {{2.0, 2.0}, -1}, {{-2.0, 2.0}, -1}};
    for (std::size_t i = 0; i < cands.size(); ++i) {
        Hyp p = to_hyperboloid(cands[i].image, base_);
        poly = clip(poly, p.x1, p.x2, p.x0 - 1.0, static_cast<int>(i));
        drop_degenerate_edges(poly, 1e-10);
    }

    faces_.clear();
    std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const PolyVertex& v = poly[i];
        const PolyVertex& w = poly[(i + 1) % n];
        if (v.label < 0) throw numerical_error("broken domain", "Dirichlet domain is not closed by candidates");
        double r = std::hypot(v.p.k1, v.p.k2);
        if (r > 1.0 + 1e-7) throw numerical_error("broken domain", "Dirichlet domain vertex outside the disk");
        const Candidate& cand = cands[static_cast<std::size_t>(v.label)];
        DomainFace f;
        f.pairing = {cand.m, cand.word};
        f.image = cand.image;
        f.displacement = cand.dist;
        bool i0 = false, i1 = false;
        f.vertices = {klein_to_sphere(v.p, base_, i0), klein_to_sphere(w.p, base_, i1)};
        f.ideal = {i0, i1};
        faces_.push_back(f);
    }
    // Side pairings come in inverse pairs.
    for (const auto& f : faces_) {
        std::string inv = inverse_word(f.pairing.word);
        bool found = std::any_of(faces_.begin(), faces_.end(),
                                 [&](const DomainFace& o) { return o.pairing.word == inv; });
        if (!found) throw numerical_error("broken domain", "face " + f.pairing.word + " has no partner");
    }
}

bool FuchsianGroup::in_domain(cplx tau, double tol) const {
    double g0 = orbit_gauge(tau, base_.value());
    for (const auto& f : faces_)
        if (g0 > (1.0 + tol) * orbit_gauge(tau, f.image)) return false;
    return true;
}

double FuchsianGroup::domain_area() const {
    // Interior angles at finite vertices via tangent vectors on the hyperboloid;
    // ideal vertices contribute zero.
    auto lift = [&](const SpherePoint& v, bool ideal) -> Hyp {
        if (!ideal) return to_hyperboloid(v.to_complex(), base_);
        // Null vector pointing at the ideal point.
        if (v.is_infinity(1e-14)) return {1.0, 1.0, 0.0};
        double t = (v.to_complex().real() - base_.re()) / base_.im();
        return {(t * t + 1.0) / 2.0, (t * t - 1.0) / 2.0, t};
    };
    std::size_t n = faces_.size();
    double angle_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const DomainFace& in = faces_[(i + n - 1) % n];
        const DomainFace& out = faces_[i];
        if (out.ideal[0]) continue;
        Hyp x = lift(out.vertices[0], false);
        Hyp u = lift(in.vertices[0], in.ideal[0]);
        Hyp w = lift(out.vertices[1], out.ideal[1]);
        auto tangent = [&](const Hyp& y) {
            double s = minkowski(x, y);
            return Hyp{y.x0 + s * x.x0, y.x1 + s * x.x1, y.x2 + s * x.x2};
        };
        Hyp tu = tangent(u), tw = tangent(w);
        double c = minkowski(tu, tw) / std::sqrt(minkowski(tu, tu) * minkowski(tw, tw));
        angle_sum += std::acos(std::clamp(c, -1.0, 1.0));
    }
    return (static_cast<double>(n) - 2.0) * std::numbers::pi - angle_sum;
}

double FuchsianGroup::max_finite_vertex_distance() const {
    double best = 0.0;
    for (const auto& f : faces_)
        for (int k = 0; k < 2; ++k)
            if (!f.ideal[k]) best = std::max(best, hyp_distance(base_.value(), f.vertices[k].to_complex()));
    return best;
}

std::string FuchsianGroup::to_json() const {
    using nlohmann::json;
    auto mat = [](const MoebiusMap& m) {
        json out = json::array();
        for (cplx z : {m.a(), m.b(), m.c(), m.d()}) out.push_back({z.real(), z.imag()});
        return out;
    };
    json j;
    j["gen_a"] = mat(gen_a_);
    j["gen_b"] = mat(gen_b_);
    j["commutator"] = mat(commutator_);
    j["cusp_normalizer"] = mat(cusp_normalizer_);
    j["base_point"] = {base_.re(), base_.im()};
    j["faces"] = json::array();
    for (const auto& f : faces_) {
        json jf;
        jf["word"] = f.pairing.word;
        jf["matrix"] = mat(f.pairing.matrix);
        jf["displacement"] = f.displacement;
        jf["vertices"] = json::array();
        for (int k = 0; k < 2; ++k) {
            const SpherePoint& v = f.vertices[k];
            if (v.is_infinity(1e-14))
                jf["vertices"].push_back({{"ideal", true}, {"infinity", true}});
            else
                jf["vertices"].push_back({{"ideal", f.ideal[k]},
                                          {"re", v.to_complex().real()},
                                          {"im", f.ideal[k] ? 0.0 : v.to_complex().imag()}});
        }
        j["faces"].push_back(jf);
    }
    return j.dump(2);
}

FuchsianGroup punctured_torus_group(HalfPlanePoint base) {
    return FuchsianGroup(MoebiusMap(1.0, 1.0, 1.0, 2.0), MoebiusMap(1.0, -1.0, -1.0, 2.0), base);
}

Reduction reduce(const FuchsianGroup& g, const HalfPlanePoint& tau) {
    const cplx b = g.base_point().value();
    const auto& faces = g.faces();
    cplx t = tau.value();
    GroupElement deck{MoebiusMap::identity(), ""};
    MoebiusMap deck_m;
    for (int step = 0; step < 1000000; ++step) {
        double g0 = orbit_gauge(t, b);
        std::size_t best = faces.size();
        double best_ratio = 1.0 - 1e-12;
        for (std::size_t i = 0; i < faces.size(); ++i) {
            double r = orbit_gauge(t, faces[i].image) / g0;
            if (r < best_ratio) {
                best_ratio = r;
                best = i;
            }
        }
        if (best == faces.size()) {
            deck.matrix = deck_m;
            return {HalfPlanePoint(t), deck};
        }
        const GroupElement& f = faces[best].pairing;
        t = act(f.matrix.inverse(), t);
        if (!(t.imag() > 0.0)) t.imag(std::max(std::abs(t.imag()), 1e-300));
        deck_m = deck_m * f.matrix;
        append_reduced(deck.word, f.word);
    }
    throw numerical_error("non-termination", "reduction exceeded 10^6 side-pairing steps");
}

std::vector<GroupElement> enumerate_ball(const FuchsianGroup& g, double R) {
    if (!(R >= 0.0) || R > 20.0)
        throw precondition_error("radius out of range", "enumerate_ball requires 0 <= R <= 20");
    const cplx b = g.base_point().value();
    const auto& faces = g.faces();
    const std::size_t budget = 10000000;

    // Lower bound on dist(x, D) from the bisector half-planes containing D.
    std::vector<double> face_sinh;
    for (const auto& f : faces) face_sinh.push_back(2.0 * std::sinh(0.5 * f.displacement));
    auto cosh_dist = [](cplx x, cplx p) { return 1.0 + std::norm(x - p) / (2.0 * x.imag() * p.imag()); };
    auto dist_lower_bound = [&](cplx x) {
        double cb = cosh_dist(x, b);
        double best = 0.0;
        for (std::size_t i = 0; i < faces.size(); ++i)
            best = std::max(best, (cb - cosh_dist(x, faces[i].image)) / face_sinh[i]);
        return std::asinh(best);
    };

    // Tiles gamma D are visited breadth first, keyed by the quantized matrix of gamma.
    // Words are rebuilt from parent links only for the elements that are returned, since
    // tiles deep in the cusp carry very long words.
    struct Node {
        MoebiusMap m;
        std::size_t parent;
        std::size_t face;
    };
    std::vector<Node> nodes;
    std::unordered_set<MatrixKey, MatrixKeyHash> seen;
    nodes.push_back({MoebiusMap::identity(), 0, faces.size()});
    seen.insert(matrix_key(nodes[0].m));
    std::vector<std::size_t> hits;
    for (std::size_t head = 0; head < nodes.size(); ++head) {
        const MoebiusMap cur = nodes[head].m;
        if (hyp_distance(b, act(cur, b)) <= R) hits.push_back(head);
        for (std::size_t fi = 0; fi < faces.size(); ++fi) {
            MoebiusMap nxt = cur * faces[fi].pairing.matrix;
            cplx x = act(nxt.inverse(), b);
            if (dist_lower_bound(x) > R + 1e-9) continue;
            if (!seen.insert(matrix_key(nxt)).second) continue;
            if (nodes.size() >= budget)
                throw numerical_error("budget exceeded", "ball enumeration exceeded 10^7 elements");
            nodes.push_back({nxt, head, fi});
        }
    }
    std::vector<GroupElement> out;
    out.reserve(hits.size());
    for (std::size_t h : hits) {
        std::vector<std::size_t> path;
        for (std::size_t k = h; k != 0; k = nodes[k].parent) path.push_back(nodes[k].face);
        std::string w;
        for (auto it = path.rbegin(); it != path.rend(); ++it) append_reduced(w, faces[*it].pairing.word);
        out.push_back({nodes[h].m, std::move(w)});
    }
    std::sort(out.begin(), out.end(), [](const GroupElement& x, const GroupElement& y) {
        return x.word.size() != y.word.size() ? x.word.size() < y.word.size() : x.word < y.word;
    });
    return out;
}

double translation_length(const MoebiusMap& m) {
    double t = std::abs(m.trace());
    if (t <= 2.0) return 0.0;
    return 2.0 * std::acosh(0.5 * t);
}

std::vector<GroupElement> primitive_classes(const FuchsianGroup& g, double L) {
    // A closed geodesic of length l meets the domain within distance r of the base
    // point, so a representative moves the base point by at most l + 2r.
    double r = g.max_finite_vertex_distance();
    double R = std::min(20.0, L + 2.0 * r + 0.5);
    std::vector<GroupElement> ball = enumerate_ball(g, R);
    std::vector<GroupElement> out;
    std::unordered_set<std::string> seen;
    for (const auto& e : ball) {
        if (e.word.empty()) continue;
        Classification cls = classify(e.matrix);
        if (cls.kind != MoebiusKind::Loxodromic) continue;
        if (translation_length(e.matrix) > L) continue;
        std::string key = canonical_cyclic_word(e.word);
        if (!is_primitive_cyclic(key) || !seen.insert(key).second) continue;
        out.push_back(g.element(key));
    }
    std::sort(out.begin(), out.end(), [](const GroupElement& x, const GroupElement& y) { return x.word < y.word; });
    return out;
}

GroupElement random_primitive_word(const FuchsianGroup& g, double L, Rng& rng) {
    if (!(L > 0.0)) throw precondition_error("length out of range", "random_primitive_word requires L > 0");
    std::vector<GroupElement> classes = primitive_classes(g, L);
    if (classes.empty()) throw precondition_error("empty set", "no hyperbolic class with translation length <= L");
    std::uniform_int_distribution<std::size_t> pick(0, classes.size() - 1);
    return classes[pick(rng)];
}

} // namespace projlab

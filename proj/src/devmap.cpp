#include "projlab/devmap.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <unordered_map>

#include <boost/numeric/odeint.hpp>

namespace projlab {

namespace {

namespace odeint = boost::numeric::odeint;
using State = std::array<double, 8>;

constexpr double kMaxPiece = 0.5;      // hyperbolic length of one integration chord
constexpr double kTolerance = 1e-12;   // absolute and relative per-step tolerance
constexpr int kSamplesPerPiece = 16;   // intervals per mesh edge
constexpr int kMaxRefine = 12;
constexpr double kPi = std::numbers::pi;
// Ball centers must reduce into the Ford domain below this height (the thick part).
constexpr double kCenterHeightCap = 2.0;

State pack(const Mat2& m) {
    return {m.a.real(), m.a.imag(), m.b.real(), m.b.imag(), m.c.real(), m.c.imag(), m.d.real(), m.d.imag()};
}

Mat2 unpack(const State& x) { return {{x[0], x[1]}, {x[2], x[3]}, {x[4], x[5]}, {x[6], x[7]}}; }

// F' = F X with X = -Q [[w, -w^2], [1, -w]] along w = w0 + t dw.
struct ChordSystem {
    const ProjectiveStructure* s;
    cplx w0, dw;

    void operator()(const State& x, State& dxdt, double t) const {
        cplx w = w0 + t * dw;
        cplx k = -s->potential_w(w) * dw;
        cplx a{x[0], x[1]}, b{x[2], x[3]}, c{x[4], x[5]}, d{x[6], x[7]};
        cplx r1 = (a * w + b) * k, r2 = (c * w + d) * k;
        cplx r1b = -w * r1, r2b = -w * r2;
        dxdt = {r1.real(), r1.imag(), r1b.real(), r1b.imag(), r2.real(), r2.imag(), r2b.real(), r2b.imag()};
    }
};

void integrate_piece(const ProjectiveStructure& s, Mat2& F, cplx w0, cplx w1) {
    if (s.c() == cplx{0.0}) return;
    ChordSystem sys{&s, w0, w1 - w0};
    State x = pack(F);
    auto stepper = odeint::make_controlled(kTolerance, kTolerance, odeint::runge_kutta_dopri5<State>());
    double t = 0.0, dt = 0.25;
    while (t < 1.0) {
        if (t + dt > 1.0) dt = 1.0 - t;
        if (dt < 1e-9) throw numerical_error("step underflow", "adaptive step fell below 1e-9");
        stepper.try_step(sys, x, t, dt);
    }
    F = unpack(x);
}

// Integrates along the straight chord w0 -> w1 in pieces of bounded hyperbolic length.
void integrate_chord(const ProjectiveStructure& s, Mat2& F, cplx w0, cplx w1) {
    if (w0 == w1) return;
    double len = hyp_distance(w0, w1);
    int pieces = std::max(1, static_cast<int>(std::ceil(len / kMaxPiece)));
    // The Euclidean chord is longer than the geodesic; subdivide by hyperbolic midpoints.
    cplx prev = w0;
    for (int k = 1; k <= pieces; ++k) {
        cplx next = w0 + (w1 - w0) * (static_cast<double>(k) / pieces);
        int sub = std::max(1, static_cast<int>(std::ceil(hyp_distance(prev, next) / kMaxPiece)));
        for (int j = 1; j <= sub; ++j) {
            cplx a = prev + (next - prev) * (static_cast<double>(j - 1) / sub);
            cplx b = prev + (next - prev) * (static_cast<double>(j) / sub);
            integrate_piece(s, F, a, b);
        }
        prev = next;
    }
}

Mat2 conj_to_w(const FuchsianGroup& g, const Mat2& m) {
    const Mat2& n = g.cusp_normalizer().matrix();
    return n * m * n.adjugate();
}

Mat2 conj_to_tau(const FuchsianGroup& g, const Mat2& m) {
    const Mat2& n = g.cusp_normalizer().matrix();
    return n.adjugate() * m * n;
}

cplx to_w(const FuchsianGroup& g, cplx tau) { return act(g.cusp_normalizer(), tau); }

// F_w at w, continued from the base point along a chord.
Mat2 frame_w(const ProjectiveStructure& s, cplx w) {
    Mat2 F{};
    integrate_chord(s, F, to_w(s.group(), s.group().base_point().value()), w);
    return F;
}

// rho_w(g) = F(g w_b) g for g in the w-group.
Mat2 holonomy_w(const ProjectiveStructure& s, const Mat2& g) {
    cplx wb = to_w(s.group(), s.group().base_point().value());
    cplx gwb = (g.a * wb + g.b) / (g.c * wb + g.d);
    return frame_w(s, gwb) * g;
}

} // namespace

cplx ProjectiveStructure::potential_w(cplx w) const {
    return 0.5 * c_ * form_->value(w) / form_->sup_norm();
}

DevFrame base_frame(const ProjectiveStructure& s) {
    const HalfPlanePoint& b = s.group().base_point();
    return {b, MoebiusMap::identity(), SpherePoint::from_complex(b.value()), 1.0};
}

DevFrame continue_frame(const ProjectiveStructure& s, const DevFrame& start,
                        const std::vector<HalfPlanePoint>& path) {
    const FuchsianGroup& g = s.group();
    Mat2 F = conj_to_w(g, start.frame.matrix());
    cplx w = to_w(g, start.base.value());
    for (const auto& p : path) {
        cplx wn = to_w(g, p.value());
        integrate_chord(s, F, w, wn);
        w = wn;
    }
    Mat2 Ft = conj_to_tau(g, F);
    DevFrame out{path.empty() ? start.base : path.back(), MoebiusMap(Ft), SpherePoint(), Ft.det().real()};
    out.wronskian = std::abs(Ft.det());
    out.dev_value = apply(out.frame, SpherePoint::from_complex(out.base.value()));
    return out;
}

SpherePoint develop(const ProjectiveStructure& s, const HalfPlanePoint& tau) {
    return continue_frame(s, base_frame(s), {tau}).dev_value;
}

const MoebiusMap& Representation::letter(char l) const {
    static thread_local MoebiusMap inv;
    switch (l) {
    case 'A': return rho_a;
    case 'B': return rho_b;
    case 'a': inv = rho_a.inverse(); return inv;
    case 'b': inv = rho_b.inverse(); return inv;
    }
    throw precondition_error("invalid word", std::string("unknown letter '") + l + "'");
}

LogNormProduct Representation::product(const std::string& word) const {
    const Mat2 ma = rho_a.matrix(), mb = rho_b.matrix();
    const Mat2 ia = ma.adjugate(), ib = mb.adjugate();
    LogNormProduct p;
    for (char l : word) {
        switch (l) {
        case 'A': p.right_multiply(ma); break;
        case 'a': p.right_multiply(ia); break;
        case 'B': p.right_multiply(mb); break;
        case 'b': p.right_multiply(ib); break;
        default: throw precondition_error("invalid word", std::string("unknown letter '") + l + "'");
        }
    }
    return p;
}

MoebiusMap Representation::evaluate(const std::string& word) const {
    MoebiusMap out;
    for (char l : word) out = compose(out, letter(l));
    return out;
}

double Representation::log_norm(const std::string& word, const HalfPlanePoint& base) const {
    LogNormProduct p = product(word);
    return p.log_scale() + std::log(matrix_norm_at(p.scaled(), base));
}

Representation holonomy(const ProjectiveStructure& s) {
    const FuchsianGroup& g = s.group();
    return {holonomy_of(s, g.gen_a()), holonomy_of(s, g.gen_b()), s.c()};
}

MoebiusMap holonomy_of(const ProjectiveStructure& s, const MoebiusMap& gamma) {
    const FuchsianGroup& g = s.group();
    Mat2 rw = holonomy_w(s, conj_to_w(g, gamma.matrix()));
    return MoebiusMap(conj_to_tau(g, rw));
}

// ---------------------------------------------------------------------------------------
// Preimage counting

struct PreimageCounter::Mesh {
    struct Piece {
        double x0, s0, x1, s1;  // straight in (x, s), w = x + i floor(x) e^s
        std::vector<cplx> w;
        std::vector<Mat2> F;
    };
    struct Cell {
        cplx center;
        std::vector<std::pair<int, int>> boundary;  // (piece, +-1)
    };
    std::vector<Piece> pieces;
    std::vector<Cell> cells;
    const CuspForm4* form = nullptr;

    cplx point(double x, double s) const { return {x, form->floor_height(x) * std::exp(s)}; }
};

namespace {

using Mesh = PreimageCounter::Mesh;

void fill_piece(const ProjectiveStructure& s, Mesh::Piece& p, const Mat2& F0, const Mesh& mesh) {
    p.w.resize(kSamplesPerPiece + 1);
    p.F.resize(kSamplesPerPiece + 1);
    for (int k = 0; k <= kSamplesPerPiece; ++k) {
        double t = static_cast<double>(k) / kSamplesPerPiece;
        p.w[k] = mesh.point(p.x0 + t * (p.x1 - p.x0), p.s0 + t * (p.s1 - p.s0));
    }
    p.F[0] = F0;
    for (int k = 1; k <= kSamplesPerPiece; ++k) {
        p.F[k] = p.F[k - 1];
        integrate_chord(s, p.F[k], p.w[k - 1], p.w[k]);
    }
}

double mat_diff(const Mat2& x, const Mat2& y) { return (x - y).frobenius() / std::max(1.0, x.frobenius()); }

} // namespace

PreimageCounter::PreimageCounter(const ProjectiveStructure& s, double max_radius)
    : s_(&s), max_radius_(max_radius) {
    if (!(max_radius > 0.0) || max_radius > 12.0)
        throw precondition_error("radius out of range", "preimage counting requires 0 < R <= 12");
    auto mesh = std::make_shared<Mesh>();
    const CuspForm4& form = s.form();
    mesh->form = &form;

    // Reduced ball centers have height at most 1 / (2 r_arc) roughly; every ball point then
    // reduces below that height times e^R.
    double y_floor_min = HUGE_VAL;
    for (int i = 0; i <= 96; ++i) y_floor_min = std::min(y_floor_min, form.floor_height(-0.5 + i / 96.0));
    const double ds = 0.3;
    const double top = std::log(kCenterHeightCap / y_floor_min) + max_radius + 2.0 * ds;
    const int rows = static_cast<int>(std::ceil(top / ds));

    const int allowed[] = {48, 24, 12, 6, 3, 1};
    std::vector<int> ncols(rows);
    for (int j = 0; j < rows; ++j) {
        double y_low = y_floor_min * std::exp(j * ds);
        int n = 48;
        for (int a : allowed)
            if (1.0 / a <= 0.3 * y_low) n = a;
        if (j > 0) n = std::min(n, ncols[j - 1]);
        ncols[j] = j == 0 ? 48 : n;
    }
    // Horizontal line j carries the finer partition of the rows on either side.
    std::vector<int> line_parts(rows + 1);
    for (int j = 0; j <= rows; ++j) line_parts[j] = j == 0 ? ncols[0] : ncols[j - 1];

    std::vector<int> line_start(rows + 1), vert_start(rows);
    for (int j = 0; j <= rows; ++j) {
        line_start[j] = static_cast<int>(mesh->pieces.size());
        for (int i = 0; i < line_parts[j]; ++i) {
            double x0 = -0.5 + static_cast<double>(i) / line_parts[j];
            double x1 = -0.5 + static_cast<double>(i + 1) / line_parts[j];
            mesh->pieces.push_back({x0, j * ds, x1, j * ds, {}, {}});
        }
    }
    for (int j = 0; j < rows; ++j) {
        vert_start[j] = static_cast<int>(mesh->pieces.size());
        for (int i = 0; i <= ncols[j]; ++i) {
            double x = -0.5 + static_cast<double>(i) / ncols[j];
            mesh->pieces.push_back({x, j * ds, x, (j + 1) * ds, {}, {}});
        }
    }

    // Frames: base point -> left end of line 0, then lines and the left column upward.
    Mat2 F = frame_w(s, mesh->point(-0.5, 0.0));
    for (int j = 0; j <= rows; ++j) {
        for (int i = 0; i < line_parts[j]; ++i) {
            auto& p = mesh->pieces[line_start[j] + i];
            fill_piece(s, p, i == 0 ? F : mesh->pieces[line_start[j] + i - 1].F.back(), *mesh);
        }
        if (j < rows) {
            auto& left = mesh->pieces[vert_start[j]];
            fill_piece(s, left, F, *mesh);
            F = left.F.back();
        }
    }
    double closure = 0.0;
    for (int j = 0; j < rows; ++j) {
        int kb = line_parts[j] / ncols[j];
        for (int i = 1; i <= ncols[j]; ++i) {
            auto& v = mesh->pieces[vert_start[j] + i];
            const auto& below = mesh->pieces[line_start[j] + i * kb - 1];
            fill_piece(s, v, below.F.back(), *mesh);
            const auto& above = mesh->pieces[line_start[j + 1] + i - 1];
            closure = std::max(closure, mat_diff(v.F.back(), above.F.back()));
        }
        // Left column against the line above.
        closure = std::max(closure, mat_diff(mesh->pieces[vert_start[j]].F.back(),
                                             mesh->pieces[line_start[j + 1]].F.front()));
    }
    closure_error_ = closure;

    for (int j = 0; j < rows; ++j) {
        int kb = line_parts[j] / ncols[j];
        for (int i = 0; i < ncols[j]; ++i) {
            Mesh::Cell cell;
            double xm = -0.5 + (i + 0.5) / ncols[j];
            cell.center = mesh->point(xm, (j + 0.5) * ds);
            for (int k = 0; k < kb; ++k) cell.boundary.push_back({line_start[j] + i * kb + k, +1});
            cell.boundary.push_back({vert_start[j] + i + 1, +1});
            cell.boundary.push_back({line_start[j + 1] + i, -1});
            cell.boundary.push_back({vert_start[j] + i, -1});
            mesh->cells.push_back(std::move(cell));
        }
    }
    mesh_ = mesh;
}

std::size_t PreimageCounter::cell_count() const { return mesh_->cells.size(); }

std::size_t PreimageCounter::sample_count() const {
    std::size_t n = 0;
    for (const auto& p : mesh_->pieces) n += p.w.size();
    return n;
}

namespace {

// Winding of g = z2 u1 - z1 u2 along one piece, refining where the argument jumps.
class PieceWinding {
public:
    PieceWinding(const ProjectiveStructure& s, const Mesh& mesh, cplx z1, cplx z2)
        : s_(s), mesh_(mesh), z1_(z1), z2_(z2) {}

    double operator()(const Mesh::Piece& p) const {
        double total = 0.0;
        for (int k = 0; k < kSamplesPerPiece; ++k) {
            double t0 = static_cast<double>(k) / kSamplesPerPiece;
            double t1 = static_cast<double>(k + 1) / kSamplesPerPiece;
            total += segment(p, p.F[k], t0, p.w[k], eval(p.F[k], p.w[k]), t1, p.w[k + 1],
                             eval(p.F[k + 1], p.w[k + 1]), 0);
        }
        return total;
    }

private:
    cplx eval(const Mat2& F, cplx w) const {
        cplx u1 = F.a * w + F.b, u2 = F.c * w + F.d;
        return z2_ * u1 - z1_ * u2;
    }

    double segment(const Mesh::Piece& p, const Mat2& F0, double t0, cplx w0, cplx g0, double t1, cplx w1,
                   cplx g1, int depth) const {
        if (g0 == cplx{0.0} || g1 == cplx{0.0})
            throw numerical_error("boundary hit", "target point lies on a cell boundary image");
        double d = std::arg(g1 / g0);
        if (std::abs(d) <= kPi / 4.0) return d;
        if (depth >= kMaxRefine)
            throw numerical_error("boundary hit", "target point lies on a cell boundary image");
        double tm = 0.5 * (t0 + t1);
        cplx wm = mesh_.point(p.x0 + tm * (p.x1 - p.x0), p.s0 + tm * (p.s1 - p.s0));
        Mat2 Fm = F0;
        integrate_chord(s_, Fm, w0, wm);
        cplx gm = eval(Fm, wm);
        return segment(p, F0, t0, w0, g0, tm, wm, gm, depth + 1) +
               segment(p, Fm, tm, wm, gm, t1, w1, g1, depth + 1);
    }

    const ProjectiveStructure& s_;
    const Mesh& mesh_;
    cplx z1_, z2_;
};

using MatrixKey = std::array<long long, 4>;
struct MatrixKeyHash {
    std::size_t operator()(const MatrixKey& k) const {
        std::uint64_t h = 0;
        for (long long v : k) h = (h ^ static_cast<std::uint64_t>(v)) * 0x100000001b3ULL + 0x9e3779b97f4a7c15ULL;
        return static_cast<std::size_t>(h ^ (h >> 29));
    }
};

MatrixKey key_of(const Mat2& m) {
    std::array<double, 4> e = {m.a.real(), m.b.real(), m.c.real(), m.d.real()};
    double sign = 1.0;
    for (double v : e)
        if (std::abs(v) > 1e-6) {
            sign = v > 0 ? 1.0 : -1.0;
            break;
        }
    MatrixKey k;
    for (int i = 0; i < 4; ++i) k[i] = std::llround(sign * e[i] * 65536.0);
    return k;
}

} // namespace

std::vector<PreimageCounter::CellHit> PreimageCounter::cell_counts(const SpherePoint& z,
                                                                   const HalfPlanePoint& center,
                                                                   double R) const {
    return cell_counts_split(z, center, R, 0);
}

std::vector<PreimageCounter::CellHit> PreimageCounter::cell_counts_split(const SpherePoint& z,
                                                                         const HalfPlanePoint& center,
                                                                         double R, int side) const {
    if (!(R > 0.0) || R > max_radius_)
        throw precondition_error("radius out of range", "ball radius exceeds the counter's max radius");
    const ProjectiveStructure& s = *s_;
    const FuchsianGroup& g = s.group();
    const CuspForm4& form = s.form();
    const Mesh& mesh = *mesh_;

    cplx xw = to_w(g, center.value());
    cplx xr;
    form.ford_reduce(xw, xr);
    if (xr.imag() > kCenterHeightCap)
        throw precondition_error("center in cusp", "ball center must project into the thick part");
    SpherePoint zw = apply(g.cusp_normalizer(), z);

    // Side pairings of the Ford domain: translations and the arc maps.
    std::vector<Mat2> pairings = {Mat2{1.0, 1.0, 0.0, 1.0}, Mat2{1.0, -1.0, 0.0, 1.0}};
    for (const auto& m : form.arc_maps()) pairings.push_back(m.matrix());
    std::vector<Mat2> rho_pairings;
    for (const auto& p : pairings) {
        Mat2 r = holonomy_w(s, p);
        rho_pairings.push_back(MoebiusMap(r).matrix());
    }

    const auto& centers = form.arc_centers();
    const double rad = form.arc_radius();
    auto dist_lower_bound = [&](cplx p) {
        double best = 0.0;
        if (std::abs(p.real()) > 0.5) best = std::asinh((std::abs(p.real()) - 0.5) / p.imag());
        for (double c0 : centers) {
            double q = rad * rad - std::norm(p - c0);
            if (q > 0.0) best = std::max(best, std::asinh(q / (2.0 * rad * p.imag())));
        }
        return best;
    };

    struct Node {
        Mat2 g;
        Mat2 rho;
    };
    std::vector<Node> nodes;
    std::unordered_map<MatrixKey, int, MatrixKeyHash> seen;
    nodes.push_back({Mat2{}, Mat2{}});
    seen.emplace(key_of(Mat2{}), 0);

    std::vector<CellHit> hits;
    std::vector<double> piece_winding(mesh.pieces.size());
    std::vector<char> piece_done(mesh.pieces.size());
    const double cosh_r = std::cosh(R);

    for (std::size_t head = 0; head < nodes.size(); ++head) {
        const Mat2 gm = nodes[head].g;
        const Mat2 rho = nodes[head].rho;
        for (std::size_t k = 0; k < pairings.size(); ++k) {
            Mat2 nxt = gm * pairings[k];
            Mat2 inv = nxt.adjugate();
            cplx p = (inv.a * xw + inv.b) / (inv.c * xw + inv.d);
            if (dist_lower_bound(p) > R + 1e-9) continue;
            if (seen.size() > 20000000)
                throw numerical_error("budget exceeded", "too many tiles meet the ball");
            auto [it, fresh] = seen.emplace(key_of(nxt), static_cast<int>(nodes.size()));
            if (!fresh) continue;
            Mat2 r = rho * rho_pairings[k];
            r = cplx{1.0 / std::sqrt(r.det())} * r;
            nodes.push_back({nxt, r});
        }

        // Cells of this tile inside the ball.
        std::fill(piece_done.begin(), piece_done.end(), 0);
        Mat2 rinv = rho.adjugate();
        cplx z1 = rinv.a * zw.z1() + rinv.b * zw.z2();
        cplx z2 = rinv.c * zw.z1() + rinv.d * zw.z2();
        double zn = std::sqrt(std::norm(z1) + std::norm(z2));
        PieceWinding winding(s, mesh, z1 / zn, z2 / zn);
        for (const auto& cell : mesh.cells) {
            cplx gc = (gm.a * cell.center + gm.b) / (gm.c * cell.center + gm.d);
            double ch = 1.0 + std::norm(gc - xw) / (2.0 * gc.imag() * xw.imag());
            if (ch > cosh_r) continue;
            if (side > 0 && gc.real() < xw.real()) continue;
            if (side < 0 && gc.real() >= xw.real()) continue;
            double total = 0.0;
            for (auto [pi, orient] : cell.boundary) {
                if (!piece_done[pi]) {
                    piece_winding[pi] = winding(mesh.pieces[pi]);
                    piece_done[pi] = 1;
                }
                total += orient * piece_winding[pi];
            }
            double turns = total / (2.0 * kPi);
            double rounded = std::round(turns);
            if (std::abs(turns - rounded) > 0.1)
                throw numerical_error("boundary hit", "winding number is not an integer");
            if (rounded < 0.0) throw numerical_error("boundary hit", "negative winding number");
            if (rounded > 0.0) hits.push_back({std::acosh(ch), static_cast<int>(rounded)});
        }
    }
    std::sort(hits.begin(), hits.end(), [](const CellHit& a, const CellHit& b) { return a.distance < b.distance; });
    return hits;
}

int count_preimages(const ProjectiveStructure& s, const SpherePoint& z, const HalfPlanePoint& center, double R) {
    PreimageCounter counter(s, R);
    int total = 0;
    for (const auto& h : counter.cell_counts(z, center, R)) total += h.count;
    return total;
}

double nevanlinna_N(const std::vector<PreimageCounter::CellHit>& hits, double r) {
    if (!(r > 0.0 && r < 1.0)) throw precondition_error("radius out of range", "Nevanlinna radius must lie in (0, 1)");
    double total = 0.0;
    for (const auto& h : hits) {
        double t = std::tanh(0.5 * h.distance);
        if (t > r) break;
        total += h.count * std::log(r / std::max(t, 1e-300));
    }
    return total;
}

double nevanlinna_N(const ProjectiveStructure& s, const SpherePoint& z, const HalfPlanePoint& center, double r) {
    double R = 2.0 * std::atanh(r);
    PreimageCounter counter(s, std::min(12.0, R + 1e-9));
    return nevanlinna_N(counter.cell_counts(z, center, R), r);
}

} // namespace projlab

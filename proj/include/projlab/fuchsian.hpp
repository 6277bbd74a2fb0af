#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "projlab/moebius.hpp"
#include "projlab/rng.hpp"

namespace projlab {

/// Words are strings over the letters A, a, B, b with a = A^-1 and b = B^-1.
std::string free_reduce(const std::string& word);
/// Appends suffix to an already reduced word, cancelling at the junction.
void append_reduced(std::string& word, const std::string& suffix);
std::string inverse_word(const std::string& word);
/// Cyclic reduction followed by the lexicographically least rotation of the word and of
/// its inverse. Two words are conjugate (up to inversion) iff their canonical forms agree.
std::string canonical_cyclic_word(const std::string& word);
/// True for cyclically reduced words that are not a proper power.
bool is_primitive_cyclic(const std::string& cyclic_word);

struct GroupElement {
    MoebiusMap matrix;
    std::string word;  // freely reduced
};

GroupElement operator*(const GroupElement& x, const GroupElement& y);
GroupElement inverse(const GroupElement& g);

/// One side of the Dirichlet domain D about the base point b. The side lies on the
/// perpendicular bisector of b and pairing.matrix * b, and
/// D is contained in { tau : d(tau, b) <= d(tau, pairing * b) }.
struct DomainFace {
    GroupElement pairing;
    cplx image;                    // pairing * b
    double displacement;           // d(b, pairing * b)
    std::array<SpherePoint, 2> vertices;  // ideal endpoints lie on the real line or at infinity
    std::array<bool, 2> ideal;
};

class FuchsianGroup {
public:
    /// Builds generators and the Dirichlet domain about `base`.
    FuchsianGroup(MoebiusMap gen_a, MoebiusMap gen_b, HalfPlanePoint base);

    const MoebiusMap& gen_a() const { return gen_a_; }
    const MoebiusMap& gen_b() const { return gen_b_; }
    const MoebiusMap& commutator() const { return commutator_; }
    /// Real map N with N [A,B] N^-1 = +-[[1, +-1], [0, 1]] (the cusp sent to infinity).
    const MoebiusMap& cusp_normalizer() const { return cusp_normalizer_; }
    const HalfPlanePoint& base_point() const { return base_; }
    const std::vector<DomainFace>& faces() const { return faces_; }

    /// Matrix of a word evaluated letter by letter.
    MoebiusMap evaluate(const std::string& word) const;
    GroupElement element(const std::string& word) const;
    const MoebiusMap& letter(char c) const;

    /// Membership in the closed Dirichlet domain, with relative slack tol.
    bool in_domain(cplx tau, double tol = 1e-9) const;
    /// Hyperbolic area of the domain by triangulation; 2 pi for the punctured torus.
    double domain_area() const;
    /// Largest distance from the base point to a finite vertex of the domain.
    double max_finite_vertex_distance() const;

    /// Serialized generators, base point and face data.
    std::string to_json() const;

private:
    void build_domain();

    MoebiusMap gen_a_, gen_b_, inv_a_, inv_b_;
    MoebiusMap commutator_;
    MoebiusMap cusp_normalizer_;
    HalfPlanePoint base_;
    std::vector<DomainFace> faces_;
};

/// A = [[1,1],[1,2]], B = [[1,-1],[-1,2]]; base point 2i unless given.
FuchsianGroup punctured_torus_group(HalfPlanePoint base = HalfPlanePoint(0.0, 2.0));

struct Reduction {
    HalfPlanePoint point;  // deck^-1 * tau, inside the closed domain
    GroupElement deck;
};

/// Moves tau into the Dirichlet domain by side pairings. Throws "non-termination" after
/// 10^6 steps.
Reduction reduce(const FuchsianGroup& g, const HalfPlanePoint& tau);

/// All elements with d(b, gamma b) <= R, identity included, one per element.
/// Requires R <= 20; throws "budget exceeded" past 10^7 elements.
std::vector<GroupElement> enumerate_ball(const FuchsianGroup& g, double R);

/// Translation length 2 arccosh(|tr|/2) of a hyperbolic element.
double translation_length(const MoebiusMap& m);

/// Primitive hyperbolic conjugacy classes (up to inversion) with translation length <= L,
/// one canonical representative each, sorted by canonical word.
std::vector<GroupElement> primitive_classes(const FuchsianGroup& g, double L);

/// Uniform draw from primitive_classes(g, L). Requires L > 0; throws "empty set".
GroupElement random_primitive_word(const FuchsianGroup& g, double L, Rng& rng);

} // namespace projlab

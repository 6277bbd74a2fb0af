#pragma once

#include <memory>
#include <string>
#include <vector>

#include "projlab/autoform.hpp"
#include "projlab/fuchsian.hpp"
#include "projlab/moebius.hpp"

namespace projlab {

/// The structure with Schwarzian {dev, tau} = c * q0 / ||q0||, where ||q0|| is the
/// hyperbolic sup-norm. c = 0 is the Fuchsian structure.
class ProjectiveStructure {
public:
    ProjectiveStructure(const FuchsianGroup& group, const CuspForm4& form, cplx c)
        : group_(&group), form_(&form), c_(c) {}

    const FuchsianGroup& group() const { return *group_; }
    const CuspForm4& form() const { return *form_; }
    cplx c() const { return c_; }

    /// Potential Q with u'' + Q u = 0 in the cusp coordinate w.
    cplx potential_w(cplx w) const;

private:
    const FuchsianGroup* group_;
    const CuspForm4* form_;
    cplx c_;
};

/// Fundamental solution at a point, in tau coordinates. `frame` is the Moebius map F with
/// dev(tau) = F(tau) * tau; F is the identity at the base point and stays in SL(2, C).
struct DevFrame {
    HalfPlanePoint base;
    MoebiusMap frame;
    SpherePoint dev_value;
    double wronskian = 1.0;  // det F before renormalization
};

DevFrame base_frame(const ProjectiveStructure& s);

/// Continues the frame along the polyline start.base -> path[0] -> path[1] -> ...
/// Segments are split into pieces shorter than 0.5 hyperbolic units and integrated by an
/// adaptive 4(5) Runge-Kutta method. Throws "step underflow" if the step drops below 1e-9.
DevFrame continue_frame(const ProjectiveStructure& s, const DevFrame& start,
                        const std::vector<HalfPlanePoint>& path);

/// dev(tau) continued from the base point along a straight chord in the cusp coordinate.
SpherePoint develop(const ProjectiveStructure& s, const HalfPlanePoint& tau);

/// Holonomy of the generators, in tau coordinates.
struct Representation {
    MoebiusMap rho_a, rho_b;
    cplx c;

    const MoebiusMap& letter(char l) const;
    /// rho(word) as a plain product, renormalized after each letter.
    MoebiusMap evaluate(const std::string& word) const;
    /// Log Frobenius norm of rho(word) in the frame adapted to `base`, accumulated
    /// without overflow.
    double log_norm(const std::string& word, const HalfPlanePoint& base) const;
    /// Product rho(word) kept at unit norm with the log scale separate.
    LogNormProduct product(const std::string& word) const;
};

/// rho(A), rho(B) from continuation along base -> gamma base.
Representation holonomy(const ProjectiveStructure& s);
/// rho(gamma) for an arbitrary element given in tau coordinates, by direct continuation.
MoebiusMap holonomy_of(const ProjectiveStructure& s, const MoebiusMap& gamma);

/// Counts dev-preimages of points in hyperbolic balls by the argument principle.
///
/// The Ford domain of the group (in the cusp coordinate) is cut into cells of hyperbolic
/// diameter below 0.5, and dev is tabulated on the cell boundaries once. Preimages in a
/// translate gamma D are the preimages of rho(gamma)^-1 z in D, so a ball is handled by
/// enumerating the translates that meet it.
class PreimageCounter {
public:
    /// max_radius bounds the balls that will be queried; it fixes how far into the cusp
    /// the tabulation extends for balls centered at `max_center_height`-reduced points.
    PreimageCounter(const ProjectiveStructure& s, double max_radius);

    struct CellHit {
        double distance;  // from the ball center to the cell center
        int count;
    };

    /// Nonzero cell counts for cells whose center lies in B(center, R). Throws
    /// "boundary hit" when z sits on a cell boundary image.
    std::vector<CellHit> cell_counts(const SpherePoint& z, const HalfPlanePoint& center, double R) const;
    /// As cell_counts, restricted to cells whose center satisfies a half-plane test:
    /// side = +1 keeps Re(N gamma cell) >= Re(N center), -1 the rest, 0 keeps everything.
    std::vector<CellHit> cell_counts_split(const SpherePoint& z, const HalfPlanePoint& center, double R,
                                           int side) const;

    std::size_t cell_count() const;
    std::size_t sample_count() const;
    /// Largest mismatch between frames reached along two different mesh paths.
    double closure_error() const { return closure_error_; }

    struct Mesh;

private:
    const ProjectiveStructure* s_;
    double max_radius_;
    std::shared_ptr<const Mesh> mesh_;
    double closure_error_ = 0.0;
};

/// Number of dev-preimages of z in B(center, R), with multiplicity. Requires R <= 12.
int count_preimages(const ProjectiveStructure& s, const SpherePoint& z, const HalfPlanePoint& center,
                    double R);

/// Nevanlinna counting function N(r) = sum over preimages with t_k <= r of log(r / t_k),
/// with t = tanh(d / 2) the disk-model radius about `center`.
double nevanlinna_N(const std::vector<PreimageCounter::CellHit>& hits, double r);
double nevanlinna_N(const ProjectiveStructure& s, const SpherePoint& z, const HalfPlanePoint& center, double r);

} // namespace projlab

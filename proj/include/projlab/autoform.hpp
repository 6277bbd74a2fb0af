#pragma once

#include <string>
#include <vector>

#include "projlab/fuchsian.hpp"
#include "projlab/moebius.hpp"

namespace projlab {

/// The cusp form spanning the quadratic differentials of the punctured torus, in the
/// cusp-normalized coordinate w = N tau where the cusp sits at infinity with width 1.
///
/// The defining object is the weight-4 Poincare series with character e^{2 pi i m gamma w},
/// m = 2 (the m = 1 series vanishes identically for this group). evaluate() sums the
/// truncated series directly. value() uses a Fourier expansion whose coefficients are fitted
/// to the automorphy relations and whose scale and phase are matched to the series; it is
/// accurate on the whole half-plane.
class CuspForm4 {
public:
    struct Coset {
        double a, b, c, d;    // representative in w coordinates
        double displacement;  // smallest d(b, gamma b) among representatives found
    };

    const FuchsianGroup& group() const { return *group_; }
    double r_trunc() const { return r_trunc_; }
    int mode() const { return mode_; }
    const std::vector<Coset>& cosets() const { return cosets_; }
    /// Truncation error bound for the direct series, maximized over Im w = 0.2.
    double tail_estimate() const { return tail_estimate_; }
    /// Hyperbolic sup-norm sup |q0| (Im w)^2 of the series.
    double sup_norm() const { return raw_sup_norm_; }
    /// Coefficients of q0 = sum_n a_n e^{2 pi i n w}, n = 1..size.
    const std::vector<cplx>& fourier() const { return fourier_; }

    /// Direct truncated Poincare series (normalized), summed after translating w into
    /// |Re w| <= 1/2. Throws "too deep" for Im w < 0.05.
    cplx evaluate(cplx w) const;
    /// The series restricted to cosets of displacement <= R (R <= r_trunc).
    cplx partial_sum(cplx w, double R) const;
    /// Heuristic truncation error of evaluate() at w, from the decay of the last two
    /// displacement shells. Cancellation inside a shell can make it an underestimate.
    double tail_bound(cplx w) const;
    /// Fourier evaluation after moving w into the Ford domain; valid on the whole half-plane.
    cplx value(cplx w) const;
    /// Value and complex derivative.
    void value_and_derivative(cplx w, cplx& f, cplx& df) const;

    /// Element G of the w-group (as a matrix) with G w in the Ford domain.
    MoebiusMap ford_reduce(cplx w, cplx& reduced) const;
    /// Lower boundary of the Ford domain: the highest isometric circle above x.
    double floor_height(double x) const;
    /// Side pairings of the Ford domain: the maps whose isometric circles bound it from
    /// below, plus the unit translations.
    const std::vector<MoebiusMap>& arc_maps() const { return arc_maps_; }
    const std::vector<double>& arc_centers() const { return arc_centers_; }
    double arc_radius() const { return arc_radius_; }

    /// Everything build() computes, for caching.
    std::string to_json() const;

private:
    friend CuspForm4 build(const FuchsianGroup& group, double r_trunc);
    friend CuspForm4 load_form(const FuchsianGroup& group, const std::string& json);
    cplx raw_series(cplx w, double max_displacement) const;
    cplx fourier_sum(cplx w, cplx* derivative) const;

    const FuchsianGroup* group_ = nullptr;
    double r_trunc_ = 0.0;
    int mode_ = 2;
    std::vector<Coset> cosets_;
    double tail_estimate_ = 0.0;
    double raw_sup_norm_ = 1.0;
    std::vector<cplx> fourier_;
    // Ford domain data: translation and the pairings of the isometric circles.
    std::vector<MoebiusMap> arc_maps_;
    std::vector<double> arc_centers_;
    double arc_radius_ = 0.0;
};

/// Builds the form from all cosets with a representative of displacement <= r_trunc.
/// The group must outlive the form. Requires r_trunc >= 6. Throws "insufficient truncation"
/// when the series at r_trunc and r_trunc - 2 differ by more than 1e-6 at w = i, 2i, 1 + i.
CuspForm4 build(const FuchsianGroup& group, double r_trunc);

/// Restores a form saved by to_json() for the same group. Throws "corrupt cache" on
/// malformed input.
CuspForm4 load_form(const FuchsianGroup& group, const std::string& json);

/// Conjugates a tau-coordinate element into the w coordinate.
MoebiusMap to_cusp_coordinates(const FuchsianGroup& group, const MoebiusMap& m);

} // namespace projlab

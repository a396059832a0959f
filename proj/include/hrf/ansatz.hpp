#pragma once

#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

#include "hrf/common.hpp"
#include "hrf/parallel.hpp"

namespace hrf {

enum class MapKind { ConstantMap, IdentityEigenmap };

/// Round sphere g = c * g_{S^n} with either a constant map or the identity
/// map onto the unit round S^n.
struct HomogeneousState {
    int n = 2;
    double c = 1.0;
    MapKind map = MapKind::ConstantMap;
    double alpha = 1.0;

    /// Throws DomainError unless n >= 2, c > 0 and alpha > 0.
    void validate() const;
};

/// Doubly warped metric a(x)^2 dx^2 + w(x)^2 g_{S^{n-1}} on S^1 x S^{n-1},
/// with a circle-valued map stored as an angle lift of winding `winding`.
struct WarpedState {
    int n = 3;
    std::vector<double> a;
    std::vector<double> w;
    std::vector<double> phi;
    int winding = 0;
    double alpha = 1.0;

    std::size_t size() const { return a.size(); }
    double dx() const { return two_pi / static_cast<double>(a.size()); }
    double x(std::size_t j) const { return dx() * static_cast<double>(j); }

    /// Periodic part phi - winding * x of the lift.
    std::vector<double> phi_periodic() const;

    /// Throws DomainError on n < 3, J < 16, size mismatch, non-positive a,
    /// non-finite entries or alpha <= 0. Non-positive w is reported by the
    /// curvature packet instead.
    void validate() const;
};

/// Flat Euclidean R^n with a constant map. Radial fields live on the grid
/// r_j = (j + 1/2) * r_max / J.
struct EuclideanState {
    int n = 3;
    double r_max = 10.0;
    std::size_t J = 256;

    double dr() const { return r_max / static_cast<double>(J); }
    double r(std::size_t j) const { return (static_cast<double>(j) + 0.5) * dr(); }
    void validate() const;
};

using GeometryState = std::variant<HomogeneousState, WarpedState, EuclideanState>;

int dimension(const GeometryState& s);
double coupling_of(const GeometryState& s);

/// Pointwise curvature and map quantities. Tensors are stored by their
/// independent orthonormal-frame components: the base (radial) direction and
/// any fiber (tangential) direction.
struct CurvaturePacket {
    std::vector<double> rm_norm;
    std::vector<double> k_base;     ///< sectional curvature of base-fiber planes
    std::vector<double> k_fiber;    ///< sectional curvature of fiber-fiber planes
    std::vector<double> ric_base;
    std::vector<double> ric_fiber;
    std::vector<double> sc;
    std::vector<double> s_base;
    std::vector<double> s_fiber;
    std::vector<double> sh;
    std::vector<double> grad_phi_sq;
    std::vector<double> tension;
    std::vector<double> hess_phi_norm;
    std::vector<std::uint8_t> singular;  ///< w at or below the floor
    bool any_singular = false;

    std::size_t size() const { return rm_norm.size(); }
    void resize(std::size_t n);

    /// |S|^2 = s_base^2 + (n-1) s_fiber^2 at point j.
    double s_norm_sq(std::size_t j, int n) const;
    double max_rm() const;
    double min_sh() const;
};

CurvaturePacket curvature_homogeneous(const HomogeneousState& s);

CurvaturePacket curvature_warped(const WarpedState& s, double w_floor = 1e-8,
                                 Exec exec = Exec::Parallel);

/// Flat space: every field vanishes. Size J to match the radial grid.
CurvaturePacket curvature_euclidean(const EuclideanState& s);

CurvaturePacket curvature(const GeometryState& s, double w_floor = 1e-8,
                          Exec exec = Exec::Parallel);

/// Arclength derivatives of a periodic field f on a warped grid.
struct ArclengthDerivatives {
    std::vector<double> ds;
    std::vector<double> dss;
};
ArclengthDerivatives arclength_derivatives(const WarpedState& s, const std::vector<double>& f,
                                           Exec exec = Exec::Parallel);

/// Laplacian f_ss + (n-1)(w_s/w) f_s of a fiber-constant periodic field.
std::vector<double> laplacian_warped(const WarpedState& s, const std::vector<double>& f,
                                     Exec exec = Exec::Parallel);

/// Radial derivatives of a field on the Euclidean grid, even about r = 0.
struct RadialDerivatives {
    std::vector<double> dr;
    std::vector<double> drr;
};
RadialDerivatives radial_derivatives(const EuclideanState& s, const std::vector<double>& f);

/// Riemannian distance. Homogeneous and Euclidean points may be arbitrary;
/// warped points must sit on grid nodes in x.
double distance(const GeometryState& s, const Point& p, const Point& q);

/// Isoperimetric ratio Area(boundary)^n / (c_n Vol^{n-1}) of the band
/// [x0, x1] x S^{n-1}, where x0 and x1 are snapped to grid nodes.
double isoperimetric_ratio(const WarpedState& s, double x0, double x1);

/// Euclidean isoperimetric constant c_n = n^{n-1} * |S^{n-1}|.
double euclidean_isoperimetric_constant(int n);

}  // namespace hrf

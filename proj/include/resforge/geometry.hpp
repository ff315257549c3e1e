#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace resforge {

// Axis-aligned box in joint-torque space (N*m).
struct Box {
    Eigen::VectorXd lb;
    Eigen::VectorXd ub;

    Box() = default;
    Box(Eigen::VectorXd lo, Eigen::VectorXd hi);

    int dim() const { return static_cast<int>(lb.size()); }
    Eigen::VectorXd center() const { return 0.5 * (lb + ub); }
    Eigen::VectorXd half_widths() const { return 0.5 * (ub - lb); }
};

// {x : A.row(i) * x <= b(i) for all i}. Rows are stored normalized.
struct HalfSpaceRep {
    Eigen::MatrixXd A;  // one normal per row
    Eigen::VectorXd b;
    bool unbounded = false;  // cones are the only producers of this flag

    int dim() const { return static_cast<int>(A.cols()); }
    int count() const { return static_cast<int>(A.rows()); }
    bool contains(const Eigen::VectorXd& x, double tol = 1e-9) const;
};

struct VertexRep {
    Eigen::MatrixXd V;  // one vertex per row

    int dim() const { return static_cast<int>(V.cols()); }
    int count() const { return static_cast<int>(V.rows()); }
};

// Convex polytope with dual representation; at least one side present.
struct Polytope {
    std::optional<HalfSpaceRep> hrep;
    std::optional<VertexRep> vrep;
    bool degenerate = false;  // flat (affine dimension < ambient dimension)
    bool empty = false;

    int dim() const;
};

// Polyhedral cone pointing along `axis` from `apex`.
struct Cone {
    Eigen::VectorXd apex;
    Eigen::VectorXd axis;       // unit vector
    double half_aperture = 0;   // radians, in (0, pi/2)
    int facets = 8;             // ignored for dim 2
};

// Zonotope {A * t : t in box}, with both representations built directly
// from the generators g_k = A.col(k) * (ub_k - lb_k) / 2.
Polytope map_box(const Eigen::MatrixXd& A, const Box& box);

// Radius of the largest ball centered at `center` contained in P.
// Zero when the center lies outside or on the boundary, and for
// degenerate or empty polytopes.
double inscribed_radius_at(const Polytope& P, const Eigen::VectorXd& center);

// Inscribed polyhedral approximation: edge rays lie exactly on the
// circular cone at the half-aperture angle, so the polyhedral cone never
// sticks outside the circular one. Two half-planes (exact) for dim 2.
HalfSpaceRep make_cone(const Cone& cone);

// P intersected with extra half-spaces; redundant facets dropped,
// vertices recomputed. Empty intersections are flagged, not errors.
Polytope intersect(const Polytope& P, const HalfSpaceRep& C);

// Representation conversion by exhaustive facet tuple intersection.
// Throws on unbounded input.
VertexRep enumerate_vertices(const HalfSpaceRep& h);

// Facets of the convex hull of a point set (dim 2 or 3).
HalfSpaceRep hull_halfspaces(const VertexRep& v);

// Conversion helpers; return a new value, never mutate.
Polytope with_vrep(const Polytope& P);
Polytope with_hrep(const Polytope& P);

// m-dimensional volume via fan triangulation from the vertex centroid.
double volume(const Polytope& P);

}  // namespace resforge

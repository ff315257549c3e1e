#include "resforge/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace resforge {

namespace {

constexpr double kDegenerateDet = 1e-10;
constexpr double kMergeTol = 1e-8;
constexpr double kMembershipTol = 1e-9;

double scaled_tol(double tol, double b) { return tol * (1.0 + std::abs(b)); }

Eigen::Vector2d perp(const Eigen::Vector2d& g) { return {-g.y(), g.x()}; }

// Deduplicate facet directions; keeps the first representative of each
// +/- parallel class and remembers whether both signs are needed.
struct FacetDirections {
    std::vector<Eigen::VectorXd> normals;  // unit
};

void add_direction(FacetDirections& fd, const Eigen::VectorXd& n) {
    for (const auto& m : fd.normals)
        if ((m - n).lpNorm<Eigen::Infinity>() < 1e-9 ||
            (m + n).lpNorm<Eigen::Infinity>() < 1e-9)
            return;
    fd.normals.push_back(n);
}

int matrix_rank(const Eigen::MatrixXd& M, double rel_tol = 1e-10) {
    if (M.rows() == 0 || M.cols() == 0) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) <= 0) return 0;
    int r = 0;
    for (int i = 0; i < s.size(); ++i)
        if (s(i) > rel_tol * s(0)) ++r;
    return r;
}

Eigen::MatrixXd dedup_points(const std::vector<Eigen::VectorXd>& pts) {
    std::vector<Eigen::VectorXd> kept;
    for (const auto& p : pts) {
        bool dup = false;
        for (const auto& q : kept)
            if ((p - q).lpNorm<Eigen::Infinity>() <
                kMergeTol * (1.0 + p.lpNorm<Eigen::Infinity>())) {
                dup = true;
                break;
            }
        if (!dup) kept.push_back(p);
    }
    Eigen::MatrixXd V(kept.size(), kept.empty() ? 0 : kept[0].size());
    for (size_t i = 0; i < kept.size(); ++i) V.row(i) = kept[i];
    return V;
}

// Sort 2-D points counterclockwise around their centroid.
std::vector<int> ccw_order(const Eigen::MatrixXd& pts) {
    Eigen::RowVector2d c = pts.colwise().mean();
    std::vector<int> idx(pts.rows());
    for (int i = 0; i < pts.rows(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        const double aa = std::atan2(pts(a, 1) - c(1), pts(a, 0) - c(0));
        const double ab = std::atan2(pts(b, 1) - c(1), pts(b, 0) - c(0));
        return aa < ab;
    });
    return idx;
}

}  // namespace

Box::Box(Eigen::VectorXd lo, Eigen::VectorXd hi) : lb(std::move(lo)), ub(std::move(hi)) {
    if (lb.size() != ub.size()) throw std::invalid_argument("Box: lb/ub size mismatch");
    for (int i = 0; i < lb.size(); ++i)
        if (lb(i) > ub(i))
            throw std::invalid_argument("Box: lb > ub at component " + std::to_string(i));
}

bool HalfSpaceRep::contains(const Eigen::VectorXd& x, double tol) const {
    for (int i = 0; i < A.rows(); ++i)
        if (A.row(i).dot(x) > b(i) + scaled_tol(tol, b(i))) return false;
    return true;
}

int Polytope::dim() const {
    if (hrep) return hrep->dim();
    if (vrep) return vrep->dim();
    return 0;
}

Polytope map_box(const Eigen::MatrixXd& A, const Box& box) {
    const int m = static_cast<int>(A.rows());
    const int n = static_cast<int>(A.cols());
    if (m != 2 && m != 3) throw std::invalid_argument("map_box: task dimension must be 2 or 3");
    if (n != box.dim()) throw std::invalid_argument("map_box: box dimension mismatch");
    if (n > 24) throw std::invalid_argument("map_box: too many generators");

    const Eigen::VectorXd c = A * box.center();
    const Eigen::VectorXd hw = box.half_widths();

    std::vector<Eigen::VectorXd> gens;
    for (int k = 0; k < n; ++k) {
        Eigen::VectorXd g = A.col(k) * hw(k);
        if (g.norm() > 1e-12) gens.push_back(g);
    }

    Polytope P;
    Eigen::MatrixXd G(m, static_cast<int>(gens.size()));
    for (size_t k = 0; k < gens.size(); ++k) G.col(static_cast<int>(k)) = gens[k];

    if (matrix_rank(G) < m) {
        // Flat (or point) zonotope: no full-dimensional H-rep exists.
        P.degenerate = true;
        std::vector<Eigen::VectorXd> pts;
        const int combos = 1 << static_cast<int>(gens.size());
        for (int s = 0; s < combos; ++s) {
            Eigen::VectorXd p = c;
            for (size_t k = 0; k < gens.size(); ++k)
                p += ((s >> k) & 1 ? 1.0 : -1.0) * gens[k];
            pts.push_back(p);
        }
        P.vrep = VertexRep{dedup_points(pts)};
        return P;
    }

    FacetDirections fd;
    if (m == 2) {
        for (const auto& g : gens)
            add_direction(fd, perp(g).normalized());
    } else {
        for (size_t i = 0; i < gens.size(); ++i)
            for (size_t j = i + 1; j < gens.size(); ++j) {
                Eigen::Vector3d nij = Eigen::Vector3d(gens[i]).cross(Eigen::Vector3d(gens[j]));
                if (nij.norm() > 1e-10) add_direction(fd, nij.normalized());
            }
    }

    HalfSpaceRep h;
    h.A.resize(2 * static_cast<int>(fd.normals.size()), m);
    h.b.resize(h.A.rows());
    for (size_t i = 0; i < fd.normals.size(); ++i) {
        const Eigen::VectorXd& nrm = fd.normals[i];
        double spread = 0;
        for (const auto& g : gens) spread += std::abs(nrm.dot(g));
        h.A.row(2 * static_cast<int>(i)) = nrm.transpose();
        h.b(2 * static_cast<int>(i)) = nrm.dot(c) + spread;
        h.A.row(2 * static_cast<int>(i) + 1) = -nrm.transpose();
        h.b(2 * static_cast<int>(i) + 1) = -nrm.dot(c) + spread;
    }

    // Vertices: sign combinations that are extreme, i.e. lie on >= m facets.
    std::vector<Eigen::VectorXd> verts;
    const int combos = 1 << static_cast<int>(gens.size());
    for (int s = 0; s < combos; ++s) {
        Eigen::VectorXd p = c;
        for (size_t k = 0; k < gens.size(); ++k)
            p += ((s >> k) & 1 ? 1.0 : -1.0) * gens[k];
        int active = 0;
        for (int i = 0; i < h.A.rows(); ++i)
            if (std::abs(h.A.row(i).dot(p) - h.b(i)) < scaled_tol(1e-7, h.b(i))) ++active;
        if (active >= m) verts.push_back(p);
    }

    P.hrep = std::move(h);
    P.vrep = VertexRep{dedup_points(verts)};
    return P;
}

double inscribed_radius_at(const Polytope& P, const Eigen::VectorXd& center) {
    if (P.degenerate || P.empty) return 0.0;
    const Polytope Q = P.hrep ? P : with_hrep(P);
    if (!Q.hrep || Q.degenerate) return 0.0;
    const auto& h = *Q.hrep;
    double r = std::numeric_limits<double>::infinity();
    for (int i = 0; i < h.A.rows(); ++i) {
        const double nn = h.A.row(i).norm();
        if (nn < 1e-12) continue;
        r = std::min(r, (h.b(i) - h.A.row(i).dot(center)) / nn);
    }
    if (!std::isfinite(r)) return 0.0;
    return std::max(0.0, r);
}

HalfSpaceRep make_cone(const Cone& cone) {
    const int m = static_cast<int>(cone.axis.size());
    if (m != 2 && m != 3) throw std::invalid_argument("make_cone: dimension must be 2 or 3");
    if (std::abs(cone.axis.norm() - 1.0) > 1e-12)
        throw std::invalid_argument("make_cone: axis must be a unit vector");
    if (!(cone.half_aperture > 0.0 && cone.half_aperture < std::numbers::pi / 2))
        throw std::invalid_argument("make_cone: half aperture must be in (0, pi/2)");

    HalfSpaceRep h;
    h.unbounded = true;
    if (m == 2) {
        const double t = std::numbers::pi / 2 + cone.half_aperture;
        Eigen::Matrix2d rot_p, rot_m;
        rot_p << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
        rot_m << std::cos(t), std::sin(t), -std::sin(t), std::cos(t);
        h.A.resize(2, 2);
        h.A.row(0) = (rot_p * Eigen::Vector2d(cone.axis)).transpose();
        h.A.row(1) = (rot_m * Eigen::Vector2d(cone.axis)).transpose();
    } else {
        const int k = std::max(3, cone.facets);
        // Edge rays at angle theta; facet i spans rays i and i+1.
        Eigen::Vector3d axis = cone.axis;
        Eigen::Vector3d u = axis.unitOrthogonal();
        Eigen::Vector3d w = axis.cross(u);
        std::vector<Eigen::Vector3d> rays(k);
        for (int i = 0; i < k; ++i) {
            const double phi = 2.0 * std::numbers::pi * i / k;
            rays[i] = std::cos(cone.half_aperture) * axis +
                      std::sin(cone.half_aperture) * (std::cos(phi) * u + std::sin(phi) * w);
        }
        h.A.resize(k, 3);
        for (int i = 0; i < k; ++i) {
            Eigen::Vector3d nrm = rays[i].cross(rays[(i + 1) % k]).normalized();
            if (nrm.dot(axis) > 0) nrm = -nrm;  // interior on the <= side
            h.A.row(i) = nrm.transpose();
        }
    }
    h.b.resize(h.A.rows());
    for (int i = 0; i < h.A.rows(); ++i) h.b(i) = h.A.row(i).dot(cone.apex);
    return h;
}

VertexRep enumerate_vertices(const HalfSpaceRep& h) {
    const int m = h.dim();
    if (m != 2 && m != 3) throw std::invalid_argument("enumerate_vertices: dimension must be 2 or 3");
    const int F = h.count();

    // Row-normalized copy.
    Eigen::MatrixXd A(F, m);
    Eigen::VectorXd b(F);
    for (int i = 0; i < F; ++i) {
        const double nn = h.A.row(i).norm();
        if (nn < 1e-12) throw std::invalid_argument("enumerate_vertices: zero normal");
        A.row(i) = h.A.row(i) / nn;
        b(i) = h.b(i) / nn;
    }

    auto has_recession = [&](const Eigen::VectorXd& d) {
        for (int i = 0; i < F; ++i)
            if (A.row(i).dot(d) > 1e-9) return false;
        return true;
    };

    if (matrix_rank(A) < m)
        throw std::invalid_argument("enumerate_vertices: unbounded input (normals do not span)");
    if (m == 2) {
        for (int i = 0; i < F; ++i) {
            Eigen::Vector2d d = perp(A.row(i).transpose());
            if (has_recession(d) || has_recession(-d))
                throw std::invalid_argument("enumerate_vertices: unbounded input");
        }
    } else {
        for (int i = 0; i < F; ++i)
            for (int j = i + 1; j < F; ++j) {
                Eigen::Vector3d d =
                    Eigen::Vector3d(A.row(i).transpose()).cross(Eigen::Vector3d(A.row(j).transpose()));
                if (d.norm() < 1e-10) continue;
                d.normalize();
                if (has_recession(d) || has_recession(-d))
                    throw std::invalid_argument("enumerate_vertices: unbounded input");
            }
    }

    std::vector<Eigen::VectorXd> pts;
    auto try_tuple = [&](const std::vector<int>& rows) {
        Eigen::MatrixXd S(m, m);
        Eigen::VectorXd rhs(m);
        for (int r = 0; r < m; ++r) {
            S.row(r) = A.row(rows[r]);
            rhs(r) = b(rows[r]);
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
        if (std::abs(lu.determinant()) < kDegenerateDet) return;  // ill-conditioned tuple
        Eigen::VectorXd x = lu.solve(rhs);
        for (int i = 0; i < F; ++i)
            if (A.row(i).dot(x) > b(i) + scaled_tol(kMembershipTol, b(i))) return;
        pts.push_back(x);
    };

    if (m == 2) {
        for (int i = 0; i < F; ++i)
            for (int j = i + 1; j < F; ++j) try_tuple({i, j});
    } else {
        for (int i = 0; i < F; ++i)
            for (int j = i + 1; j < F; ++j)
                for (int k = j + 1; k < F; ++k) try_tuple({i, j, k});
    }

    return VertexRep{dedup_points(pts)};
}

HalfSpaceRep hull_halfspaces(const VertexRep& v) {
    const int m = v.dim();
    const int V = v.count();
    if (m != 2 && m != 3) throw std::invalid_argument("hull_halfspaces: dimension must be 2 or 3");
    if (V < m + 1) throw std::invalid_argument("hull_halfspaces: too few points");

    std::vector<Eigen::VectorXd> normals;
    std::vector<double> offsets;
    auto push_facet = [&](const Eigen::VectorXd& nrm, double off) {
        for (size_t i = 0; i < normals.size(); ++i)
            if ((normals[i] - nrm).lpNorm<Eigen::Infinity>() < 1e-9 &&
                std::abs(offsets[i] - off) < scaled_tol(1e-9, off))
                return;
        normals.push_back(nrm);
        offsets.push_back(off);
    };
    auto consider = [&](Eigen::VectorXd nrm, const Eigen::VectorXd& p0) {
        if (nrm.norm() < 1e-10) return;
        nrm.normalize();
        double off = nrm.dot(p0);
        int above = 0, below = 0;
        for (int i = 0; i < V; ++i) {
            const double s = nrm.dot(v.V.row(i)) - off;
            if (s > scaled_tol(1e-9, off)) ++above;
            if (s < -scaled_tol(1e-9, off)) ++below;
        }
        if (above == 0) push_facet(nrm, off);
        else if (below == 0) push_facet(-nrm, -off);
    };

    if (m == 2) {
        for (int i = 0; i < V; ++i)
            for (int j = i + 1; j < V; ++j) {
                Eigen::Vector2d e = v.V.row(j) - v.V.row(i);
                consider(perp(e), v.V.row(i).transpose());
            }
    } else {
        for (int i = 0; i < V; ++i)
            for (int j = i + 1; j < V; ++j)
                for (int k = j + 1; k < V; ++k) {
                    Eigen::Vector3d e1 = v.V.row(j) - v.V.row(i);
                    Eigen::Vector3d e2 = v.V.row(k) - v.V.row(i);
                    consider(e1.cross(e2), v.V.row(i).transpose());
                }
    }
    if (normals.empty()) throw std::invalid_argument("hull_halfspaces: degenerate point set");

    HalfSpaceRep h;
    h.A.resize(static_cast<int>(normals.size()), m);
    h.b.resize(h.A.rows());
    for (size_t i = 0; i < normals.size(); ++i) {
        h.A.row(static_cast<int>(i)) = normals[i].transpose();
        h.b(static_cast<int>(i)) = offsets[i];
    }
    return h;
}

Polytope with_vrep(const Polytope& P) {
    if (P.vrep || P.empty || P.degenerate) return P;
    if (!P.hrep) throw std::invalid_argument("with_vrep: no representation present");
    Polytope Q = P;
    Q.vrep = enumerate_vertices(*P.hrep);
    if (Q.vrep->count() == 0) Q.empty = true;
    return Q;
}

Polytope with_hrep(const Polytope& P) {
    if (P.hrep || P.empty || P.degenerate) return P;
    if (!P.vrep) throw std::invalid_argument("with_hrep: no representation present");
    Polytope Q = P;
    if (P.vrep->count() < P.vrep->dim() + 1 || matrix_rank(P.vrep->V.rowwise() - P.vrep->V.colwise().mean()) < P.vrep->dim()) {
        Q.degenerate = true;
        return Q;
    }
    Q.hrep = hull_halfspaces(*P.vrep);
    return Q;
}

Polytope intersect(const Polytope& P, const HalfSpaceRep& C) {
    if (P.empty) return P;
    if (P.degenerate) {
        // Flat polytope: keep the vertices inside C.
        Polytope Q;
        Q.degenerate = true;
        std::vector<Eigen::VectorXd> kept;
        if (P.vrep)
            for (int i = 0; i < P.vrep->count(); ++i)
                if (C.contains(P.vrep->V.row(i).transpose())) kept.push_back(P.vrep->V.row(i));
        Q.vrep = VertexRep{dedup_points(kept)};
        Q.empty = kept.empty();
        return Q;
    }
    const Polytope base = P.hrep ? P : with_hrep(P);
    if (base.hrep->unbounded)
        throw std::invalid_argument("intersect: polytope operand must be bounded");
    const int m = base.hrep->dim();
    if (C.dim() != m) throw std::invalid_argument("intersect: dimension mismatch");

    HalfSpaceRep all;
    all.A.resize(base.hrep->count() + C.count(), m);
    all.b.resize(all.A.rows());
    all.A.topRows(base.hrep->count()) = base.hrep->A;
    all.b.head(base.hrep->count()) = base.hrep->b;
    all.A.bottomRows(C.count()) = C.A;
    all.b.tail(C.count()) = C.b;

    VertexRep verts = enumerate_vertices(all);
    Polytope Q;
    if (verts.count() == 0) {
        Q.empty = true;
        Q.vrep = std::move(verts);
        return Q;
    }
    if (verts.count() < m + 1 ||
        matrix_rank(verts.V.rowwise() - verts.V.colwise().mean()) < m) {
        Q.degenerate = true;
        Q.vrep = std::move(verts);
        return Q;
    }

    // Redundancy removal: a facet supported by fewer than m vertices is dropped.
    std::vector<int> keep;
    for (int i = 0; i < all.count(); ++i) {
        const double nn = all.A.row(i).norm();
        int support = 0;
        for (int j = 0; j < verts.count(); ++j)
            if (std::abs(all.A.row(i).dot(verts.V.row(j)) - all.b(i)) < scaled_tol(1e-7, all.b(i)) * nn)
                ++support;
        if (support >= m) keep.push_back(i);
    }
    HalfSpaceRep reduced;
    reduced.A.resize(static_cast<int>(keep.size()), m);
    reduced.b.resize(reduced.A.rows());
    for (size_t i = 0; i < keep.size(); ++i) {
        reduced.A.row(static_cast<int>(i)) = all.A.row(keep[i]);
        reduced.b(static_cast<int>(i)) = all.b(keep[i]);
    }
    Q.hrep = std::move(reduced);
    Q.vrep = std::move(verts);
    return Q;
}

double volume(const Polytope& P) {
    if (P.empty || P.degenerate) return 0.0;
    const Polytope Q = P.vrep ? P : with_vrep(P);
    if (Q.empty || Q.degenerate || !Q.vrep) return 0.0;
    const auto& V = Q.vrep->V;
    const int m = Q.vrep->dim();
    if (V.rows() < m + 1) return 0.0;

    if (m == 2) {
        const auto order = ccw_order(V);
        double area = 0;
        for (size_t i = 0; i < order.size(); ++i) {
            const auto& p = V.row(order[i]);
            const auto& q = V.row(order[(i + 1) % order.size()]);
            area += p(0) * q(1) - q(0) * p(1);
        }
        return 0.5 * std::abs(area);
    }

    // m == 3: triangulate each facet, form tetrahedra against the centroid.
    const Polytope QH = Q.hrep ? Q : with_hrep(Q);
    if (!QH.hrep) return 0.0;
    const Eigen::Vector3d centroid = V.colwise().mean();
    double vol = 0;
    for (int f = 0; f < QH.hrep->count(); ++f) {
        const Eigen::Vector3d nrm = QH.hrep->A.row(f).transpose().normalized();
        const double off = QH.hrep->b(f) / QH.hrep->A.row(f).norm();
        std::vector<int> on;
        for (int i = 0; i < V.rows(); ++i)
            if (std::abs(nrm.dot(V.row(i)) - off) < scaled_tol(1e-7, off)) on.push_back(i);
        if (on.size() < 3) continue;
        // Order facet vertices around the facet centroid in the facet plane.
        const Eigen::Vector3d u = nrm.unitOrthogonal();
        const Eigen::Vector3d w = nrm.cross(u);
        Eigen::MatrixXd plane(static_cast<int>(on.size()), 2);
        for (size_t i = 0; i < on.size(); ++i) {
            const Eigen::Vector3d p = V.row(on[i]);
            plane(static_cast<int>(i), 0) = u.dot(p);
            plane(static_cast<int>(i), 1) = w.dot(p);
        }
        const auto order = ccw_order(plane);
        const Eigen::Vector3d anchor = V.row(on[order[0]]);
        for (size_t i = 1; i + 1 < order.size(); ++i) {
            const Eigen::Vector3d pa = V.row(on[order[i]]);
            const Eigen::Vector3d pb = V.row(on[order[i + 1]]);
            vol += std::abs((pa - anchor).cross(pb - anchor).dot(centroid - anchor)) / 6.0;
        }
    }
    return vol;
}

}  // namespace resforge

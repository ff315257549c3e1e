#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "resforge/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace resforge;

namespace {

Eigen::VectorXd vec2(double x, double y) {
    Eigen::VectorXd v(2);
    v << x, y;
    return v;
}

Eigen::VectorXd vec3(double x, double y, double z) {
    Eigen::VectorXd v(3);
    v << x, y, z;
    return v;
}

bool has_vertex(const VertexRep& vr, const Eigen::VectorXd& p, double tol = 1e-9) {
    for (int i = 0; i < vr.count(); ++i)
        if ((vr.V.row(i).transpose() - p).lpNorm<Eigen::Infinity>() < tol) return true;
    return false;
}

// Direction-sampling oracle for the inscribed radius: the largest r such
// that r steps along sampled unit directions all stay inside.
double radius_oracle(const HalfSpaceRep& h, const Eigen::VectorXd& center, int dirs) {
    std::mt19937 rng(7);
    std::normal_distribution<double> gauss;
    double r = std::numeric_limits<double>::infinity();
    for (int s = 0; s < dirs; ++s) {
        Eigen::VectorXd d(center.size());
        for (int i = 0; i < d.size(); ++i) d(i) = gauss(rng);
        d.normalize();
        // max step along d: min over facets of (b - a.c)/(a.d) for a.d > 0
        for (int i = 0; i < h.count(); ++i) {
            const double ad = h.A.row(i).dot(d);
            if (ad > 1e-12) r = std::min(r, (h.b(i) - h.A.row(i).dot(center)) / ad);
        }
    }
    return std::max(0.0, r);
}

Box unit_box(int n) {
    return Box(Eigen::VectorXd::Constant(n, -1.0), Eigen::VectorXd::Constant(n, 1.0));
}

}  // namespace

TEST_CASE("map_box: identity square") {
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(2, 2);
    Polytope P = map_box(A, unit_box(2));
    REQUIRE(P.vrep);
    REQUIRE(P.hrep);
    CHECK(P.vrep->count() == 4);
    CHECK(P.hrep->count() == 4);
    CHECK(has_vertex(*P.vrep, vec2(1, 1)));
    CHECK(has_vertex(*P.vrep, vec2(-1, 1)));
    CHECK(has_vertex(*P.vrep, vec2(1, -1)));
    CHECK(has_vertex(*P.vrep, vec2(-1, -1)));
}

TEST_CASE("map_box: parallelogram from two generators") {
    Eigen::MatrixXd A(2, 2);
    A << 0, -1, 1, -1;
    Polytope P = map_box(A, unit_box(2));
    REQUIRE(P.vrep);
    CHECK(P.vrep->count() == 4);
    CHECK(has_vertex(*P.vrep, vec2(-1, 0)));
    CHECK(has_vertex(*P.vrep, vec2(1, 2)));
    CHECK(has_vertex(*P.vrep, vec2(1, 0)));
    CHECK(has_vertex(*P.vrep, vec2(-1, -2)));
}

TEST_CASE("map_box: zero-width box degenerates to a point") {
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(2, 2);
    Box b(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2));
    Polytope P = map_box(A, b);
    CHECK(P.degenerate);
    REQUIRE(P.vrep);
    CHECK(P.vrep->count() == 1);
    CHECK(P.vrep->V.row(0).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("map_box: rank-deficient map is flagged degenerate") {
    Eigen::MatrixXd A(2, 2);
    A << 1, 1, 1, 1;
    Polytope P = map_box(A, unit_box(2));
    CHECK(P.degenerate);
    CHECK(inscribed_radius_at(P, Eigen::VectorXd::Zero(2)) == 0.0);
}

TEST_CASE("inscribed_radius_at: unit square") {
    Polytope P = map_box(Eigen::MatrixXd::Identity(2, 2), unit_box(2));
    CHECK(inscribed_radius_at(P, vec2(0, 0)) == doctest::Approx(1.0));
    CHECK(inscribed_radius_at(P, vec2(2, 0)) == 0.0);
    CHECK(inscribed_radius_at(P, vec2(0.5, 0)) == doctest::Approx(0.5));
}

TEST_CASE("inscribed_radius_at: parallelogram") {
    Eigen::MatrixXd A(2, 2);
    A << 0, -1, 1, -1;
    Polytope P = map_box(A, unit_box(2));
    CHECK(inscribed_radius_at(P, vec2(0, 0)) == doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("make_cone: planar quarter cone") {
    Cone cone;
    cone.apex = vec2(0, 0);
    cone.axis = vec2(0, 1);
    cone.half_aperture = M_PI / 4;
    HalfSpaceRep h = make_cone(cone);
    CHECK(h.unbounded);
    CHECK(h.count() == 2);
    CHECK(h.contains(vec2(0, 1)));
    CHECK_FALSE(h.contains(vec2(1, 0)));
    // ray at 42 degrees from the axis is inside
    CHECK(h.contains(vec2(std::sin(42.0 * M_PI / 180), std::cos(42.0 * M_PI / 180))));
    // angle beyond the half-aperture is outside
    CHECK_FALSE(h.contains(vec2(std::sin(0.8), std::cos(0.8))));
    // apex lies on every facet
    CHECK((h.A * cone.apex - h.b).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("make_cone: spatial cone, axis inside, wide angles outside") {
    Cone cone;
    cone.apex = vec3(0, 0, 0);
    cone.axis = vec3(0, 0, 1);
    cone.half_aperture = 0.5;
    cone.facets = 8;
    HalfSpaceRep h = make_cone(cone);
    CHECK(h.unbounded);
    CHECK(h.count() == 8);
    CHECK(h.contains(vec3(0, 0, 1)));
    CHECK(h.contains(vec3(0, 0, 5)));
    CHECK_FALSE(h.contains(vec3(std::sin(0.6), 0, std::cos(0.6))));
    CHECK((h.A * cone.apex - h.b).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("make_cone: invalid aperture rejected") {
    Cone cone;
    cone.apex = vec2(0, 0);
    cone.axis = vec2(0, 1);
    cone.half_aperture = 2.0;
    CHECK_THROWS(make_cone(cone));
}

TEST_CASE("intersect: idempotence against own half-spaces") {
    Eigen::MatrixXd A(2, 2);
    A << 0, -1, 1, -1;
    Polytope P = map_box(A, unit_box(2));
    Polytope Q = intersect(P, *P.hrep);
    REQUIRE(Q.vrep);
    CHECK(Q.vrep->count() == P.vrep->count());
    for (int i = 0; i < P.vrep->count(); ++i)
        CHECK(has_vertex(*Q.vrep, P.vrep->V.row(i).transpose(), 1e-9));
}

TEST_CASE("intersect: unit square with upward cone") {
    Polytope P = map_box(Eigen::MatrixXd::Identity(2, 2), unit_box(2));
    Cone cone;
    cone.apex = vec2(0, 0);
    cone.axis = vec2(0, 1);
    cone.half_aperture = M_PI / 4;
    Polytope Q = intersect(P, make_cone(cone));
    REQUIRE(Q.vrep);
    CHECK(Q.vrep->count() == 3);
    CHECK(has_vertex(*Q.vrep, vec2(0, 0), 1e-8));
    CHECK(has_vertex(*Q.vrep, vec2(-1, 1), 1e-8));
    CHECK(has_vertex(*Q.vrep, vec2(1, 1), 1e-8));
}

TEST_CASE("intersect: disjoint cone yields empty polytope") {
    Polytope P = map_box(Eigen::MatrixXd::Identity(2, 2), unit_box(2));
    Cone cone;
    cone.apex = vec2(5, 5);
    cone.axis = vec2(1, 1).normalized();
    cone.half_aperture = 0.3;
    Polytope Q = intersect(P, make_cone(cone));
    CHECK(Q.empty);
    CHECK(volume(Q) == 0.0);
}

TEST_CASE("enumerate_vertices: cube") {
    Eigen::MatrixXd A(6, 3);
    A << 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1;
    HalfSpaceRep h{A, Eigen::VectorXd::Ones(6)};
    VertexRep v = enumerate_vertices(h);
    CHECK(v.count() == 8);
}

TEST_CASE("enumerate_vertices: truncated cube corner gives 10 vertices") {
    Eigen::MatrixXd A(7, 3);
    A << 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1, 1, 1, 1;
    Eigen::VectorXd b(7);
    b << 1, 1, 1, 1, 1, 1, 1.5;
    HalfSpaceRep h{A, b};
    VertexRep v = enumerate_vertices(h);
    CHECK(v.count() == 10);
}

TEST_CASE("enumerate_vertices: redundant half-space ignored") {
    Eigen::MatrixXd A(5, 2);
    A << 1, 0, -1, 0, 0, 1, 0, -1, 1, 0;
    Eigen::VectorXd b(5);
    b << 1, 1, 1, 1, 2;
    HalfSpaceRep h{A, b};
    VertexRep v = enumerate_vertices(h);
    CHECK(v.count() == 4);
}

TEST_CASE("enumerate_vertices: unbounded input rejected") {
    Eigen::MatrixXd A(2, 2);
    A << 1, 0, 0, 1;
    HalfSpaceRep h{A, Eigen::VectorXd::Ones(2)};
    CHECK_THROWS(enumerate_vertices(h));
}

TEST_CASE("volume: cube, tetrahedron, parallelogram") {
    Eigen::MatrixXd Ac(3, 3);
    Ac.setIdentity();
    Ac *= 0.5;  // generators of half-width 0.5 -> unit cube
    Polytope cube = map_box(Ac, unit_box(3));
    CHECK(volume(cube) == doctest::Approx(1.0));

    VertexRep tet;
    tet.V.resize(4, 3);
    tet.V << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1;
    Polytope T;
    T.vrep = tet;
    CHECK(volume(T) == doctest::Approx(1.0 / 6.0));

    Eigen::MatrixXd A(2, 2);
    A << 0, -1, 1, -1;
    CHECK(volume(map_box(A, unit_box(2))) == doctest::Approx(4.0));
}

TEST_CASE("round trip: random zonotope vertices survive re-enumeration") {
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int m = 2 + trial % 2;
        const int n = 2 + trial % 6;
        if (n < m) continue;
        Eigen::MatrixXd A(m, n);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) A(i, j) = u(rng);
        Polytope P = map_box(A, unit_box(n));
        if (P.degenerate) continue;
        VertexRep v2 = enumerate_vertices(*P.hrep);
        REQUIRE(v2.count() == P.vrep->count());
        for (int i = 0; i < P.vrep->count(); ++i)
            CHECK(has_vertex(v2, P.vrep->V.row(i).transpose(), 1e-7));
    }
}

TEST_CASE("membership duality on random points") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXd A(2, 4);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 4; ++j) A(i, j) = u(rng);
    Polytope P = map_box(A, unit_box(4));
    std::uniform_real_distribution<double> tau(-1.0, 1.0);
    // interior points from random torque samples must satisfy the hrep
    for (int s = 0; s < 200; ++s) {
        Eigen::VectorXd t(4);
        for (int i = 0; i < 4; ++i) t(i) = tau(rng);
        CHECK(P.hrep->contains(A * t, 1e-9));
    }
    // points pushed past the support in a random direction must violate it
    for (int s = 0; s < 50; ++s) {
        Eigen::VectorXd d(2);
        d << u(rng), u(rng);
        if (d.norm() < 1e-6) continue;
        d.normalize();
        double support = -1e30;
        for (int i = 0; i < P.vrep->count(); ++i)
            support = std::max(support, P.vrep->V.row(i).dot(d));
        CHECK_FALSE(P.hrep->contains((support + 1e-3) * d, 1e-9));
    }
}

TEST_CASE("inscribed radius: boundary probing in sampled directions") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 20; ++trial) {
        const int m = 2 + trial % 2;
        Eigen::MatrixXd A(m, m + 2);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m + 2; ++j) A(i, j) = u(rng);
        Polytope P = map_box(A, unit_box(m + 2));
        if (P.degenerate) continue;
        const Eigen::VectorXd center = Eigen::VectorXd::Zero(m);
        const double r = inscribed_radius_at(P, center);
        if (r <= 1e-7) continue;
        bool some_outside = false;
        for (int s = 0; s < 1000; ++s) {
            Eigen::VectorXd d(m);
            if (s < P.hrep->count())
                d = P.hrep->A.row(s).transpose();  // probe along facet normals too
            else
                for (int i = 0; i < m; ++i) d(i) = gauss(rng);
            d.normalize();
            CHECK(P.hrep->contains(center + (r - 1e-7) * d, 1e-9));
            if (!P.hrep->contains(center + (r + 1e-4) * d, 0.0)) some_outside = true;
        }
        CHECK(some_outside);
    }
}

TEST_CASE("zonotope central symmetry") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const int m = 2 + trial % 2;
        const int n = m + trial % 3;
        Eigen::MatrixXd A(m, n);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) A(i, j) = u(rng);
        Eigen::VectorXd lb(n), ub(n);
        for (int j = 0; j < n; ++j) {
            const double a = u(rng), b = u(rng);
            lb(j) = std::min(a, b);
            ub(j) = std::max(a, b);
        }
        Polytope P = map_box(A, Box(lb, ub));
        if (P.degenerate) continue;
        const Eigen::VectorXd c = A * (0.5 * (lb + ub));
        for (int i = 0; i < P.vrep->count(); ++i) {
            const Eigen::VectorXd mirrored = 2 * c - P.vrep->V.row(i).transpose();
            CHECK(has_vertex(*P.vrep, mirrored, 1e-9));
        }
    }
}

TEST_CASE("intersection monotone in cone aperture; never grows volume") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int m = 2 + trial % 2;
        Eigen::MatrixXd A(m, m + 2);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m + 2; ++j) A(i, j) = u(rng);
        Polytope P = map_box(A, unit_box(m + 2));
        if (P.degenerate) continue;
        Cone cone;
        cone.apex = Eigen::VectorXd::Zero(m);
        Eigen::VectorXd axis(m);
        for (int i = 0; i < m; ++i) axis(i) = u(rng);
        if (axis.norm() < 1e-6) continue;
        cone.axis = axis.normalized();
        const double vol_p = volume(P);
        double prev = 0.0;
        for (double theta : {0.3, 0.6, 0.9, 1.2}) {
            cone.half_aperture = theta;
            const double v = volume(intersect(P, make_cone(cone)));
            CHECK(v >= prev - 1e-9);
            CHECK(v <= vol_p + 1e-9);
            prev = v;
        }
    }
}

TEST_CASE("inscribed radius matches the direction-sampling oracle") {
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const int m = 2 + trial % 2;
        const int n = m + 1 + trial % 3;
        Eigen::MatrixXd A(m, n);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) A(i, j) = u(rng);
        Polytope P = map_box(A, unit_box(n));
        if (P.degenerate) continue;
        const double r = inscribed_radius_at(P, Eigen::VectorXd::Zero(m));
        const double r_oracle = radius_oracle(*P.hrep, Eigen::VectorXd::Zero(m), 10000);
        CHECK(r == doctest::Approx(r_oracle).epsilon(0.01));
    }
}

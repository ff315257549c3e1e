#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "resforge/forcespace.hpp"
#include "resforge/geometry.hpp"

#include <cmath>
#include <random>
#include <string>

using namespace resforge;

namespace {

// planar 2R arm, unit link lengths, tau limits (1, 1)
RobotModel planar2(double tau1 = 1.0, double tau2 = 1.0) {
    const std::string text = R"({
      "name": "planar2", "task_dim": 2,
      "joints": [
        {"parent": -1, "origin": {"xyz": [0,0,0], "rpy": [0,0,0]},
         "axis": [0,0,1], "q_limits": [-3.2, 3.2], "v_limits": [-10, 10], "tau_limit": )" +
                             std::to_string(tau1) + R"(},
        {"parent": 0, "origin": {"xyz": [1,0,0], "rpy": [0,0,0]},
         "axis": [0,0,1], "q_limits": [-3.2, 3.2], "v_limits": [-10, 10], "tau_limit": )" +
                             std::to_string(tau2) + R"(}],
      "links": [{"mass": 1.0, "com": [1,0,0]}, {"mass": 1.0, "com": [1,0,0]}],
      "end_effector": {"xyz": [1,0,0], "rpy": [0,0,0]}
    })";
    return load_model(text);
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<int>(v.size()));
    int i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

const Eigen::VectorXd kElbow = vec({0.0, M_PI / 2});

// Monte-Carlo membership oracle for the polytope/cone intersection volume.
double mc_cone_volume(const Polytope& P, const HalfSpaceRep& cone, long samples) {
    Eigen::VectorXd lo = P.vrep->V.colwise().minCoeff().transpose();
    Eigen::VectorXd hi = P.vrep->V.colwise().maxCoeff().transpose();
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    long hits = 0;
    for (long s = 0; s < samples; ++s) {
        Eigen::VectorXd p(lo.size());
        for (int i = 0; i < lo.size(); ++i) p(i) = lo(i) + u(rng) * (hi(i) - lo(i));
        if (P.hrep->contains(p, 0.0) && cone.contains(p, 0.0)) ++hits;
    }
    double box_vol = 1.0;
    for (int i = 0; i < lo.size(); ++i) box_vol *= hi(i) - lo(i);
    return box_vol * static_cast<double>(hits) / static_cast<double>(samples);
}

}  // namespace

TEST_CASE("force_context: analytic transpose-pseudoinverse") {
    RobotModel m = planar2();
    ForceContext ctx = force_context(m, kElbow);
    Eigen::MatrixXd J_expected(2, 2), Jpt_expected(2, 2);
    J_expected << -1, -1, 1, 0;
    Jpt_expected << 0, -1, 1, -1;
    CHECK((ctx.J - J_expected).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK((ctx.Jpinv_T - Jpt_expected).lpNorm<Eigen::Infinity>() < 1e-9);
    CHECK(ctx.rank == 2);

    ForceContext singular = force_context(m, vec({0.0, 0.0}));
    CHECK(singular.rank == 1);

    ForceContext ident = force_context_from_jacobian(Eigen::MatrixXd::Identity(2, 2));
    CHECK((ident.Jpinv_T - Eigen::MatrixXd::Identity(2, 2)).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("task_force_from_torques and torques_for_task_force") {
    RobotModel m = planar2();
    ForceContext ctx = force_context(m, kElbow);
    CHECK((task_force_from_torques(ctx, vec({1, 0})) - vec({0, 1})).lpNorm<Eigen::Infinity>() <
          1e-9);
    CHECK(task_force_from_torques(ctx, vec({0, 0})).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK((torques_for_task_force(ctx, vec({0, 1})) - vec({1, 0})).lpNorm<Eigen::Infinity>() <
          1e-12);
    CHECK(torques_for_task_force(ctx, vec({0, 0})).lpNorm<Eigen::Infinity>() < 1e-12);

    // pseudoinverse round trip on a full-rank context
    const Eigen::VectorXd f = vec({0.3, -0.7});
    CHECK((task_force_from_torques(ctx, torques_for_task_force(ctx, f)) - f)
              .lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("joint_force_box") {
    RobotModel m = planar2(10, 10);
    Box b = joint_force_box(m);
    CHECK((b.lb - vec({-10, -10})).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK((b.ub - vec({10, 10})).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK(b.center().lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("residual_box: both modes") {
    const Eigen::VectorXd lim = vec({1, 1});
    SUBCASE("zero nominal equals the joint force box") {
        for (ResidualMode mode : {ResidualMode::symmetric_shrink, ResidualMode::exact_translate}) {
            Box b = residual_box(lim, vec({0, 0}), mode);
            CHECK((b.lb - vec({-1, -1})).lpNorm<Eigen::Infinity>() < 1e-12);
            CHECK((b.ub - vec({1, 1})).lpNorm<Eigen::Infinity>() < 1e-12);
        }
    }
    SUBCASE("symmetric shrink") {
        Box b = residual_box(lim, vec({0.5, 0}), ResidualMode::symmetric_shrink);
        CHECK((b.lb - vec({-0.5, -1})).lpNorm<Eigen::Infinity>() < 1e-12);
        CHECK((b.ub - vec({0.5, 1})).lpNorm<Eigen::Infinity>() < 1e-12);
    }
    SUBCASE("exact translate") {
        Box b = residual_box(lim, vec({0.5, 0}), ResidualMode::exact_translate);
        CHECK(b.lb(0) == doctest::Approx(-1.5));
        CHECK(b.ub(0) == doctest::Approx(0.5));
    }
    SUBCASE("saturated joint degenerates") {
        Box b = residual_box(vec({1}), vec({1}), ResidualMode::symmetric_shrink);
        CHECK(b.lb(0) == 0.0);
        CHECK(b.ub(0) == 0.0);
    }
    SUBCASE("infeasible nominal names the joint") {
        CHECK_THROWS_WITH_AS(residual_box(lim, vec({0, 1.5}), ResidualMode::symmetric_shrink),
                             doctest::Contains("joint 2"), InfeasibleNominalError);
    }
}

TEST_CASE("force_polytope: parallelogram at the elbow configuration") {
    RobotModel m = planar2();
    Polytope P = force_polytope(m, kElbow);
    REQUIRE(P.vrep);
    CHECK(P.vrep->count() == 4);
    auto has = [&](double x, double y) {
        for (int i = 0; i < P.vrep->count(); ++i)
            if ((P.vrep->V.row(i).transpose() - vec({x, y})).lpNorm<Eigen::Infinity>() < 1e-9)
                return true;
        return false;
    };
    CHECK(has(-1, 0));
    CHECK(has(1, 2));
    CHECK(has(1, 0));
    CHECK(has(-1, -2));

    CHECK(inscribed_radius_at(force_polytope(m, vec({0, 0})), vec({0, 0})) == 0.0);
}

TEST_CASE("residual_force_polytope: shrink radius and saturation") {
    RobotModel m = planar2();
    Polytope P0 = residual_force_polytope(m, kElbow, vec({0, 0}));
    Polytope Pf = force_polytope(m, kElbow);
    CHECK(P0.vrep->count() == Pf.vrep->count());

    CHECK(inscribed_radius_at(residual_force_polytope(m, kElbow, vec({0.5, 0})), vec({0, 0})) ==
          doctest::Approx(0.5 / std::sqrt(2.0)));

    Polytope sat = residual_force_polytope(m, kElbow, vec({1, 1}));
    CHECK(sat.degenerate);
    CHECK(inscribed_radius_at(sat, vec({0, 0})) == 0.0);
}

TEST_CASE("scaled_manipulability") {
    RobotModel m = planar2();
    CHECK(scaled_manipulability(m, kElbow) == doctest::Approx(1.0));
    CHECK(scaled_manipulability(m, vec({0, 0})) == doctest::Approx(0.0).epsilon(1e-12));

    RobotModel m21 = planar2(2, 1);
    CHECK(scaled_manipulability(m21, kElbow) == doctest::Approx(0.5));

    // uniform limit scaling: w'(c) = w'(1)/c^m for n = m
    for (double c : {2.0, 5.0, 10.0}) {
        RobotModel mc = planar2(c, c);
        CHECK(scaled_manipulability(mc, kElbow) ==
              doctest::Approx(scaled_manipulability(m, kElbow) / (c * c)).epsilon(1e-10));
    }
}

TEST_CASE("metric_ball: oracle values and subset property") {
    RobotModel m = planar2();
    CHECK(metric_ball(m, kElbow) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(metric_ball(m, kElbow, vec({0.5, 0})) == doctest::Approx(0.5 / std::sqrt(2.0)));
    CHECK(metric_ball(m, kElbow, vec({0.5, 0})) <= metric_ball(m, kElbow));
    CHECK(metric_ball(m, vec({0, 0})) == 0.0);  // rank-deficient
}

TEST_CASE("metric_cone_volume: Monte-Carlo oracle and limit behavior") {
    RobotModel m = planar2();
    Cone cone;
    cone.apex = vec({0, 0});
    cone.axis = vec({0, 1});
    cone.half_aperture = M_PI / 4;

    const Eigen::VectorXd tau_nom = vec({0.5, 0});
    const double v = metric_cone_volume(m, kElbow, tau_nom, cone);
    CHECK(v > 0.0);

    Polytope P = residual_force_polytope(m, kElbow, tau_nom);
    const double v_mc = mc_cone_volume(P, make_cone(cone), 1000000);
    CHECK(v == doctest::Approx(v_mc).epsilon(0.01));

    // widening the aperture approaches the half-plane limit monotonically;
    // the residual parallelogram is origin-symmetric, so that limit holds
    // exactly half of its area
    double prev = 0.0;
    for (double theta : {0.3, 0.8, 1.2, 1.5, 1.57}) {
        cone.half_aperture = theta;
        const double vt = metric_cone_volume(m, kElbow, tau_nom, cone);
        CHECK(vt >= prev - 1e-12);
        prev = vt;
    }
    CHECK(prev == doctest::Approx(0.5 * volume(P)).epsilon(0.01));

    // flat polytope (singular configuration) has no volume to intersect
    Cone away;
    away.apex = vec({0, 0});
    away.axis = vec({0, 1});
    away.half_aperture = 0.2;
    CHECK(metric_cone_volume(m, vec({0, 0}), vec({0, 0}), away) == 0.0);
}

TEST_CASE("subset invariant over random states") {
    RobotModel m = planar2(3, 2);
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const Eigen::VectorXd lim = m.tau_limits();
    for (int trial = 0; trial < 1000; ++trial) {
        Eigen::VectorXd q(2), tau(2);
        for (int i = 0; i < 2; ++i) {
            q(i) = 3.0 * u(rng);
            tau(i) = lim(i) * u(rng);
        }
        Polytope F = force_polytope(m, q);
        Polytope R = residual_force_polytope(m, q, tau);
        if (!R.degenerate && R.vrep)
            for (int i = 0; i < R.vrep->count(); ++i)
                CHECK(F.hrep->contains(R.vrep->V.row(i).transpose(), 1e-8));
        CHECK(metric_ball(m, q, tau) <= metric_ball(m, q) + 1e-9);
    }
}

TEST_CASE("monotone shrink in the nominal torque scale") {
    RobotModel m = planar2();
    const Eigen::VectorXd tau = vec({0.8, -0.6});
    double prev = std::numeric_limits<double>::infinity();
    for (double a : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const double r = metric_ball(m, kElbow, a * tau);
        CHECK(r <= prev + 1e-12);
        prev = r;
    }
}

TEST_CASE("pseudoinverse projection property") {
    RobotModel m = planar2();
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::VectorXd q = vec({3.0 * u(rng), 3.0 * u(rng)});
        ForceContext ctx = force_context(m, q);
        const Eigen::VectorXd f = vec({u(rng), u(rng)});
        const Eigen::VectorXd tau = ctx.J.transpose() * f;
        const Eigen::VectorXd back = ctx.J.transpose() * task_force_from_torques(ctx, tau);
        CHECK((back - tau).lpNorm<Eigen::Infinity>() < 1e-8);
    }
}

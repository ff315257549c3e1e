#include "resforge/forcespace.hpp"

#include <cmath>

namespace resforge {

ResidualMode residual_mode_from_string(const std::string& s) {
    if (s == "symmetric_shrink") return ResidualMode::symmetric_shrink;
    if (s == "exact_translate") return ResidualMode::exact_translate;
    throw std::invalid_argument("unknown residual mode: " + s);
}

std::string to_string(ResidualMode mode) {
    return mode == ResidualMode::symmetric_shrink ? "symmetric_shrink" : "exact_translate";
}

ForceContext force_context_from_jacobian(const Eigen::MatrixXd& J) {
    ForceContext ctx;
    ctx.J = J;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    const double cutoff = s.size() > 0 ? s(0) * 1e-8 : 0.0;
    Eigen::VectorXd sinv = Eigen::VectorXd::Zero(s.size());
    ctx.rank = 0;
    for (int i = 0; i < s.size(); ++i)
        if (s(i) > cutoff && s(i) > 0) {
            sinv(i) = 1.0 / s(i);
            ++ctx.rank;
        }
    ctx.Jpinv_T = svd.matrixV() * sinv.asDiagonal() * svd.matrixU().transpose();
    return ctx;
}

ForceContext force_context(const RobotModel& model, const Eigen::VectorXd& q) {
    ForceContext ctx = force_context_from_jacobian(jacobian(model, q));
    ctx.ee_position = forward_kinematics(model, q);
    return ctx;
}

Eigen::VectorXd task_force_from_torques(const ForceContext& ctx, const Eigen::VectorXd& tau) {
    return ctx.Jpinv_T * tau;
}

Eigen::VectorXd torques_for_task_force(const ForceContext& ctx, const Eigen::VectorXd& f) {
    return ctx.J.transpose() * f;
}

Box joint_force_box(const RobotModel& model) {
    const Eigen::VectorXd lim = model.tau_limits();
    return Box(-lim, lim);
}

Box residual_box(const Eigen::VectorXd& tau_lim, const Eigen::VectorXd& tau_nom,
                 ResidualMode mode) {
    if (tau_lim.size() != tau_nom.size())
        throw std::invalid_argument("residual_box: dimension mismatch");
    for (int i = 0; i < tau_lim.size(); ++i)
        if (std::abs(tau_nom(i)) > tau_lim(i))
            throw InfeasibleNominalError("nominal torque exceeds limit at joint " +
                                         std::to_string(i + 1));
    if (mode == ResidualMode::symmetric_shrink) {
        const Eigen::VectorXd margin = tau_lim - tau_nom.cwiseAbs();
        return Box(-margin, margin);
    }
    return Box(-tau_lim - tau_nom, tau_lim - tau_nom);
}

Polytope force_polytope(const RobotModel& model, const Eigen::VectorXd& q) {
    return map_box(force_context(model, q).Jpinv_T, joint_force_box(model));
}

Polytope residual_force_polytope(const RobotModel& model, const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& tau_nom, ResidualMode mode) {
    return map_box(force_context(model, q).Jpinv_T,
                   residual_box(model.tau_limits(), tau_nom, mode));
}

double scaled_manipulability(const RobotModel& model, const Eigen::VectorXd& q) {
    const Eigen::MatrixXd J = jacobian(model, q);
    const Eigen::VectorXd w = model.tau_limits().cwiseInverse();
    const Eigen::MatrixXd Js = J * w.asDiagonal();
    const double det = (Js * Js.transpose()).determinant();
    return det > 0 ? std::sqrt(det) : 0.0;
}

namespace {

// Radius of the fully constructed polytope: re-enumerating the vertices
// from the facets certifies boundedness before a radius is reported.
double constructed_radius(Polytope P) {
    if (P.degenerate || P.empty) return 0.0;
    P.vrep = enumerate_vertices(*P.hrep);
    if (P.vrep->count() == 0) return 0.0;
    return inscribed_radius_at(P, Eigen::VectorXd::Zero(P.dim()));
}

}  // namespace

double metric_ball(const RobotModel& model, const Eigen::VectorXd& q) {
    return constructed_radius(force_polytope(model, q));
}

double metric_ball(const RobotModel& model, const Eigen::VectorXd& q,
                   const Eigen::VectorXd& tau_nom, ResidualMode mode) {
    return constructed_radius(residual_force_polytope(model, q, tau_nom, mode));
}

double metric_cone_volume(const RobotModel& model, const Eigen::VectorXd& q,
                          const Eigen::VectorXd& tau_nom, const Cone& cone,
                          ResidualMode mode) {
    const Polytope P = residual_force_polytope(model, q, tau_nom, mode);
    if (P.degenerate || P.empty) return 0.0;
    return volume(intersect(P, make_cone(cone)));
}

}  // namespace resforge

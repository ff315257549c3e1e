#pragma once

#include "resforge/geometry.hpp"
#include "resforge/model.hpp"

namespace resforge {

struct InfeasibleNominalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// How the torque capacity left after a nominal torque is modeled.
// symmetric_shrink keeps the box centered at the origin, so the residual
// polytope is a subset of the force polytope; exact_translate is the
// exact admissible-increment set.
enum class ResidualMode { symmetric_shrink, exact_translate };

ResidualMode residual_mode_from_string(const std::string& s);
std::string to_string(ResidualMode mode);

// Jacobian and its transpose-pseudoinverse at a configuration.
struct ForceContext {
    Eigen::MatrixXd J;        // m x n
    Eigen::MatrixXd Jpinv_T;  // m x n, pinv(J^T)
    int rank = 0;
    Eigen::VectorXd ee_position;
};

ForceContext force_context(const RobotModel& model, const Eigen::VectorXd& q);
ForceContext force_context_from_jacobian(const Eigen::MatrixXd& J);

Eigen::VectorXd task_force_from_torques(const ForceContext& ctx, const Eigen::VectorXd& tau);
Eigen::VectorXd torques_for_task_force(const ForceContext& ctx, const Eigen::VectorXd& f);

// Joint force polytope bounds: [-tau_lim, +tau_lim].
Box joint_force_box(const RobotModel& model);

Box residual_box(const Eigen::VectorXd& tau_lim, const Eigen::VectorXd& tau_nom,
                 ResidualMode mode = ResidualMode::symmetric_shrink);

Polytope force_polytope(const RobotModel& model, const Eigen::VectorXd& q);

Polytope residual_force_polytope(const RobotModel& model, const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& tau_nom,
                                 ResidualMode mode = ResidualMode::symmetric_shrink);

// Chiacchio's torque-scaled manipulability w' = sqrt(det(J W^2 J^T)).
double scaled_manipulability(const RobotModel& model, const Eigen::VectorXd& q);

// Largest admissible force magnitude from any direction: radius of the
// ball at the force-space origin inscribed in the (residual) force polytope.
double metric_ball(const RobotModel& model, const Eigen::VectorXd& q);
double metric_ball(const RobotModel& model, const Eigen::VectorXd& q,
                   const Eigen::VectorXd& tau_nom,
                   ResidualMode mode = ResidualMode::symmetric_shrink);

// Volume of residual force polytope intersected with a disturbance cone.
double metric_cone_volume(const RobotModel& model, const Eigen::VectorXd& q,
                          const Eigen::VectorXd& tau_nom, const Cone& cone,
                          ResidualMode mode = ResidualMode::symmetric_shrink);

}  // namespace resforge

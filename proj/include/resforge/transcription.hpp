#pragma once

#include "resforge/forcespace.hpp"
#include "resforge/geometry.hpp"
#include "resforge/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace resforge {

struct ScenarioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Objective { A, B, C, D, E, F };

Objective objective_from_string(const std::string& s);
std::string to_string(Objective o);

// Disturbance cone used by objective F; the axis may vary per mesh point.
struct ConeSpec {
    std::vector<Eigen::VectorXd> axes;  // one entry (constant) or M entries
    double half_aperture = 0;           // radians
    int facets = 8;

    Eigen::VectorXd axis_at(int k) const {
        return axes.size() == 1 ? axes[0] : axes.at(static_cast<size_t>(k));
    }
};

struct SolverSettings {
    int max_iterations = 600;
    double feasibility_tol = 1e-3;
    double gradient_step = 1e-6;
};

struct Scenario {
    std::string model_path;
    std::optional<RobotModel> model;  // overrides model_path when present
    Eigen::VectorXd p_start;
    Eigen::VectorXd p_final;
    Rectangle surface;
    double duration = 1.0;
    int segments = 10;
    Objective objective = Objective::A;
    std::optional<ConeSpec> cone;  // required iff objective == F
    double payload_mass = 0;
    ResidualMode residual_mode = ResidualMode::symmetric_shrink;
    SolverSettings solver;
};

Scenario load_scenario(const std::string& path);

// Flat layout {q_1, v_1, tau_1, ..., q_N, v_N, tau_N, q_M, v_M};
// the torque at the final mesh point is not discretized.
struct DecisionLayout {
    int n = 0;
    int segments = 0;  // N

    int mesh_points() const { return segments + 1; }
    int size() const { return mesh_points() * 2 * n + segments * n; }
    int q_offset(int k) const { return k * 3 * n; }
    int v_offset(int k) const { return k * 3 * n + n; }
    int tau_offset(int k) const { return k * 3 * n + 2 * n; }  // k < segments

    Eigen::VectorXd q(const Eigen::VectorXd& xi, int k) const { return xi.segment(q_offset(k), n); }
    Eigen::VectorXd v(const Eigen::VectorXd& xi, int k) const { return xi.segment(v_offset(k), n); }
    Eigen::VectorXd tau(const Eigen::VectorXd& xi, int k) const { return xi.segment(tau_offset(k), n); }
};

struct NlpProblem {
    Scenario scenario;
    RobotModel model;  // payload already attached
    DecisionLayout layout;
    double step = 0;  // h = duration / N
    Eigen::VectorXd lb, ub;  // simple bounds on the decision vector

    int constraint_count() const;
};

struct Solution {
    Eigen::VectorXd xi;
    std::vector<double> objective_trace;      // reported sense (maximizations un-negated)
    std::vector<double> feasibility_trace;    // max abs equality residual
    std::vector<double> best_feasible_trace;  // running best, minimization sense
    bool converged = false;
    double wall_time_s = 0;
    long n_feval = 0;
    long n_geval = 0;
};

NlpProblem build_problem(const Scenario& scenario);

// Equality residuals: defects (2n per segment), endpoint FK (2m),
// surface distance (M), endpoint velocities (2n). Zero iff the decision
// vector is dynamically feasible and task-consistent.
Eigen::VectorXd constraint_residuals(const NlpProblem& problem, const Eigen::VectorXd& xi);

// Jacobian of constraint_residuals. Defect dynamics blocks use central
// finite differences of forward_dynamics; all structural and kinematic
// blocks are analytic.
Eigen::MatrixXd constraint_jacobian(const NlpProblem& problem, const Eigen::VectorXd& xi);

// Minimization-sense objective (maximizations negated). Returns 1e9 when a
// polytope metric hits an infeasible nominal torque at a trial point.
double objective_value(const NlpProblem& problem, const Eigen::VectorXd& xi);

// Converts a minimization value back to the user-facing sense.
double reported_objective(const NlpProblem& problem, double internal_value);

// Damped-least-squares inverse kinematics onto a task point.
Eigen::VectorXd inverse_kinematics(const RobotModel& model, const Eigen::VectorXd& target,
                                   const Eigen::VectorXd& q_seed, int max_iters = 500);

// Joint-space interpolation between IK solutions for the endpoints;
// velocities by finite differences, torques by inverse dynamics.
Eigen::VectorXd initial_guess(const NlpProblem& problem, unsigned seed = 0);

struct SolveOptions {
    int max_iterations = 600;
    double feasibility_tol = 1e-3;
    double gradient_step = 1e-6;
    unsigned seed = 0;
};

Solution solve(const NlpProblem& problem, const SolveOptions& options);

}  // namespace resforge

#pragma once

#include "resforge/forcespace.hpp"
#include "resforge/model.hpp"
#include "resforge/transcription.hpp"

#include <string>
#include <vector>

namespace resforge {

struct EvaluationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Discretized state-control sequence on a uniform mesh. The torque at the
// final mesh point is not stored (one fewer control than states).
struct Trajectory {
    std::vector<double> mesh_times;     // length M, strictly increasing, uniform
    std::vector<Eigen::VectorXd> q;     // length M
    std::vector<Eigen::VectorXd> v;     // length M
    std::vector<Eigen::VectorXd> tau;   // length M - 1

    int mesh_points() const { return static_cast<int>(mesh_times.size()); }
    double duration() const { return mesh_times.back() - mesh_times.front(); }
    void validate() const;
};

Trajectory trajectory_from_solution(const NlpProblem& problem, const Solution& solution);

struct RobustnessReport {
    std::vector<double> radii;                       // per mesh point
    std::vector<Eigen::VectorXd> tau_normalized;     // total torque / limit, per mesh point
    std::vector<Eigen::VectorXd> tau_nominal_normalized;
    std::vector<std::vector<bool>> saturated;        // per (mesh point, joint)
    double mean_radius = 0;
    double min_radius = 0;

    bool any_saturated() const;
    double peak_normalized_torque() const;
};

// Gaussian disturbance profile centered at `center` seconds.
double force_profile(double t, double f_peak, double center = 0.5);

// Admissible-force radius per mesh point: the residual force polytope's
// inscribed-ball radius at the force-space origin. The final point reuses
// the last segment's torque. Infeasible nominal torques yield radius 0.
std::vector<double> robustness_timeseries(const RobotModel& model, const Trajectory& traj,
                                          ResidualMode mode = ResidualMode::symmetric_shrink);

// Feedforward torque accounting for a Gaussian impulse along `direction`:
// extra torque J^T (f(t_k) * direction) added to the nominal trace, then
// normalized by the actuation limits.
RobustnessReport impulse_torque_test(const RobotModel& model, const Trajectory& traj,
                                     const Eigen::VectorXd& direction, double f_peak);

// Smallest f_peak at which the impulse test saturates some joint.
// Returns +inf when no finite peak saturates (zero coupling).
double saturation_threshold(const RobotModel& model, const Trajectory& traj,
                            const Eigen::VectorXd& direction);

struct ComparisonRow {
    std::string label;
    std::vector<double> radii;
    double mean_radius = 0;
    double min_radius = 0;
};

// Per-label admissible-force series, ranked by mean radius (descending).
std::vector<ComparisonRow> compare_report(
    const RobotModel& model, const std::vector<std::pair<std::string, Trajectory>>& trajectories,
    ResidualMode mode = ResidualMode::symmetric_shrink);

}  // namespace resforge

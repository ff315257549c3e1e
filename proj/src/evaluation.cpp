#include "resforge/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace resforge {

void Trajectory::validate() const {
    const int M = mesh_points();
    if (M < 2) throw EvaluationError("trajectory: needs at least 2 mesh points");
    if (q.size() != static_cast<size_t>(M) || v.size() != static_cast<size_t>(M) ||
        tau.size() != static_cast<size_t>(M - 1))
        throw EvaluationError("trajectory: inconsistent array lengths");
    const double h = mesh_times[1] - mesh_times[0];
    for (int k = 1; k < M; ++k) {
        const double dk = mesh_times[k] - mesh_times[k - 1];
        if (dk <= 0) throw EvaluationError("trajectory: times must be strictly increasing");
        if (std::abs(dk - h) > 1e-9) throw EvaluationError("trajectory: mesh must be uniform");
    }
}

Trajectory trajectory_from_solution(const NlpProblem& problem, const Solution& solution) {
    Trajectory traj;
    const auto& L = problem.layout;
    for (int k = 0; k <= L.segments; ++k) {
        traj.mesh_times.push_back(k * problem.step);
        traj.q.push_back(L.q(solution.xi, k));
        traj.v.push_back(L.v(solution.xi, k));
        if (k < L.segments) traj.tau.push_back(L.tau(solution.xi, k));
    }
    return traj;
}

bool RobustnessReport::any_saturated() const {
    for (const auto& row : saturated)
        for (bool s : row)
            if (s) return true;
    return false;
}

double RobustnessReport::peak_normalized_torque() const {
    double peak = 0;
    for (const auto& t : tau_normalized) peak = std::max(peak, t.lpNorm<Eigen::Infinity>());
    return peak;
}

double force_profile(double t, double f_peak, double center) {
    return f_peak * std::exp(-(t - center) * (t - center) / 0.02);
}

namespace {

double profile_center(const Trajectory& traj) {
    return traj.mesh_times.front() + 0.5 * traj.duration();
}

const Eigen::VectorXd& torque_at(const Trajectory& traj, int k) {
    return traj.tau[std::min<size_t>(k, traj.tau.size() - 1)];
}

}  // namespace

std::vector<double> robustness_timeseries(const RobotModel& model, const Trajectory& traj,
                                          ResidualMode mode) {
    traj.validate();
    std::vector<double> radii;
    radii.reserve(traj.mesh_points());
    for (int k = 0; k < traj.mesh_points(); ++k) {
        try {
            radii.push_back(metric_ball(model, traj.q[k], torque_at(traj, k), mode));
        } catch (const InfeasibleNominalError&) {
            radii.push_back(0.0);  // saturated nominal torque: no margin left
        }
    }
    return radii;
}

RobustnessReport impulse_torque_test(const RobotModel& model, const Trajectory& traj,
                                     const Eigen::VectorXd& direction, double f_peak) {
    traj.validate();
    if (std::abs(direction.norm() - 1.0) > 1e-9)
        throw EvaluationError("impulse_torque_test: direction must be a unit vector");
    if (direction.size() != model.task_dim)
        throw EvaluationError("impulse_torque_test: direction dimension mismatch");

    const Eigen::VectorXd lim = model.tau_limits();
    const double center = profile_center(traj);

    RobustnessReport report;
    report.radii = robustness_timeseries(model, traj);
    for (int k = 0; k < traj.mesh_points(); ++k) {
        const Eigen::VectorXd tau_nom = torque_at(traj, k);
        const Eigen::MatrixXd J = jacobian(model, traj.q[k]);
        const Eigen::VectorXd tau_extra =
            J.transpose() * (force_profile(traj.mesh_times[k], f_peak, center) * direction);
        const Eigen::VectorXd total = (tau_nom + tau_extra).cwiseQuotient(lim);
        report.tau_normalized.push_back(total);
        report.tau_nominal_normalized.push_back(tau_nom.cwiseQuotient(lim));
        std::vector<bool> sat(model.n());
        for (int i = 0; i < model.n(); ++i) sat[i] = std::abs(total(i)) > 1.0;
        report.saturated.push_back(sat);
    }
    report.mean_radius =
        std::accumulate(report.radii.begin(), report.radii.end(), 0.0) / report.radii.size();
    report.min_radius = *std::min_element(report.radii.begin(), report.radii.end());
    return report;
}

double saturation_threshold(const RobotModel& model, const Trajectory& traj,
                            const Eigen::VectorXd& direction) {
    traj.validate();
    const Eigen::VectorXd lim = model.tau_limits();
    const double center = profile_center(traj);
    double threshold = std::numeric_limits<double>::infinity();
    for (int k = 0; k < traj.mesh_points(); ++k) {
        const Eigen::VectorXd tau_nom = torque_at(traj, k);
        const Eigen::MatrixXd J = jacobian(model, traj.q[k]);
        const Eigen::VectorXd unit_extra =
            J.transpose() * (force_profile(traj.mesh_times[k], 1.0, center) * direction);
        for (int i = 0; i < model.n(); ++i) {
            const double a = tau_nom(i);
            const double b = unit_extra(i);
            if (std::abs(a) >= lim(i)) return 0.0;
            if (std::abs(b) < 1e-15) continue;
            const double s = b > 0 ? (lim(i) - a) / b : (-lim(i) - a) / b;
            threshold = std::min(threshold, s);
        }
    }
    return threshold;
}

std::vector<ComparisonRow> compare_report(
    const RobotModel& model, const std::vector<std::pair<std::string, Trajectory>>& trajectories,
    ResidualMode mode) {
    if (trajectories.empty()) throw EvaluationError("compare_report: no trajectories");
    std::set<std::string> labels;
    for (const auto& [label, traj] : trajectories)
        if (!labels.insert(label).second)
            throw EvaluationError("compare_report: duplicate label '" + label + "'");
    const auto& ref_times = trajectories.front().second.mesh_times;
    for (const auto& [label, traj] : trajectories) {
        if (traj.mesh_times.size() != ref_times.size())
            throw EvaluationError("compare_report: mesh mismatch for '" + label + "'");
        for (size_t k = 0; k < ref_times.size(); ++k)
            if (std::abs(traj.mesh_times[k] - ref_times[k]) > 1e-9)
                throw EvaluationError("compare_report: mesh mismatch for '" + label + "'");
    }

    std::vector<ComparisonRow> rows;
    for (const auto& [label, traj] : trajectories) {
        ComparisonRow row;
        row.label = label;
        row.radii = robustness_timeseries(model, traj, mode);
        row.mean_radius =
            std::accumulate(row.radii.begin(), row.radii.end(), 0.0) / row.radii.size();
        row.min_radius = *std::min_element(row.radii.begin(), row.radii.end());
        rows.push_back(std::move(row));
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const ComparisonRow& a, const ComparisonRow& b) {
                         return a.mean_radius > b.mean_radius;
                     });
    return rows;
}

}  // namespace resforge

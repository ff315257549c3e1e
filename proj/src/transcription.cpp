#include "resforge/transcription.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace resforge {

namespace {

constexpr double kPenalty = 1e9;

Eigen::Vector3d lift3(const Eigen::VectorXd& p) {
    Eigen::Vector3d out = Eigen::Vector3d::Zero();
    out.head(p.size()) = p;
    return out;
}

// Signed surface residual: |value| equals the distance to the bounded
// rectangle, but the sign is kept where the in-plane projection falls
// inside the rectangle so the constraint stays smooth at the surface.
struct SurfaceResidual {
    double value = 0;
    Eigen::Vector3d grad = Eigen::Vector3d::Zero();  // d value / d p
};

SurfaceResidual surface_residual(const Rectangle& rect, const Eigen::Vector3d& p) {
    SurfaceResidual out;
    const Eigen::Vector3d d = p - rect.corner;
    const double a = d.dot(rect.edge_u) / rect.edge_u.squaredNorm();
    const double b = d.dot(rect.edge_v) / rect.edge_v.squaredNorm();
    const Eigen::Vector3d nrm = rect.normal();
    if (a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0) {
        out.value = nrm.dot(d);
        out.grad = nrm;
        return out;
    }
    const Eigen::Vector3d cp = closest_point_on_rectangle(rect, p);
    const double dist = (p - cp).norm();
    out.value = dist;
    out.grad = dist > 1e-12 ? Eigen::Vector3d((p - cp) / dist) : nrm;
    return out;
}

// Per-mesh-point objective terms. The final mesh point reuses the torque
// of the last segment (tau_M is not discretized).
class ObjectiveTerms {
  public:
    explicit ObjectiveTerms(const NlpProblem& p) : p_(p) {}

    bool uses_q() const {
        return p_.scenario.objective != Objective::A && p_.scenario.objective != Objective::B;
    }
    bool uses_tau() const {
        return p_.scenario.objective != Objective::C && p_.scenario.objective != Objective::D;
    }
    // True when torque-only terms stop at k < N (final point contributes nothing).
    bool torque_only() const {
        return p_.scenario.objective == Objective::A || p_.scenario.objective == Objective::B;
    }

    double term(int k, const Eigen::VectorXd& q, const Eigen::VectorXd& tau) const {
        const int N = p_.layout.segments;
        switch (p_.scenario.objective) {
            case Objective::A:
                return k < N ? tau.squaredNorm() : 0.0;
            case Objective::B: {
                if (k >= N) return 0.0;
                const Eigen::VectorXd r = p_.model.tau_limits() - tau;
                return -r.squaredNorm();
            }
            case Objective::C:
                return -scaled_manipulability(p_.model, q);
            case Objective::D:
                return -metric_ball(p_.model, q);
            case Objective::E:
                try {
                    return -metric_ball(p_.model, q, tau, p_.scenario.residual_mode);
                } catch (const InfeasibleNominalError&) {
                    return kPenalty;
                }
            case Objective::F: {
                const auto& spec = *p_.scenario.cone;
                Cone cone;
                cone.apex = Eigen::VectorXd::Zero(p_.model.task_dim);
                cone.axis = spec.axis_at(k);
                cone.half_aperture = spec.half_aperture;
                cone.facets = spec.facets;
                try {
                    return -metric_cone_volume(p_.model, q, tau, cone, p_.scenario.residual_mode);
                } catch (const InfeasibleNominalError&) {
                    return kPenalty;
                }
            }
        }
        return 0.0;
    }

    double term_at(const Eigen::VectorXd& xi, int k) const {
        const auto& L = p_.layout;
        const int N = L.segments;
        const Eigen::VectorXd q = L.q(xi, k);
        const Eigen::VectorXd tau = L.tau(xi, std::min(k, N - 1));
        return term(k, q, tau);
    }

    double full(const Eigen::VectorXd& xi) const {
        double sum = 0;
        for (int k = 0; k <= p_.layout.segments; ++k) {
            const double t = term_at(xi, k);
            if (t >= kPenalty) return kPenalty;
            sum += t;
        }
        return sum;
    }

  private:
    const NlpProblem& p_;
};

Eigen::VectorXd clip_box(const Eigen::VectorXd& x, const Eigen::VectorXd& lb,
                         const Eigen::VectorXd& ub) {
    return x.cwiseMax(lb).cwiseMin(ub);
}

Eigen::VectorXd parse_point(const nlohmann::json& j, const std::string& field) {
    if (!j.contains(field) || !j[field].is_array())
        throw ScenarioError("scenario: missing array field '" + field + "'");
    Eigen::VectorXd p(j[field].size());
    for (size_t i = 0; i < j[field].size(); ++i) p(static_cast<int>(i)) = j[field][i].get<double>();
    return p;
}

Eigen::Vector3d parse_vec3(const nlohmann::json& j, const std::string& field) {
    const Eigen::VectorXd p = parse_point(j, field);
    if (p.size() != 3) throw ScenarioError("scenario: '" + field + "' must have 3 components");
    return p;
}

}  // namespace

Objective objective_from_string(const std::string& s) {
    if (s.size() == 1 && s[0] >= 'A' && s[0] <= 'F')
        return static_cast<Objective>(s[0] - 'A');
    throw ScenarioError("unknown objective: " + s);
}

std::string to_string(Objective o) {
    return std::string(1, static_cast<char>('A' + static_cast<int>(o)));
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open scenario file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw ScenarioError(std::string("scenario parse error: ") + e.what());
    }

    Scenario sc;
    try {
        const std::filesystem::path base = std::filesystem::path(path).parent_path();
        sc.model_path = (base / doc.at("model").get<std::string>()).string();
        sc.p_start = parse_point(doc, "p_I");
        sc.p_final = parse_point(doc, "p_F");
        const auto& surf = doc.at("surface");
        sc.surface.corner = parse_vec3(surf, "corner");
        sc.surface.edge_u = parse_vec3(surf, "edge_u");
        sc.surface.edge_v = parse_vec3(surf, "edge_v");
        sc.duration = doc.value("duration", 1.0);
        sc.segments = doc.value("segments", 10);
        sc.objective = objective_from_string(doc.value("objective", "A"));
        sc.payload_mass = doc.value("payload_mass", 0.0);
        sc.residual_mode = residual_mode_from_string(doc.value("residual_mode", "symmetric_shrink"));
        if (doc.contains("cone")) {
            ConeSpec cone;
            const auto& cj = doc["cone"];
            if (cj.contains("axes")) {
                for (const auto& a : cj["axes"]) {
                    Eigen::VectorXd axis(a.size());
                    for (size_t i = 0; i < a.size(); ++i) axis(static_cast<int>(i)) = a[i].get<double>();
                    cone.axes.push_back(axis.normalized());
                }
            } else {
                cone.axes.push_back(parse_point(cj, "axis").normalized());
            }
            cone.half_aperture = cj.at("half_aperture_deg").get<double>() * std::numbers::pi / 180.0;
            cone.facets = cj.value("facets", 8);
            sc.cone = cone;
        }
        if (doc.contains("solver")) {
            const auto& sj = doc["solver"];
            sc.solver.max_iterations = sj.value("max_iterations", sc.solver.max_iterations);
            sc.solver.feasibility_tol = sj.value("feasibility_tol", sc.solver.feasibility_tol);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ScenarioError(std::string("scenario parse error: ") + e.what());
    }
    if ((sc.p_start - sc.p_final).norm() < 1e-12)
        throw ScenarioError("scenario: p_I and p_F must differ");
    return sc;
}

int NlpProblem::constraint_count() const {
    const int n = layout.n;
    const int N = layout.segments;
    const int m = model.task_dim;
    return 2 * n * N + 2 * m + (N + 1) + 2 * n;
}

NlpProblem build_problem(const Scenario& scenario) {
    NlpProblem p;
    p.scenario = scenario;
    RobotModel model = scenario.model ? *scenario.model : load_model_file(scenario.model_path);
    if (scenario.payload_mass > 0) model = attach_payload(model, scenario.payload_mass);
    p.model = std::move(model);

    if (scenario.segments < 2) throw ScenarioError("scenario: segments must be >= 2");
    if (scenario.duration <= 0) throw ScenarioError("scenario: duration must be > 0");
    if (scenario.p_start.size() != p.model.task_dim || scenario.p_final.size() != p.model.task_dim)
        throw ScenarioError("scenario: endpoint dimension must match the model task dimension");
    scenario.surface.validate();
    if (distance_to_rectangle(scenario.surface, lift3(scenario.p_start)) > 1e-6)
        throw ScenarioError("scenario: p_I does not lie on the surface");
    if (distance_to_rectangle(scenario.surface, lift3(scenario.p_final)) > 1e-6)
        throw ScenarioError("scenario: p_F does not lie on the surface");
    if (scenario.objective == Objective::F) {
        if (!scenario.cone) throw ScenarioError("scenario: objective F requires a cone");
        const size_t n_axes = scenario.cone->axes.size();
        if (n_axes != 1 && n_axes != static_cast<size_t>(scenario.segments + 1))
            throw ScenarioError("scenario: cone axes must be constant or one per mesh point");
        for (const auto& a : scenario.cone->axes)
            if (a.size() != p.model.task_dim)
                throw ScenarioError("scenario: cone axis dimension mismatch");
        if (!(scenario.cone->half_aperture > 0 && scenario.cone->half_aperture < std::numbers::pi / 2))
            throw ScenarioError("scenario: cone half aperture must be in (0, 90) degrees");
    }

    p.layout = DecisionLayout{p.model.n(), scenario.segments};
    p.step = scenario.duration / scenario.segments;

    const int len = p.layout.size();
    p.lb.resize(len);
    p.ub.resize(len);
    const Eigen::VectorXd qlo = p.model.q_lower(), qhi = p.model.q_upper();
    const Eigen::VectorXd vlo = p.model.v_lower(), vhi = p.model.v_upper();
    const Eigen::VectorXd tlim = p.model.tau_limits();
    for (int k = 0; k <= scenario.segments; ++k) {
        p.lb.segment(p.layout.q_offset(k), p.layout.n) = qlo;
        p.ub.segment(p.layout.q_offset(k), p.layout.n) = qhi;
        p.lb.segment(p.layout.v_offset(k), p.layout.n) = vlo;
        p.ub.segment(p.layout.v_offset(k), p.layout.n) = vhi;
        if (k < scenario.segments) {
            p.lb.segment(p.layout.tau_offset(k), p.layout.n) = -tlim;
            p.ub.segment(p.layout.tau_offset(k), p.layout.n) = tlim;
        }
    }
    return p;
}

Eigen::VectorXd constraint_residuals(const NlpProblem& problem, const Eigen::VectorXd& xi) {
    const auto& L = problem.layout;
    if (xi.size() != L.size()) throw ScenarioError("constraint_residuals: decision vector length");
    const int n = L.n;
    const int N = L.segments;
    const int m = problem.model.task_dim;
    const double h = problem.step;

    Eigen::VectorXd r(problem.constraint_count());
    int row = 0;
    for (int k = 0; k < N; ++k) {
        const Eigen::VectorXd q = L.q(xi, k), v = L.v(xi, k), tau = L.tau(xi, k);
        const Eigen::VectorXd vdot = forward_dynamics(problem.model, q, v, tau);
        r.segment(row, n) = L.q(xi, k + 1) - (q + h * v);
        r.segment(row + n, n) = L.v(xi, k + 1) - (v + h * vdot);
        row += 2 * n;
    }
    r.segment(row, m) = forward_kinematics(problem.model, L.q(xi, 0)) - problem.scenario.p_start;
    row += m;
    r.segment(row, m) = forward_kinematics(problem.model, L.q(xi, N)) - problem.scenario.p_final;
    row += m;
    for (int k = 0; k <= N; ++k) {
        const Eigen::Vector3d p = forward_kinematics3(problem.model, L.q(xi, k));
        r(row++) = surface_residual(problem.scenario.surface, p).value;
    }
    r.segment(row, n) = L.v(xi, 0);
    row += n;
    r.segment(row, n) = L.v(xi, N);
    return r;
}

Eigen::MatrixXd constraint_jacobian(const NlpProblem& problem, const Eigen::VectorXd& xi) {
    const auto& L = problem.layout;
    const int n = L.n;
    const int N = L.segments;
    const int m = problem.model.task_dim;
    const double h = problem.step;
    const double step = 1e-6;

    Eigen::MatrixXd Jc = Eigen::MatrixXd::Zero(problem.constraint_count(), L.size());
    const auto I = Eigen::MatrixXd::Identity(n, n);

    int row = 0;
    for (int k = 0; k < N; ++k) {
        // q rows: q_{k+1} - q_k - h v_k
        Jc.block(row, L.q_offset(k + 1), n, n) = I;
        Jc.block(row, L.q_offset(k), n, n) = -I;
        Jc.block(row, L.v_offset(k), n, n) = -h * I;
        // v rows: v_{k+1} - v_k - h * fd(q_k, v_k, tau_k)
        Jc.block(row + n, L.v_offset(k + 1), n, n) = I;
        Jc.block(row + n, L.v_offset(k), n, n) -= I;
        Eigen::VectorXd q = L.q(xi, k), v = L.v(xi, k), tau = L.tau(xi, k);
        auto fd_column = [&](Eigen::VectorXd& vec, int i, int col_offset) {
            const double orig = vec(i);
            vec(i) = orig + step;
            const Eigen::VectorXd hi = forward_dynamics(problem.model, q, v, tau);
            vec(i) = orig - step;
            const Eigen::VectorXd lo = forward_dynamics(problem.model, q, v, tau);
            vec(i) = orig;
            Jc.block(row + n, col_offset + i, n, 1) -= h * (hi - lo) / (2 * step);
        };
        for (int i = 0; i < n; ++i) fd_column(q, i, L.q_offset(k));
        for (int i = 0; i < n; ++i) fd_column(v, i, L.v_offset(k));
        for (int i = 0; i < n; ++i) fd_column(tau, i, L.tau_offset(k));
        row += 2 * n;
    }
    Jc.block(row, L.q_offset(0), m, n) = jacobian(problem.model, L.q(xi, 0));
    row += m;
    Jc.block(row, L.q_offset(N), m, n) = jacobian(problem.model, L.q(xi, N));
    row += m;
    for (int k = 0; k <= N; ++k) {
        const Eigen::VectorXd q = L.q(xi, k);
        const Eigen::Vector3d p = forward_kinematics3(problem.model, q);
        const SurfaceResidual sr = surface_residual(problem.scenario.surface, p);
        Jc.block(row, L.q_offset(k), 1, n) = sr.grad.transpose() * jacobian3(problem.model, q);
        ++row;
    }
    Jc.block(row, L.v_offset(0), n, n) = I;
    row += n;
    Jc.block(row, L.v_offset(N), n, n) = I;
    return Jc;
}

double objective_value(const NlpProblem& problem, const Eigen::VectorXd& xi) {
    return ObjectiveTerms(problem).full(xi);
}

double reported_objective(const NlpProblem& problem, double internal_value) {
    return problem.scenario.objective == Objective::A ? internal_value : -internal_value;
}

Eigen::VectorXd inverse_kinematics(const RobotModel& model, const Eigen::VectorXd& target,
                                   const Eigen::VectorXd& q_seed, int max_iters) {
    if (target.size() != model.task_dim)
        throw ModelError("inverse_kinematics: target dimension mismatch");
    Eigen::VectorXd q = clip_box(q_seed, model.q_lower(), model.q_upper());
    for (int it = 0; it < max_iters; ++it) {
        const Eigen::VectorXd err = target - forward_kinematics(model, q);
        if (err.norm() < 1e-10) return q;
        const Eigen::MatrixXd J = jacobian(model, q);
        const double lambda = 1e-3 + 0.5 * err.norm();
        const Eigen::MatrixXd JJt =
            J * J.transpose() + lambda * lambda * Eigen::MatrixXd::Identity(J.rows(), J.rows());
        q = clip_box(q + J.transpose() * JJt.ldlt().solve(err), model.q_lower(), model.q_upper());
    }
    if ((target - forward_kinematics(model, q)).norm() > 1e-9)
        throw ScenarioError(
            "inverse_kinematics: no convergence after " + std::to_string(max_iters) +
            " iterations; the target may be unreachable, try a manual seed");
    return q;
}

Eigen::VectorXd initial_guess(const NlpProblem& problem, unsigned seed) {
    const auto& L = problem.layout;
    const int n = L.n;
    const int N = L.segments;
    const double h = problem.step;

    Eigen::VectorXd q_seed(n);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.05, 0.05);
    for (int i = 0; i < n; ++i) q_seed(i) = 0.3 * std::sin(1.7 * (i + 1)) + jitter(rng);

    const Eigen::VectorXd q_start = inverse_kinematics(problem.model, problem.scenario.p_start, q_seed);
    const bool degenerate_task =
        (problem.scenario.p_start - problem.scenario.p_final).norm() < 1e-12;
    const Eigen::VectorXd q_final =
        degenerate_task ? q_start
                        : inverse_kinematics(problem.model, problem.scenario.p_final, q_start);

    std::vector<Eigen::VectorXd> qs(N + 1), vs(N + 1), as(N + 1);
    for (int k = 0; k <= N; ++k) {
        const double s = static_cast<double>(k) / N;
        qs[k] = (1 - s) * q_start + s * q_final;
    }
    vs[0] = Eigen::VectorXd::Zero(n);
    vs[N] = Eigen::VectorXd::Zero(n);
    for (int k = 1; k < N; ++k) vs[k] = (qs[k + 1] - qs[k - 1]) / (2 * h);
    for (int k = 0; k <= N; ++k) {
        if (k == 0)
            as[k] = (vs[1] - vs[0]) / h;
        else if (k == N)
            as[k] = (vs[N] - vs[N - 1]) / h;
        else
            as[k] = (vs[k + 1] - vs[k - 1]) / (2 * h);
    }

    Eigen::VectorXd xi(L.size());
    for (int k = 0; k <= N; ++k) {
        xi.segment(L.q_offset(k), n) = qs[k];
        xi.segment(L.v_offset(k), n) = vs[k];
        if (k < N)
            xi.segment(L.tau_offset(k), n) = inverse_dynamics(problem.model, qs[k], vs[k], as[k]);
    }
    return clip_box(xi, problem.lb, problem.ub);
}

namespace {

// Bound-respecting finite-difference gradient of the separable objective.
// Velocity variables never enter any objective; torque variables affect
// their own mesh point (and the final one, for the last segment).
Eigen::VectorXd objective_gradient_fd(const NlpProblem& problem, const Eigen::VectorXd& xi,
                                      double step, long& term_evals) {
    const ObjectiveTerms obj(problem);
    const auto& L = problem.layout;
    const int n = L.n;
    const int N = L.segments;

    Eigen::VectorXd g = Eigen::VectorXd::Zero(L.size());
    auto fd_var = [&](int idx, const std::vector<int>& terms) {
        double lo_step = std::min(step, xi(idx) - problem.lb(idx));
        double hi_step = std::min(step, problem.ub(idx) - xi(idx));
        if (lo_step + hi_step < 1e-12) return;  // pinned variable
        Eigen::VectorXd x = xi;
        double hi_val = 0, lo_val = 0;
        x(idx) = xi(idx) + hi_step;
        for (int t : terms) hi_val += obj.term_at(x, t);
        x(idx) = xi(idx) - lo_step;
        for (int t : terms) lo_val += obj.term_at(x, t);
        term_evals += 2 * static_cast<long>(terms.size());
        g(idx) = (hi_val - lo_val) / (hi_step + lo_step);
    };

    for (int k = 0; k <= N; ++k) {
        if (obj.uses_q())
            for (int i = 0; i < n; ++i) fd_var(L.q_offset(k) + i, {k});
        if (k < N && obj.uses_tau()) {
            std::vector<int> terms{k};
            if (k == N - 1 && !obj.torque_only()) terms.push_back(N);
            for (int i = 0; i < n; ++i) fd_var(L.tau_offset(k) + i, terms);
        }
    }
    return g;
}

}  // namespace

Solution solve(const NlpProblem& problem, const SolveOptions& options) {
    const auto t_start = std::chrono::steady_clock::now();
    const ObjectiveTerms obj(problem);
    const auto& lb = problem.lb;
    const auto& ub = problem.ub;
    const double tol = options.feasibility_tol;
    const double tight = std::max(1e-8, tol * 1e-2);

    Solution sol;
    Eigen::VectorXd x = clip_box(initial_guess(problem, options.seed), lb, ub);

    // Polytope-metric objectives are expensive and multimodal; warm-start
    // them from a cheap torque-minimizing pre-solve of the same problem.
    const bool polytope_objective = problem.scenario.objective == Objective::D ||
                                    problem.scenario.objective == Objective::E ||
                                    problem.scenario.objective == Objective::F;
    if (polytope_objective && options.max_iterations > 0) {
        NlpProblem pre = problem;
        pre.scenario.objective = Objective::A;
        SolveOptions pre_options = options;
        pre_options.max_iterations = std::min(options.max_iterations, 200);
        const Solution pre_sol = solve(pre, pre_options);
        if (pre_sol.converged) x = pre_sol.xi;
        sol.n_feval += pre_sol.n_feval;
        sol.n_geval += pre_sol.n_geval;
    }

    long term_evals = 0;
    auto eval_f = [&](const Eigen::VectorXd& xi) {
        ++sol.n_feval;
        return obj.full(xi);
    };

    Eigen::VectorXd c = constraint_residuals(problem, x);
    double f = eval_f(x);
    double feas = c.lpNorm<Eigen::Infinity>();

    double best_f = std::numeric_limits<double>::infinity();
    double best_tight_f = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_x = x, best_tight_x;
    double least_feas = feas;
    Eigen::VectorXd least_feas_x = x;
    bool any_feasible = false, any_tight = false;

    auto record = [&](double f_val, double feas_val, const Eigen::VectorXd& xi) {
        sol.objective_trace.push_back(reported_objective(problem, f_val));
        sol.feasibility_trace.push_back(feas_val);
        if (feas_val <= tol && f_val < best_f) {
            best_f = f_val;
            best_x = xi;
            any_feasible = true;
        }
        if (feas_val <= tight && f_val < best_tight_f) {
            best_tight_f = f_val;
            best_tight_x = xi;
            any_tight = true;
        }
        if (feas_val < least_feas) {
            least_feas = feas_val;
            least_feas_x = xi;
        }
        sol.best_feasible_trace.push_back(any_feasible ? best_f
                                                       : std::numeric_limits<double>::infinity());
    };
    record(f, feas, x);

    if (options.max_iterations == 0) {
        sol.xi = x;
        sol.converged = false;
        sol.n_feval += term_evals;
        sol.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        return sol;
    }

    // Feasibility restoration: damped Gauss-Newton on ||c||^2 with box
    // projection. Returns true when the point reaches the tight tolerance.
    auto restore = [&](Eigen::VectorXd& xr, int max_rounds) {
        double sigma = 1e-6;
        Eigen::VectorXd cr = constraint_residuals(problem, xr);
        for (int it = 0; it < max_rounds; ++it) {
            if (cr.lpNorm<Eigen::Infinity>() <= tight) return true;
            ++sol.n_geval;
            const Eigen::MatrixXd J = constraint_jacobian(problem, xr);
            Eigen::MatrixXd H = J.transpose() * J;
            H.diagonal().array() += sigma;
            const Eigen::VectorXd d = -H.ldlt().solve(J.transpose() * cr);
            double t = 1.0;
            bool ok = false;
            for (int ls = 0; ls < 40; ++ls) {
                const Eigen::VectorXd x_try = clip_box(xr + t * d, lb, ub);
                const Eigen::VectorXd c_try = constraint_residuals(problem, x_try);
                if (c_try.squaredNorm() < cr.squaredNorm() * (1.0 - 1e-8 * t)) {
                    xr = x_try;
                    cr = c_try;
                    ok = true;
                    break;
                }
                t *= 0.5;
            }
            if (ok)
                sigma = std::max(1e-8, sigma * 0.3);
            else {
                sigma *= 10.0;
                if (sigma > 1e10) return false;
            }
        }
        return constraint_residuals(problem, xr).lpNorm<Eigen::Infinity>() <= tight;
    };

    // Phase 1: get onto the constraint manifold.
    if (restore(x, 200)) {
        c = constraint_residuals(problem, x);
        feas = c.lpNorm<Eigen::Infinity>();
        f = eval_f(x);
        record(f, feas, x);
    }

    // Phase 2: feasible-path descent. Objective-gradient step projected
    // onto the null space of the constraint Jacobian, a Barzilai-Borwein
    // step length with nonmonotone backtracking, then re-restoration.
    auto projected_gradient = [&](const Eigen::VectorXd& xi) {
        const Eigen::VectorXd g =
            objective_gradient_fd(problem, xi, options.gradient_step, term_evals);
        ++sol.n_geval;
        const Eigen::MatrixXd J = constraint_jacobian(problem, xi);
        Eigen::MatrixXd JJt = J * J.transpose();
        JJt.diagonal().array() += 1e-10;
        return (g - J.transpose() * JJt.ldlt().solve(J * g)).eval();
    };

    int iters_used = static_cast<int>(sol.objective_trace.size()) - 1;
    if (feas <= tight && iters_used < options.max_iterations) {
        Eigen::VectorXd g = projected_gradient(x);
        double alpha = 1.0 / std::max(1e-6, g.lpNorm<Eigen::Infinity>());
        std::vector<double> recent{f};

        while (iters_used < options.max_iterations) {
            const double gnorm = g.lpNorm<Eigen::Infinity>();
            if (gnorm < 1e-10 * (1.0 + std::abs(f))) break;
            // Cap the raw step so restoration stays in the basin.
            const double a0 = std::min(alpha, 1.0 / gnorm);

            const double ref = *std::max_element(recent.begin(), recent.end());
            double t = 1.0;
            Eigen::VectorXd x_new;
            double f_new = 0;
            bool accepted = false;
            for (int ls = 0; ls < 40; ++ls) {
                x_new = clip_box(x - (t * a0) * g, lb, ub);
                if (restore(x_new, 30)) {
                    f_new = eval_f(x_new);
                    if (f_new <= ref - 1e-6 * t * a0 * g.squaredNorm()) {
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if (!accepted) break;

            const Eigen::VectorXd g_new = projected_gradient(x_new);
            const Eigen::VectorXd s = x_new - x;
            const Eigen::VectorXd y = g_new - g;
            const double sy = s.dot(y);
            alpha = sy > 1e-14 ? std::clamp(s.squaredNorm() / sy, 1e-8, 1e6) : 2.0 * t * a0;

            x = x_new;
            f = f_new;
            g = g_new;
            c = constraint_residuals(problem, x);
            feas = c.lpNorm<Eigen::Infinity>();
            ++iters_used;
            record(f, feas, x);
            recent.push_back(f);
            if (recent.size() > 5) recent.erase(recent.begin());
        }
    }

    if (any_tight) {
        sol.xi = best_tight_x;
        sol.converged = true;
    } else if (any_feasible) {
        sol.xi = best_x;
        sol.converged = true;
    } else {
        sol.xi = least_feas_x;
        sol.converged = false;
    }
    // Fill pre-feasibility entries of the best-feasible trace.
    double fill = std::numeric_limits<double>::quiet_NaN();
    for (auto it = sol.best_feasible_trace.rbegin(); it != sol.best_feasible_trace.rend(); ++it) {
        if (std::isfinite(*it)) fill = *it;
        else if (std::isfinite(fill)) *it = fill;
    }
    if (!std::isfinite(fill))
        for (auto& v : sol.best_feasible_trace) v = sol.objective_trace.empty() ? 0.0 : f;

    sol.n_feval += term_evals;
    sol.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return sol;
}

}  // namespace resforge

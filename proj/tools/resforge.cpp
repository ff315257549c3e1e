// Command-line front end: optimize scenarios, evaluate trajectories,
// benchmark the geometry kernel.

#include "resforge/evaluation.hpp"
#include "resforge/forcespace.hpp"
#include "resforge/geometry.hpp"
#include "resforge/io.hpp"
#include "resforge/model.hpp"
#include "resforge/transcription.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <mutex>
#include <numeric>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace resforge;

namespace {

constexpr int kExitNotConverged = 1;
constexpr int kExitInputError = 2;

int thread_cap() {
    const char* env = std::getenv("RESFORGE_THREADS");
    int cap = env ? std::atoi(env) : 0;
    if (cap <= 0) cap = static_cast<int>(std::thread::hardware_concurrency());
    return std::max(1, cap);
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw IoError("cannot create output directory: " + dir);
}

Eigen::VectorXd parse_direction(const std::string& text) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    Eigen::VectorXd d(vals.size());
    for (size_t i = 0; i < vals.size(); ++i) d(static_cast<int>(i)) = vals[i];
    if (d.norm() < 1e-12) throw IoError("--direction must be nonzero");
    return d / d.norm();
}

int cmd_optimize(const std::string& scenario_path, const std::string& out_dir,
                 bool dump_polytopes, unsigned seed) {
    const Scenario scenario = load_scenario(scenario_path);
    const NlpProblem problem = build_problem(scenario);
    ensure_dir(out_dir);

    SolveOptions options;
    options.max_iterations = scenario.solver.max_iterations;
    options.feasibility_tol = scenario.solver.feasibility_tol;
    options.gradient_step = scenario.solver.gradient_step;
    options.seed = seed;

    const Solution solution = solve(problem, options);
    const Trajectory traj = trajectory_from_solution(problem, solution);

    write_solution_json(out_dir + "/solution.json", problem, solution);
    write_trace_csv(out_dir + "/trace.csv", solution);
    write_trajectory_svg(out_dir + "/trajectory.svg", problem.model, traj);

    if (dump_polytopes) {
        ensure_dir(out_dir + "/polytopes");
        for (int k = 0; k < traj.mesh_points(); ++k) {
            const Eigen::VectorXd& tau = traj.tau[std::min<size_t>(k, traj.tau.size() - 1)];
            std::ostringstream name;
            name << out_dir << "/polytopes/point_" << k << ".txt";
            std::ofstream out(name.str());
            try {
                out << dump_polytope(
                    residual_force_polytope(problem.model, traj.q[k], tau,
                                            scenario.residual_mode));
            } catch (const InfeasibleNominalError&) {
                out << "empty\n";
            }
        }
    }

    std::cout << (solution.converged ? "converged" : "NOT converged")
              << "  objective=" << solution.objective_trace.back()
              << "  feasibility=" << solution.feasibility_trace.back()
              << "  wall=" << solution.wall_time_s << "s\n";
    return solution.converged ? 0 : kExitNotConverged;
}

int cmd_evaluate(const std::string& model_path, const std::vector<std::string>& traj_paths,
                 const std::string& out_dir, bool impulse, const std::string& direction_text,
                 double f_peak, const std::string& mode_text) {
    const RobotModel model = load_model_file(model_path);
    const ResidualMode mode = residual_mode_from_string(mode_text);

    std::vector<std::pair<std::string, Trajectory>> trajectories;
    for (const auto& path : traj_paths)
        trajectories.emplace_back(fs::path(path).stem().string(), load_trajectory(path));
    ensure_dir(out_dir);

    // Per-trajectory robustness, fanned out with deterministic ordered merge.
    std::vector<std::vector<double>> radii(trajectories.size());
    {
        const int cap = std::min<int>(thread_cap(), static_cast<int>(trajectories.size()));
        std::vector<std::thread> pool;
        std::atomic<size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mx;
        for (int t = 0; t < cap; ++t)
            pool.emplace_back([&] {
                for (size_t i = next++; i < trajectories.size(); i = next++) {
                    try {
                        radii[i] = robustness_timeseries(model, trajectories[i].second, mode);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(failure_mx);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        for (auto& th : pool) th.join();
        if (failure) std::rethrow_exception(failure);
    }

    const auto& times = trajectories.front().second.mesh_times;
    for (const auto& [label, traj] : trajectories)
        if (traj.mesh_times.size() != times.size())
            throw EvaluationError("mesh mismatch for '" + label + "'");

    std::vector<ComparisonRow> rows;
    for (size_t i = 0; i < trajectories.size(); ++i) {
        ComparisonRow row;
        row.label = trajectories[i].first;
        row.radii = std::move(radii[i]);
        row.mean_radius = std::accumulate(row.radii.begin(), row.radii.end(), 0.0) /
                          row.radii.size();
        row.min_radius = *std::min_element(row.radii.begin(), row.radii.end());
        rows.push_back(std::move(row));
    }
    std::stable_sort(rows.begin(), rows.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
        return a.mean_radius > b.mean_radius;
    });
    write_comparison_csv(out_dir + "/robustness.csv", times, rows);

    LinePlot plot;
    plot.title = "Admissible force radius";
    plot.x_label = "time [s]";
    plot.y_label = "radius [N]";
    for (const auto& row : rows) {
        PlotSeries s;
        s.label = row.label;
        s.x = times;
        s.y = row.radii;
        plot.series.push_back(std::move(s));
    }
    write_line_plot_svg(out_dir + "/robustness.svg", plot);

    if (impulse) {
        if (direction_text.empty())
            throw IoError("--impulse requires --direction");
        const Eigen::VectorXd direction = parse_direction(direction_text);
        for (size_t i = 0; i < trajectories.size(); ++i) {
            const std::string suffix =
                trajectories.size() == 1 ? "" : "_" + std::to_string(i + 1);
            const auto& traj = trajectories[i].second;
            const RobustnessReport report = impulse_torque_test(model, traj, direction, f_peak);
            write_robustness_csv(out_dir + "/impulse" + suffix + ".csv", report,
                                 traj.mesh_times);

            LinePlot tp;
            tp.title = "Normalized torque, " + trajectories[i].first;
            tp.x_label = "time [s]";
            tp.y_label = "tau / tau_lim";
            tp.h_lines = {1.0, -1.0};
            for (int j = 0; j < model.n(); ++j) {
                PlotSeries s;
                s.label = "joint " + std::to_string(j + 1);
                s.x = traj.mesh_times;
                for (const auto& row : report.tau_normalized) s.y.push_back(row(j));
                tp.series.push_back(std::move(s));
            }
            write_line_plot_svg(out_dir + "/torques" + suffix + ".svg", tp);
        }
    }
    return 0;
}

// Times `fn` `samples` times, repeating fast calls so clock resolution
// does not dominate.
struct Timing {
    double mean_us = 0;
    double std_us = 0;
};

template <typename F>
Timing bench_op(int samples, F&& fn) {
    using clock = std::chrono::steady_clock;
    // Calibrate repetitions so each sample runs ~200 us minimum.
    fn();
    int reps = 1;
    for (;;) {
        const auto t0 = clock::now();
        for (int r = 0; r < reps; ++r) fn();
        const double us = std::chrono::duration<double, std::micro>(clock::now() - t0).count();
        if (us >= 200.0 || reps >= (1 << 20)) break;
        reps *= 4;
    }
    std::vector<double> per_call(samples);
    for (int s = 0; s < samples; ++s) {
        const auto t0 = clock::now();
        for (int r = 0; r < reps; ++r) fn();
        per_call[s] =
            std::chrono::duration<double, std::micro>(clock::now() - t0).count() / reps;
    }
    Timing out;
    for (double v : per_call) out.mean_us += v;
    out.mean_us /= samples;
    for (double v : per_call) out.std_us += (v - out.mean_us) * (v - out.mean_us);
    out.std_us = samples > 1 ? std::sqrt(out.std_us / (samples - 1)) : 0.0;
    return out;
}

int cmd_bench(const std::string& model_path, int samples, const std::string& out_dir,
              unsigned seed) {
    if (samples < 1) throw IoError("--samples must be >= 1");
    const RobotModel model = load_model_file(model_path);
    ensure_dir(out_dir);

    // Random feasible states: q within limits, nominal torque at 50% of the
    // limits so residual polytopes stay nonempty.
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int n = model.n();
    const Eigen::VectorXd lim = model.tau_limits();
    std::vector<Eigen::VectorXd> qs, taus;
    for (int s = 0; s < samples; ++s) {
        Eigen::VectorXd q(n), tau(n);
        for (int i = 0; i < n; ++i) {
            q(i) = model.joints[i].q_lb +
                   unit(rng) * (model.joints[i].q_ub - model.joints[i].q_lb);
            tau(i) = (unit(rng) - 0.5) * lim(i);
        }
        qs.push_back(q);
        taus.push_back(tau);
    }
    int idx = 0;
    auto state = [&] {
        const int k = idx++ % samples;
        return std::pair<const Eigen::VectorXd&, const Eigen::VectorXd&>(qs[k], taus[k]);
    };

    Cone cone;
    cone.apex = Eigen::VectorXd::Zero(model.task_dim);
    cone.axis = Eigen::VectorXd::Zero(model.task_dim);
    cone.axis(model.task_dim - 1) = -1.0;
    cone.half_aperture = 0.35;
    cone.facets = 8;
    const HalfSpaceRep cone_h = make_cone(cone);

    volatile double sink = 0;
    std::vector<std::pair<std::string, Timing>> table;
    auto add = [&](const std::string& name, auto&& fn) {
        idx = 0;
        table.emplace_back(name, bench_op(samples, fn));
    };

    add("force_polytope", [&] { sink = sink + force_polytope(model, state().first).dim(); });
    add("residual_force_polytope", [&] {
        auto [q, tau] = state();
        sink = sink + residual_force_polytope(model, q, tau).dim();
    });
    add("inscribed_ball", [&] { sink = sink + metric_ball(model, state().first); });
    add("intersection", [&] {
        sink = sink + intersect(force_polytope(model, state().first), cone_h).dim();
    });
    add("volume", [&] { sink = sink + volume(force_polytope(model, state().first)); });
    add("g_A", [&] { sink = sink + state().second.squaredNorm(); });
    add("g_B", [&] {
        const Eigen::VectorXd r = lim - state().second;
        sink = sink + r.squaredNorm();
    });
    add("g_C", [&] { sink = sink + scaled_manipulability(model, state().first); });
    add("g_D", [&] { sink = sink + metric_ball(model, state().first); });
    add("g_E", [&] {
        auto [q, tau] = state();
        sink = sink + metric_ball(model, q, tau);
    });
    add("g_F", [&] {
        auto [q, tau] = state();
        sink = sink + metric_cone_volume(model, q, tau, cone);
    });

    std::ofstream out(out_dir + "/bench.csv");
    if (!out) throw IoError("cannot write " + out_dir + "/bench.csv");
    out << "operation,mean_us,std_us,samples\n";
    for (const auto& [name, t] : table)
        out << name << "," << t.mean_us << "," << t.std_us << "," << samples << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"resforge: residual force polytope toolkit"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir, model_path, direction_text, mode_text = "symmetric_shrink";
    std::vector<std::string> traj_paths;
    bool dump_polytopes = false, impulse = false;
    double f_peak = 350.0;
    unsigned seed = 0;
    int samples = 10;

    auto* opt = app.add_subcommand("optimize", "Solve a trajectory scenario");
    opt->add_option("scenario", scenario_path, "scenario JSON")->required();
    opt->add_option("-o,--out", out_dir, "output directory")->required();
    opt->add_flag("--dump-polytopes", dump_polytopes, "dump per-mesh-point polytopes");
    opt->add_option("--seed", seed, "random seed");

    auto* ev = app.add_subcommand("evaluate", "Robustness evaluation of trajectories");
    ev->add_option("model", model_path, "model JSON")->required();
    ev->add_option("trajectories", traj_paths, "trajectory JSON files")->required();
    ev->add_option("-o,--out", out_dir, "output directory")->required();
    ev->add_flag("--impulse", impulse, "run the impulse torque test");
    ev->add_option("--direction", direction_text, "impulse direction, comma separated");
    ev->add_option("--f-peak", f_peak, "impulse peak force [N]");
    ev->add_option("--residual-mode", mode_text, "symmetric_shrink | exact_translate");

    auto* be = app.add_subcommand("bench", "Benchmark geometry and objective evaluations");
    be->add_option("model", model_path, "model JSON")->required();
    be->add_option("--samples", samples, "timing samples")->required();
    be->add_option("-o,--out", out_dir, "output directory")->required();
    be->add_option("--seed", seed, "random seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitInputError;
    }

    try {
        if (opt->parsed()) return cmd_optimize(scenario_path, out_dir, dump_polytopes, seed);
        if (ev->parsed())
            return cmd_evaluate(model_path, traj_paths, out_dir, impulse, direction_text,
                                f_peak, mode_text);
        if (be->parsed()) return cmd_bench(model_path, samples, out_dir, seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    }
    return 0;
}

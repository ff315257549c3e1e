#pragma once

#include "resforge/evaluation.hpp"
#include "resforge/geometry.hpp"
#include "resforge/transcription.hpp"

#include <string>
#include <vector>

namespace resforge {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Solution file: mesh_times, q/v/tau arrays, traces, convergence info.
void write_solution_json(const std::string& path, const NlpProblem& problem,
                         const Solution& solution);
Trajectory load_trajectory(const std::string& path);

void write_trace_csv(const std::string& path, const Solution& solution);

// Columns: k, t, radius, tau_norm_1..n, saturated_any.
void write_robustness_csv(const std::string& path, const RobustnessReport& report,
                          const std::vector<double>& times);

// One radius column per label.
void write_comparison_csv(const std::string& path, const std::vector<double>& times,
                          const std::vector<ComparisonRow>& rows);

// Debug dump: `v x y [z]` per vertex, `h a1 a2 [a3] b` per facet.
std::string dump_polytope(const Polytope& P);

// Minimal static SVG line plot.
struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct LinePlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<PlotSeries> series;
    std::vector<double> h_lines;  // horizontal reference lines
    bool log_y = false;
};

void write_line_plot_svg(const std::string& path, const LinePlot& plot);

// Motion trace: link polylines at equally spaced mesh points for planar
// models; xy and xz projections for spatial models.
void write_trajectory_svg(const std::string& path, const RobotModel& model,
                          const Trajectory& traj);

}  // namespace resforge

#include "resforge/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace resforge {

namespace {

std::string fmt(double v) {
    if (!std::isfinite(v)) return v > 0 ? "1e308" : "-1e308";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write file: " + path);
    out << content;
}

nlohmann::json vec_to_json(const Eigen::VectorXd& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                         "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

}  // namespace

void write_solution_json(const std::string& path, const NlpProblem& problem,
                         const Solution& solution) {
    const auto& L = problem.layout;
    nlohmann::json doc;
    nlohmann::json times = nlohmann::json::array();
    nlohmann::json q = nlohmann::json::array(), v = nlohmann::json::array(),
                   tau = nlohmann::json::array();
    for (int k = 0; k <= L.segments; ++k) {
        times.push_back(k * problem.step);
        q.push_back(vec_to_json(L.q(solution.xi, k)));
        v.push_back(vec_to_json(L.v(solution.xi, k)));
        if (k < L.segments) tau.push_back(vec_to_json(L.tau(solution.xi, k)));
    }
    doc["mesh_times"] = times;
    doc["q"] = q;
    doc["v"] = v;
    doc["tau"] = tau;
    doc["objective"] = to_string(problem.scenario.objective);
    doc["objective_trace"] = solution.objective_trace;
    doc["feasibility_trace"] = solution.feasibility_trace;
    doc["converged"] = solution.converged;
    doc["wall_time_s"] = solution.wall_time_s;
    doc["n_feval"] = solution.n_feval;
    doc["n_geval"] = solution.n_geval;
    write_file(path, doc.dump(2) + "\n");
}

Trajectory load_trajectory(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trajectory file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError("trajectory parse error in " + path + ": " + e.what());
    }
    Trajectory traj;
    try {
        for (const auto& t : doc.at("mesh_times")) traj.mesh_times.push_back(t.get<double>());
        auto read_vecs = [](const nlohmann::json& arr) {
            std::vector<Eigen::VectorXd> out;
            for (const auto& row : arr) {
                Eigen::VectorXd v(row.size());
                for (size_t i = 0; i < row.size(); ++i) v(static_cast<int>(i)) = row[i].get<double>();
                out.push_back(v);
            }
            return out;
        };
        traj.q = read_vecs(doc.at("q"));
        traj.v = read_vecs(doc.at("v"));
        traj.tau = read_vecs(doc.at("tau"));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("trajectory schema error in " + path + ": " + e.what());
    }
    traj.validate();
    return traj;
}

void write_trace_csv(const std::string& path, const Solution& solution) {
    std::ostringstream ss;
    ss << "iteration,objective,feasibility\n";
    for (size_t i = 0; i < solution.objective_trace.size(); ++i)
        ss << i << "," << fmt(solution.objective_trace[i]) << ","
           << fmt(solution.feasibility_trace[i]) << "\n";
    write_file(path, ss.str());
}

void write_robustness_csv(const std::string& path, const RobustnessReport& report,
                          const std::vector<double>& times) {
    std::ostringstream ss;
    const int n = report.tau_normalized.empty() ? 0 : static_cast<int>(report.tau_normalized[0].size());
    ss << "k,t,radius";
    for (int i = 1; i <= n; ++i) ss << ",tau_norm_" << i;
    ss << ",saturated_any\n";
    for (size_t k = 0; k < report.radii.size(); ++k) {
        ss << k + 1 << "," << fmt(times[k]) << "," << fmt(report.radii[k]);
        bool any = false;
        for (int i = 0; i < n; ++i) {
            ss << "," << fmt(report.tau_normalized[k](i));
            any = any || report.saturated[k][i];
        }
        ss << "," << (any ? 1 : 0) << "\n";
    }
    write_file(path, ss.str());
}

void write_comparison_csv(const std::string& path, const std::vector<double>& times,
                          const std::vector<ComparisonRow>& rows) {
    std::ostringstream ss;
    ss << "k,t";
    for (const auto& row : rows) ss << ",radius_" << row.label;
    ss << "\n";
    for (size_t k = 0; k < times.size(); ++k) {
        ss << k + 1 << "," << fmt(times[k]);
        for (const auto& row : rows) ss << "," << fmt(row.radii[k]);
        ss << "\n";
    }
    write_file(path, ss.str());
}

std::string dump_polytope(const Polytope& P) {
    std::ostringstream ss;
    if (P.vrep)
        for (int i = 0; i < P.vrep->count(); ++i) {
            ss << "v";
            for (int j = 0; j < P.vrep->dim(); ++j) ss << " " << fmt(P.vrep->V(i, j));
            ss << "\n";
        }
    if (P.hrep)
        for (int i = 0; i < P.hrep->count(); ++i) {
            ss << "h";
            for (int j = 0; j < P.hrep->dim(); ++j) ss << " " << fmt(P.hrep->A(i, j));
            ss << " " << fmt(P.hrep->b(i)) << "\n";
        }
    return ss.str();
}

void write_line_plot_svg(const std::string& path, const LinePlot& plot) {
    const double width = 720, height = 440;
    const double ml = 70, mr = 130, mt = 40, mb = 50;

    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool first = true;
    auto ty = [&](double y) { return plot.log_y ? std::log10(std::max(y, 1e-16)) : y; };
    for (const auto& s : plot.series)
        for (size_t i = 0; i < s.x.size(); ++i) {
            const double yv = ty(s.y[i]);
            if (first) {
                xmin = xmax = s.x[i];
                ymin = ymax = yv;
                first = false;
            } else {
                xmin = std::min(xmin, s.x[i]);
                xmax = std::max(xmax, s.x[i]);
                ymin = std::min(ymin, yv);
                ymax = std::max(ymax, yv);
            }
        }
    for (double h : plot.h_lines) {
        ymin = std::min(ymin, ty(h));
        ymax = std::max(ymax, ty(h));
    }
    if (xmax - xmin < 1e-12) xmax = xmin + 1;
    if (ymax - ymin < 1e-12) ymax = ymin + 1;
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;

    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr); };
    auto py = [&](double y) { return height - mb - (ty(y) - ymin) / (ymax - ymin) * (height - mt - mb); };

    std::ostringstream ss;
    ss << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    ss << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    ss << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    ss << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
       << xml_escape(plot.title) << "</text>\n";
    // axes
    ss << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr
       << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n";
    ss << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
       << height - mb << "\" stroke=\"black\"/>\n";
    ss << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 12
       << "\" text-anchor=\"middle\" font-size=\"12\">" << xml_escape(plot.x_label) << "</text>\n";
    ss << "<text x=\"18\" y=\"" << (mt + height - mb) / 2
       << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 18 "
       << (mt + height - mb) / 2 << ")\">" << xml_escape(plot.y_label) << "</text>\n";
    ss << "<text x=\"" << ml - 6 << "\" y=\"" << height - mb + 4
       << "\" text-anchor=\"end\" font-size=\"10\">" << fmt(plot.log_y ? std::pow(10, ymin) : ymin)
       << "</text>\n";
    ss << "<text x=\"" << ml - 6 << "\" y=\"" << mt + 4 << "\" text-anchor=\"end\" font-size=\"10\">"
       << fmt(plot.log_y ? std::pow(10, ymax) : ymax) << "</text>\n";
    ss << "<text x=\"" << ml << "\" y=\"" << height - mb + 16
       << "\" text-anchor=\"middle\" font-size=\"10\">" << fmt(xmin) << "</text>\n";
    ss << "<text x=\"" << width - mr << "\" y=\"" << height - mb + 16
       << "\" text-anchor=\"middle\" font-size=\"10\">" << fmt(xmax) << "</text>\n";

    for (double h : plot.h_lines)
        ss << "<line x1=\"" << ml << "\" y1=\"" << py(h) << "\" x2=\"" << width - mr << "\" y2=\""
           << py(h) << "\" stroke=\"#d62728\" stroke-dasharray=\"4 3\"/>\n";

    for (size_t s = 0; s < plot.series.size(); ++s) {
        const auto& ser = plot.series[s];
        const char* color = kColors[s % 8];
        ss << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (size_t i = 0; i < ser.x.size(); ++i)
            ss << px(ser.x[i]) << "," << py(ser.y[i]) << " ";
        ss << "\"/>\n";
        ss << "<text x=\"" << width - mr + 10 << "\" y=\"" << mt + 16 * (s + 1)
           << "\" font-size=\"12\" fill=\"" << color << "\">" << xml_escape(ser.label)
           << "</text>\n";
    }
    ss << "</svg>\n";
    write_file(path, ss.str());
}

void write_trajectory_svg(const std::string& path, const RobotModel& model,
                          const Trajectory& traj) {
    struct Panel {
        std::string label;
        int ax, ay;
    };
    std::vector<Panel> panels;
    if (model.task_dim == 2)
        panels = {{"xy", 0, 1}};
    else
        panels = {{"xy", 0, 1}, {"xz", 0, 2}};

    const double pw = 360, ph = 360, margin = 30;
    const double width = pw * panels.size(), height = ph;

    // Bounds over all link points.
    std::vector<std::vector<Eigen::Vector3d>> chains;
    for (int k = 0; k < traj.mesh_points(); ++k)
        chains.push_back(joint_positions(model, traj.q[k]));

    std::ostringstream ss;
    ss << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    ss << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    ss << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    for (size_t p = 0; p < panels.size(); ++p) {
        const auto& panel = panels[p];
        double lo = 0, hi = 1;
        bool first = true;
        for (const auto& chain : chains)
            for (const auto& pt : chain)
                for (int a : {panel.ax, panel.ay}) {
                    if (first) {
                        lo = hi = pt(a);
                        first = false;
                    }
                    lo = std::min(lo, pt(a));
                    hi = std::max(hi, pt(a));
                }
        if (hi - lo < 1e-9) hi = lo + 1;
        const double scale = (pw - 2 * margin) / (hi - lo);
        const double x0 = p * pw;
        auto px = [&](double v) { return x0 + margin + (v - lo) * scale; };
        auto py = [&](double v) { return ph - margin - (v - lo) * scale; };

        ss << "<text x=\"" << x0 + pw / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">"
           << panel.label << "</text>\n";
        for (size_t k = 0; k < chains.size(); ++k) {
            const double shade = 0.15 + 0.7 * static_cast<double>(k) / std::max<size_t>(1, chains.size() - 1);
            const int gray = static_cast<int>(200 * (1 - shade) + 30);
            ss << "<polyline fill=\"none\" stroke=\"rgb(" << gray << "," << gray << ","
               << 255 - gray / 3 << ")\" stroke-width=\"2\" points=\"";
            for (const auto& pt : chains[k]) ss << px(pt(panel.ax)) << "," << py(pt(panel.ay)) << " ";
            ss << "\"/>\n";
        }
        // Start and final end-effector targets.
        const auto& ee0 = chains.front().back();
        const auto& ee1 = chains.back().back();
        ss << "<circle cx=\"" << px(ee0(panel.ax)) << "\" cy=\"" << py(ee0(panel.ay))
           << "\" r=\"5\" fill=\"orange\"/>\n";
        ss << "<circle cx=\"" << px(ee1(panel.ax)) << "\" cy=\"" << py(ee1(panel.ay))
           << "\" r=\"5\" fill=\"gold\"/>\n";
    }
    ss << "</svg>\n";
    write_file(path, ss.str());
}

}  // namespace resforge

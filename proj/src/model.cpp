#include "resforge/model.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace resforge {

namespace {

constexpr double kGravity = 9.81;

struct FrameCache {
    std::vector<Eigen::Matrix3d> R;  // world rotation of link i
    std::vector<Eigen::Vector3d> o;  // world position of joint i origin
    std::vector<Eigen::Vector3d> z;  // world joint axis
    Eigen::Vector3d ee;              // world end-effector position
};

FrameCache compute_frames(const RobotModel& model, const Eigen::VectorXd& q) {
    const int n = model.n();
    if (q.size() != n) throw ModelError("dimension mismatch: expected q of length " + std::to_string(n));
    FrameCache fc;
    fc.R.resize(n);
    fc.o.resize(n);
    fc.z.resize(n);
    Eigen::Matrix3d Rp = Eigen::Matrix3d::Identity();
    Eigen::Vector3d op = Eigen::Vector3d::Zero();
    for (int i = 0; i < n; ++i) {
        const Joint& j = model.joints[i];
        const Eigen::Matrix3d Rpre = Rp * j.origin_rot;
        fc.o[i] = op + Rp * j.origin_pos;
        fc.z[i] = Rpre * j.axis;
        fc.R[i] = Rpre * Eigen::AngleAxisd(q(i), j.axis).toRotationMatrix();
        Rp = fc.R[i];
        op = fc.o[i];
    }
    fc.ee = op + Rp * model.ee_pos;
    return fc;
}

Eigen::Vector3d lift_force(const RobotModel& model, const Eigen::VectorXd& f_tip) {
    if (f_tip.size() == 0) return Eigen::Vector3d::Zero();
    if (f_tip.size() != model.task_dim) throw ModelError("dimension mismatch: f_tip");
    Eigen::Vector3d f = Eigen::Vector3d::Zero();
    f.head(f_tip.size()) = f_tip;
    return f;
}

Eigen::Matrix3d rpy_to_rot(double r, double p, double y) {
    return (Eigen::AngleAxisd(y, Eigen::Vector3d::UnitZ()) *
            Eigen::AngleAxisd(p, Eigen::Vector3d::UnitY()) *
            Eigen::AngleAxisd(r, Eigen::Vector3d::UnitX()))
        .toRotationMatrix();
}

Eigen::Vector3d get_vec3(const nlohmann::json& j, const std::string& field) {
    if (!j.contains(field) || !j[field].is_array() || j[field].size() != 3)
        throw ModelError("parse error: field '" + field + "' must be an array of 3 numbers");
    return {j[field][0].get<double>(), j[field][1].get<double>(), j[field][2].get<double>()};
}

void merge_point_mass(LinkInertia& link, double mass, const Eigen::Vector3d& pos) {
    const double total = link.mass + mass;
    if (total <= 0) return;
    const Eigen::Vector3d com = (link.mass * link.com + mass * pos) / total;
    auto shift = [](double m, const Eigen::Vector3d& d) -> Eigen::Matrix3d {
        return m * (d.squaredNorm() * Eigen::Matrix3d::Identity() - d * d.transpose());
    };
    link.inertia += shift(link.mass, link.com - com) + shift(mass, pos - com);
    link.com = com;
    link.mass = total;
}

}  // namespace

Eigen::VectorXd RobotModel::tau_limits() const {
    Eigen::VectorXd t(n());
    for (int i = 0; i < n(); ++i) t(i) = joints[i].tau_lim;
    return t;
}
Eigen::VectorXd RobotModel::q_lower() const {
    Eigen::VectorXd t(n());
    for (int i = 0; i < n(); ++i) t(i) = joints[i].q_lb;
    return t;
}
Eigen::VectorXd RobotModel::q_upper() const {
    Eigen::VectorXd t(n());
    for (int i = 0; i < n(); ++i) t(i) = joints[i].q_ub;
    return t;
}
Eigen::VectorXd RobotModel::v_lower() const {
    Eigen::VectorXd t(n());
    for (int i = 0; i < n(); ++i) t(i) = joints[i].v_lb;
    return t;
}
Eigen::VectorXd RobotModel::v_upper() const {
    Eigen::VectorXd t(n());
    for (int i = 0; i < n(); ++i) t(i) = joints[i].v_ub;
    return t;
}
Eigen::Vector3d RobotModel::gravity() const {
    return task_dim == 2 ? Eigen::Vector3d(0, -kGravity, 0) : Eigen::Vector3d(0, 0, -kGravity);
}

void Rectangle::validate() const {
    if (edge_u.norm() < 1e-12 || edge_v.norm() < 1e-12)
        throw ModelError("rectangle: edges must be nonzero");
    if (std::abs(edge_u.dot(edge_v)) > 1e-9 * edge_u.norm() * edge_v.norm())
        throw ModelError("rectangle: edges must be orthogonal");
}

RobotModel load_model(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ModelError(std::string("parse error: ") + e.what());
    }

    RobotModel model;
    try {
        model.name = doc.value("name", "unnamed");
        model.task_dim = doc.at("task_dim").get<int>();
        const auto& joints = doc.at("joints");
        const auto& links = doc.at("links");
        if (!joints.is_array() || joints.empty())
            throw ModelError("validation error: 'joints' must be a non-empty array");
        if (!links.is_array() || links.size() != joints.size())
            throw ModelError("validation error: 'links' must have one entry per joint");

        for (size_t i = 0; i < joints.size(); ++i) {
            const auto& jj = joints[i];
            Joint j;
            j.parent = jj.at("parent").get<int>();
            const auto& origin = jj.at("origin");
            j.origin_pos = get_vec3(origin, "xyz");
            const Eigen::Vector3d rpy = get_vec3(origin, "rpy");
            j.origin_rot = rpy_to_rot(rpy(0), rpy(1), rpy(2));
            j.axis = get_vec3(jj, "axis");
            const auto& ql = jj.at("q_limits");
            const auto& vl = jj.at("v_limits");
            j.q_lb = ql[0].get<double>();
            j.q_ub = ql[1].get<double>();
            j.v_lb = vl[0].get<double>();
            j.v_ub = vl[1].get<double>();
            j.tau_lim = jj.at("tau_limit").get<double>();
            model.joints.push_back(j);

            const auto& ll = links[i];
            LinkInertia link;
            link.mass = ll.at("mass").get<double>();
            link.com = get_vec3(ll, "com");
            if (ll.contains("inertia")) {
                const auto& in = ll["inertia"];
                if (!in.is_array() || in.size() != 6)
                    throw ModelError("parse error: link " + std::to_string(i + 1) +
                                     ": 'inertia' must be [ixx,iyy,izz,ixy,ixz,iyz]");
                const double ixx = in[0], iyy = in[1], izz = in[2];
                const double ixy = in[3], ixz = in[4], iyz = in[5];
                link.inertia << ixx, ixy, ixz, ixy, iyy, iyz, ixz, iyz, izz;
            }
            model.links.push_back(link);
        }
        if (doc.contains("end_effector")) {
            model.ee_pos = get_vec3(doc["end_effector"], "xyz");
            const Eigen::Vector3d rpy = get_vec3(doc["end_effector"], "rpy");
            model.ee_rot = rpy_to_rot(rpy(0), rpy(1), rpy(2));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(std::string("parse error: ") + e.what());
    }

    // Validation.
    if (model.task_dim != 2 && model.task_dim != 3)
        throw ModelError("validation error: task_dim must be 2 or 3");
    for (int i = 0; i < model.n(); ++i) {
        const Joint& j = model.joints[i];
        const std::string where = "joint " + std::to_string(i + 1);
        if (j.parent != i - 1)
            throw ModelError("validation error: " + where + ": parent must be " + std::to_string(i - 1));
        if (std::abs(j.axis.norm() - 1.0) > 1e-9)
            throw ModelError("validation error: " + where + ": axis must be a unit vector");
        if (!(j.q_lb < j.q_ub))
            throw ModelError("validation error: " + where + ": q_lb must be < q_ub");
        if (!(j.v_lb < j.v_ub))
            throw ModelError("validation error: " + where + ": v_lb must be < v_ub");
        if (!(j.tau_lim > 0))
            throw ModelError("validation error: " + where + ": tau_limit must be > 0");
        const LinkInertia& l = model.links[i];
        if (l.mass < 0) throw ModelError("validation error: link " + std::to_string(i + 1) + ": mass must be >= 0");
        if ((l.inertia - l.inertia.transpose()).lpNorm<Eigen::Infinity>() > 1e-12)
            throw ModelError("validation error: link " + std::to_string(i + 1) + ": inertia must be symmetric");
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(l.inertia);
        if (es.eigenvalues().minCoeff() < -1e-10)
            throw ModelError("validation error: link " + std::to_string(i + 1) +
                             ": inertia must be positive-semidefinite");
    }
    return model;
}

RobotModel load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open model file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return load_model(ss.str());
}

RobotModel attach_payload(const RobotModel& model, double mass) {
    if (mass < 0) throw ModelError("attach_payload: mass must be >= 0");
    RobotModel out = model;
    merge_point_mass(out.links.back(), mass, model.ee_pos);
    out.payload_mass = model.payload_mass + mass;
    return out;
}

Eigen::Vector3d forward_kinematics3(const RobotModel& model, const Eigen::VectorXd& q) {
    return compute_frames(model, q).ee;
}

Eigen::VectorXd forward_kinematics(const RobotModel& model, const Eigen::VectorXd& q) {
    return compute_frames(model, q).ee.head(model.task_dim);
}

Eigen::MatrixXd jacobian3(const RobotModel& model, const Eigen::VectorXd& q) {
    const FrameCache fc = compute_frames(model, q);
    Eigen::MatrixXd J(3, model.n());
    for (int i = 0; i < model.n(); ++i) J.col(i) = fc.z[i].cross(fc.ee - fc.o[i]);
    return J;
}

Eigen::MatrixXd jacobian(const RobotModel& model, const Eigen::VectorXd& q) {
    return jacobian3(model, q).topRows(model.task_dim);
}

Eigen::VectorXd inverse_dynamics(const RobotModel& model, const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& v, const Eigen::VectorXd& vdot,
                                 const Eigen::VectorXd& f_tip) {
    const int n = model.n();
    if (v.size() != n || vdot.size() != n) throw ModelError("dimension mismatch: v/vdot");
    const FrameCache fc = compute_frames(model, q);
    const Eigen::Vector3d f_ext = lift_force(model, f_tip);

    std::vector<Eigen::Vector3d> w(n), wd(n), ao(n), ac(n), com(n);
    Eigen::Vector3d wp = Eigen::Vector3d::Zero();
    Eigen::Vector3d wdp = Eigen::Vector3d::Zero();
    Eigen::Vector3d ap = -model.gravity();  // base acceleration trick
    Eigen::Vector3d op = Eigen::Vector3d::Zero();
    for (int i = 0; i < n; ++i) {
        const Eigen::Vector3d d = fc.o[i] - op;
        const Eigen::Vector3d a_origin = ap + wdp.cross(d) + wp.cross(wp.cross(d));
        w[i] = wp + fc.z[i] * v(i);
        wd[i] = wdp + fc.z[i] * vdot(i) + wp.cross(fc.z[i] * v(i));
        ao[i] = a_origin;
        const Eigen::Vector3d r = fc.R[i] * model.links[i].com;
        com[i] = fc.o[i] + r;
        ac[i] = a_origin + wd[i].cross(r) + w[i].cross(w[i].cross(r));
        wp = w[i];
        wdp = wd[i];
        ap = a_origin;
        op = fc.o[i];
    }

    Eigen::VectorXd tau(n);
    Eigen::Vector3d f_child = Eigen::Vector3d::Zero();
    Eigen::Vector3d n_child = Eigen::Vector3d::Zero();
    Eigen::Vector3d o_child = Eigen::Vector3d::Zero();
    for (int i = n - 1; i >= 0; --i) {
        const LinkInertia& l = model.links[i];
        const Eigen::Vector3d F = l.mass * ac[i];
        const Eigen::Matrix3d Iw = fc.R[i] * l.inertia * fc.R[i].transpose();
        Eigen::Vector3d N = Iw * wd[i] + w[i].cross(Iw * w[i]);
        Eigen::Vector3d f = F;
        Eigen::Vector3d nm = N + (com[i] - fc.o[i]).cross(F);
        if (i == n - 1) {
            f -= f_ext;
            nm -= (fc.ee - fc.o[i]).cross(f_ext);
        } else {
            f += f_child;
            nm += n_child + (o_child - fc.o[i]).cross(f_child);
        }
        tau(i) = fc.z[i].dot(nm);
        f_child = f;
        n_child = nm;
        o_child = fc.o[i];
    }
    return tau;
}

Eigen::VectorXd bias_forces(const RobotModel& model, const Eigen::VectorXd& q,
                            const Eigen::VectorXd& v) {
    return inverse_dynamics(model, q, v, Eigen::VectorXd::Zero(model.n()));
}

Eigen::MatrixXd mass_matrix(const RobotModel& model, const Eigen::VectorXd& q) {
    const int n = model.n();
    const FrameCache fc = compute_frames(model, q);

    // Composite rigid bodies, built tip-to-base.
    std::vector<double> mc(n);
    std::vector<Eigen::Vector3d> cc(n);
    std::vector<Eigen::Matrix3d> Ic(n);
    for (int i = n - 1; i >= 0; --i) {
        const LinkInertia& l = model.links[i];
        mc[i] = l.mass;
        cc[i] = fc.o[i] + fc.R[i] * l.com;
        Ic[i] = fc.R[i] * l.inertia * fc.R[i].transpose();
        if (i + 1 < n) {
            const double total = mc[i] + mc[i + 1];
            const Eigen::Vector3d com =
                total > 0 ? Eigen::Vector3d((mc[i] * cc[i] + mc[i + 1] * cc[i + 1]) / total)
                          : cc[i];
            auto shift = [](double m, const Eigen::Vector3d& d) -> Eigen::Matrix3d {
                return m * (d.squaredNorm() * Eigen::Matrix3d::Identity() - d * d.transpose());
            };
            Ic[i] = Ic[i] + shift(mc[i], cc[i] - com) + Ic[i + 1] + shift(mc[i + 1], cc[i + 1] - com);
            cc[i] = com;
            mc[i] = total;
        }
    }

    Eigen::MatrixXd M(n, n);
    for (int j = 0; j < n; ++j) {
        const Eigen::Vector3d r = cc[j] - fc.o[j];
        const Eigen::Vector3d F = mc[j] * fc.z[j].cross(r);
        const Eigen::Vector3d N = Ic[j] * fc.z[j] + r.cross(F);
        for (int i = 0; i <= j; ++i) {
            M(i, j) = fc.z[i].dot(N + (fc.o[j] - fc.o[i]).cross(F));
            M(j, i) = M(i, j);
        }
    }
    return M;
}

Eigen::VectorXd forward_dynamics(const RobotModel& model, const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& v, const Eigen::VectorXd& tau,
                                 const Eigen::VectorXd& f_tip) {
    const int n = model.n();
    if (tau.size() != n) throw ModelError("dimension mismatch: tau");
    const Eigen::MatrixXd M = mass_matrix(model, q);
    Eigen::VectorXd rhs = tau - bias_forces(model, q, v);
    if (f_tip.size() > 0) rhs += jacobian(model, q).transpose() * f_tip;
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() != Eigen::Success)
        throw ModelError("forward_dynamics: singular mass matrix (zero-mass links?)");
    return llt.solve(rhs);
}

State euler_step(const RobotModel& model, const State& x, const Eigen::VectorXd& tau, double h) {
    if (h < 0) throw ModelError("euler_step: negative step");
    State out;
    out.q = x.q + h * x.v;
    out.v = x.v + h * forward_dynamics(model, x.q, x.v, tau);
    return out;
}

double potential_energy(const RobotModel& model, const Eigen::VectorXd& q) {
    const FrameCache fc = compute_frames(model, q);
    const Eigen::Vector3d g = model.gravity();
    double pe = 0;
    for (int i = 0; i < model.n(); ++i) {
        const Eigen::Vector3d com = fc.o[i] + fc.R[i] * model.links[i].com;
        pe -= model.links[i].mass * g.dot(com);
    }
    return pe;
}

std::vector<Eigen::Vector3d> joint_positions(const RobotModel& model, const Eigen::VectorXd& q) {
    const FrameCache fc = compute_frames(model, q);
    std::vector<Eigen::Vector3d> pts = fc.o;
    pts.push_back(fc.ee);
    return pts;
}

Eigen::Vector3d closest_point_on_rectangle(const Rectangle& rect, const Eigen::Vector3d& p) {
    const Eigen::Vector3d d = p - rect.corner;
    const double a = std::clamp(d.dot(rect.edge_u) / rect.edge_u.squaredNorm(), 0.0, 1.0);
    const double b = std::clamp(d.dot(rect.edge_v) / rect.edge_v.squaredNorm(), 0.0, 1.0);
    return rect.corner + a * rect.edge_u + b * rect.edge_v;
}

double distance_to_rectangle(const Rectangle& rect, const Eigen::Vector3d& p) {
    return (p - closest_point_on_rectangle(rect, p)).norm();
}

}  // namespace resforge

#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace resforge {

struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Revolute joint attached to its parent link by a fixed origin transform.
struct Joint {
    int parent = -1;             // parent joint index; -1 is the base
    Eigen::Matrix3d origin_rot = Eigen::Matrix3d::Identity();
    Eigen::Vector3d origin_pos = Eigen::Vector3d::Zero();
    Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();  // unit, in the joint frame
    double q_lb = 0, q_ub = 0;   // rad
    double v_lb = 0, v_ub = 0;   // rad/s
    double tau_lim = 0;          // N*m, symmetric
};

struct LinkInertia {
    double mass = 0;                                  // kg
    Eigen::Vector3d com = Eigen::Vector3d::Zero();    // m, in the link frame
    Eigen::Matrix3d inertia = Eigen::Matrix3d::Zero();  // about the CoM
};

struct RobotModel {
    std::string name;
    int task_dim = 3;  // 2 or 3
    std::vector<Joint> joints;
    std::vector<LinkInertia> links;
    Eigen::Matrix3d ee_rot = Eigen::Matrix3d::Identity();
    Eigen::Vector3d ee_pos = Eigen::Vector3d::Zero();
    double payload_mass = 0;  // point mass already merged into the last link

    int n() const { return static_cast<int>(joints.size()); }
    Eigen::VectorXd tau_limits() const;
    Eigen::VectorXd q_lower() const;
    Eigen::VectorXd q_upper() const;
    Eigen::VectorXd v_lower() const;
    Eigen::VectorXd v_upper() const;
    Eigen::Vector3d gravity() const;  // -y for planar models, -z for spatial
};

struct State {
    Eigen::VectorXd q;
    Eigen::VectorXd v;
};

// Bounded rectangle in 3-D space: corner + a*edge_u + b*edge_v, a,b in [0,1].
struct Rectangle {
    Eigen::Vector3d corner = Eigen::Vector3d::Zero();
    Eigen::Vector3d edge_u = Eigen::Vector3d::UnitX();
    Eigen::Vector3d edge_v = Eigen::Vector3d::UnitY();

    void validate() const;
    Eigen::Vector3d normal() const { return edge_u.cross(edge_v).normalized(); }
};

RobotModel load_model(const std::string& text);
RobotModel load_model_file(const std::string& path);

// Returns a copy whose last-link dynamics include a point mass rigidly
// attached at the end-effector frame. Kinematics unchanged.
RobotModel attach_payload(const RobotModel& model, double mass);

// End-effector position; (x, y) components for task_dim == 2.
Eigen::VectorXd forward_kinematics(const RobotModel& model, const Eigen::VectorXd& q);
Eigen::Vector3d forward_kinematics3(const RobotModel& model, const Eigen::VectorXd& q);

// Linear-velocity Jacobian, task_dim x n.
Eigen::MatrixXd jacobian(const RobotModel& model, const Eigen::VectorXd& q);
Eigen::MatrixXd jacobian3(const RobotModel& model, const Eigen::VectorXd& q);

// Composite-rigid-body mass matrix.
Eigen::MatrixXd mass_matrix(const RobotModel& model, const Eigen::VectorXd& q);

// Coriolis, centrifugal, and gravity terms (recursive Newton-Euler with
// zero joint acceleration).
Eigen::VectorXd bias_forces(const RobotModel& model, const Eigen::VectorXd& q,
                            const Eigen::VectorXd& v);

// tau = M(q) vdot + h(q, v) - J^T f_tip
Eigen::VectorXd inverse_dynamics(const RobotModel& model, const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& v, const Eigen::VectorXd& vdot,
                                 const Eigen::VectorXd& f_tip = Eigen::VectorXd());

// Solves M vdot = tau + J^T f_tip - h.
Eigen::VectorXd forward_dynamics(const RobotModel& model, const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& v, const Eigen::VectorXd& tau,
                                 const Eigen::VectorXd& f_tip = Eigen::VectorXd());

State euler_step(const RobotModel& model, const State& x, const Eigen::VectorXd& tau, double h);

// Gravitational potential energy (zero level at the base frame origin).
double potential_energy(const RobotModel& model, const Eigen::VectorXd& q);

// World positions of every joint origin plus the end-effector (n + 1 points).
std::vector<Eigen::Vector3d> joint_positions(const RobotModel& model, const Eigen::VectorXd& q);

double distance_to_rectangle(const Rectangle& rect, const Eigen::Vector3d& p);
Eigen::Vector3d closest_point_on_rectangle(const Rectangle& rect, const Eigen::Vector3d& p);

}  // namespace resforge

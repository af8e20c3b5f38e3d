#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "honeypot/keyvalue.hpp"
#include "honeypot/timeseries.hpp"

namespace honeypot::sim {

using Matrix4 = Eigen::Matrix<double, 4, 4>;
using Matrix42 = Eigen::Matrix<double, 4, 2>;
using Matrix24 = Eigen::Matrix<double, 2, 4>;
using Vector4 = Eigen::Vector4d;
using Vector2 = Eigen::Vector2d;

/// Two-axis fan-driven beam. The mechanical state vector used by the linear
/// model and the controller is x = (pitch, yaw, pitch_dot, yaw_dot).
struct PlantState {
    double pitch = 0.0, yaw = 0.0;
    double pitch_dot = 0.0, yaw_dot = 0.0;
    double s0 = 0.0, s1 = 0.0;  // fan speeds, rpm
    double i0 = 0.0, i1 = 0.0;  // motor currents, A

    Vector4 mechanical() const { return {pitch, yaw, pitch_dot, yaw_dot}; }
    bool operator==(const PlantState&) const = default;
};

/// Physical constants of the plant and the controller weights. The defaults
/// are invented but fixed; config/plant.conf carries the same values.
struct PlantParams {
    double pitch_inertia = 0.0215;   // kg m^2
    double yaw_inertia = 0.1600;     // kg m^2
    double pitch_damping = 0.0071;   // N m s/rad
    double yaw_damping = 0.0220;     // N m s/rad
    double yaw_friction = 0.2000;    // extra viscous friction of the yaw bearing, N m s/rad

    // Torque per volt: rows pitch/yaw, columns fan 0/fan 1.
    double k_pitch_u0 = 0.0060, k_pitch_u1 = 0.0030;
    double k_yaw_u0 = -0.0100, k_yaw_u1 = 0.0120;

    double current_gain = 0.033;   // A per |V| at steady state
    double current_tau = 0.010;    // s
    double speed_gain = 180.0;     // rpm per |V| at steady state
    double speed_tau = 0.120;      // s

    // LQR weights, diagonal.
    Vector4 q_diag{120.0, 120.0, 2.0, 30.0};
    Vector2 r_diag{0.01, 0.01};

    double angle_quantization = 2.0 * 3.14159265358979323846 / 2048.0;  // rad per encoder count
    double voltage_ripple_std = 1.2;                                    // V
    double ripple_cutoff_hz = 40.0;
    double control_rate_hz = 500.0;

    Matrix4 state_matrix() const;
    Matrix42 input_matrix() const;
    Matrix4 q_matrix() const { return q_diag.asDiagonal(); }
    Eigen::Matrix2d r_matrix() const { return r_diag.asDiagonal(); }
};

struct SequenceStep {
    double target_yaw = 0.0;
    double target_pitch = 0.0;
    double duration = 1.0;
};

/// Cyclic list of target poses.
struct SequenceSchedule {
    std::vector<SequenceStep> steps;

    double cycle_duration() const;
    /// Step active at time t (cycled).
    const SequenceStep& at(double t) const;
    /// Start time of every step in the first cycle.
    std::vector<double> step_starts() const;

    /// Four pick-and-place style poses, 20 s per cycle.
    static SequenceSchedule default_cycle();
};

class SimError : public std::runtime_error {
public:
    enum class Kind { NoConvergence, InvalidArgument };
    SimError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Continuous-time LQR gain from the steady state of the Riccati differential
/// equation, integrated until the Frobenius norm of dP/dt drops below 1e-10.
/// Works for any state/input dimension.
Eigen::MatrixXd lqr_gain(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& q,
                         const Eigen::MatrixXd& r, long max_steps = 1'000'000);

/// Stabilizing Riccati solution P alongside K.
struct LqrSolution {
    Eigen::MatrixXd p;
    Eigen::MatrixXd k;
    long steps = 0;
};
LqrSolution solve_lqr(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& q,
                      const Eigen::MatrixXd& r, long max_steps = 1'000'000);

Matrix24 plant_gain(const PlantParams& params);

/// Saturated state feedback u = clamp(-K (x - x_ref), -24, 24).
Vector2 controller_step(const PlantState& state, double target_yaw, double target_pitch, const Matrix24& gain);

/// One RK4 step with the voltages held constant; dt in (0, 0.01].
PlantState plant_step(const PlantState& state, const Vector2& voltages, double dt, const PlantParams& params);

/// Right-hand side of the full 8-dimensional model, exposed for integrator checks.
PlantState plant_derivative(const PlantState& state, const Vector2& voltages, const PlantParams& params);

/// Closed-loop run producing floor(duration * rate_hz) frames.
ts::Dataset run_cycle(const PlantParams& params, const SequenceSchedule& schedule, double duration,
                      double rate_hz, std::uint64_t noise_seed);

/// Plant and schedule from a key=value config. Missing keys keep defaults;
/// `step = yaw pitch duration` lines replace the default schedule.
std::pair<PlantParams, SequenceSchedule> load_sim_config(const KeyValueFile& kv);
std::pair<PlantParams, SequenceSchedule> load_sim_config(const std::filesystem::path& path);
KeyValueFile to_config(const PlantParams& params, const SequenceSchedule& schedule);

}  // namespace honeypot::sim

#include "honeypot/sim/plant.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "honeypot/rng.hpp"

namespace honeypot::sim {

Matrix4 PlantParams::state_matrix() const {
    Matrix4 a = Matrix4::Zero();
    a(0, 2) = 1.0;
    a(1, 3) = 1.0;
    a(2, 2) = -pitch_damping / pitch_inertia;
    a(3, 3) = -(yaw_damping + yaw_friction) / yaw_inertia;
    return a;
}

Matrix42 PlantParams::input_matrix() const {
    Matrix42 b = Matrix42::Zero();
    b(2, 0) = k_pitch_u0 / pitch_inertia;
    b(2, 1) = k_pitch_u1 / pitch_inertia;
    b(3, 0) = k_yaw_u0 / yaw_inertia;
    b(3, 1) = k_yaw_u1 / yaw_inertia;
    return b;
}

double SequenceSchedule::cycle_duration() const {
    double total = 0.0;
    for (const auto& s : steps) total += s.duration;
    return total;
}

const SequenceStep& SequenceSchedule::at(double t) const {
    const double cycle = cycle_duration();
    double tau = std::fmod(t, cycle);
    if (tau < 0) tau += cycle;
    for (const auto& s : steps) {
        if (tau < s.duration) return s;
        tau -= s.duration;
    }
    return steps.back();
}

std::vector<double> SequenceSchedule::step_starts() const {
    std::vector<double> starts;
    double t = 0.0;
    for (const auto& s : steps) {
        starts.push_back(t);
        t += s.duration;
    }
    return starts;
}

SequenceSchedule SequenceSchedule::default_cycle() {
    return {{{0.60, 0.25, 5.5}, {-0.40, 0.10, 4.5}, {-0.70, -0.30, 5.0}, {0.20, -0.15, 5.0}}};
}

LqrSolution solve_lqr(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& q,
                      const Eigen::MatrixXd& r, long max_steps) {
    const auto n = a.rows();
    if (a.cols() != n || b.rows() != n || q.rows() != n || q.cols() != n || r.rows() != b.cols() ||
        r.cols() != b.cols()) {
        throw SimError(SimError::Kind::InvalidArgument, "lqr: inconsistent matrix shapes");
    }
    const Eigen::MatrixXd r_inv = r.inverse();
    const Eigen::MatrixXd s = b * r_inv * b.transpose();
    const auto rhs = [&](const Eigen::MatrixXd& p) -> Eigen::MatrixXd {
        return a.transpose() * p + p * a - p * s * p + q;
    };

    // Backward-time integration of the Riccati ODE from P = 0. The step size
    // shrinks whenever an attempt diverges.
    double h = 0.01;
    long used = 0;
    for (int attempt = 0; attempt < 30; ++attempt, h *= 0.5) {
        Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
        bool diverged = false;
        for (long step = 0; used < max_steps; ++step, ++used) {
            const Eigen::MatrixXd k1 = rhs(p);
            const double norm = k1.norm();
            if (!std::isfinite(norm) || norm > 1e15) {
                diverged = true;
                break;
            }
            if (norm < 1e-10) {
                p = 0.5 * (p + p.transpose());
                return {p, r_inv * b.transpose() * p, used};
            }
            const Eigen::MatrixXd k2 = rhs(p + 0.5 * h * k1);
            const Eigen::MatrixXd k3 = rhs(p + 0.5 * h * k2);
            const Eigen::MatrixXd k4 = rhs(p + h * k3);
            p += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        if (!diverged) break;
    }
    throw SimError(SimError::Kind::NoConvergence, "lqr: Riccati integration did not converge");
}

Eigen::MatrixXd lqr_gain(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& q,
                         const Eigen::MatrixXd& r, long max_steps) {
    return solve_lqr(a, b, q, r, max_steps).k;
}

Matrix24 plant_gain(const PlantParams& params) {
    return lqr_gain(params.state_matrix(), params.input_matrix(), params.q_matrix(), params.r_matrix());
}

Vector2 controller_step(const PlantState& state, double target_yaw, double target_pitch, const Matrix24& gain) {
    const Vector4 reference{target_pitch, target_yaw, 0.0, 0.0};
    Vector2 u = -gain * (state.mechanical() - reference);
    for (int k = 0; k < 2; ++k) u[k] = std::clamp(u[k], -ts::kVoltageLimit, ts::kVoltageLimit);
    return u;
}

PlantState plant_derivative(const PlantState& x, const Vector2& u, const PlantParams& p) {
    const Vector4 mech = p.state_matrix() * x.mechanical() + p.input_matrix() * u;
    PlantState d;
    d.pitch = mech[0];
    d.yaw = mech[1];
    d.pitch_dot = mech[2];
    d.yaw_dot = mech[3];
    d.i0 = (p.current_gain * std::abs(u[0]) - x.i0) / p.current_tau;
    d.i1 = (p.current_gain * std::abs(u[1]) - x.i1) / p.current_tau;
    d.s0 = (p.speed_gain * std::abs(u[0]) - x.s0) / p.speed_tau;
    d.s1 = (p.speed_gain * std::abs(u[1]) - x.s1) / p.speed_tau;
    return d;
}

namespace {

PlantState axpy(const PlantState& x, double h, const PlantState& d) {
    return {x.pitch + h * d.pitch, x.yaw + h * d.yaw, x.pitch_dot + h * d.pitch_dot, x.yaw_dot + h * d.yaw_dot,
            x.s0 + h * d.s0,       x.s1 + h * d.s1,   x.i0 + h * d.i0,               x.i1 + h * d.i1};
}

}  // namespace

PlantState plant_step(const PlantState& state, const Vector2& voltages, double dt, const PlantParams& params) {
    if (!(dt > 0.0 && dt <= 0.01)) throw SimError(SimError::Kind::InvalidArgument, "plant_step: dt must be in (0, 0.01]");
    const auto k1 = plant_derivative(state, voltages, params);
    const auto k2 = plant_derivative(axpy(state, 0.5 * dt, k1), voltages, params);
    const auto k3 = plant_derivative(axpy(state, 0.5 * dt, k2), voltages, params);
    const auto k4 = plant_derivative(axpy(state, dt, k3), voltages, params);
    auto next = axpy(state, dt / 6.0, k1);
    next = axpy(next, dt / 3.0, k2);
    next = axpy(next, dt / 3.0, k3);
    next = axpy(next, dt / 6.0, k4);
    return next;
}

ts::Dataset run_cycle(const PlantParams& params, const SequenceSchedule& schedule, double duration, double rate_hz,
                      std::uint64_t noise_seed) {
    if (!(duration > 0.0) || !(rate_hz > 0.0)) {
        throw SimError(SimError::Kind::InvalidArgument, "run_cycle: duration and rate must be positive");
    }
    if (schedule.steps.empty()) throw SimError(SimError::Kind::InvalidArgument, "run_cycle: empty schedule");
    for (const auto& s : schedule.steps) {
        if (!(s.duration > 0.0)) throw SimError(SimError::Kind::InvalidArgument, "run_cycle: step durations must be > 0");
    }

    const Matrix24 gain = plant_gain(params);
    const auto frames = static_cast<std::size_t>(std::floor(duration * rate_hz + 1e-9));
    const double sample_dt = 1.0 / rate_hz;
    const double max_sub = std::min(0.01, 1.0 / params.control_rate_hz);
    const auto substeps = static_cast<int>(std::ceil(sample_dt / max_sub - 1e-9));
    const double dt = sample_dt / substeps;

    // Band-limited ripple: AR(1) filtered uniform noise with stationary std voltage_ripple_std.
    const double alpha = std::exp(-2.0 * 3.14159265358979323846 * params.ripple_cutoff_hz * dt);
    const double innovation = std::sqrt(1.0 - alpha * alpha) * std::sqrt(3.0) * params.voltage_ripple_std;
    const double q = params.angle_quantization;

    Rng rng(noise_seed);
    Vector2 ripple = Vector2::Zero();
    PlantState state;

    ts::Dataset out;
    out.rate_hz = rate_hz;
    out.frames.reserve(frames);
    for (std::size_t i = 0; i < frames; ++i) {
        const double t = static_cast<double>(i) / rate_hz;
        const auto& target = schedule.at(t);

        ts::SampleFrame frame;
        frame.t = t;
        frame.target_yaw = target.target_yaw;
        frame.target_pitch = target.target_pitch;
        frame.yaw = state.yaw + rng.uniform(-0.5, 0.5) * q;
        frame.pitch = state.pitch + rng.uniform(-0.5, 0.5) * q;
        frame.yaw_dot = state.yaw_dot;
        frame.pitch_dot = state.pitch_dot;
        frame.i0 = state.i0;
        frame.i1 = state.i1;
        frame.s0 = state.s0;
        frame.s1 = state.s1;

        PlantState measured = state;
        measured.yaw = frame.yaw;
        measured.pitch = frame.pitch;
        for (int s = 0; s < substeps; ++s) {
            if (s > 0) {
                measured = state;
                measured.yaw += rng.uniform(-0.5, 0.5) * q;
                measured.pitch += rng.uniform(-0.5, 0.5) * q;
            }
            for (int k = 0; k < 2; ++k) ripple[k] = alpha * ripple[k] + innovation * rng.uniform(-1.0, 1.0);
            Vector2 u = controller_step(measured, target.target_yaw, target.target_pitch, gain) + ripple;
            for (int k = 0; k < 2; ++k) u[k] = std::clamp(u[k], -ts::kVoltageLimit, ts::kVoltageLimit);
            if (s == 0) {
                frame.u0 = u[0];
                frame.u1 = u[1];
            }
            state = plant_step(state, u, dt, params);
        }
        out.frames.push_back(frame);
    }
    return out;
}

std::pair<PlantParams, SequenceSchedule> load_sim_config(const KeyValueFile& kv) {
    PlantParams p;
    auto read = [&](const char* key, double& field) { field = kv.get_double(key, field); };
    read("pitch_inertia", p.pitch_inertia);
    read("yaw_inertia", p.yaw_inertia);
    read("pitch_damping", p.pitch_damping);
    read("yaw_damping", p.yaw_damping);
    read("yaw_friction", p.yaw_friction);
    read("k_pitch_u0", p.k_pitch_u0);
    read("k_pitch_u1", p.k_pitch_u1);
    read("k_yaw_u0", p.k_yaw_u0);
    read("k_yaw_u1", p.k_yaw_u1);
    read("current_gain", p.current_gain);
    read("current_tau", p.current_tau);
    read("speed_gain", p.speed_gain);
    read("speed_tau", p.speed_tau);
    read("q_pitch", p.q_diag[0]);
    read("q_yaw", p.q_diag[1]);
    read("q_pitch_dot", p.q_diag[2]);
    read("q_yaw_dot", p.q_diag[3]);
    read("r_u0", p.r_diag[0]);
    read("r_u1", p.r_diag[1]);
    read("angle_quantization", p.angle_quantization);
    read("voltage_ripple_std", p.voltage_ripple_std);
    read("ripple_cutoff_hz", p.ripple_cutoff_hz);
    read("control_rate_hz", p.control_rate_hz);

    if (!(p.pitch_inertia > 0 && p.yaw_inertia > 0 && p.current_tau > 0 && p.speed_tau > 0 &&
          p.control_rate_hz > 0 && p.r_diag.minCoeff() > 0 && p.q_diag.minCoeff() >= 0)) {
        throw ConfigError("plant config: inertias, time constants, rates and R must be positive; Q non-negative");
    }

    SequenceSchedule schedule = SequenceSchedule::default_cycle();
    const auto steps = kv.get_all("step");
    if (!steps.empty()) {
        schedule.steps.clear();
        for (const auto& line : steps) {
            std::istringstream in(line);
            std::string yaw, pitch, dur, extra;
            if (!(in >> yaw >> pitch >> dur) || (in >> extra)) {
                throw ConfigError("step: expected 'yaw pitch duration', got '" + line + "'");
            }
            SequenceStep s{parse_double(yaw), parse_double(pitch), parse_double(dur)};
            if (!(s.duration > 0)) throw ConfigError("step: duration must be > 0");
            schedule.steps.push_back(s);
        }
    }
    return {p, schedule};
}

std::pair<PlantParams, SequenceSchedule> load_sim_config(const std::filesystem::path& path) {
    return load_sim_config(KeyValueFile::load(path));
}

KeyValueFile to_config(const PlantParams& p, const SequenceSchedule& schedule) {
    KeyValueFile kv;
    auto put = [&](const char* key, double v) { kv.add(key, ts::format_double(v)); };
    put("pitch_inertia", p.pitch_inertia);
    put("yaw_inertia", p.yaw_inertia);
    put("pitch_damping", p.pitch_damping);
    put("yaw_damping", p.yaw_damping);
    put("yaw_friction", p.yaw_friction);
    put("k_pitch_u0", p.k_pitch_u0);
    put("k_pitch_u1", p.k_pitch_u1);
    put("k_yaw_u0", p.k_yaw_u0);
    put("k_yaw_u1", p.k_yaw_u1);
    put("current_gain", p.current_gain);
    put("current_tau", p.current_tau);
    put("speed_gain", p.speed_gain);
    put("speed_tau", p.speed_tau);
    put("q_pitch", p.q_diag[0]);
    put("q_yaw", p.q_diag[1]);
    put("q_pitch_dot", p.q_diag[2]);
    put("q_yaw_dot", p.q_diag[3]);
    put("r_u0", p.r_diag[0]);
    put("r_u1", p.r_diag[1]);
    put("angle_quantization", p.angle_quantization);
    put("voltage_ripple_std", p.voltage_ripple_std);
    put("ripple_cutoff_hz", p.ripple_cutoff_hz);
    put("control_rate_hz", p.control_rate_hz);
    for (const auto& s : schedule.steps) {
        kv.add("step", ts::format_double(s.target_yaw) + " " + ts::format_double(s.target_pitch) + " " +
                           ts::format_double(s.duration));
    }
    return kv;
}

}  // namespace honeypot::sim

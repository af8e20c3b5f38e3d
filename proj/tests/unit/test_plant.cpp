#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include <Eigen/Eigenvalues>

#include "honeypot/sim/plant.hpp"

using namespace honeypot;
using namespace honeypot::sim;

namespace {

// Stabilizing Riccati solution from the stable invariant subspace of the
// Hamiltonian matrix: P = U21 * inv(U11).
Eigen::MatrixXd care_by_hamiltonian(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& q,
                                    const Eigen::MatrixXd& r) {
    const auto n = a.rows();
    Eigen::MatrixXd h(2 * n, 2 * n);
    h << a, -b * r.inverse() * b.transpose(), -q, -a.transpose();
    Eigen::EigenSolver<Eigen::MatrixXd> es(h);
    Eigen::MatrixXcd u(2 * n, n);
    Eigen::Index col = 0;
    for (Eigen::Index k = 0; k < 2 * n; ++k) {
        if (es.eigenvalues()[k].real() < 0) u.col(col++) = es.eigenvectors().col(k);
    }
    EXPECT_EQ(col, n);
    const Eigen::MatrixXcd p = u.bottomRows(n) * u.topRows(n).inverse();
    return p.real();
}

double care_residual(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& q,
                     const Eigen::MatrixXd& r, const Eigen::MatrixXd& p) {
    return (a.transpose() * p + p * a - p * b * r.inverse() * b.transpose() * p + q).norm();
}

PlantState euler(PlantState x, const Vector2& u, double duration, int steps, const PlantParams& p) {
    const double h = duration / steps;
    for (int k = 0; k < steps; ++k) {
        const auto d = plant_derivative(x, u, p);
        x.pitch += h * d.pitch;
        x.yaw += h * d.yaw;
        x.pitch_dot += h * d.pitch_dot;
        x.yaw_dot += h * d.yaw_dot;
        x.s0 += h * d.s0;
        x.s1 += h * d.s1;
        x.i0 += h * d.i0;
        x.i1 += h * d.i1;
    }
    return x;
}

}  // namespace

TEST(Lqr, DoubleIntegratorClosedForm) {
    Eigen::MatrixXd a(2, 2), b(2, 1), q = Eigen::MatrixXd::Identity(2, 2), r(1, 1);
    a << 0, 1, 0, 0;
    b << 0, 1;
    r << 1;
    const auto k = lqr_gain(a, b, q, r);
    ASSERT_EQ(k.rows(), 1);
    ASSERT_EQ(k.cols(), 2);
    EXPECT_NEAR(k(0, 0), 1.0, 1e-6);
    EXPECT_NEAR(k(0, 1), std::sqrt(3.0), 1e-6);
}

TEST(Lqr, ScalarClosedForm) {
    // p = (a r + sqrt(a^2 r^2 + b^2 q r)) / b^2, k = b p / r
    for (double av : {0.0, 1.0, -2.0}) {
        for (double qv : {1.0, 4.0}) {
            const double bv = 1.5, rv = 0.5;
            Eigen::MatrixXd a(1, 1), b(1, 1), q(1, 1), r(1, 1);
            a << av;
            b << bv;
            q << qv;
            r << rv;
            const double p = (av * rv + std::sqrt(av * av * rv * rv + bv * bv * qv * rv)) / (bv * bv);
            const auto sol = solve_lqr(a, b, q, r);
            EXPECT_NEAR(sol.p(0, 0), p, 1e-7 * std::max(1.0, p));
            EXPECT_NEAR(sol.k(0, 0), bv * p / rv, 1e-7 * std::max(1.0, p));
        }
    }
}

TEST(Lqr, PlantGainMatchesHamiltonianSolution) {
    const PlantParams params;
    const Eigen::MatrixXd a = params.state_matrix(), b = params.input_matrix();
    const Eigen::MatrixXd q = params.q_matrix(), r = params.r_matrix();
    const auto expected_p = care_by_hamiltonian(a, b, q, r);
    const auto sol = solve_lqr(a, b, q, r);
    EXPECT_LT((sol.p - expected_p).norm(), 1e-6 * expected_p.norm());
    EXPECT_LT(care_residual(a, b, q, r, sol.p), 1e-6 * q.norm());
    const Eigen::MatrixXd expected_k = r.inverse() * b.transpose() * expected_p;
    EXPECT_LT((Eigen::MatrixXd(plant_gain(params)) - expected_k).norm(), 1e-6 * expected_k.norm());

    const Eigen::MatrixXd closed = a - b * sol.k;
    Eigen::EigenSolver<Eigen::MatrixXd> es(closed);
    for (Eigen::Index i = 0; i < closed.rows(); ++i) EXPECT_LT(es.eigenvalues()[i].real(), 0.0);
}

TEST(Lqr, RandomSystemsSatisfyRiccati) {
    std::srand(7);
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::MatrixXd a = Eigen::MatrixXd::Random(3, 3) * 0.5;
        const Eigen::MatrixXd b = Eigen::MatrixXd::Random(3, 2);
        const Eigen::MatrixXd m = Eigen::MatrixXd::Random(3, 3);
        const Eigen::MatrixXd q = m * m.transpose() + Eigen::MatrixXd::Identity(3, 3);
        const Eigen::MatrixXd r = Eigen::MatrixXd::Identity(2, 2) * 0.7;
        const auto sol = solve_lqr(a, b, q, r);
        const auto expected = care_by_hamiltonian(a, b, q, r);
        EXPECT_LT((sol.p - expected).norm(), 1e-6 * expected.norm()) << "trial " << trial;
    }
}

TEST(Lqr, RejectsBadShapes) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2), b = Eigen::MatrixXd::Zero(3, 1);
    EXPECT_THROW(lqr_gain(a, b, Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(1, 1)), SimError);
}

TEST(Plant, Rk4AgreesWithFineEuler) {
    const PlantParams p;
    PlantState x;
    x.pitch = 0.2;
    x.yaw = -0.3;
    x.pitch_dot = 0.5;
    x.yaw_dot = -0.1;
    x.s0 = 1500;
    x.s1 = -800;
    x.i0 = 0.3;
    x.i1 = -0.2;
    const Vector2 u(12.0, -7.0);
    const auto rk = plant_step(x, u, 0.002, p);
    const auto reference = euler(x, u, 0.002, 200000, p);
    const auto d_rk = std::array{rk.pitch, rk.yaw, rk.pitch_dot, rk.yaw_dot, rk.s0, rk.s1, rk.i0, rk.i1};
    const auto d_ref = std::array{reference.pitch,  reference.yaw, reference.pitch_dot, reference.yaw_dot,
                                  reference.s0,     reference.s1,  reference.i0,        reference.i1};
    // the fastest mode is the 10 ms current lag: at dt/tau = 0.2 one RK4 step
    // carries a relative truncation error of about 0.2^5 / 120 = 2.7e-6
    for (std::size_t k = 0; k < d_rk.size(); ++k) {
        EXPECT_NEAR(d_rk[k], d_ref[k], 1e-5 * std::max(1.0, std::abs(d_ref[k]))) << "component " << k;
    }
    EXPECT_THROW(plant_step(x, u, 0.0, p), SimError);
    EXPECT_THROW(plant_step(x, u, 0.02, p), SimError);
}

TEST(Plant, DerivativeMatchesEquationsOfMotion) {
    const PlantParams p;
    PlantState x;
    x.pitch = 0.1;
    x.yaw = 0.2;
    x.pitch_dot = -0.3;
    x.yaw_dot = 0.4;
    x.s0 = 100.0;
    x.i1 = 0.5;
    const double u0 = 3.0, u1 = -2.0;
    const auto d = plant_derivative(x, Vector2(u0, u1), p);
    EXPECT_DOUBLE_EQ(d.pitch, -0.3);
    EXPECT_DOUBLE_EQ(d.yaw, 0.4);
    EXPECT_NEAR(d.pitch_dot, (-p.pitch_damping * -0.3 + p.k_pitch_u0 * u0 + p.k_pitch_u1 * u1) / p.pitch_inertia, 1e-12);
    EXPECT_NEAR(d.yaw_dot,
                (-(p.yaw_damping + p.yaw_friction) * 0.4 + p.k_yaw_u0 * u0 + p.k_yaw_u1 * u1) / p.yaw_inertia, 1e-12);
    EXPECT_NEAR(d.s0, (p.speed_gain * 3.0 - 100.0) / p.speed_tau, 1e-9);
    EXPECT_NEAR(d.i1, (p.current_gain * 2.0 - 0.5) / p.current_tau, 1e-12);
}

TEST(Controller, SaturatesAtActuatorLimit) {
    const auto k = plant_gain(PlantParams{});
    PlantState far;
    far.pitch = -3.0;
    far.yaw = 3.0;
    const auto u = controller_step(far, 0.0, 0.0, k);
    EXPECT_LE(std::abs(u[0]), 24.0);
    EXPECT_LE(std::abs(u[1]), 24.0);
    EXPECT_TRUE(std::abs(u[0]) == 24.0 || std::abs(u[1]) == 24.0);

    PlantState at_target;
    at_target.pitch = 0.1;
    at_target.yaw = -0.2;
    const auto zero = controller_step(at_target, -0.2, 0.1, k);
    EXPECT_NEAR(zero.norm(), 0.0, 1e-12);
}

TEST(Schedule, CyclesThroughSteps) {
    SequenceSchedule s{{{0.1, 0.2, 2.0}, {0.3, 0.4, 3.0}}};
    EXPECT_DOUBLE_EQ(s.cycle_duration(), 5.0);
    EXPECT_EQ(s.at(0.0).target_yaw, 0.1);
    EXPECT_EQ(s.at(2.5).target_yaw, 0.3);
    EXPECT_EQ(s.at(7.1).target_yaw, 0.3);
    EXPECT_EQ(s.at(10.0).target_yaw, 0.1);
    EXPECT_EQ(s.step_starts(), (std::vector<double>{0.0, 2.0}));
}

TEST(Simulation, RecordingInvariants) {
    const auto ds = run_cycle(PlantParams{}, SequenceSchedule::default_cycle(), 20.0, 50.0, 1);
    EXPECT_EQ(ds.size(), 1000u);
    EXPECT_EQ(ds.rate_hz, 50.0);
    EXPECT_EQ(ts::validate(ds), "");
    // the controller tracks each step: the end of every step is near its target
    const auto sched = SequenceSchedule::default_cycle();
    const auto starts = sched.step_starts();
    for (std::size_t s = 0; s < sched.steps.size(); ++s) {
        const double end = starts[s] + sched.steps[s].duration - 0.1;
        const auto& f = ds.frames[static_cast<std::size_t>(end * 50.0)];
        EXPECT_NEAR(f.yaw, sched.steps[s].target_yaw, 0.1) << "step " << s;
        EXPECT_NEAR(f.pitch, sched.steps[s].target_pitch, 0.1) << "step " << s;
        EXPECT_EQ(f.target_yaw, sched.steps[s].target_yaw);
    }
}

TEST(Simulation, SeedDeterminesNoise) {
    const auto sched = SequenceSchedule::default_cycle();
    const auto a = run_cycle(PlantParams{}, sched, 2.0, 500.0, 7);
    const auto b = run_cycle(PlantParams{}, sched, 2.0, 500.0, 7);
    const auto c = run_cycle(PlantParams{}, sched, 2.0, 500.0, 8);
    EXPECT_EQ(a.frames, b.frames);
    EXPECT_NE(a.frames, c.frames);
    EXPECT_EQ(a.size(), 1000u);
}

TEST(Simulation, ConfigRoundTrip) {
    PlantParams p;
    p.yaw_inertia = 0.2;
    p.q_diag[1] = 55.0;
    SequenceSchedule s{{{0.5, -0.1, 4.0}}};
    const auto [p2, s2] = load_sim_config(KeyValueFile::parse(to_config(p, s).format()));
    EXPECT_EQ(p2.yaw_inertia, 0.2);
    EXPECT_EQ(p2.q_diag[1], 55.0);
    ASSERT_EQ(s2.steps.size(), 1u);
    EXPECT_EQ(s2.steps[0].target_yaw, 0.5);
    EXPECT_EQ(s2.steps[0].duration, 4.0);

    const auto [p3, s3] = load_sim_config(KeyValueFile::parse("yaw_damping = 0.5\n"));
    EXPECT_EQ(p3.yaw_damping, 0.5);
    EXPECT_EQ(p3.pitch_inertia, PlantParams{}.pitch_inertia);
    EXPECT_EQ(s3.steps.size(), SequenceSchedule::default_cycle().steps.size());
    EXPECT_THROW(load_sim_config(KeyValueFile::parse("step = 1 2\n")), std::exception);
}

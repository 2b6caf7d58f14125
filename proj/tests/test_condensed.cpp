#include <doctest.h>

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "kmpc/condensed_mpc.hpp"
#include "kmpc/errors.hpp"
#include "support.hpp"

using namespace kmpc;
using namespace kmpc::mpc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

koopman::LiftedPredictor scalar_predictor() {
    koopman::LiftedPredictor p;
    p.A = MatrixXd::Constant(1, 1, 0.5);
    p.B = MatrixXd::Ones(1, 1);
    p.C = MatrixXd::Ones(1, 1);
    p.observable = koopman::ObservableMap::identity(1);
    return p;
}

MpcWeights scalar_weights(int horizon) {
    return {horizon, MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1), MatrixXd::Constant(1, 1, 0.01)};
}

// Gradient of the condensed objective from explicit stacked matrices.
VectorXd dense_gradient(const testing::SmallProblem& s, const VectorXd& psi0, const VectorXd& x_r,
                        const VectorXd& u_r) {
    const Eigen::Index N = s.w.horizon;
    const Eigen::Index np = s.p.n_psi();
    const Eigen::Index nu = s.p.n_u();
    const MatrixXd D = s.scaling.half_range.asDiagonal();
    const MatrixXd S = testing::dense_prediction_matrix(s.p.A, s.p.B * D, N);
    const MatrixXd Gamma = testing::dense_prediction_matrix(s.p.A, s.p.B, N);
    MatrixXd Qbar = MatrixXd::Zero(N * np, N * np);
    VectorXd free_response(N * np);
    VectorXd ref_image(N * np);
    VectorXd centers(N * nu);
    VectorXd input_term(N * nu);
    VectorXd psi = psi0;
    for (Eigen::Index i = 0; i < N; ++i) {
        const MatrixXd& W = i + 1 < N ? s.w.W_x : s.w.W_N;
        Qbar.block(i * np, i * np, np, np) = s.p.C.transpose() * W * s.p.C;
        psi = s.p.A * psi;
        free_response.segment(i * np, np) = psi;
        ref_image.segment(i * np, np) = s.p.C.transpose() * W * x_r;
        centers.segment(i * nu, nu) = s.scaling.center;
        input_term.segment(i * nu, nu) = D * s.w.W_u * (s.scaling.center - u_r);
    }
    return S.transpose() * (Qbar * (free_response + Gamma * centers) - ref_image) + input_term;
}

}  // namespace

TEST_CASE("single-stage condensing") {
    testing::Rng rng(1);
    koopman::LiftedPredictor p;
    p.observable = koopman::ObservableMap::parse(2, "state,constant");
    p.A = rng.normal_matrix(3, 3);
    p.B = rng.normal_matrix(3, 2);
    p.C = rng.normal_matrix(2, 3);
    MpcWeights w{1, testing::random_psd(rng, 2), testing::random_psd(rng, 2), MatrixXd::Identity(2, 2)};
    const auto cd = build_condensed(p, w);
    CHECK((cd.S - p.B).norm() <= 1e-15);
    const MatrixXd expected = w.W_u + p.B.transpose() * p.C.transpose() * w.W_N * p.C * p.B;
    CHECK((cd.H - expected).norm() <= 1e-12 * expected.norm());
}

TEST_CASE("scalar two-stage example") {
    const auto p = scalar_predictor();
    const auto cd = build_condensed(p, scalar_weights(2));
    CHECK((cd.S - (MatrixXd(2, 2) << 1, 0, 0.5, 1).finished()).norm() <= 1e-15);
    CHECK((cd.H - (MatrixXd(2, 2) << 1.26, 0.5, 0.5, 1.01).finished()).norm() <= 1e-14);

    const VectorXd h = online_gradient(cd, VectorXd::Ones(1), VectorXd::Zero(1), VectorXd::Zero(1));
    CHECK(h(0) == doctest::Approx(0.625).epsilon(1e-14));
    CHECK(h(1) == doctest::Approx(0.25).epsilon(1e-14));

    const auto zero = online_gradient(cd, VectorXd::Zero(1), VectorXd::Zero(1), VectorXd::Zero(1));
    CHECK(zero == VectorXd::Zero(2));
}

TEST_CASE("case-study Hessian size") {
    testing::Rng rng(2);
    koopman::LiftedPredictor p;
    p.observable = koopman::ObservableMap::shifted_quadratic(128);
    p.A = 0.05 * rng.normal_matrix(385, 385);
    p.B = rng.normal_matrix(385, 4);
    p.C = koopman::fit_output({}, p.observable, koopman::OutputFit::identity_projection);
    MpcWeights w{10, MatrixXd::Identity(128, 128), MatrixXd::Identity(128, 128),
                 0.01 * MatrixXd::Identity(4, 4)};
    const auto cd = build_condensed(p, w);
    CHECK(cd.H.rows() == 40);
    CHECK(cd.H.cols() == 40);
    CHECK(cd.size() == 40);
    CHECK(cd.state_projection);
    CHECK(cd.H.llt().info() == Eigen::Success);
}

TEST_CASE("prediction matrix blocks") {
    testing::Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const auto s = testing::random_small_problem(rng);
        const auto cd = build_condensed(s.p, s.w, s.scaling);
        const MatrixXd D = s.scaling.half_range.asDiagonal();
        const MatrixXd S = testing::dense_prediction_matrix(s.p.A, s.p.B * D, s.w.horizon);
        CHECK((cd.S - S).norm() <= 1e-12 * (1.0 + S.norm()));
        CHECK((cd.H - cd.H.transpose()).norm() == 0.0);
        const MatrixXd H = cd.dense_Rbar() + S.transpose() * cd.dense_Qbar() * S;
        CHECK((cd.H - H).norm() <= 1e-12 * (1.0 + H.norm()));
    }
}

TEST_CASE("property: condensed objective equals the rolled-out cost") {
    testing::Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const auto s = testing::random_small_problem(rng);
        const auto cd = build_condensed(s.p, s.w, s.scaling);
        const VectorXd psi0 = rng.uniform_vector(s.p.n_psi(), -1, 1);
        const VectorXd x_r = rng.uniform_vector(s.p.n_x(), -1, 1);
        const VectorXd u_r = rng.uniform_vector(s.p.n_u(), -1, 1);
        const VectorXd h = online_gradient(cd, psi0, x_r, u_r);
        const VectorXd z0 = VectorXd::Zero(cd.size());
        const double J0 = testing::rollout_cost(s, psi0, x_r, u_r, s.scaling.to_physical(z0));
        for (int k = 0; k < 100; ++k) {
            const VectorXd z = rng.uniform_vector(cd.size(), -1, 1);
            const double condensed = 0.5 * z.dot(cd.H * z) + h.dot(z);
            const double expanded = 0.5 * (testing::rollout_cost(s, psi0, x_r, u_r, s.scaling.to_physical(z)) - J0);
            CHECK(std::abs(condensed - expanded) <= 1e-9 * std::max(1.0, std::abs(J0)));
        }
    }
}

TEST_CASE("property: on-line gradient matches the dense evaluation") {
    testing::Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const auto s = testing::random_small_problem(rng);
        const auto cd = build_condensed(s.p, s.w, s.scaling);
        const VectorXd psi0 = rng.uniform_vector(s.p.n_psi(), -2, 2);
        const VectorXd x_r = rng.uniform_vector(s.p.n_x(), -1, 1);
        const VectorXd u_r = rng.uniform_vector(s.p.n_u(), -1, 1);
        const VectorXd h = online_gradient(cd, psi0, x_r, u_r);
        const VectorXd ref = dense_gradient(s, psi0, x_r, u_r);
        CHECK((h - ref).norm() <= 1e-10 * std::max(1.0, ref.norm()));
    }
}

TEST_CASE("on-line work stays within the certificate at case-study dimensions") {
    testing::Rng rng(6);
    koopman::LiftedPredictor p;
    p.observable = koopman::ObservableMap::shifted_quadratic(128);
    p.A = 0.05 * rng.normal_matrix(385, 385);
    p.B = 0.1 * rng.normal_matrix(385, 4);
    p.C = koopman::fit_output({}, p.observable, koopman::OutputFit::identity_projection);
    MpcWeights w{10, MatrixXd::Identity(128, 128), MatrixXd::Identity(128, 128),
                 0.01 * MatrixXd::Identity(4, 4)};
    const auto cd = build_condensed(p, w);
    const auto cert = certificate({4, 128, 385, 10, 256}, 1e-6);

    const VectorXd x = rng.uniform_vector(128, -0.5, 0.5);
    const VectorXd x_r = VectorXd::Constant(128, 0.25);
    FlopCounter gradient_only;
    const VectorXd psi0 = p.observable.lift(x);
    online_gradient(cd, psi0, x_r, VectorXd::Zero(4), &gradient_only);
    CHECK(gradient_only.count <= cert.gradient_flops);

    FlopCounter step;
    const auto res = solve_mpc_step(p, cd, x, References{x_r, VectorXd::Zero(4)},
                                    boxqp::SolverConfig{}, &step);
    CHECK(res.solution.iterations == 202);
    CHECK(step.count <= cert.total_flops);
}

TEST_CASE("input scaling") {
    const auto unit = InputScaling::from_bounds(-VectorXd::Ones(2), VectorXd::Ones(2));
    CHECK(unit.is_unit());
    const VectorXd z = (VectorXd(4) << 0.1, -0.7, 1.0, -1.0).finished();
    CHECK(unit.to_physical(z) == z);

    const auto shifted = InputScaling::from_bounds(VectorXd::Zero(1), VectorXd::Constant(1, 2.0));
    CHECK(shifted.to_physical(VectorXd::Zero(1))(0) == 1.0);

    const auto wide = InputScaling::from_bounds(VectorXd::Constant(1, -3.0), VectorXd::Ones(1));
    CHECK(wide.to_physical(VectorXd::Constant(1, 0.5))(0) == doctest::Approx(0.0).epsilon(1e-15));

    testing::Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const VectorXd lo = rng.uniform_vector(3, -5, 1);
        const auto sc = InputScaling::from_bounds(lo, lo + rng.uniform_vector(3, 0.1, 6));
        const VectorXd zz = rng.uniform_vector(6, -1, 1);
        CHECK((sc.to_unit(sc.to_physical(zz)) - zz).cwiseAbs().maxCoeff() <= 1e-14);
    }

    CHECK_THROWS_AS(wide.to_physical(VectorXd::Constant(1, 1.0 + 1e-6)), InvalidInput);
    CHECK_NOTHROW(wide.to_physical(VectorXd::Constant(1, 1.0 + 1e-10)));
    CHECK_THROWS_AS(InputScaling::from_bounds(VectorXd::Ones(1), VectorXd::Ones(1)), ConfigError);
}

TEST_CASE("weights validation") {
    const auto p = scalar_predictor();
    MpcWeights w = scalar_weights(2);
    w.W_u(0, 0) = 0.0;
    CHECK_THROWS_AS(build_condensed(p, w), ConfigError);
    w = scalar_weights(0);
    CHECK_THROWS_AS(build_condensed(p, w), ConfigError);
    w = scalar_weights(2);
    w.W_x(0, 0) = -1.0;
    CHECK_THROWS_AS(build_condensed(p, w), ConfigError);
}

TEST_CASE("MPC step with a vanishing gradient applies the box centre") {
    auto p = scalar_predictor();
    const auto cd = build_condensed(p, scalar_weights(2));
    const References refs{VectorXd::Zero(1), VectorXd::Zero(1)};
    const auto res = solve_mpc_step(p, cd, VectorXd::Zero(1), refs, boxqp::SolverConfig{});
    CHECK(res.solution.iterations == 0);
    CHECK(res.u0(0) == 0.0);

    // an input-decoupled plant with u_r at the centre of a shifted box
    p.B.setZero();
    const auto sc = InputScaling::from_bounds(VectorXd::Constant(1, -1.0), VectorXd::Constant(1, 3.0));
    const auto cd2 = build_condensed(p, scalar_weights(2), sc);
    const References centred{VectorXd::Zero(1), VectorXd::Constant(1, 1.0)};
    const auto res2 = solve_mpc_step(p, cd2, VectorXd::Zero(1), centred, boxqp::SolverConfig{});
    CHECK(res2.solution.iterations == 0);
    CHECK(res2.u0(0) == 1.0);
}

TEST_CASE("scalar MPC step agrees with the enumeration oracle") {
    const auto p = scalar_predictor();
    const auto cd = build_condensed(p, scalar_weights(2));
    for (double x : {1.0, 5.0, -3.0}) {
        const References refs{VectorXd::Zero(1), VectorXd::Zero(1)};
        const auto res = solve_mpc_step(p, cd, VectorXd::Constant(1, x), refs, boxqp::SolverConfig{});
        const VectorXd oracle = testing::box_qp_oracle(cd.H, res.gradient);
        CHECK(res.solution.iterations == boxqp::iteration_count(2, 1e-6));
        CHECK(std::abs(res.u0(0) - oracle(0)) <= 1e-4);
    }
}

TEST_CASE("receding-horizon controller caches the reference offset correctly") {
    testing::Rng rng(8);
    const auto s = testing::random_small_problem(rng);
    const auto cd = build_condensed(s.p, s.w, s.scaling);
    KoopmanMpc controller(s.p, cd);
    References refs{rng.uniform_vector(s.p.n_x(), -1, 1), rng.uniform_vector(s.p.n_u(), -1, 1)};
    for (int k = 0; k < 6; ++k) {
        if (k == 3) {
            refs.x_r = rng.uniform_vector(s.p.n_x(), -1, 1);
        }
        const VectorXd x = rng.uniform_vector(s.p.n_x(), -1, 1);
        const auto a = controller.step(x, refs);
        const auto b = solve_mpc_step(s.p, cd, x, refs, boxqp::SolverConfig{});
        CHECK((a.gradient - b.gradient).norm() <= 1e-14 * (1.0 + b.gradient.norm()));
        CHECK((a.u0 - b.u0).norm() <= 1e-12);
    }
}

TEST_CASE("certificate for the case-study dimensions") {
    const CertificateDims dims{4, 128, 385, 10, 256};
    const auto cert = certificate(dims, 1e-6);
    CHECK(cert.n == 40);
    CHECK(cert.iterations == 202);
    CHECK(cert.lifting_flops == 256);
    // independent evaluation of every term
    const std::uint64_t n = 40;
    const std::uint64_t gradient = 2 * 10 * 385 * 385 + 10 * 11 * 4 * 385 / 2 + 10 * 128 * 385 +
                                   10 * 4 * 4 + 2 * n;
    const std::uint64_t per_iter = 1 + n * (n + 1) * (2 * n + 1) / 6 + 2 * n * n + 15 * n;
    CHECK(cert.gradient_flops == gradient);
    CHECK(cert.per_iteration_flops == per_iter);
    CHECK(cert.total_flops == 256 + gradient + n + 5 * n + 3 + 202 * per_iter);
    CHECK(cert.total_flops == 8782821);
    CHECK(cert.total_flops >= 8782000);
    CHECK(cert.total_flops <= 8800000);
    CHECK(cert.execution_time == doctest::Approx(8782821e-9));
    // the closed form 1 + n^3/3 + n^2/2 + n/6 is the same integer
    CHECK(static_cast<double>(per_iter) ==
          doctest::Approx(1 + 40.0 * 40 * 40 / 3 + 40.0 * 40 / 2 + 40.0 / 6 + 2 * 1600 + 400 + 200));
    CHECK(cert.report().find("flops.total = 8782821") != std::string::npos);
}

TEST_CASE("property: certificate is monotone in every dimension") {
    const CertificateDims base{4, 128, 385, 10, 256};
    const std::uint64_t total = certificate(base, 1e-6).total_flops;
    for (int field = 0; field < 4; ++field) {
        std::uint64_t previous = total;
        for (int bump = 1; bump <= 5; ++bump) {
            CertificateDims d = base;
            std::int64_t* target[] = {&d.horizon, &d.n_psi, &d.n_u, &d.n_x};
            *target[field] += bump;
            const std::uint64_t t = certificate(d, 1e-6).total_flops;
            CHECK(t >= previous);
            previous = t;
        }
    }
}

TEST_CASE("certificate rejects bad inputs") {
    CHECK_THROWS_AS(certificate({4, 128, 385, 10, 256}, 80.0), InvalidInput);
    CHECK_THROWS_AS(certificate({0, 128, 385, 10, 256}, 1e-6), InvalidInput);
    CHECK_THROWS_AS(certificate({4, 128, 385, 10, 256}, 1e-6, 0.0), InvalidInput);
}

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include "sme/analysis.hpp"
#include "test_support.hpp"

using namespace sme;

namespace {
Hyper basic_hyper(double tau, double lambda = 1.0) {
  Hyper h;
  h.lambda0 = h.lambda1 = h.lambda2 = lambda;
  h.epsilon = 1.0;
  h.sigma = 1.0;
  h.tau = tau;
  h.horizon_T = 10.0;
  h.phi_threshold = 1e-8;
  return h;
}

bool states_identical(const OptState& a, const OptState& b) {
  return std::memcmp(a.theta.data(), b.theta.data(),
                     sizeof(double) * a.theta.size()) == 0 &&
         std::memcmp(a.u.data(), b.u.data(), sizeof(double) * a.u.size()) ==
             0 &&
         (a.m.size() == 0 ||
          std::memcmp(a.m.data(), b.m.data(), sizeof(double) * a.m.size()) ==
              0);
}
}  // namespace

TEST_CASE("noise-free rmsprop at a stationary point only decays u") {
  const auto p = testing::scalar_problem(1.0);
  const Hyper h = basic_hyper(0.1, 0.5);
  const NoiseSource none(p, NoiseMode::None, 1);
  rng::RngStream s(1, rng::kSpaceDiscrete);
  OptState x;
  x.theta = Vector::Zero(1);  // grad f = 0 here
  x.u = Vector::Ones(1) * 2.0;
  const OptState next = step_rmsprop(Regime::Balistic, x, h, p, none, s);
  CHECK(next.theta(0) == 0.0);
  CHECK(next.u(0) == doctest::Approx((1.0 - 0.5 * 0.1) * 2.0).epsilon(1e-15));
}

TEST_CASE("rmsprop balistic hand evaluation") {
  // d=1, H=1, theta=1, u=1, eps=1, lambda0=1, tau=0.1: g=1, P=0.5
  const auto p = testing::scalar_problem(1.0);
  const Hyper h = basic_hyper(0.1);
  const NoiseSource none(p, NoiseMode::None, 1);
  rng::RngStream s(1, rng::kSpaceDiscrete);
  OptState x;
  x.theta = Vector::Ones(1);
  x.u = Vector::Ones(1);
  const OptState next = step_rmsprop(Regime::Balistic, x, h, p, none, s);
  CHECK(next.theta(0) == doctest::Approx(0.95).epsilon(1e-15));
  CHECK(next.u(0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("adam hand evaluation at k=1 uses m_{k+1}") {
  const auto p = testing::scalar_problem(1.0);
  Hyper h = basic_hyper(0.25);
  h.epsilon = 0.0;  // test-only value, bypasses config validation
  const NoiseSource none(p, NoiseMode::None, 1);
  rng::RngStream s(1, rng::kSpaceDiscrete);
  OptState x;
  x.theta = Vector::Ones(1);
  x.m = Vector::Zero(1);
  x.u = Vector::Ones(1);
  x.step_k = 1;
  const OptState next = step_adam(Regime::Balistic, x, h, p, none, s);
  CHECK(next.m(0) == doctest::Approx(0.25).epsilon(1e-15));
  // theta' = 1 - 0.25 * (0.5/0.4375) * 0.25
  CHECK(next.theta(0) == doctest::Approx(1.0 - 0.25 * (0.5 / 0.4375) * 0.25)
                             .epsilon(1e-12));
  // k=0 leaves theta unchanged because Gamma_bar_0 = 0
  x.step_k = 0;
  const OptState first = step_adam(Regime::Balistic, x, h, p, none, s);
  CHECK(first.theta(0) == 1.0);
}

TEST_CASE("adam with zero gradient and m keeps theta, decays u") {
  const auto p = testing::scalar_problem(1.0);
  const Hyper h = basic_hyper(0.1, 0.5);
  const NoiseSource none(p, NoiseMode::None, 1);
  rng::RngStream s(1, rng::kSpaceDiscrete);
  OptState x;
  x.theta = Vector::Zero(1);
  x.m = Vector::Zero(1);
  x.u = Vector::Ones(1);
  const OptState next = step_adam(Regime::Balistic, x, h, p, none, s);
  CHECK(next.theta(0) == 0.0);
  CHECK(next.m(0) == 0.0);
  CHECK(next.u(0) == doctest::Approx(1.0 - 0.05).epsilon(1e-15));
}

TEST_CASE("single-step mean increments match the closed form") {
  const QuadraticGaussianProblem p(
      {6, 301, 302, 4000, DataMode::Empirical, MMode::GaussianAnalytic});
  Hyper h = basic_hyper(0.125);
  h.phi_threshold = h.tau;
  OptState x;
  x.theta = testing::random_vector(6, 41);
  x.u = Vector::Ones(6);

  SUBCASE("rmsprop, both regimes") {
    for (Regime regime : {Regime::Balistic, Regime::BatchEquivalent}) {
      const auto r = one_step_moment_check(Optimizer::RMSprop, regime, 1, x, h,
                                           p, 100000, 9001);
      CHECK(r.max_analytic_gap_over_se < 4.0);
    }
  }
  SUBCASE("adam, balistic") {
    OptState xa = x;
    xa.m = Vector::Zero(6);
    xa.step_k = 2;
    const auto r = one_step_moment_check(Optimizer::Adam, Regime::Balistic, 1,
                                         xa, h, p, 100000, 9002);
    CHECK(r.max_analytic_gap_over_se < 4.0);
  }
}

TEST_CASE("run_discrete basics") {
  const QuadraticGaussianProblem p(
      {6, 303, 304, 2000, DataMode::Empirical, MMode::GaussianAnalytic});
  Hyper h = basic_hyper(0.0625, 0.5);
  h.horizon_T = 2.0;
  h.phi_threshold = h.tau;
  const NoiseSource noise(p, NoiseMode::Dataset, 1);
  const OptState x0 = default_initial_state(Optimizer::RMSprop, p, 303);

  SUBCASE("zero-step horizon returns only the initial state") {
    Hyper h0 = h;
    h0.horizon_T = 0.03;  // floor(T/tau) = 0
    rng::RngStream s(7, rng::kSpaceDiscrete);
    const auto traj =
        run_discrete(Optimizer::RMSprop, Regime::Balistic, x0, h0, p, noise, s);
    REQUIRE(traj.size() == 1);
    CHECK(states_identical(traj[0], x0));
  }

  SUBCASE("same seed gives identical trajectories") {
    rng::RngStream s1(7, rng::kSpaceDiscrete, 5);
    rng::RngStream s2(7, rng::kSpaceDiscrete, 5);
    const auto t1 = run_discrete(Optimizer::RMSprop, Regime::Balistic, x0, h,
                                 p, noise, s1);
    const auto t2 = run_discrete(Optimizer::RMSprop, Regime::Balistic, x0, h,
                                 p, noise, s2);
    REQUIRE(t1.size() == t2.size());
    for (std::size_t i = 0; i < t1.size(); ++i)
      CHECK(states_identical(t1[i], t2[i]));
  }

  SUBCASE("noise-free descent shrinks theta") {
    const NoiseSource none(p, NoiseMode::None, 1);
    rng::RngStream s(7, rng::kSpaceDiscrete);
    OptState start = x0;
    start.theta = p.dataset_mean() + testing::random_vector(6, 42);
    const auto traj = run_discrete(Optimizer::RMSprop, Regime::Balistic, start,
                                   h, p, none, s);
    const Vector target = p.dataset_mean();
    CHECK((traj.back().theta - target).norm() <
          (start.theta - target).norm());
  }
}

TEST_CASE("positivity of u along noisy trajectories") {
  const QuadraticGaussianProblem p(
      {6, 305, 306, 2000, DataMode::Empirical, MMode::GaussianAnalytic});
  Hyper h = basic_hyper(0.0625, 0.5);
  h.horizon_T = 4.0;
  h.phi_threshold = h.tau;
  const NoiseSource noise(p, NoiseMode::Dataset, 1);
  rng::RngStream s(11, rng::kSpaceDiscrete, 1);
  const OptState x0 = default_initial_state(Optimizer::RMSprop, p, 305);
  const auto traj =
      run_discrete(Optimizer::RMSprop, Regime::Balistic, x0, h, p, noise, s);
  const long n = h.steps();
  const double floor_bound =
      std::pow(1.0 - h.lambda0 * h.tau, static_cast<double>(n)) *
      x0.u.minCoeff();
  for (const auto& st : traj) {
    CHECK(st.u.minCoeff() > 0.0);
    CHECK(st.u.minCoeff() >= floor_bound * (1.0 - 1e-12));
  }
}

TEST_CASE("clamp below the trajectory floor leaves dynamics bit-identical") {
  const QuadraticGaussianProblem p(
      {6, 307, 308, 2000, DataMode::Empirical, MMode::GaussianAnalytic});
  Hyper h = basic_hyper(0.0625, 1.0);
  h.horizon_T = 2.0;  // (1 - tau)^32 ~ 0.127 of min u0
  const NoiseSource noise(p, NoiseMode::Dataset, 1);
  const OptState x0 = default_initial_state(Optimizer::RMSprop, p, 307);

  Hyper with_clamp = h;
  with_clamp.phi_threshold = 0.1;
  Hyper identity_phi = h;
  identity_phi.phi_threshold = 0.0;  // max(x, 0) == x on positive u

  rng::RngStream s1(13, rng::kSpaceDiscrete, 2);
  rng::RngStream s2(13, rng::kSpaceDiscrete, 2);
  const auto t1 = run_discrete(Optimizer::RMSprop, Regime::Balistic, x0,
                               with_clamp, p, noise, s1);
  const auto t2 = run_discrete(Optimizer::RMSprop, Regime::Balistic, x0,
                               identity_phi, p, noise, s2);
  REQUIRE(t1.size() == t2.size());
  for (std::size_t i = 0; i < t1.size(); ++i)
    CHECK(states_identical(t1[i], t2[i]));
}

TEST_CASE("trajectory csv has the expected shape") {
  const auto p = testing::scalar_problem(1.0);
  Hyper h = basic_hyper(0.25);
  h.horizon_T = 1.0;
  const NoiseSource none(p, NoiseMode::None, 1);
  rng::RngStream s(1, rng::kSpaceDiscrete);
  OptState x0;
  x0.theta = Vector::Ones(1);
  x0.m = Vector::Zero(1);
  x0.u = Vector::Ones(1);
  const auto traj =
      run_discrete(Optimizer::Adam, Regime::Balistic, x0, h, p, none, s);
  std::ostringstream out;
  write_trajectory_csv(out, traj, h.tau);
  const std::string head = out.str().substr(0, out.str().find('\n'));
  CHECK(head == "step,t,theta_0,m_0,u_0");
}

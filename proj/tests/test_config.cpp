#include <doctest.h>

#include "sme/config.hpp"

using namespace sme;

TEST_CASE("defaults fill an empty optimizer section") {
  const ExperimentConfig c = parse_config("[optimizer]\n");
  CHECK(c.epsilon == 1e-6);
  CHECK(c.sigma == 1.0);
  CHECK(c.d == 6);
  CHECK(c.dataset_size == 128000);
  CHECK(c.horizon_T == 10.0);
  const Hyper h1 = make_hyper(c, 0.125);
  CHECK(h1.lambda0 == 0.5);  // order-1 appendix defaults
  CHECK(h1.lambda1 == 1.0);
  CHECK(h1.lambda2 == 0.5);
  CHECK(h1.phi_threshold == 0.125);
  ExperimentConfig c2 = c;
  c2.order = 2;
  const Hyper h2 = make_hyper(c2, 0.125);
  CHECK(h2.lambda0 == 1.0);
  CHECK(h2.lambda2 == 1.0);
}

TEST_CASE("tau outside the stability window is rejected by name") {
  ExperimentConfig c;
  c.lambda0 = 1.0;
  c.tau = 0.6;
  try {
    validate_config(c);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("lambda0") != std::string::npos);
  }
}

TEST_CASE("parse rejects unknown keys and bad values with line numbers") {
  try {
    parse_config("[optimizer]\nname = rmsprop\nbogus = 3\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 3);
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("[nope]\n"), ParseError);
  CHECK_THROWS_AS(parse_config("x = 1\n"), ParseError);
  CHECK_THROWS_AS(parse_config("[optimizer]\nname rmsprop\n"), ParseError);
  CHECK_THROWS_AS(
      parse_config("[optimizer]\ngeneralized_lambda = yes\n"), ParseError);
}

TEST_CASE("comments and whitespace are tolerated") {
  const ExperimentConfig c = parse_config(
      "# experiment file\n"
      "[optimizer]\n"
      "  name = adam   # trailing comment\n"
      "\n"
      "[simulation]\n"
      "tau_list = 0.25, 0.125, 0.0625\n"
      "t_start = 0.5\n");
  CHECK(c.optimizer == Optimizer::Adam);
  REQUIRE(c.tau_list.size() == 3);
  CHECK(c.tau_list[1] == 0.125);
  CHECK(c.t_start.has_value());
}

TEST_CASE("round trip is lossless") {
  ExperimentConfig c;
  c.optimizer = Optimizer::Adam;
  c.regime = Regime::BatchEquivalent;
  c.order = 2;
  c.lambda1 = 1.0;
  c.lambda2 = 1.0;
  c.lambda0 = 1.0;
  c.tau = 0.0625;
  c.tau_list = {0.25, 0.125, 0.0625};
  c.t_start = 0.5;
  c.dt = 0.0009765625;
  c.noise_mode = NoiseMode::GaussianSurrogate;
  c.test_functions = {"f1", "f3"};
  c.threads = 3;
  CHECK(parse_config(serialize_config(c)) == c);
}

TEST_CASE("randomized valid configs round trip") {
  rng::RngStream s(404, rng::kSpaceToy, 5);
  for (int i = 0; i < 50; ++i) {
    ExperimentConfig c;
    c.optimizer = s.index(2) ? Optimizer::Adam : Optimizer::RMSprop;
    c.regime = s.index(2) ? Regime::BatchEquivalent : Regime::Balistic;
    c.order = 1 + static_cast<int>(s.index(2));
    c.d = 1 + static_cast<int>(s.index(8));
    c.tau = std::pow(2.0, -3.0 - static_cast<double>(s.index(4)));
    c.horizon_T = 1.0 + static_cast<double>(s.index(10));
    c.sigma = 0.5 + s.uniform01();
    c.epsilon = 1e-6 * (1.0 + s.uniform01());
    if (c.order == 2) {
      c.lambda0 = c.lambda1 = c.lambda2 = 1.0;
    }
    c.t_start = 2.0 * c.tau;
    c.seed_discrete = s.next_u64() % 100000;
    c.paths_discrete = static_cast<long>(s.index(100000));
    const ExperimentConfig back = parse_config(serialize_config(c));
    CHECK(back == c);
    validate_config(c);
  }
}

TEST_CASE("eta mapping per regime") {
  CHECK(derive_eta(Regime::Balistic, 0.125) == 0.125);
  CHECK(derive_eta(Regime::BatchEquivalent, 0.25) == 0.5);
  CHECK(derive_eta(Regime::BatchEquivalent, std::pow(2.0, -6)) ==
        doctest::Approx(std::pow(2.0, -3)).epsilon(1e-15));
  CHECK_THROWS_AS(derive_eta(Regime::Balistic, 1.5), ValidationError);
}

TEST_CASE("adam needs an explicit start time") {
  ExperimentConfig c;
  c.optimizer = Optimizer::Adam;
  CHECK_THROWS_AS(validate_config(c), ValidationError);
  c.t_start = 0.1;  // below 2 tau = 0.25
  CHECK_THROWS_AS(validate_config(c), ValidationError);
  c.t_start = 0.25;
  CHECK_NOTHROW(validate_config(c));
}

TEST_CASE("path count schedule follows the documented formula") {
  CHECK(default_paths(1, 10.0, 0.125) ==
        static_cast<long>(100.0 * std::sqrt(10.0) * 64.0));
  CHECK(default_paths(1, 10.0, 0.5) == 10000);     // floor
  CHECK(default_paths(2, 10.0, 0.25) == 100000);   // floor: 80943 -> 1e5
  CHECK(default_paths(2, 10.0, 1.0 / 64) == 10000000);  // cap
}

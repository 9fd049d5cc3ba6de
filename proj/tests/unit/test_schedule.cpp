#include <doctest.h>

#include "dbc/rng.hpp"
#include "dbc/schedule.hpp"

using namespace dbc;

TEST_CASE("two-step schedule arithmetic") {
  const DiffusionSchedule s = make_schedule(2, 0.1, 0.2);
  CHECK(s.steps == 2);
  CHECK(s.alpha(0) == doctest::Approx(0.9));
  CHECK(s.alpha(1) == doctest::Approx(0.8));
  CHECK(s.alpha_bar(0) == doctest::Approx(0.9));
  CHECK(s.alpha_bar(1) == doctest::Approx(0.72));
  CHECK(s.sigma(0) == doctest::Approx(std::sqrt(0.1)));
}

TEST_CASE("default 100-step schedule") {
  const DiffusionSchedule s = make_schedule(100, 1e-3, 0.2);
  CHECK(s.steps == 100);
  // cumulative-product oracle value, frozen before the build
  CHECK(s.alpha_bar(99) == doctest::Approx(2.03900897556e-05).epsilon(1e-9));
  CHECK(s.alpha_bar(99) < 0.01);
  for (int i = 1; i < 100; ++i) {
    CHECK(s.alpha_bar(i) < s.alpha_bar(i - 1));
    CHECK(s.beta(i) >= s.beta(i - 1));
    CHECK(s.beta(i) > 0.0);
    CHECK(s.beta(i) < 1.0);
  }
}

TEST_CASE("thousand-step-style range at 100 steps retains signal") {
  // the classic 1e-4..0.02 range is too cold for 100 steps; frozen oracle value
  const DiffusionSchedule s = make_schedule(100, 1e-4, 0.02);
  CHECK(s.alpha_bar(99) == doctest::Approx(0.363563248055).epsilon(1e-9));
}

TEST_CASE("invalid ranges are config errors") {
  CHECK_THROWS_AS(make_schedule(0, 0.1, 0.2), ConfigError);
  CHECK_THROWS_AS(make_schedule(10, 0.0, 0.2), ConfigError);
  CHECK_THROWS_AS(make_schedule(10, 0.3, 0.2), ConfigError);
  CHECK_THROWS_AS(make_schedule(10, 0.1, 1.0), ConfigError);
}

TEST_CASE("forward noising closed form") {
  const DiffusionSchedule s = make_schedule(2, 0.1, 0.2);
  Rng rng(0);
  const Matrix x0 = rng.gaussian_matrix(4, 3);

  SUBCASE("zero noise scales by sqrt(alpha_bar)") {
    const Matrix xn = forward_noise(x0, 2, Matrix::Zero(4, 3), s);
    CHECK((xn - std::sqrt(0.72) * x0).cwiseAbs().maxCoeff() <= 1e-15);
  }
  SUBCASE("unit noise from the origin hits sqrt(1 - alpha_bar)") {
    const Matrix xn = forward_noise(Matrix::Zero(4, 3), 2, Matrix::Ones(4, 3), s);
    CHECK(xn(0, 0) == doctest::Approx(std::sqrt(0.28)).epsilon(1e-12));
  }
  SUBCASE("alpha_bar near one is the identity limit") {
    const DiffusionSchedule tiny = make_schedule(1, 1e-12, 1e-12);
    const Matrix xn = forward_noise(x0, 1, Matrix::Ones(4, 3), tiny);
    CHECK((xn - x0).cwiseAbs().maxCoeff() < 1e-5);
  }
  SUBCASE("shape and level checks") {
    CHECK_THROWS_AS(forward_noise(x0, 3, Matrix::Zero(4, 3), s), ShapeError);
    CHECK_THROWS_AS(forward_noise(x0, 1, Matrix::Zero(4, 2), s), ShapeError);
  }
}

TEST_CASE("time embedding distinguishes levels") {
  const auto e1 = time_embedding(1, 100);
  const auto e50 = time_embedding(50, 100);
  const auto e100 = time_embedding(100, 100);
  CHECK((e1 - e50).cwiseAbs().maxCoeff() > 1e-3);
  CHECK((e50 - e100).cwiseAbs().maxCoeff() > 1e-3);
  const Matrix x = Matrix::Zero(2, 3);
  const Matrix with = with_time_embedding(x, 7, 100);
  CHECK(with.cols() == 3 + kTimeEmbedDim);
  CHECK(with.row(0).tail(kTimeEmbedDim) == with.row(1).tail(kTimeEmbedDim));
}

#include "agasdf/despawn.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace agasdf;

namespace {

// Direct evaluation of the two-sigmoid gate in extended precision.
long double ht_direct(long double x, long double bp, long double bm, long double a = 10.0L) {
  return x * (1.0L / (1.0L + std::exp(a * (x + bm))) + 1.0L / (1.0L + std::exp(-a * (x - bp))));
}

Eigen::VectorXd gaussian(Index n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, scale);
  Eigen::VectorXd x(n);
  for (auto& v : x) v = nd(rng);
  return x;
}

}  // namespace

TEST_CASE("hard threshold: identity at zero bias, zero at zero input") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 10000; ++i) {
    const double x = u(rng);
    CHECK(hard_threshold(x, 0.0, 0.0) == x);
  }
  for (double b : {0.0, 0.5, 3.0, -1.0}) CHECK(hard_threshold(0.0, b, b) == 0.0);
}

TEST_CASE("hard threshold matches direct evaluation") {
  const double at2 = hard_threshold(2.0, 0.5, 0.5);
  CHECK(at2 >= 1.99999);
  CHECK(at2 <= 2.0);
  CHECK(at2 == doctest::Approx(1.9999994).epsilon(1e-7));
  CHECK(hard_threshold(0.2, 0.5, 0.5) == doctest::Approx(0.00966).epsilon(1e-3));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3.0, 3.0), ub(0.0, 1.5);
  for (int i = 0; i < 2000; ++i) {
    const double x = u(rng), bp = ub(rng), bm = ub(rng);
    CHECK(hard_threshold(x, bp, bm) == doctest::Approx(static_cast<double>(ht_direct(x, bp, bm))).epsilon(1e-12));
  }
}

TEST_CASE("hard threshold is odd and monotone") {
  for (double x = -5.0; x <= 5.0; x += 1e-3) {
    CHECK(hard_threshold(-x, 0.5, 0.5) == -hard_threshold(x, 0.5, 0.5));
  }
  double prev = hard_threshold(-5.0, 0.5, 0.5);
  for (double x = -5.0 + 1e-3; x <= 5.0; x += 1e-3) {
    const double y = hard_threshold(x, 0.5, 0.5);
    CHECK(y >= prev);
    prev = y;
  }
}

TEST_CASE("hard threshold saturates without overflow") {
  CHECK(std::isfinite(hard_threshold(1e6, 0.5, 0.5)));
  CHECK(hard_threshold(1e6, 0.5, 0.5) == doctest::Approx(1e6));
  CHECK(std::abs(hard_threshold(3.0, 1e3, 1e3)) < 1e-12);
}

TEST_CASE("hard threshold partials agree with central differences") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-2.0, 2.0), ub(0.1, 1.0);
  const double h = 1e-6;
  for (int i = 0; i < 500; ++i) {
    const double x = u(rng), bp = ub(rng), bm = ub(rng);
    const auto d = hard_threshold_derivatives(x, bp, bm);
    const double nx = (hard_threshold(x + h, bp, bm) - hard_threshold(x - h, bp, bm)) / (2 * h);
    const double np = (hard_threshold(x, bp + h, bm) - hard_threshold(x, bp - h, bm)) / (2 * h);
    const double nm = (hard_threshold(x, bp, bm + h) - hard_threshold(x, bp, bm - h)) / (2 * h);
    CHECK(d.d_x == doctest::Approx(nx).epsilon(1e-5));
    CHECK(d.d_b_plus == doctest::Approx(np).epsilon(1e-5));
    CHECK(d.d_b_minus == doctest::Approx(nm).epsilon(1e-5));
  }
  // Far on the positive side the negative bias has no influence.
  CHECK(std::abs(hard_threshold_derivatives(8.0, 0.5, 0.5).d_b_minus) < 1e-12);
  CHECK(std::abs(hard_threshold_derivatives(-8.0, 0.5, 0.5).d_b_plus) < 1e-12);
}

TEST_CASE("larger thresholds never increase coefficient mass") {
  const auto d = gaussian(400, 5);
  double prev = std::numeric_limits<double>::infinity();
  for (double b = 0.0; b <= 3.0; b += 0.05) {
    double mass = 0;
    for (double x : d) mass += std::abs(hard_threshold(x, b, b));
    CHECK(mass <= prev + 1e-12);
    prev = mass;
  }
}

TEST_CASE("zero-bias db4 model encodes as the fixed transform and reconstructs") {
  const auto m = DespawnModel::initialized(5, 0.0);
  const auto s = gaussian(1024, 6);
  const auto p = encode(s, m);
  const auto ref = fdwt_forward<double>(s, db4_kernel(), 5);
  for (int l = 0; l < 5; ++l) CHECK((p.details[l] - ref.details[l]).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((p.approximation - ref.approximation).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((decode(p, m) - s).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("thresholding is lossy; huge biases silence the pyramid; zero pyramid decodes to zero") {
  const auto s = gaussian(256, 7);
  const auto m = DespawnModel::initialized(4);
  CHECK((decode(encode(s, m), m) - s).norm() > 1e-3);
  const auto big = DespawnModel::initialized(4, 1e3);
  const auto p = encode(s, big);
  for (const auto& d : p.details) CHECK(d.cwiseAbs().maxCoeff() < 1e-6);
  CHECK(p.approximation.cwiseAbs().maxCoeff() < 1e-6);
  auto zero = p;
  for (auto& d : zero.details) d.setZero();
  zero.approximation.setZero();
  CHECK(decode(zero, m).isZero(0.0));
}

TEST_CASE("intermediate approximations are not thresholded") {
  // With a huge bias only on the last band, details of layer 1 still match the fixed transform.
  auto m = DespawnModel::initialized(3, 0.0);
  m.thresholds.back() = {1e3, 1e3};
  const auto s = gaussian(128, 8);
  const auto p = encode(s, m);
  const auto ref = fdwt_forward<double>(s, db4_kernel(), 3);
  for (int l = 0; l < 3; ++l) CHECK((p.details[l] - ref.details[l]).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(p.approximation.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("model packing round-trips and names parameters") {
  auto m = DespawnModel::initialized(3);
  CHECK(m.parameter_count() == 3 * 8 + 4 * 2);
  Eigen::VectorXd p = gaussian(m.parameter_count(), 9);
  m.unpack(p);
  CHECK(m.pack() == p);
  CHECK(m.parameter_name(0) == "kernel[1][0]");
  CHECK(m.parameter_name(24) == "b_plus[d1]");
  CHECK(m.parameter_name(31) == "b_minus[a]");
  CHECK_THROWS_AS(m.unpack(Eigen::VectorXd::Zero(3)), ValidationError);
}

TEST_CASE("decode rejects depth mismatch") {
  const auto s = gaussian(64, 10);
  const auto p = encode(s, DespawnModel::initialized(3));
  CHECK_THROWS_AS(decode(p, DespawnModel::initialized(2)), ValidationError);
}

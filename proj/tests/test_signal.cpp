#include "agasdf/dataset.hpp"
#include "agasdf/signal.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace agasdf;

namespace {

Eigen::VectorXd ramp(Index n) { return Eigen::VectorXd::LinSpaced(n, 0.0, static_cast<double>(n - 1)); }

}  // namespace

TEST_CASE("signal rejects empty, non-finite and bad rates") {
  CHECK_THROWS_AS(Signal(Eigen::VectorXd(), 100.0), ValidationError);
  Eigen::VectorXd bad(3);
  bad << 1.0, std::numeric_limits<double>::quiet_NaN(), 2.0;
  CHECK_THROWS_AS(Signal(bad, 100.0), ValidationError);
  CHECK_THROWS_AS(Signal(ramp(4), 0.0), ValidationError);
  CHECK_THROWS_AS(Signal(ramp(4), -5.0), ValidationError);
  CHECK_NOTHROW(Signal(ramp(4), 20000.0, SourceKind::Acoustic));
}

TEST_CASE("pair_align truncates to the shorter channel") {
  auto [a, b] = pair_align(Signal(ramp(10), 1.0), Signal(ramp(7), 1.0));
  CHECK(a.size() == 7);
  CHECK(b.size() == 7);
  CHECK(a.samples() == ramp(7));
  CHECK_THROWS_AS(pair_align(Signal(ramp(4), 1.0), Signal(ramp(4), 2.0)), ValidationError);
}

TEST_CASE("zscore gives zero mean, unit population std; constants go to zero") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(4.0, 2.5);
  Eigen::VectorXd x(500);
  for (auto& v : x) v = nd(rng);
  const auto z = zscore_normalize(Signal(x, 1.0)).samples();
  CHECK(std::abs(z.mean()) < 1e-12);
  CHECK(std::sqrt(z.array().square().mean()) == doctest::Approx(1.0).epsilon(1e-12));
  const auto c = zscore_normalize(Signal(Eigen::VectorXd::Constant(8, 3.0), 1.0)).samples();
  CHECK(c.isZero(0.0));
}

TEST_CASE("band split gives the remainder to the earliest bands") {
  const auto bands = split_into_bands(Signal(Eigen::VectorXd::Zero(122200), 20000.0), 6);
  REQUIRE(bands.size() == 6);
  for (int b = 0; b < 4; ++b) CHECK(bands[static_cast<std::size_t>(b)].size() == 20367);
  for (int b = 4; b < 6; ++b) CHECK(bands[static_cast<std::size_t>(b)].size() == 20366);

  // Concatenating the bands restores the signal.
  const auto r = split_into_bands(Signal(ramp(23), 1.0), 6);
  Index pos = 0;
  for (const auto& b : r) {
    for (Index k = 0; k < b.size(); ++k) CHECK(b.samples()[k] == static_cast<double>(pos++));
  }
  CHECK(pos == 23);
  CHECK_THROWS_AS(split_into_bands(Signal(ramp(3), 1.0), 6), ValidationError);
  CHECK_THROWS_AS(split_into_bands(Signal(ramp(3), 1.0), 0), ValidationError);
}

TEST_CASE("padding appends zeros and keeps the valid length") {
  const auto p = pad_to_length(ramp(5), 8);
  CHECK(p.valid_length == 5);
  CHECK(p.samples.size() == 8);
  CHECK(p.samples.head(5) == ramp(5));
  CHECK(p.samples.tail(3).isZero(0.0));
  CHECK_THROWS_AS(pad_to_length(ramp(9), 8), ValidationError);
}

TEST_CASE("decibels floor at 1e-12") {
  CHECK(to_decibels(10.0) == doctest::Approx(20.0));
  CHECK(to_decibels(0.1) == doctest::Approx(-20.0));
  CHECK(to_decibels(0.0) == doctest::Approx(-240.0));
}

TEST_CASE("band dataset: six z-scored bands per pass, padded to the longest") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  std::vector<PairedRecord> recs;
  for (int i = 0; i < 2; ++i) {
    const Index n = 600 + 7 * i;
    Eigen::VectorXd a(n), b(n + 3);
    for (auto& v : a) v = 5.0 + 2.0 * nd(rng);
    for (auto& v : b) v = nd(rng);
    recs.push_back({Signal(a, 20000.0), Signal(b, 20000.0), TrackClass::Severe, 40, "r" + std::to_string(i)});
  }
  const auto ds = make_band_dataset(recs);
  REQUIRE(ds.samples.size() == 12);
  CHECK(ds.padded_length == 102);  // 607 / 6 rounded up
  CHECK(ds.depth == 6);
  for (const auto& s : ds.samples) {
    CHECK(s.acoustic.size() == ds.padded_length);
    CHECK(s.acceleration.size() == ds.padded_length);
    const auto v = s.acoustic.head(s.valid_length);
    CHECK(std::abs(v.mean()) < 1e-12);
    CHECK(s.acoustic.tail(ds.padded_length - s.valid_length).isZero(0.0));
  }
  CHECK(ds.acoustic_normalization.mean_of_means == doctest::Approx(5.0).epsilon(0.1));
  CHECK(ds.acoustic_normalization.count == 12);
}

TEST_CASE("depth is floor(log2(n))") {
  CHECK(depth_for_length(6667) == 12);
  CHECK(depth_for_length(1024) == 10);
  CHECK(depth_for_length(1023) == 9);
}

#include "agasdf/synthgen.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <set>

using namespace agasdf;

namespace {

double power(const Eigen::VectorXd& x) { return x.squaredNorm() / static_cast<double>(x.size()); }

// Direct DFT magnitude at a single frequency.
double dft_magnitude(const Eigen::VectorXd& x, double f, double fs) {
  double re = 0.0, im = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    const double ph = 2.0 * std::numbers::pi * f * static_cast<double>(i) / fs;
    re += x[i] * std::cos(ph);
    im -= x[i] * std::sin(ph);
  }
  return std::hypot(re, im);
}

PassConfig short_pass(int speed, std::uint64_t seed, double duration = 0.5) {
  PassConfig cfg;
  cfg.speed_kmh = speed;
  cfg.duration_s = duration;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("table durations set the record length") {
  const auto cls = TrackClassParams::defaults(TrackClass::NoDegradation);
  const auto rec = generate_pass(cls, PassConfig::from_table(TrackClass::NoDegradation, 20, 3));
  CHECK(std::abs(static_cast<double>(rec.acoustic.size()) - 436800.0) <= 0.05 * 436800.0);
  CHECK(rec.acoustic.size() == rec.acceleration.size());
  CHECK(rec.acoustic.sample_rate_hz() == 20000.0);
  CHECK(table_duration_s(TrackClass::Severe, 80) == 6.20);
  CHECK_THROWS_AS(table_duration_s(TrackClass::Severe, 50), ValidationError);
}

TEST_CASE("acoustic noise power follows the requested SNR") {
  const auto cls = TrackClassParams::defaults(TrackClass::Intermediate);
  for (double snr : {0.0, -5.0, 10.0}) {
    auto cfg = short_pass(80, 11);
    cfg.acoustic_snr_db = snr;
    const auto g = generate_pass_detailed(cls, cfg);
    const double ratio_db = 10.0 * std::log10(power(g.clean_acoustic) / power(g.acoustic_noise));
    CHECK(std::abs(power(g.acoustic_noise) - std::pow(10.0, -snr / 10.0)) <= 0.01 * std::pow(10.0, -snr / 10.0));
    CHECK(std::abs(ratio_db - snr) < 0.05);
    CHECK((g.record.acoustic.samples() - g.clean_acoustic - g.acoustic_noise).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("excitation energy grows with speed") {
  const auto cls = TrackClassParams::defaults(TrackClass::Severe);
  double prev = 0.0;
  for (int speed : {20, 40, 60, 80}) {
    const auto g = generate_pass_detailed(cls, short_pass(speed, 5));
    const double p = power(g.clean_acceleration);
    CHECK(p > prev);
    prev = p;
  }
}

TEST_CASE("structural response peaks below 2 kHz") {
  for (int c = 0; c < kNumClasses; ++c) {
    const auto cls = TrackClassParams::defaults(static_cast<TrackClass>(c));
    const auto g = generate_pass_detailed(cls, short_pass(80, 17, 0.25));
    double best = 0.0, best_f = 0.0;
    for (double f = 10.0; f <= 8000.0; f += 10.0) {
      const double m = dft_magnitude(g.clean_acceleration, f, 20000.0);
      if (m > best) {
        best = m;
        best_f = f;
      }
    }
    INFO("class ", c, " peak at ", best_f, " Hz");
    CHECK(best_f < 2000.0);
  }
}

TEST_CASE("class modal signatures are separated") {
  std::vector<TrackClassParams> all;
  for (int c = 0; c < kNumClasses; ++c) all.push_back(TrackClassParams::defaults(static_cast<TrackClass>(c)));
  CHECK(min_modal_separation_hz(all) >= 50.0);

  auto bad = all[0];
  bad.modal_frequencies_hz[0] = 2500.0;
  CHECK_THROWS_AS(bad.validate(20000.0), ValidationError);
  bad = all[0];
  bad.modal_dampings.pop_back();
  CHECK_THROWS_AS(bad.validate(20000.0), ValidationError);
}

TEST_CASE("dataset layout, determinism and seed sensitivity") {
  SynthOptions opt;
  opt.desk_duration_s = 0.05;
  const auto a = generate_records(opt);
  const auto b = generate_records(opt);
  REQUIRE(a.size() == 72);
  std::map<TrackClass, int> per_class;
  std::set<std::string> ids;
  for (const auto& r : a) {
    ++per_class[r.label];
    ids.insert(r.ride_id);
    CHECK(r.acoustic.size() == r.acceleration.size());
    CHECK(r.acoustic.size() == 1000);
  }
  CHECK(ids.size() == 72);
  for (const auto& [c, n] : per_class) CHECK(n == 24);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].ride_id == b[i].ride_id);
    CHECK(a[i].acoustic.samples() == b[i].acoustic.samples());
    CHECK(a[i].acceleration.samples() == b[i].acceleration.samples());
  }
  opt.seed = 2;
  const auto c = generate_records(opt);
  CHECK(c[0].acoustic.samples() != a[0].acoustic.samples());

  CHECK(record_seed(1, 0, 20, 0) != record_seed(1, 0, 20, 1));
  CHECK(record_seed(1, 0, 20, 0) != record_seed(1, 1, 20, 0));
}

TEST_CASE("bad pass configurations are rejected") {
  const auto cls = TrackClassParams::defaults(TrackClass::NoDegradation);
  auto cfg = short_pass(80, 1);
  cfg.speed_kmh = 100;
  CHECK_THROWS_AS(generate_pass(cls, cfg), ValidationError);
  cfg = short_pass(80, 1);
  cfg.duration_s = 0.0;
  CHECK_THROWS_AS(generate_pass(cls, cfg), ValidationError);
  cfg = short_pass(80, 1);
  cfg.acoustic_snr_db = std::nan("");
  CHECK_THROWS_AS(generate_pass(cls, cfg), ValidationError);
  SynthOptions opt;
  opt.passes_per_speed = 0;
  CHECK_THROWS_AS(generate_records(opt), ValidationError);
}

#include "agasdf/experiments.hpp"
#include "agasdf/synthgen.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

using namespace agasdf;

namespace {

std::vector<RideMeta> ride_grid() {
  std::vector<RideMeta> rides;
  for (int c = 0; c < kNumClasses; ++c) {
    for (int speed : {20, 40, 60, 80}) {
      for (int p = 0; p < 6; ++p) {
        rides.push_back({"c" + std::to_string(c) + "_" + std::to_string(speed) + "_" + std::to_string(p),
                         static_cast<TrackClass>(c), speed});
      }
    }
  }
  return rides;
}

void check_partition(const Split& s, const std::vector<RideMeta>& rides) {
  std::set<std::string> train(s.train_rides.begin(), s.train_rides.end());
  std::set<std::string> test(s.test_rides.begin(), s.test_rides.end());
  CHECK(train.size() == s.train_rides.size());
  CHECK(test.size() == s.test_rides.size());
  for (const auto& r : test) CHECK(train.count(r) == 0);
  CHECK(train.size() + test.size() == rides.size());
}

BandDataset tiny_dataset() {
  SynthOptions opt;
  opt.desk_duration_s = 0.06;
  return make_band_dataset(generate_records(opt));
}

}  // namespace

TEST_CASE("mixed-speed split is 3:1 within every class and speed") {
  const auto rides = ride_grid();
  const auto s = make_split(rides, Task::Task1, 1);
  CHECK(s.train_rides.size() == 54);
  CHECK(s.test_rides.size() == 18);
  check_partition(s, rides);
  std::map<std::pair<TrackClass, int>, int> train_per_cell;
  std::set<std::string> train(s.train_rides.begin(), s.train_rides.end());
  for (const auto& r : rides) {
    if (train.count(r.ride_id)) ++train_per_cell[{r.label, r.speed_kmh}];
  }
  for (const auto& r : rides) {
    const int n = train_per_cell[{r.label, r.speed_kmh}];
    CHECK((n == 4 || n == 5));
  }
  const auto again = make_split(rides, Task::Task1, 1);
  CHECK(again.train_rides == s.train_rides);
  bool differs = false;
  for (std::uint64_t seed = 2; seed < 6; ++seed) differs |= make_split(rides, Task::Task1, seed).train_rides != s.train_rides;
  CHECK(differs);
}

TEST_CASE("speed tasks hold out exactly one speed") {
  const auto rides = ride_grid();
  std::map<std::string, int> speed_of;
  for (const auto& r : rides) speed_of[r.ride_id] = r.speed_kmh;
  for (Task t : {Task::Loso80, Task::C1, Task::C2, Task::C3}) {
    const auto s = make_split(rides, t, 3);
    check_partition(s, rides);
    CHECK(s.test_rides.size() == 18);
    for (const auto& r : s.test_rides) CHECK(speed_of[r] == held_out_speed(t));
    for (const auto& r : s.train_rides) CHECK(speed_of[r] != held_out_speed(t));
  }
  CHECK(held_out_speed(Task::C1) == 20);
  CHECK(held_out_speed(Task::C3) == 60);
  CHECK(held_out_speed(Task::Loso80) == 80);
  CHECK(held_out_speed(Task::Task1) == 0);
}

TEST_CASE("task names round trip") {
  for (Task t : kAllTasks) CHECK(task_from_string(to_string(t)) == t);
  CHECK_THROWS_AS(task_from_string("c4"), ValidationError);
}

TEST_CASE("mean and std formatting") {
  const auto v = mean_std({94.3, 96.5});
  CHECK(v.mean == doctest::Approx(95.4));
  CHECK(v.std == doctest::Approx(1.1));
  CHECK(v.count == 2);
  CHECK(format_mean_std(v) == "95.4 ± 1.1");
  CHECK(format_mean_std(mean_std({100.0})) == "100.0 ± 0.0");
}

TEST_CASE("weight sweep columns") {
  const auto r = sweep_ratios();
  REQUIRE(r.size() == 7);
  CHECK(r.front().to_string() == "1:0");
  CHECK(r[3].to_string() == "1:1");
  CHECK(r.back().to_string() == "0:1");
}

TEST_CASE("a small plan is deterministic and independent of thread count") {
  const auto ds = tiny_dataset();
  const auto rides = rides_of(ds);
  CHECK(rides.size() == 72);

  ExperimentPlan plan;
  plan.tasks = {Task::C1};
  plan.methods = {Method::Fdwt, Method::AgAsdf};
  plan.repetitions = 2;
  plan.epochs = 2;
  const auto a = run_plan(ds, plan);
  plan.threads = 3;
  const auto b = run_plan(ds, plan);
  REQUIRE(a.cells.size() == b.cells.size());
  CHECK(a.cells.size() == 3);
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    CHECK(a.cells[i].method == b.cells[i].method);
    CHECK(a.cells[i].report.average == b.cells[i].report.average);
    CHECK(a.cells[i].C == b.cells[i].C);
    CHECK(a.cells[i].gamma == b.cells[i].gamma);
  }
  const auto& ag = a.find(Task::C1, Method::AgAsdf);
  CHECK(ag.average.count == 2);
  CHECK(a.find(Task::C1, Method::Fdwt).average.count == 1);
  CHECK(ag.average.mean >= 0.0);
  CHECK(ag.average.mean <= 100.0);
}

#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "qleak/cloudsim.hpp"
#include "qleak/csv.hpp"

using namespace qleak;
using namespace qleak::cloudsim;
using doctest::Approx;

namespace {
Scenario basic(std::size_t reps = 10, std::size_t every = 1, double gap = 0.0) {
    Scenario s;
    s.device.name = "dev";
    s.device.inter_job_gap = gap;
    s.device.circuit_timings["victim"] = {2.0, 0.01};
    s.device.circuit_timings["probe"] = {0.5, 0.01};
    s.victim_circuit = "victim";
    s.attacker_probe_circuit = "probe";
    s.victim_repetitions = reps;
    s.probe_every = every;
    s.seed = 99;
    return s;
}
}  // namespace

TEST_CASE("job ordering and timeline") {
    const auto log = run_simulation(basic(5, 2, 0.25));
    // P V V P V V P V P
    REQUIRE(log.jobs.size() == 9);
    const char* owners = "PVVPVVPVP";
    for (std::size_t i = 0; i < log.jobs.size(); ++i) {
        CHECK(log.jobs[i].job_id == i);
        CHECK((log.jobs[i].owner == Owner::attacker) == (owners[i] == 'P'));
    }
    CHECK(log.jobs[0].started_at == 0.0);
    for (std::size_t i = 1; i < log.jobs.size(); ++i) {
        CHECK(log.jobs[i].started_at == Approx(log.jobs[i - 1].ended_at + 0.25));
        CHECK(log.jobs[i].queued_at == log.jobs[i - 1].ended_at);
        CHECK(log.jobs[i].ended_at > log.jobs[i].started_at);
    }
}

TEST_CASE("closing probe is not duplicated") {
    const auto log = run_simulation(basic(4, 2));
    CHECK(log.jobs.size() == 7);  // P V V P V V P
    CHECK(log.jobs.back().owner == Owner::attacker);
}

TEST_CASE("determinism and seed sensitivity") {
    auto s = basic(50);
    CHECK(run_simulation(s) == run_simulation(s));
    auto t = s;
    t.seed = 100;
    CHECK_FALSE(run_simulation(s) == run_simulation(t));
}

TEST_CASE("durations follow the circuit model") {
    auto s = basic(20000);
    const auto log = run_simulation(s);
    const auto d = ground_truth_durations(log);
    CHECK(d.size() == 20000);
    const auto sum = stats::summarize(d);
    CHECK(sum.mean == Approx(2.0).epsilon(0.002));
    CHECK(sum.variance == Approx(0.01).epsilon(0.05));
    CHECK(ground_truth_durations(log, Owner::attacker).size() == 20001);
}

TEST_CASE("tiny variance reproduces the mean up to clock rounding") {
    auto s = basic(100);
    s.device.circuit_timings["victim"] = {2.0, 1e-300};
    const auto log = run_simulation(s);
    for (double d : ground_truth_durations(log)) {
        // ended - started is rounded at the magnitude of the clock
        const double clock = 200.0;
        CHECK(std::fabs(d - 2.0) <= 8.0 * std::numeric_limits<double>::epsilon() * clock);
    }
}

TEST_CASE("truncation at the minimum duration is counted") {
    auto s = basic(1000);
    s.device.circuit_timings["victim"] = {0.0001, 1.0};
    const auto log = run_simulation(s);
    CHECK(log.truncated_draws > 300);
    const double slack = 8.0 * std::numeric_limits<double>::epsilon() * log.jobs.back().ended_at;
    for (double d : ground_truth_durations(log)) CHECK(d >= kMinDuration - slack);
}

TEST_CASE("latency alternatives and victim batching") {
    auto s = basic(4000);
    s.device.circuit_timings["victim"] = {2.0, 1e-6};
    s.device.mean_alternatives["victim"] = {1.0, 3.0};
    const auto d = ground_truth_durations(run_simulation(s));
    std::size_t low = 0;
    for (double x : d) {
        CHECK((std::fabs(x - 1.0) < 0.01 || std::fabs(x - 3.0) < 0.01));
        low += x < 2.0;
    }
    CHECK(low == doctest::Approx(2000).epsilon(0.06));

    auto b = basic(6, 1);
    b.device.min_victim_batch = 3;
    CHECK(b.effective_batch() == 3);
    CHECK(run_simulation(b).jobs.size() == 6 + 3);
}

TEST_CASE("scenario validation") {
    auto s = basic();
    s.victim_circuit = "missing";
    CHECK_THROWS_AS(run_simulation(s), ScenarioError);
    s = basic();
    s.victim_repetitions = 0;
    CHECK_THROWS_AS(s.validate(), ScenarioError);
    s = basic();
    s.probe_every = 0;
    CHECK_THROWS_AS(s.validate(), ScenarioError);
    s = basic();
    s.device.inter_job_gap = -1;
    CHECK_THROWS_AS(s.validate(), ScenarioError);
    s = basic();
    s.device.mean_alternatives["victim"] = {};
    CHECK_THROWS_AS(s.validate(), ScenarioError);
    s = basic();
    s.device.mean_alternatives["ghost"] = {1.0};
    CHECK_THROWS_AS(s.validate(), ScenarioError);
    CHECK_THROWS_AS(basic().device.timing("ghost"), ScenarioError);
}

TEST_CASE("job log CSV") {
    const auto log = run_simulation(basic(3));
    std::ostringstream out;
    write_joblog_csv(out, log);
    std::istringstream in(out.str());
    const auto rows = csv::read(in);
    REQUIRE(rows.size() == 1 + log.jobs.size());
    CHECK(rows[0] == csv::Row{"job_id", "owner", "circuit", "queued_at", "started_at", "ended_at"});
    CHECK(rows[1][1] == "attacker");
    CHECK(rows[2][1] == "victim");
    for (std::size_t i = 0; i < log.jobs.size(); ++i)
        CHECK(csv::parse_double(rows[i + 1][5]) == log.jobs[i].ended_at);
}

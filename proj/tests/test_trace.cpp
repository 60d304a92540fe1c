#include <doctest.h>

#include <sstream>

#include "qleak/cloudsim.hpp"
#include "qleak/csv.hpp"
#include "qleak/trace.hpp"

using namespace qleak;
using namespace qleak::trace;
using doctest::Approx;

namespace {
AttackerView view_of(std::initializer_list<std::pair<double, double>> probes) {
    AttackerView v;
    for (auto [s, e] : probes) v.probe_records.push_back({s, e});
    return v;
}

cloudsim::Scenario scenario(std::size_t reps, std::size_t every, double gap) {
    cloudsim::Scenario s;
    s.device.name = "dev";
    s.device.inter_job_gap = gap;
    s.device.circuit_timings["victim"] = {1.0, 0.01};
    s.device.circuit_timings["probe"] = {0.2, 0.0001};
    s.victim_circuit = "victim";
    s.attacker_probe_circuit = "probe";
    s.victim_repetitions = reps;
    s.probe_every = every;
    s.seed = 4;
    return s;
}
}  // namespace

TEST_CASE("interval extraction") {
    const auto v = view_of({{0, 1}, {3, 4}, {4, 5}});
    const auto iv = extract_intervals(v);
    REQUIRE(iv.size() == 2);
    CHECK(iv[0] == 2.0);
    CHECK(iv[1] == 0.0);
    CHECK_THROWS_AS(extract_intervals(view_of({{0, 1}})), TraceError);
    CHECK_THROWS_AS(extract_intervals(view_of({{0, 2}, {1, 3}})), TraceError);
}

TEST_CASE("execution count rounding") {
    CHECK(infer_execution_count(0.0, 1.0).count == 0);
    CHECK(infer_execution_count(0.2, 1.0).count == 1);
    CHECK(infer_execution_count(2.5, 1.0).count == 2);   // exact half rounds down
    CHECK(infer_execution_count(2.51, 1.0).count == 3);
    CHECK(infer_execution_count(3.0, 1.0).per_execution == 1.0);
    CHECK_THROWS_AS(infer_execution_count(1.0, 0.0), TraceError);
    CHECK_THROWS_AS(infer_execution_count(-1.0, 1.0), TraceError);
}

TEST_CASE("identity reconstruction at k = 1 and no gap") {
    const auto log = cloudsim::run_simulation(scenario(500, 1, 0.0));
    const auto truth = cloudsim::ground_truth_durations(log);
    const auto t = assemble_trace(attacker_view(log), 1.0, 0.0);
    REQUIRE(t.durations.size() == truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) CHECK(t.durations[i] == truth[i]);
    CHECK(t.effective_samples() == 500);
}

TEST_CASE("gap correction removes one gap per job boundary") {
    const auto log = cloudsim::run_simulation(scenario(300, 3, 0.4));
    const auto truth = cloudsim::ground_truth_durations(log);
    const auto t = assemble_trace(attacker_view(log), 1.0, 0.4);
    REQUIRE(t.inferred_counts.size() == 100);
    for (auto c : t.inferred_counts) CHECK(c == 3);
    for (std::size_t b = 0; b < 100; ++b) {
        const double mean = (truth[3 * b] + truth[3 * b + 1] + truth[3 * b + 2]) / 3.0;
        for (int k = 0; k < 3; ++k) CHECK(t.durations[3 * b + k] == Approx(mean).epsilon(1e-12));
    }
    const auto kb = assemble_trace_known_batch(attacker_view(log), 3, 0.4);
    CHECK(kb.durations == t.durations);
}

TEST_CASE("degenerate intervals") {
    const auto t = assemble_trace(view_of({{0, 1}, {1, 2}, {2.1, 3}, {5, 6}}), 1.0, 0.5);
    CHECK(t.empty_intervals == 1);
    CHECK(t.invalid_intervals == 1);
    REQUIRE(t.durations.size() == 1);
    CHECK(t.durations[0] == Approx(1.0));  // 2 - 2 * 0.5
    CHECK_THROWS_AS(assemble_trace(view_of({{0, 1}, {2, 3}}), 0.0), TraceError);
    CHECK_THROWS_AS(assemble_trace(view_of({{0, 1}, {2, 3}}), 1.0, -0.1), TraceError);
    CHECK_THROWS_AS(assemble_trace_known_batch(view_of({{0, 1}, {2, 3}}), 0), TraceError);
}

TEST_CASE("warm-up estimate") {
    const std::vector<double> w{1.4, 1.6};
    CHECK(estimate_avg_victim(w, 0.1) == Approx(1.3));
    CHECK_THROWS_AS(estimate_avg_victim(std::vector<double>{}), TraceError);
    CHECK_THROWS_AS(estimate_avg_victim(w, 1.0), TraceError);
}

TEST_CASE("averaging shrinks per-duration spread but not information") {
    const auto log = cloudsim::run_simulation(scenario(3000, 3, 0.0));
    const auto t = assemble_trace(attacker_view(log), 1.0, 0.0);
    const auto s = stats::summarize(t.durations);
    CHECK(s.variance == Approx(0.01 / 3).epsilon(0.1));
    CHECK(t.effective_samples() == 1000);
}

TEST_CASE("trace CSV") {
    Trace t;
    t.durations = {0.1, 1.0 / 3.0};
    std::ostringstream out;
    write_trace_csv(out, t);
    std::istringstream in(out.str());
    const auto rows = csv::read(in);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0][0] == "duration_s");
    CHECK(csv::parse_double(rows[2][0]) == 1.0 / 3.0);
}

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "qleak/csv.hpp"
#include "qleak/mitigations.hpp"

using namespace qleak;
using namespace qleak::mitigations;
using doctest::Approx;

namespace {
constexpr double kGhz = 2.779299043, kBv = 2.624919482, kVar = 0.3;

cloudsim::Scenario hw_pair() {
    cloudsim::Scenario s;
    s.device.name = "hw";
    s.device.circuit_timings["GHZ"] = {kGhz, kVar};
    s.device.circuit_timings["BV"] = {kBv, kVar};
    s.device.circuit_timings["probe"] = {20.0, kVar};
    s.victim_circuit = "GHZ";
    s.attacker_probe_circuit = "probe";
    s.victim_repetitions = 10;
    s.seed = 1;
    return s;
}

Mitigation noise(double v, std::string target = "") {
    Mitigation m;
    m.kind = MitigationKind::timer_noise;
    m.added_variance = v;
    m.target = std::move(target);
    return m;
}
}  // namespace

TEST_CASE("kind names") {
    for (const char* n : {"compile-randomness", "scheduler-batching", "circuit-padding", "timer-noise"})
        CHECK(std::string(to_string(parse_kind(n))) == n);
    CHECK_THROWS_AS(parse_kind("magic"), MitigationError);
}

TEST_CASE("apply is pure and kind specific") {
    const auto dev = hw_pair().device;
    const auto copy = dev;

    auto zero = apply(noise(0.0), dev);
    CHECK(zero.circuit_timings == dev.circuit_timings);

    auto twice = apply(noise(0.1), apply(noise(0.2), dev));
    CHECK(twice.timing("GHZ").variance == Approx(kVar + 0.3));
    CHECK(twice.timing("BV").variance == Approx(kVar + 0.3));
    CHECK(dev.circuit_timings == copy.circuit_timings);

    auto targeted = apply(noise(0.1, "GHZ"), dev);
    CHECK(targeted.timing("GHZ").variance == Approx(kVar + 0.1));
    CHECK(targeted.timing("BV").variance == kVar);

    Mitigation pad;
    pad.kind = MitigationKind::circuit_padding;
    pad.target = "BV";
    pad.offset = 0.05;
    CHECK(apply(pad, dev).timing("BV").mean == Approx(kBv + 0.05));

    Mitigation one;
    one.kind = MitigationKind::compile_randomness;
    one.target = "GHZ";
    one.latency_set = {kGhz};
    const auto same = apply(one, dev);
    CHECK(same.circuit_timings == dev.circuit_timings);
    CHECK(same.mean_alternatives.empty());

    Mitigation mix = one;
    mix.latency_set = {2.6, 2.8, 3.0};
    const auto mixed = apply(mix, dev);
    CHECK(mixed.mean_alternatives.at("GHZ").size() == 3);
    const auto eff = effective_timing(mixed, "GHZ");
    CHECK(eff.mean == Approx(2.8));
    CHECK(eff.variance == Approx(kVar + 0.08 / 3.0));

    Mitigation batch;
    batch.kind = MitigationKind::scheduler_batching;
    batch.batch_size = 4;
    CHECK(apply(batch, dev).min_victim_batch == 4);
}

TEST_CASE("invalid mitigations") {
    const auto dev = hw_pair().device;
    CHECK_THROWS_AS(apply(noise(-1.0), dev), MitigationError);
    CHECK_THROWS_AS(apply(noise(1.0, "ghost"), dev), MitigationError);
    Mitigation m;
    m.kind = MitigationKind::compile_randomness;
    CHECK_THROWS_AS(m.validate(), MitigationError);
    m.latency_set = {1.0, -2.0};
    CHECK_THROWS_AS(m.validate(), MitigationError);
    m = {};
    m.kind = MitigationKind::scheduler_batching;
    m.batch_size = 0;
    CHECK_THROWS_AS(m.validate(), MitigationError);
    m = {};
    m.kind = MitigationKind::circuit_padding;
    m.offset = -0.1;
    CHECK_THROWS_AS(m.validate(), MitigationError);
}

TEST_CASE("evaluate: no mitigation and timer noise") {
    EvaluationSetup setup;
    setup.scenario = hw_pair();
    setup.trials = 100;
    setup.seed = 3;
    setup.jobs = 2;

    const auto none = evaluate({}, setup);
    CHECK(none.mitigation == "none");
    CHECK(none.ratio == 1.0);
    CHECK(none.baseline_n == Approx(198.5609927).epsilon(1e-6));
    CHECK(none.budget == 199);
    CHECK(none.baseline_success == none.mitigated_success);

    const auto doubled = evaluate({noise(kVar)}, setup);
    CHECK(doubled.ratio == Approx(2.0).epsilon(0.05));
    // closed form: required_sample_size at the diluted effect size
    const double d = (kGhz - kBv) / std::sqrt(2 * kVar);
    CHECK(doubled.mitigated_n == Approx(stats::required_sample_size(d)).epsilon(1e-9));
    CHECK(doubled.mitigated_success <= doubled.baseline_success);

    setup.jobs = 1;
    const auto again = evaluate({noise(kVar)}, setup);
    CHECK(again.baseline_success == doubled.baseline_success);
    CHECK(again.mitigated_success == doubled.mitigated_success);
}

TEST_CASE("timer-noise ratio tracks (s2 + v) / s2") {
    EvaluationSetup setup;
    setup.scenario = hw_pair();
    setup.trials = 1;
    for (double v : {0.05, 0.3, 0.9}) {
        const auto r = evaluate({noise(v)}, setup);
        CHECK(r.ratio == Approx((kVar + v) / kVar).epsilon(0.05));
    }
}

TEST_CASE("compile randomness straddling two circuits breaks UC") {
    EvaluationSetup setup;
    setup.scenario = hw_pair();
    setup.trials = 200;
    setup.seed = 9;
    Mitigation m;
    m.kind = MitigationKind::compile_randomness;
    m.target = "GHZ";
    m.latency_set = {2.62, 2.78};
    const auto r = evaluate({m}, setup);
    CHECK(std::isinf(r.mitigated_n));
    CHECK(r.mitigated_success < 1.0);
    CHECK(r.mitigated_success < r.baseline_success);
}

TEST_CASE("QP evaluation and report CSV") {
    EvaluationSetup setup;
    setup.scenario.device.name = "dev-a";
    setup.scenario.device.circuit_timings["c"] = {10.0, 0.3};
    setup.scenario.device.circuit_timings["probe"] = {1.0, 0.3};
    setup.scenario.victim_circuit = "c";
    setup.scenario.attacker_probe_circuit = "probe";
    cloudsim::DeviceProfile other;
    other.name = "dev-b";
    other.circuit_timings["c"] = {20.0, 0.3};
    setup.other_devices = {other};
    setup.attack = attacks::AttackKind::qp;
    setup.trials = 50;
    const auto r = evaluate({noise(0.3)}, setup);
    CHECK(r.attack == attacks::AttackKind::qp);
    CHECK(r.baseline_success > 0.9);

    std::ostringstream out;
    write_report_header(out);
    write_report_row(out, r);
    std::istringstream in(out.str());
    const auto rows = csv::read(in);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].size() == 9);
    CHECK(rows[1][1] == "qp");

    setup.attack = attacks::AttackKind::ca;
    CHECK_THROWS_AS(evaluate({}, setup), MitigationError);
    setup.attack = attacks::AttackKind::qp;
    setup.other_devices.clear();
    CHECK_THROWS_AS(evaluate({}, setup), MitigationError);
}

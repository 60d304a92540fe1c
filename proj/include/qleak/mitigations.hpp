#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "qleak/attacks.hpp"
#include "qleak/cloudsim.hpp"
#include "qleak/stats.hpp"

namespace qleak::mitigations {

class MitigationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class MitigationKind { compile_randomness, scheduler_batching, circuit_padding, timer_noise };
MitigationKind parse_kind(const std::string& text);  // "compile-randomness", ...
const char* to_string(MitigationKind k);

struct Mitigation {
    MitigationKind kind = MitigationKind::timer_noise;
    std::string target;                // circuit id; empty applies to every circuit
    std::vector<double> latency_set;   // compile-randomness: alternative mean latencies (s)
    std::size_t batch_size = 1;        // scheduler-batching
    double offset = 0.0;               // circuit-padding (s)
    double added_variance = 0.0;       // timer-noise (s^2)

    void validate() const;
    std::string describe() const;
};

// Pure: returns a transformed copy.
cloudsim::DeviceProfile apply(const Mitigation& m, const cloudsim::DeviceProfile& profile);
cloudsim::DeviceProfile apply_all(const std::vector<Mitigation>& ms, const cloudsim::DeviceProfile& profile);

// Single-Gaussian summary of what one victim job looks like: a latency
// mixture is replaced by its first two moments.
stats::TimingDistribution effective_timing(const cloudsim::DeviceProfile& profile, const std::string& circuit);

struct EvaluationSetup {
    cloudsim::Scenario scenario;                       // unmitigated victim setting
    attacks::AttackKind attack = attacks::AttackKind::uc;
    std::vector<cloudsim::DeviceProfile> other_devices;  // qp only
    stats::PowerSpec spec{};
    double confidence = 0.95;  // qp DoM band
    std::size_t trials = 200;
    std::uint64_t seed = 0;
    unsigned jobs = 1;
};

struct InflationReport {
    std::string mitigation;  // "none" when the list is empty
    attacks::AttackKind attack = attacks::AttackKind::uc;
    double baseline_n = 0.0;   // victim runs needed without mitigation
    double mitigated_n = 0.0;  // inf when the attack converges to a wrong label
    double ratio = 1.0;
    std::size_t budget = 0;    // victim runs per trial (baseline n rounded up)
    std::size_t trials = 0;
    double baseline_success = 0.0;
    double mitigated_success = 0.0;
};

// The attacker keeps its stale, unmitigated references and assumes each
// probe interval holds scenario.probe_every victim runs.
InflationReport evaluate(const std::vector<Mitigation>& ms, const EvaluationSetup& setup);

// mitigation,attack,baseline_n,mitigated_n,ratio,budget,trials,baseline_success,mitigated_success
void write_report_header(std::ostream& out);
void write_report_row(std::ostream& out, const InflationReport& r);

}  // namespace qleak::mitigations

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qleak/attacks.hpp"
#include "qleak/baseline.hpp"
#include "qleak/cloudsim.hpp"
#include "qleak/mitigations.hpp"
#include "qleak/trace.hpp"

// JSON scenario files and the attack runner behind `qleak attack`.
//
//   {
//     "seed": 7,
//     "device": {
//       "name": "dev-a", "inter_job_gap": 0.0,
//       "from_table": {"path": "../table1.csv", "backend": "sim"},
//       "grover": {"base_latency": 0.16, ...},      // or true for defaults
//       "circuits": {"probe": {"mean": 0.1, "variance": 0.003}}
//     },
//     "victim": {"circuit": "GHZ", "repetitions": 3000},
//     "victim_b": {"circuit": "GHZ"},               // ca / qm only
//     "probe": {"circuit": "BV", "every": 1},
//     "attack": {"table": "../table1.csv", "backend": "sim", "alpha": 0.05,
//                "power": 0.8, "confidence": 0.95,
//                "count_mode": "known" | "infer", "avg_victim": 0.17},
//     "reference_devices": [ {device...}, ... ],    // qp only
//     "mitigations": [ {"kind": "timer-noise", "target": "GHZ", "added_variance": 0.003} ]
//   }
//
// Relative paths resolve against the scenario file's directory.
namespace qleak::scenario {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class CountMode { known, infer };

struct AttackConfig {
    std::optional<baseline::BaselineTable> table;
    baseline::Backend backend = baseline::Backend::simulator;
    stats::PowerSpec spec{};
    double confidence = 0.95;
    CountMode count_mode = CountMode::known;
    std::optional<double> avg_victim;
};

struct ScenarioFile {
    cloudsim::Scenario scenario;
    std::optional<std::string> victim_b;
    AttackConfig attack;
    std::optional<baseline::GroverCalibration> grover;
    std::vector<cloudsim::DeviceProfile> reference_devices;
    std::vector<mitigations::Mitigation> mitigations;
};

ScenarioFile parse_scenario(const std::string& json_text, const std::filesystem::path& base_dir);
ScenarioFile load_scenario(const std::filesystem::path& path);

using DomSeries = std::pair<std::string, std::vector<stats::DomPoint>>;

struct AttackOutput {
    attacks::AttackVerdict verdict;
    trace::Trace trace;
    std::vector<DomSeries> dom;  // ca/qm: one series; qp: one per device
    std::optional<baseline::Matrix> ovl;       // co
    std::optional<baseline::Matrix> required;  // co
    std::size_t truncated_draws = 0;
};

// Simulates the scenario, reconstructs the victim trace and runs the attack.
AttackOutput run_attack(const ScenarioFile& file, attacks::AttackKind kind);

// Victim trace as the attacker reconstructs it.
trace::Trace reconstruct(const ScenarioFile& file, const cloudsim::JobLog& log);

// n,dom,band,exceeds
void write_dom_csv(std::ostream& out, const std::vector<stats::DomPoint>& series);

}  // namespace qleak::scenario

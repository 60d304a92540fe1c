#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "qleak/stats.hpp"

namespace qleak::cloudsim {

class ScenarioError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class Owner { victim, attacker };
const char* to_string(Owner o);

// Durations shorter than this are clamped and counted as truncated draws.
inline constexpr double kMinDuration = 1e-6;

struct DeviceProfile {
    std::string name;
    std::map<std::string, stats::TimingDistribution> circuit_timings;
    double inter_job_gap = 0.0;  // seconds between consecutive jobs

    // Per-job mean latency drawn uniformly from these alternatives instead of
    // the circuit's base mean (randomized compilation). Variance is kept.
    std::map<std::string, std::vector<double>> mean_alternatives;
    // The scheduler runs at least this many victim jobs between two attacker
    // probes (batched multi-programming).
    std::size_t min_victim_batch = 1;

    bool has(const std::string& circuit) const { return circuit_timings.contains(circuit); }
    const stats::TimingDistribution& timing(const std::string& circuit) const;
    void validate() const;
};

struct Scenario {
    DeviceProfile device;
    std::string victim_circuit;
    std::size_t victim_repetitions = 1;
    std::string attacker_probe_circuit;
    std::size_t probe_every = 1;  // attacker probe after every k-th victim job
    std::uint64_t seed = 0;

    // Victim jobs the attacker's probes actually bracket.
    std::size_t effective_batch() const;
    void validate() const;
};

struct JobRecord {
    std::size_t job_id = 0;
    Owner owner = Owner::victim;
    std::string circuit;
    double queued_at = 0.0;
    double started_at = 0.0;
    double ended_at = 0.0;

    double duration() const { return ended_at - started_at; }
    friend bool operator==(const JobRecord&, const JobRecord&) = default;
};

struct JobLog {
    std::vector<JobRecord> jobs;
    std::size_t truncated_draws = 0;

    friend bool operator==(const JobLog&, const JobLog&) = default;
};

// Serial single-device execution: one attacker probe first, then victim jobs
// with a probe after every effective_batch() of them, closing with a probe.
// Same scenario (including seed) gives a bit-identical log.
JobLog run_simulation(const Scenario& scenario);

std::vector<double> ground_truth_durations(const JobLog& log, Owner owner = Owner::victim);

// job_id,owner,circuit,queued_at,started_at,ended_at
void write_joblog_csv(std::ostream& out, const JobLog& log);

}  // namespace qleak::cloudsim

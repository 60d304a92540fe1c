#include "qleak/cloudsim.hpp"

#include <cmath>
#include <ostream>

#include "qleak/csv.hpp"
#include "qleak/random.hpp"

namespace qleak::cloudsim {

const char* to_string(Owner o) { return o == Owner::victim ? "victim" : "attacker"; }

const stats::TimingDistribution& DeviceProfile::timing(const std::string& circuit) const {
    auto it = circuit_timings.find(circuit);
    if (it == circuit_timings.end())
        throw ScenarioError("device '" + name + "' has no circuit '" + circuit + "'");
    return it->second;
}

void DeviceProfile::validate() const {
    if (!(inter_job_gap >= 0.0) || !std::isfinite(inter_job_gap))
        throw ScenarioError("device '" + name + "': inter_job_gap must be a non-negative number");
    for (const auto& [id, t] : circuit_timings)
        if (!(t.variance > 0.0)) throw ScenarioError("device '" + name + "': circuit '" + id + "' needs positive variance");
    for (const auto& [id, alts] : mean_alternatives) {
        if (!has(id)) throw ScenarioError("device '" + name + "': latency alternatives for unknown circuit '" + id + "'");
        if (alts.empty()) throw ScenarioError("device '" + name + "': empty latency alternative set for '" + id + "'");
    }
    if (min_victim_batch < 1) throw ScenarioError("device '" + name + "': victim batch must be at least 1");
}

std::size_t Scenario::effective_batch() const { return std::max(probe_every, device.min_victim_batch); }

void Scenario::validate() const {
    device.validate();
    if (victim_repetitions < 1) throw ScenarioError("scenario: victim_repetitions must be at least 1");
    if (probe_every < 1) throw ScenarioError("scenario: probe_every must be at least 1");
    if (!device.has(victim_circuit)) throw ScenarioError("scenario: unknown victim circuit '" + victim_circuit + "'");
    if (!device.has(attacker_probe_circuit))
        throw ScenarioError("scenario: unknown probe circuit '" + attacker_probe_circuit + "'");
}

JobLog run_simulation(const Scenario& scenario) {
    scenario.validate();
    Rng rng = make_rng(scenario.seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    const auto& device = scenario.device;

    JobLog log;
    const std::size_t batch = scenario.effective_batch();
    log.jobs.reserve(scenario.victim_repetitions + scenario.victim_repetitions / batch + 2);
    double clock = 0.0;

    auto submit = [&](Owner owner, const std::string& circuit) {
        const auto& t = device.timing(circuit);
        double mean = t.mean;
        if (auto alt = device.mean_alternatives.find(circuit); alt != device.mean_alternatives.end()) {
            std::uniform_int_distribution<std::size_t> pick(0, alt->second.size() - 1);
            mean = alt->second[pick(rng)];
        }
        double duration = mean + t.stddev() * unit(rng);
        if (duration < kMinDuration) {
            duration = kMinDuration;
            ++log.truncated_draws;
        }
        JobRecord job;
        job.job_id = log.jobs.size();
        job.owner = owner;
        job.circuit = circuit;
        job.queued_at = clock;
        job.started_at = log.jobs.empty() ? clock : clock + device.inter_job_gap;
        job.ended_at = job.started_at + duration;
        clock = job.ended_at;
        log.jobs.push_back(std::move(job));
    };

    submit(Owner::attacker, scenario.attacker_probe_circuit);
    for (std::size_t v = 1; v <= scenario.victim_repetitions; ++v) {
        submit(Owner::victim, scenario.victim_circuit);
        if (v % batch == 0) submit(Owner::attacker, scenario.attacker_probe_circuit);
    }
    if (log.jobs.back().owner != Owner::attacker) submit(Owner::attacker, scenario.attacker_probe_circuit);
    return log;
}

std::vector<double> ground_truth_durations(const JobLog& log, Owner owner) {
    std::vector<double> out;
    for (const auto& job : log.jobs)
        if (job.owner == owner) out.push_back(job.ended_at - job.started_at);
    return out;
}

void write_joblog_csv(std::ostream& out, const JobLog& log) {
    csv::write_row(out, {"job_id", "owner", "circuit", "queued_at", "started_at", "ended_at"});
    for (const auto& j : log.jobs)
        csv::write_row(out, {std::to_string(j.job_id), to_string(j.owner), j.circuit, csv::format(j.queued_at),
                             csv::format(j.started_at), csv::format(j.ended_at)});
}

}  // namespace qleak::cloudsim

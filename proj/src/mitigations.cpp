#include "qleak/mitigations.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "qleak/baseline.hpp"
#include "qleak/csv.hpp"
#include "qleak/random.hpp"
#include "qleak/trace.hpp"

namespace qleak::mitigations {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

MitigationKind parse_kind(const std::string& text) {
    if (text == "compile-randomness") return MitigationKind::compile_randomness;
    if (text == "scheduler-batching") return MitigationKind::scheduler_batching;
    if (text == "circuit-padding") return MitigationKind::circuit_padding;
    if (text == "timer-noise") return MitigationKind::timer_noise;
    throw MitigationError("unknown mitigation '" + text + "'");
}

const char* to_string(MitigationKind k) {
    switch (k) {
        case MitigationKind::compile_randomness: return "compile-randomness";
        case MitigationKind::scheduler_batching: return "scheduler-batching";
        case MitigationKind::circuit_padding: return "circuit-padding";
        case MitigationKind::timer_noise: return "timer-noise";
    }
    return "?";
}

void Mitigation::validate() const {
    switch (kind) {
        case MitigationKind::compile_randomness:
            if (latency_set.empty()) throw MitigationError("compile-randomness: latency set is empty");
            for (double x : latency_set)
                if (!(x > 0.0) || !std::isfinite(x)) throw MitigationError("compile-randomness: latencies must be positive");
            break;
        case MitigationKind::scheduler_batching:
            if (batch_size < 1) throw MitigationError("scheduler-batching: batch size must be at least 1");
            break;
        case MitigationKind::circuit_padding:
            if (!(offset >= 0.0) || !std::isfinite(offset)) throw MitigationError("circuit-padding: offset must be non-negative");
            break;
        case MitigationKind::timer_noise:
            if (!(added_variance >= 0.0) || !std::isfinite(added_variance))
                throw MitigationError("timer-noise: added variance must be non-negative");
            break;
    }
}

std::string Mitigation::describe() const {
    std::ostringstream s;
    s << to_string(kind);
    if (!target.empty()) s << '@' << target;
    switch (kind) {
        case MitigationKind::compile_randomness: s << '(' << latency_set.size() << " latencies)"; break;
        case MitigationKind::scheduler_batching: s << "(batch " << batch_size << ')'; break;
        case MitigationKind::circuit_padding: s << "(+" << csv::format(offset) << " s)"; break;
        case MitigationKind::timer_noise: s << "(+" << csv::format(added_variance) << " s^2)"; break;
    }
    return s.str();
}

cloudsim::DeviceProfile apply(const Mitigation& m, const cloudsim::DeviceProfile& profile) {
    m.validate();
    if (!m.target.empty() && !profile.has(m.target))
        throw MitigationError(std::string(to_string(m.kind)) + ": device '" + profile.name + "' has no circuit '" +
                              m.target + "'");
    cloudsim::DeviceProfile out = profile;
    if (m.kind == MitigationKind::scheduler_batching) {
        out.min_victim_batch = std::max(out.min_victim_batch, m.batch_size);
        return out;
    }
    for (auto& [id, t] : out.circuit_timings) {
        if (!m.target.empty() && id != m.target) continue;
        switch (m.kind) {
            case MitigationKind::compile_randomness:
                if (m.latency_set.size() == 1) {
                    t.mean = m.latency_set.front();
                    out.mean_alternatives.erase(id);
                } else {
                    out.mean_alternatives[id] = m.latency_set;
                }
                break;
            case MitigationKind::circuit_padding:
                t.mean += m.offset;
                if (auto alt = out.mean_alternatives.find(id); alt != out.mean_alternatives.end())
                    for (double& x : alt->second) x += m.offset;
                break;
            case MitigationKind::timer_noise:
                t.variance += m.added_variance;
                break;
            case MitigationKind::scheduler_batching:
                break;
        }
    }
    return out;
}

cloudsim::DeviceProfile apply_all(const std::vector<Mitigation>& ms, const cloudsim::DeviceProfile& profile) {
    cloudsim::DeviceProfile out = profile;
    for (const auto& m : ms) out = apply(m, out);
    return out;
}

stats::TimingDistribution effective_timing(const cloudsim::DeviceProfile& profile, const std::string& circuit) {
    stats::TimingDistribution t = profile.timing(circuit);
    auto alt = profile.mean_alternatives.find(circuit);
    if (alt == profile.mean_alternatives.end()) return t;
    const auto& xs = alt->second;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double spread = 0.0;
    for (double x : xs) spread += (x - mean) * (x - mean);
    spread /= static_cast<double>(xs.size());
    return {mean, t.variance + spread};
}

namespace {

struct Candidates {
    std::vector<std::string> names;
    std::vector<stats::TimingDistribution> models;
    std::size_t victim = 0;
};

// Victim runs needed when each probe interval holds `k` runs but the attacker
// divides by `belief`. Nearest-mean decision against stale references.
double runs_needed(const Candidates& c, const stats::TimingDistribution& observed, std::size_t k, std::size_t belief,
                   const stats::PowerSpec& spec) {
    const double kk = static_cast<double>(k), bb = static_cast<double>(belief);
    const double m = kk * observed.mean / bb;
    const double v = kk * observed.variance / (bb * bb);
    const double own = std::fabs(m - c.models[c.victim].mean);
    double margin = kInf;
    for (std::size_t j = 0; j < c.models.size(); ++j) {
        if (j == c.victim) continue;
        if (std::fabs(m - c.models[j].mean) - own < attacks::kTieTolerance) return kInf;
        margin = std::min(margin, std::fabs(0.5 * (c.models[c.victim].mean + c.models[j].mean) - m));
    }
    const double d = 2.0 * margin / std::sqrt(v);
    return stats::required_sample_size(d, spec) * kk;
}

std::uint64_t trial_seed(std::uint64_t seed, std::size_t trial) { return make_rng(seed, trial)(); }

baseline::GroverVariant parse_variant(const std::string& label, const stats::TimingDistribution& t) {
    // i<iterations>-k<bbb>
    if (label.size() != 7 || label[0] != 'i' || label[2] != '-' || label[3] != 'k' || label[1] < '1' || label[1] > '3')
        throw MitigationError("co: circuit '" + label + "' is not a Grover variant label");
    baseline::GroverVariant v;
    v.iterations = label[1] - '0';
    v.key = label.substr(4);
    int k = 0;
    for (char ch : v.key) {
        if (ch != '0' && ch != '1') throw MitigationError("co: bad key in '" + label + "'");
        k = 2 * k + (ch - '0');
    }
    v.index = 8 * (v.iterations - 1) + k + 1;
    v.timing = t;
    return v;
}

}  // namespace

InflationReport evaluate(const std::vector<Mitigation>& ms, const EvaluationSetup& setup) {
    const auto& sc = setup.scenario;
    sc.validate();
    setup.spec.validate();
    if (setup.trials < 1) throw MitigationError("evaluate: need at least one trial");
    const auto kind = setup.attack;
    if (kind == attacks::AttackKind::ca || kind == attacks::AttackKind::qm)
        throw MitigationError("evaluate: supported attacks are uc, co and qp");

    const cloudsim::DeviceProfile& base = sc.device;
    const cloudsim::DeviceProfile mitigated = apply_all(ms, base);

    Candidates cand;
    if (kind == attacks::AttackKind::qp) {
        if (setup.other_devices.empty()) throw MitigationError("evaluate: qp needs at least one other device");
        cand.names.push_back(base.name);
        cand.models.push_back(base.timing(sc.victim_circuit));
        for (const auto& d : setup.other_devices) {
            cand.names.push_back(d.name);
            cand.models.push_back(d.timing(sc.victim_circuit));
        }
    } else {
        for (const auto& [id, t] : base.circuit_timings) {
            if (kind == attacks::AttackKind::co && id == sc.attacker_probe_circuit && id != sc.victim_circuit) continue;
            if (id == sc.victim_circuit) cand.victim = cand.names.size();
            cand.names.push_back(id);
            cand.models.push_back(t);
        }
    }

    const std::size_t belief = sc.probe_every;
    InflationReport r;
    r.mitigation = "none";
    if (!ms.empty()) {
        r.mitigation.clear();
        for (const auto& m : ms) r.mitigation += (r.mitigation.empty() ? "" : "+") + m.describe();
    }
    r.attack = kind;
    r.trials = setup.trials;
    r.baseline_n = runs_needed(cand, effective_timing(base, sc.victim_circuit), sc.effective_batch(), belief, setup.spec);
    cloudsim::Scenario msc = sc;
    msc.device = mitigated;
    r.mitigated_n =
        runs_needed(cand, effective_timing(mitigated, sc.victim_circuit), msc.effective_batch(), belief, setup.spec);
    if (!std::isfinite(r.baseline_n)) throw MitigationError("evaluate: the unmitigated attack cannot succeed");
    r.ratio = r.mitigated_n / r.baseline_n;

    std::size_t budget = static_cast<std::size_t>(std::ceil(r.baseline_n - 1e-9));
    budget = ((budget + belief - 1) / belief) * belief;
    budget = std::max<std::size_t>(budget, kind == attacks::AttackKind::qp ? 2 * belief : belief);
    r.budget = budget;

    std::optional<attacks::UcClassifier> uc;
    std::optional<attacks::CoIdentifier> co;
    std::string co_truth;
    if (kind == attacks::AttackKind::uc) {
        std::vector<attacks::Reference> refs;
        for (std::size_t i = 0; i < cand.names.size(); ++i) refs.push_back({cand.names[i], cand.models[i]});
        uc.emplace(std::move(refs), setup.spec);
    } else if (kind == attacks::AttackKind::co) {
        std::vector<baseline::GroverVariant> cat;
        for (std::size_t i = 0; i < cand.names.size(); ++i) cat.push_back(parse_variant(cand.names[i], cand.models[i]));
        co.emplace(std::move(cat), setup.spec);
        co_truth = sc.victim_circuit;
    }
    std::vector<cloudsim::DeviceProfile> qp_devices;
    if (kind == attacks::AttackKind::qp) {
        qp_devices.push_back(base);
        qp_devices.insert(qp_devices.end(), setup.other_devices.begin(), setup.other_devices.end());
    }

    auto run_once = [&](const cloudsim::DeviceProfile& device, std::uint64_t seed) {
        cloudsim::Scenario s = sc;
        s.device = device;
        s.victim_repetitions = budget;
        s.seed = seed;
        const auto t = trace::assemble_trace_known_batch(trace::attacker_view(cloudsim::run_simulation(s)), belief,
                                                         device.inter_job_gap);
        if (t.durations.empty()) return false;
        switch (kind) {
            case attacks::AttackKind::uc: return uc->classify(t.durations).label == sc.victim_circuit;
            case attacks::AttackKind::co: return co->identify(t.durations).verdict.label == co_truth;
            default:
                if (t.durations.size() < 2) return false;
                return attacks::qp_fingerprint(t, qp_devices, sc.victim_circuit, setup.confidence, seed, setup.spec)
                           .verdict.label == base.name;
        }
    };

    std::atomic<std::size_t> ok_base{0}, ok_mit{0};
    parallel_for(setup.trials, setup.jobs, [&](std::size_t trial) {
        const auto seed = trial_seed(setup.seed, trial);
        if (run_once(base, seed)) ++ok_base;
        if (run_once(mitigated, seed)) ++ok_mit;
    });
    r.baseline_success = static_cast<double>(ok_base) / static_cast<double>(setup.trials);
    r.mitigated_success = static_cast<double>(ok_mit) / static_cast<double>(setup.trials);
    return r;
}

void write_report_header(std::ostream& out) {
    csv::write_row(out, {"mitigation", "attack", "baseline_n", "mitigated_n", "ratio", "budget", "trials",
                         "baseline_success", "mitigated_success"});
}

void write_report_row(std::ostream& out, const InflationReport& r) {
    csv::write_row(out, {r.mitigation, attacks::to_string(r.attack), csv::format(r.baseline_n),
                         csv::format(r.mitigated_n), csv::format(r.ratio), std::to_string(r.budget),
                         std::to_string(r.trials), csv::format(r.baseline_success), csv::format(r.mitigated_success)});
}

}  // namespace qleak::mitigations

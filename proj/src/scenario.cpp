#include "qleak/scenario.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "qleak/csv.hpp"
#include "qleak/random.hpp"

namespace qleak::scenario {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("field '") + key + "': " + e.what());
    }
}

template <typename T>
T require(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

baseline::BaselineTable load_table_spec(const json& j, const fs::path& base, const std::string& where,
                                        baseline::Backend& backend_out) {
    auto table = baseline::load_table(resolve(base, require<std::string>(j, "path", where)));
    backend_out = baseline::parse_backend(get_or<std::string>(j, "backend", "sim"));
    if (j.contains("variance")) {
        const double v = require<double>(j, "variance", where);
        (backend_out == baseline::Backend::simulator ? table.sim_variance : table.qc_variance) = v;
    }
    table.validate();
    return table;
}

baseline::GroverCalibration parse_grover(const json& j) {
    baseline::GroverCalibration cal;
    if (j.is_boolean()) return cal;
    if (!j.is_object()) throw ConfigError("device.grover: expected an object or true");
    cal.base_latency = get_or(j, "base_latency", cal.base_latency);
    cal.per_iteration = get_or(j, "per_iteration", cal.per_iteration);
    cal.per_oracle_spread = get_or(j, "per_oracle_spread", cal.per_oracle_spread);
    cal.variance = get_or(j, "variance", cal.variance);
    return cal;
}

cloudsim::DeviceProfile parse_device(const json& j, const fs::path& base, const std::string& where,
                                     std::optional<baseline::GroverCalibration>* grover_out) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    cloudsim::DeviceProfile dev;
    dev.name = get_or<std::string>(j, "name", "device");
    dev.inter_job_gap = get_or(j, "inter_job_gap", 0.0);
    dev.min_victim_batch = get_or<std::size_t>(j, "min_victim_batch", 1);

    if (j.contains("from_table")) {
        baseline::Backend b{};
        const auto table = load_table_spec(j.at("from_table"), base, where + ".from_table", b);
        for (std::size_t i = 0; i < table.entries.size(); ++i)
            dev.circuit_timings[table.entries[i].name] = table.model(i, b);
    }
    if (j.contains("grover") && !(j.at("grover").is_boolean() && !j.at("grover").get<bool>())) {
        const auto cal = parse_grover(j.at("grover"));
        for (const auto& v : baseline::grover_catalog(cal)) dev.circuit_timings[v.label()] = v.timing;
        if (grover_out) *grover_out = cal;
    }
    if (j.contains("circuits")) {
        const auto& cs = j.at("circuits");
        if (!cs.is_object()) throw ConfigError(where + ".circuits: expected an object");
        for (auto it = cs.begin(); it != cs.end(); ++it) {
            const std::string w = where + ".circuits." + it.key();
            try {
                dev.circuit_timings[it.key()] =
                    stats::TimingDistribution(require<double>(*it, "mean", w), require<double>(*it, "variance", w));
            } catch (const std::domain_error& e) {
                throw ConfigError(w + ": " + e.what());
            }
        }
    }
    if (dev.circuit_timings.empty()) throw ConfigError(where + ": device has no circuits");
    dev.validate();
    return dev;
}

mitigations::Mitigation parse_mitigation(const json& j, const std::string& where) {
    mitigations::Mitigation m;
    m.kind = mitigations::parse_kind(require<std::string>(j, "kind", where));
    m.target = get_or<std::string>(j, "target", "");
    m.latency_set = get_or<std::vector<double>>(j, "latency_set", {});
    m.batch_size = get_or<std::size_t>(j, "batch_size", 1);
    m.offset = get_or(j, "offset", 0.0);
    m.added_variance = get_or(j, "added_variance", 0.0);
    m.validate();
    return m;
}

}  // namespace

ScenarioFile parse_scenario(const std::string& json_text, const fs::path& base_dir) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario: invalid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("scenario: top level must be an object");

    ScenarioFile f;
    auto& sc = f.scenario;
    sc.seed = get_or<std::uint64_t>(root, "seed", 0);
    if (!root.contains("device")) throw ConfigError("scenario: missing 'device'");
    sc.device = parse_device(root.at("device"), base_dir, "device", &f.grover);

    const json victim = root.value("victim", json::object());
    sc.victim_circuit = require<std::string>(victim, "circuit", "victim");
    sc.victim_repetitions = get_or<std::size_t>(victim, "repetitions", 100);
    if (root.contains("victim_b")) f.victim_b = require<std::string>(root.at("victim_b"), "circuit", "victim_b");

    const json probe = root.value("probe", json::object());
    sc.attacker_probe_circuit = get_or<std::string>(probe, "circuit", sc.victim_circuit);
    sc.probe_every = get_or<std::size_t>(probe, "every", 1);

    const json attack = root.value("attack", json::object());
    auto& ac = f.attack;
    if (attack.contains("table")) {
        baseline::Backend b{};
        json t = attack.at("table").is_string() ? json{{"path", attack.at("table")}} : attack.at("table");
        if (attack.contains("backend")) t["backend"] = attack.at("backend");
        ac.table = load_table_spec(t, base_dir, "attack.table", b);
        ac.backend = b;
    } else if (root.at("device").contains("from_table")) {
        baseline::Backend b{};
        ac.table = load_table_spec(root.at("device").at("from_table"), base_dir, "device.from_table", b);
        ac.backend = b;
    }
    if (attack.contains("backend")) ac.backend = baseline::parse_backend(attack.at("backend").get<std::string>());
    ac.spec.alpha = get_or(attack, "alpha", ac.spec.alpha);
    ac.spec.power = get_or(attack, "power", ac.spec.power);
    ac.spec.validate();
    ac.confidence = get_or(attack, "confidence", ac.confidence);
    if (!(ac.confidence > 0.0 && ac.confidence < 1.0)) throw ConfigError("attack.confidence must lie in (0, 1)");
    const auto mode = get_or<std::string>(attack, "count_mode", "known");
    if (mode == "known") ac.count_mode = CountMode::known;
    else if (mode == "infer") ac.count_mode = CountMode::infer;
    else throw ConfigError("attack.count_mode must be 'known' or 'infer'");
    if (attack.contains("avg_victim") && !attack.at("avg_victim").is_null())
        ac.avg_victim = require<double>(attack, "avg_victim", "attack");

    if (root.contains("reference_devices")) {
        const auto& refs = root.at("reference_devices");
        if (!refs.is_array()) throw ConfigError("reference_devices: expected an array");
        for (std::size_t i = 0; i < refs.size(); ++i)
            f.reference_devices.push_back(
                parse_device(refs[i], base_dir, "reference_devices[" + std::to_string(i) + "]", nullptr));
    }
    if (root.contains("mitigations")) {
        const auto& ms = root.at("mitigations");
        if (!ms.is_array()) throw ConfigError("mitigations: expected an array");
        for (std::size_t i = 0; i < ms.size(); ++i)
            f.mitigations.push_back(parse_mitigation(ms[i], "mitigations[" + std::to_string(i) + "]"));
    }

    sc.validate();
    if (f.victim_b && !sc.device.has(*f.victim_b))
        throw ConfigError("victim_b: unknown circuit '" + *f.victim_b + "'");
    return f;
}

ScenarioFile load_scenario(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario '" + path.string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_scenario(text.str(), path.parent_path());
}

trace::Trace reconstruct(const ScenarioFile& file, const cloudsim::JobLog& log) {
    const auto view = trace::attacker_view(log);
    const double gap = file.scenario.device.inter_job_gap;
    if (file.attack.count_mode == CountMode::known)
        return trace::assemble_trace_known_batch(view, file.scenario.probe_every, gap);
    if (!file.attack.avg_victim) throw ConfigError("attack.count_mode 'infer' needs attack.avg_victim");
    return trace::assemble_trace(view, *file.attack.avg_victim, gap);
}

AttackOutput run_attack(const ScenarioFile& file, attacks::AttackKind kind) {
    const auto& sc = file.scenario;
    const auto log = cloudsim::run_simulation(sc);
    AttackOutput out;
    out.trace = reconstruct(file, log);
    out.truncated_draws = log.truncated_draws;
    const auto& ac = file.attack;

    switch (kind) {
        case attacks::AttackKind::uc:
            if (!ac.table) throw ConfigError("uc attack needs attack.table or device.from_table");
            out.verdict = attacks::uc_classify(out.trace, *ac.table, ac.backend, ac.spec);
            break;
        case attacks::AttackKind::co: {
            if (!file.grover) throw ConfigError("co attack needs device.grover");
            auto res = attacks::co_identify(out.trace, baseline::grover_catalog(*file.grover), ac.spec);
            out.verdict = res.decision.verdict;
            out.ovl = std::move(res.ovl);
            out.required = std::move(res.required);
            break;
        }
        case attacks::AttackKind::ca:
        case attacks::AttackKind::qm: {
            if (!file.victim_b) throw ConfigError("ca/qm attack needs victim_b");
            cloudsim::Scenario other = sc;
            other.victim_circuit = *file.victim_b;
            other.seed = make_rng(sc.seed, 1)();
            const auto log_b = cloudsim::run_simulation(other);
            const auto trace_b = reconstruct(file, log_b);
            out.truncated_draws += log_b.truncated_draws;
            const auto res = attacks::null_distinguishability(out.trace.durations, trace_b.durations, ac.confidence);
            out.verdict = attacks::null_verdict(kind, res, ac.confidence);
            out.dom.emplace_back(sc.victim_circuit + "_vs_" + *file.victim_b, res.series);
            break;
        }
        case attacks::AttackKind::qp: {
            if (file.reference_devices.size() < 2) throw ConfigError("qp attack needs at least two reference_devices");
            auto res = attacks::qp_fingerprint(out.trace, file.reference_devices, sc.victim_circuit, ac.confidence,
                                               make_rng(sc.seed, 2)(), ac.spec);
            out.verdict = res.verdict;
            for (auto& s : res.scores) out.dom.emplace_back(s.device, std::move(s.series));
            break;
        }
    }
    return out;
}

void write_dom_csv(std::ostream& out, const std::vector<stats::DomPoint>& series) {
    csv::write_row(out, {"n", "dom", "band", "exceeds"});
    for (const auto& p : series)
        csv::write_row(out, {std::to_string(p.n), csv::format(p.dom), csv::format(p.band), p.exceeds() ? "1" : "0"});
}

}  // namespace qleak::scenario

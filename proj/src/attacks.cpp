#include "qleak/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "qleak/csv.hpp"
#include "qleak/random.hpp"

namespace qleak::attacks {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t tail_length(std::size_t points) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(points))));
}

bool tail_exceeds(const std::vector<stats::DomPoint>& series) {
    const std::size_t tail = tail_length(series.size());
    return std::all_of(series.end() - static_cast<std::ptrdiff_t>(tail), series.end(),
                       [](const stats::DomPoint& p) { return p.exceeds(); });
}

double one_sample_t(const stats::SampleSummary& s, double mu) {
    if (s.n < 2 || !(s.variance > 0.0)) return 0.0;
    return (s.mean - mu) / std::sqrt(s.variance / static_cast<double>(s.n));
}

double achieved_power(double effect, std::size_t n, double alpha) {
    if (!std::isfinite(effect)) return 1.0;
    return stats::t_test_power(effect, std::max<double>(2.0, static_cast<double>(n)), alpha);
}

stats::SampleSummary require_sample(std::span<const double> durations, const char* who) {
    if (durations.empty()) throw trace::TraceError(std::string(who) + ": empty trace");
    return stats::summarize(durations);
}

}  // namespace

AttackKind parse_attack(const std::string& text) {
    if (text == "uc") return AttackKind::uc;
    if (text == "co") return AttackKind::co;
    if (text == "ca") return AttackKind::ca;
    if (text == "qm") return AttackKind::qm;
    if (text == "qp") return AttackKind::qp;
    throw std::invalid_argument("unknown attack '" + text + "' (expected uc, co, ca, qm or qp)");
}

const char* to_string(AttackKind a) {
    switch (a) {
        case AttackKind::uc: return "uc";
        case AttackKind::co: return "co";
        case AttackKind::ca: return "ca";
        case AttackKind::qm: return "qm";
        case AttackKind::qp: return "qp";
    }
    return "?";
}

void write_verdict_header(std::ostream& out) {
    csv::write_row(out, {"attack", "label", "measurements_used", "statistic", "planned_n", "confidence",
                         "ambiguous", "under_powered"});
}

void write_verdict_row(std::ostream& out, const AttackVerdict& v) {
    csv::write_row(out, {to_string(v.attack), v.label, std::to_string(v.measurements_used), csv::format(v.statistic),
                         csv::format(v.planned_n), csv::format(v.confidence), v.ambiguous ? "1" : "0",
                         v.under_powered ? "1" : "0"});
}

std::vector<Reference> references(const baseline::BaselineTable& table, baseline::Backend backend) {
    std::vector<Reference> refs;
    refs.reserve(table.entries.size());
    for (std::size_t i = 0; i < table.entries.size(); ++i) refs.push_back({table.entries[i].name, table.model(i, backend)});
    return refs;
}

// ---------------------------------------------------------------------------
// UC
// ---------------------------------------------------------------------------

UcClassifier::UcClassifier(std::vector<Reference> refs, const stats::PowerSpec& spec)
    : refs_(std::move(refs)), spec_(spec) {
    spec_.validate();
    if (refs_.size() < 2) throw std::invalid_argument("UcClassifier: need at least two references");
    planned_.resize(refs_.size());
    neighbor_effect_.resize(refs_.size());
    for (std::size_t i = 0; i < refs_.size(); ++i) {
        std::size_t nearest = i;
        double gap = kInf;
        for (std::size_t j = 0; j < refs_.size(); ++j) {
            if (j == i) continue;
            const double g = std::fabs(refs_[j].model.mean - refs_[i].model.mean);
            if (g < gap) {
                gap = g;
                nearest = j;
            }
        }
        neighbor_effect_[i] = stats::effect_size(refs_[i].model, refs_[nearest].model);
        planned_[i] = std::max(1.0, stats::required_sample_size(neighbor_effect_[i], spec_));
    }
}

AttackVerdict UcClassifier::classify(const stats::SampleSummary& sample) const {
    if (sample.n < 1) throw trace::TraceError("uc_classify: empty trace");
    std::size_t best = 0;
    double best_gap = kInf, runner_gap = kInf;
    for (std::size_t i = 0; i < refs_.size(); ++i) {
        const double g = std::fabs(sample.mean - refs_[i].model.mean);
        if (g < best_gap) {
            runner_gap = best_gap;
            best_gap = g;
            best = i;
        } else if (g < runner_gap) {
            runner_gap = g;
        }
    }
    AttackVerdict v;
    v.attack = AttackKind::uc;
    v.ambiguous = runner_gap - best_gap < kTieTolerance;
    v.label = v.ambiguous ? "ambiguous" : refs_[best].name;
    v.measurements_used = sample.n;
    v.planned_n = planned_[best];
    v.under_powered = static_cast<double>(sample.n) < planned_[best];
    v.statistic = one_sample_t(sample, refs_[best].model.mean);
    v.confidence = achieved_power(neighbor_effect_[best], sample.n, spec_.alpha);
    return v;
}

AttackVerdict UcClassifier::classify(std::span<const double> durations) const {
    return classify(require_sample(durations, "uc_classify"));
}

AttackVerdict uc_classify(const trace::Trace& trace, const baseline::BaselineTable& table,
                          baseline::Backend backend, const stats::PowerSpec& spec) {
    if (trace.durations.empty()) throw trace::TraceError("uc_classify: empty trace");
    return UcClassifier(references(table, backend), spec).classify(trace.durations);
}

BackendVerdict detect_backend(const trace::Trace& trace, const baseline::BaselineTable& table,
                              const stats::PowerSpec& spec) {
    spec.validate();
    const auto s = require_sample(trace.durations, "detect_backend");
    double gap[2] = {kInf, kInf};
    std::string nearest[2];
    for (const auto& e : table.entries) {
        for (int col = 0; col < 2; ++col) {
            const auto b = col == 0 ? baseline::Backend::simulator : baseline::Backend::hardware;
            const double g = std::fabs(s.mean - e.latency(b));
            if (g < gap[col]) {
                gap[col] = g;
                nearest[col] = e.name;
            }
        }
    }
    BackendVerdict out;
    if (std::fabs(gap[0] - gap[1]) < kTieTolerance) return out;
    const int win = gap[0] < gap[1] ? 0 : 1;
    out.backend = win == 0 ? baseline::Backend::simulator : baseline::Backend::hardware;
    out.nearest_circuit = nearest[win];
    const double sd = (s.n >= 2 && s.variance > 0.0) ? std::sqrt(s.variance) : std::sqrt(table.variance(*out.backend));
    out.separation = (gap[1 - win] - gap[win]) / (sd / std::sqrt(static_cast<double>(s.n)));
    return out;
}

// ---------------------------------------------------------------------------
// CO
// ---------------------------------------------------------------------------

CoIdentifier::CoIdentifier(std::vector<baseline::GroverVariant> catalog, const stats::PowerSpec& spec)
    : catalog_(std::move(catalog)), spec_(spec) {
    spec_.validate();
    if (catalog_.size() != 24) throw std::invalid_argument("co_identify: catalog must hold 24 variants");
    std::vector<std::string> labels;
    std::vector<stats::TimingDistribution> models;
    for (const auto& v : catalog_) {
        if (v.iterations < 1 || v.iterations > 3) throw std::invalid_argument("co_identify: iterations must be 1..3");
        labels.push_back(v.label());
        models.push_back(v.timing);
    }
    ovl_ = baseline::ovl_matrix(labels, models);
    required_ = baseline::required_matrix(labels, models, spec_);

    int counts[3] = {};
    for (const auto& v : catalog_) {
        iteration_mean_[v.iterations - 1] += v.timing.mean;
        ++counts[v.iterations - 1];
    }
    for (int it = 0; it < 3; ++it) {
        if (counts[it] == 0) throw std::invalid_argument("co_identify: every iteration count needs variants");
        iteration_mean_[it] /= counts[it];
    }

    key_plan_.assign(catalog_.size(), 1.0);
    for (std::size_t i = 0; i < catalog_.size(); ++i) {
        for (std::size_t j = 0; j < catalog_.size(); ++j) {
            if (i == j) continue;
            const double n = required_.at(i, j);
            if (catalog_[i].iterations == catalog_[j].iterations) {
                key_plan_[i] = std::max(key_plan_[i], n);
            } else {
                auto& plan = iteration_plan_[catalog_[i].iterations - 1];
                plan = std::max({plan, n, 1.0});
            }
        }
    }
}

CoDecision CoIdentifier::identify(const stats::SampleSummary& sample) const {
    if (sample.n < 1) throw trace::TraceError("co_identify: empty trace");
    int iteration = 1;
    for (int it = 2; it <= 3; ++it)
        if (std::fabs(sample.mean - iteration_mean_[it - 1]) < std::fabs(sample.mean - iteration_mean_[iteration - 1]))
            iteration = it;

    std::size_t best = catalog_.size();
    double best_gap = kInf, runner_gap = kInf;
    for (std::size_t i = 0; i < catalog_.size(); ++i) {
        if (catalog_[i].iterations != iteration) continue;
        const double g = std::fabs(sample.mean - catalog_[i].timing.mean);
        if (g < best_gap) {
            runner_gap = best_gap;
            best_gap = g;
            best = i;
        } else if (g < runner_gap) {
            runner_gap = g;
        }
    }

    CoDecision d;
    d.iteration = iteration;
    d.planned_iteration_n = iteration_plan_[iteration - 1];
    d.planned_key_n = key_plan_[best];
    const auto n = static_cast<double>(sample.n);
    const bool key_powered = n >= d.planned_key_n && runner_gap - best_gap >= kTieTolerance;
    if (key_powered) d.key = catalog_[best].key;

    auto& v = d.verdict;
    v.attack = AttackKind::co;
    v.label = key_powered ? catalog_[best].label() : "i" + std::to_string(iteration);
    v.measurements_used = sample.n;
    v.planned_n = d.planned_key_n;
    v.under_powered = !key_powered;
    v.ambiguous = runner_gap - best_gap < kTieTolerance;
    v.statistic = one_sample_t(sample, catalog_[best].timing.mean);
    const double key_effect = std::sqrt(2.0) * (stats::normal_quantile(1.0 - spec_.alpha / 2.0) +
                                                 stats::normal_quantile(spec_.power)) /
                              std::sqrt(d.planned_key_n);
    v.confidence = std::isfinite(d.planned_key_n) ? achieved_power(key_effect, sample.n, spec_.alpha) : spec_.alpha;
    return d;
}

CoDecision CoIdentifier::identify(std::span<const double> durations) const {
    return identify(require_sample(durations, "co_identify"));
}

CoResult co_identify(const trace::Trace& trace, const std::vector<baseline::GroverVariant>& catalog,
                     const stats::PowerSpec& spec) {
    if (trace.durations.empty()) throw trace::TraceError("co_identify: empty trace");
    CoIdentifier id(catalog, spec);
    return {id.identify(trace.durations), id.ovl(), id.required()};
}

// ---------------------------------------------------------------------------
// CA / QM
// ---------------------------------------------------------------------------

NullResult null_distinguishability(std::span<const double> a, std::span<const double> b, double confidence) {
    NullResult r;
    r.series = stats::dom_series(a, b, confidence);
    r.tail_points = tail_length(r.series.size());
    r.distinguishable = tail_exceeds(r.series);
    return r;
}

AttackVerdict null_verdict(AttackKind kind, const NullResult& result, double confidence) {
    AttackVerdict v;
    v.attack = kind;
    v.label = result.distinguishable ? "distinguishable" : "indistinguishable";
    const auto& last = result.series.back();
    v.measurements_used = last.n;
    v.statistic = last.band > 0.0 ? std::fabs(last.dom) / last.band : kInf;
    v.confidence = confidence;
    return v;
}

// ---------------------------------------------------------------------------
// QP
// ---------------------------------------------------------------------------

namespace {

QpResult score_devices(std::span<const double> trace, const std::vector<DeviceReference>& refs, double confidence) {
    if (refs.size() < 2) throw std::invalid_argument("qp_fingerprint: need at least two devices");
    if (trace.size() < 2) throw trace::TraceError("qp_fingerprint: trace needs at least two measurements");
    QpResult r;
    for (const auto& ref : refs) {
        DeviceScore s;
        s.device = ref.device;
        s.series = stats::dom_series(trace, ref.samples, confidence);
        s.rejected = tail_exceeds(s.series);
        s.first_crossing = stats::first_crossing(s.series);
        s.stable_crossing = stats::stable_crossing(s.series);
        const auto& last = s.series.back();
        s.final_ratio = last.band > 0.0 ? std::fabs(last.dom) / last.band : (last.dom == 0.0 ? 0.0 : kInf);
        r.scores.push_back(std::move(s));
    }

    auto& v = r.verdict;
    v.attack = AttackKind::qp;
    v.confidence = confidence;
    std::vector<std::size_t> survivors;
    std::size_t used = 0;
    for (std::size_t i = 0; i < r.scores.size(); ++i) {
        if (!r.scores[i].rejected) survivors.push_back(i);
        else used = std::max(used, r.scores[i].stable_crossing);
    }
    if (survivors.size() == 1) {
        v.label = r.scores[survivors.front()].device;
    } else if (survivors.empty()) {
        const auto best = std::min_element(r.scores.begin(), r.scores.end(), [](const auto& a, const auto& b) {
            return a.final_ratio < b.final_ratio;
        });
        v.label = best->device;
    } else {
        v.label = "ambiguous";
        v.ambiguous = true;
    }
    v.measurements_used = used > 0 ? used : r.scores.front().series.back().n;
    v.statistic = static_cast<double>(used);
    return r;
}

double planned_between(const stats::TimingDistribution& chosen, const std::vector<stats::TimingDistribution>& others,
                       const stats::PowerSpec& spec) {
    double effect = kInf;
    for (const auto& o : others) {
        const double e = stats::effect_size(chosen, o);
        if (e < effect) effect = e;
    }
    return std::isfinite(effect) ? std::max(1.0, stats::required_sample_size(effect, spec)) : 1.0;
}

}  // namespace

QpResult qp_fingerprint(std::span<const double> trace, const std::vector<DeviceReference>& refs, double confidence) {
    QpResult r = score_devices(trace, refs, confidence);
    if (r.verdict.ambiguous) return r;
    std::vector<stats::TimingDistribution> others;
    std::optional<stats::TimingDistribution> chosen;
    for (const auto& ref : refs) {
        const auto s = stats::summarize(ref.samples);
        const stats::TimingDistribution model(s.mean, std::max(s.variance, 1e-300));
        if (ref.device == r.verdict.label) chosen = model;
        else others.push_back(model);
    }
    if (chosen) r.verdict.planned_n = planned_between(*chosen, others, {});
    return r;
}

QpResult qp_fingerprint(const trace::Trace& trace, const std::vector<cloudsim::DeviceProfile>& devices,
                        const std::string& circuit, double confidence, std::uint64_t seed,
                        const stats::PowerSpec& spec) {
    std::vector<DeviceReference> refs;
    std::uint64_t stream = 1;
    for (const auto& dev : devices) {
        Rng rng = make_rng(seed, stream++);
        refs.push_back({dev.name, draw(dev.timing(circuit), trace.durations.size(), rng)});
    }
    QpResult r = score_devices(trace.durations, refs, confidence);
    if (!r.verdict.ambiguous) {
        std::vector<stats::TimingDistribution> others;
        const stats::TimingDistribution* chosen = nullptr;
        for (const auto& dev : devices) {
            if (dev.name == r.verdict.label) chosen = &dev.timing(circuit);
            else others.push_back(dev.timing(circuit));
        }
        if (chosen) r.verdict.planned_n = planned_between(*chosen, others, spec);
    }
    return r;
}

}  // namespace qleak::attacks

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qleak/baseline.hpp"
#include "qleak/cloudsim.hpp"
#include "qleak/stats.hpp"
#include "qleak/trace.hpp"

namespace qleak::attacks {

enum class AttackKind { uc, co, ca, qm, qp };
AttackKind parse_attack(const std::string& text);
const char* to_string(AttackKind a);

struct AttackVerdict {
    AttackKind attack = AttackKind::uc;
    std::string label;
    std::size_t measurements_used = 0;
    double statistic = 0.0;   // t-score, or DoM crossing index for QP
    double planned_n = 0.0;   // per-group n from power analysis
    double confidence = 0.0;  // achieved power, or the DoM confidence level
    bool ambiguous = false;
    bool under_powered = false;
};

// attack,label,measurements_used,statistic,planned_n,confidence,ambiguous,under_powered
void write_verdict_header(std::ostream& out);
void write_verdict_row(std::ostream& out, const AttackVerdict& v);

// Two nearest-mean distances closer than this are a tie.
inline constexpr double kTieTolerance = 1e-12;

struct Reference {
    std::string name;
    stats::TimingDistribution model;
};

std::vector<Reference> references(const baseline::BaselineTable& table, baseline::Backend backend);

// ---------------------------------------------------------------------------
// UC: user circuit identification by nearest baseline mean
// ---------------------------------------------------------------------------

// Precomputes each reference's nearest-neighbor measurement plan so repeated
// classification is cheap. Decisions depend only on the sample mean and size.
class UcClassifier {
public:
    UcClassifier(std::vector<Reference> refs, const stats::PowerSpec& spec);

    AttackVerdict classify(const stats::SampleSummary& sample) const;
    AttackVerdict classify(std::span<const double> durations) const;

    const std::vector<Reference>& refs() const { return refs_; }
    double planned_n(std::size_t ref) const { return planned_[ref]; }

private:
    std::vector<Reference> refs_;
    stats::PowerSpec spec_;
    std::vector<double> planned_;
    std::vector<double> neighbor_effect_;
};

AttackVerdict uc_classify(const trace::Trace& trace, const baseline::BaselineTable& table,
                          baseline::Backend backend, const stats::PowerSpec& spec = {});

struct BackendVerdict {
    std::optional<baseline::Backend> backend;  // empty when ambiguous
    std::string nearest_circuit;
    double separation = 0.0;  // standardized margin between the two columns
};

// Nearest mean over both latency columns; reports which column wins.
BackendVerdict detect_backend(const trace::Trace& trace, const baseline::BaselineTable& table,
                              const stats::PowerSpec& spec = {});

// ---------------------------------------------------------------------------
// CO: Grover oracle identification, iteration count first then key
// ---------------------------------------------------------------------------

struct CoDecision {
    AttackVerdict verdict;
    int iteration = 0;
    std::optional<std::string> key;  // empty when the key stage is under-powered
    double planned_iteration_n = 0.0;
    double planned_key_n = 0.0;
};

class CoIdentifier {
public:
    CoIdentifier(std::vector<baseline::GroverVariant> catalog, const stats::PowerSpec& spec);

    CoDecision identify(const stats::SampleSummary& sample) const;
    CoDecision identify(std::span<const double> durations) const;

    const baseline::Matrix& ovl() const { return ovl_; }
    const baseline::Matrix& required() const { return required_; }
    const std::vector<baseline::GroverVariant>& catalog() const { return catalog_; }

private:
    std::vector<baseline::GroverVariant> catalog_;
    stats::PowerSpec spec_;
    baseline::Matrix ovl_;
    baseline::Matrix required_;
    double iteration_mean_[3] = {};
    double iteration_plan_[3] = {};
    std::vector<double> key_plan_;
};

struct CoResult {
    CoDecision decision;
    baseline::Matrix ovl;
    baseline::Matrix required;
};

CoResult co_identify(const trace::Trace& trace, const std::vector<baseline::GroverVariant>& catalog,
                     const stats::PowerSpec& spec = {});

// ---------------------------------------------------------------------------
// CA / QM: proving two configurations leave no timing difference
// ---------------------------------------------------------------------------

struct NullResult {
    bool distinguishable = false;
    std::vector<stats::DomPoint> series;
    std::size_t tail_points = 0;  // points in the final 10% that were inspected
};

// Distinguishable only when every point in the final 10% of the DoM series
// lies outside the band. Longer input is truncated to the shorter length.
// False-positive rate is bounded by 1 - confidence.
NullResult null_distinguishability(std::span<const double> a, std::span<const double> b,
                                   double confidence = 0.95);

AttackVerdict null_verdict(AttackKind kind, const NullResult& result, double confidence);

// ---------------------------------------------------------------------------
// QP: quantum processor fingerprinting
// ---------------------------------------------------------------------------

struct DeviceScore {
    std::string device;
    std::vector<stats::DomPoint> series;
    bool rejected = false;
    std::size_t first_crossing = 0;
    std::size_t stable_crossing = 0;
    double final_ratio = 0.0;  // |dom| / band at the last point
};

struct QpResult {
    AttackVerdict verdict;
    std::vector<DeviceScore> scores;
};

struct DeviceReference {
    std::string device;
    std::vector<double> samples;  // the attacker's own calibration runs
};

// DoM of the victim trace against each device's reference runs. A device is
// rejected when the final 10% of its series leaves the band; the label is the
// single device left standing, the best-fitting one when all are rejected,
// and "ambiguous" when several survive.
QpResult qp_fingerprint(std::span<const double> trace, const std::vector<DeviceReference>& refs,
                        double confidence = 0.95);

// Draws trace.size() calibration runs of `circuit` on every device.
QpResult qp_fingerprint(const trace::Trace& trace, const std::vector<cloudsim::DeviceProfile>& devices,
                        const std::string& circuit, double confidence, std::uint64_t seed,
                        const stats::PowerSpec& spec = {});

}  // namespace qleak::attacks

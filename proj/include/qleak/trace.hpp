#pragma once

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "qleak/cloudsim.hpp"

// Attacker-side reconstruction of victim durations.
//
// The attacker only sees its own probe jobs. The gap between the end of one
// probe and the start of the next holds every victim job the scheduler ran in
// between, plus one inter-job gap per job boundary. When several victim runs
// share an interval, each is assigned interval / count. Those per-execution
// values are perfectly correlated within an interval: their spread shrinks by
// roughly the count while carrying no more information than the single
// interval. Power calculations on such traces must use the number of
// intervals, not the number of durations (see Trace::effective_samples).
namespace qleak::trace {

class TraceError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ProbeRecord {
    double started_at = 0.0;
    double ended_at = 0.0;
};

struct AttackerView {
    std::vector<ProbeRecord> probe_records;
};

AttackerView attacker_view(const cloudsim::JobLog& log);

struct Trace {
    std::vector<double> durations;
    std::vector<std::size_t> inferred_counts;  // one per accepted interval
    std::size_t invalid_intervals = 0;         // dropped: gap correction exceeded the interval
    std::size_t empty_intervals = 0;           // zero-length: no victim ran

    std::size_t effective_samples() const { return inferred_counts.size(); }
};

// interval_i = probe_{i+1}.started_at - probe_i.ended_at
std::vector<double> extract_intervals(const AttackerView& view);

struct CountEstimate {
    std::size_t count = 0;
    double per_execution = 0.0;
};

// Nearest-integer count of victim runs in an interval; exact halves round
// down. A non-empty interval counts at least one run.
CountEstimate infer_execution_count(double interval, double avg_victim);

// Infers each interval's run count from avg_victim, removes one gap_correction
// per job boundary (count + 1 of them) and splits the remainder evenly.
Trace assemble_trace(const AttackerView& view, double avg_victim, double gap_correction = 0.0);

// Same, for an attacker who knows how many victim runs each interval holds.
Trace assemble_trace_known_batch(const AttackerView& view, std::size_t batch, double gap_correction = 0.0);

// Average victim duration from warm-up intervals that each bracket a single
// victim run.
double estimate_avg_victim(std::span<const double> warmup_intervals, double gap_correction = 0.0);

// Single column `duration_s`.
void write_trace_csv(std::ostream& out, const Trace& trace);

}  // namespace qleak::trace

#include "qleak/trace.hpp"

#include <cmath>
#include <ostream>

#include "qleak/csv.hpp"

namespace qleak::trace {

AttackerView attacker_view(const cloudsim::JobLog& log) {
    AttackerView view;
    for (const auto& job : log.jobs)
        if (job.owner == cloudsim::Owner::attacker) view.probe_records.push_back({job.started_at, job.ended_at});
    return view;
}

std::vector<double> extract_intervals(const AttackerView& view) {
    const auto& probes = view.probe_records;
    if (probes.size() < 2) throw TraceError("extract_intervals: need at least two probes");
    std::vector<double> out;
    out.reserve(probes.size() - 1);
    for (std::size_t i = 0; i + 1 < probes.size(); ++i) {
        if (probes[i].ended_at < probes[i].started_at) throw TraceError("extract_intervals: probe ends before it starts");
        const double interval = probes[i + 1].started_at - probes[i].ended_at;
        if (interval < 0.0) throw TraceError("extract_intervals: overlapping probes");
        out.push_back(interval);
    }
    return out;
}

CountEstimate infer_execution_count(double interval, double avg_victim) {
    if (!(avg_victim > 0.0)) throw TraceError("infer_execution_count: average victim duration must be positive");
    if (!(interval >= 0.0)) throw TraceError("infer_execution_count: negative interval");
    if (interval == 0.0) return {0, 0.0};
    const double ratio = interval / avg_victim;
    auto count = static_cast<std::size_t>(std::floor(ratio));
    if (ratio - std::floor(ratio) > 0.5) ++count;
    count = std::max<std::size_t>(count, 1);
    return {count, interval / static_cast<double>(count)};
}

namespace {

template <typename CountFn>
Trace assemble(const AttackerView& view, double gap, CountFn count_for) {
    if (!(gap >= 0.0)) throw TraceError("assemble_trace: gap correction must be non-negative");
    Trace trace;
    for (double interval : extract_intervals(view)) {
        if (interval == 0.0) {
            ++trace.empty_intervals;
            continue;
        }
        const double net = interval - gap;
        if (!(net > 0.0)) {
            ++trace.invalid_intervals;
            continue;
        }
        const std::size_t count = count_for(net);
        const double corrected = interval - static_cast<double>(count + 1) * gap;
        if (!(corrected > 0.0)) {
            ++trace.invalid_intervals;
            continue;
        }
        const double per = gap == 0.0 && count == 1 ? interval : corrected / static_cast<double>(count);
        trace.inferred_counts.push_back(count);
        trace.durations.insert(trace.durations.end(), count, per);
    }
    return trace;
}

}  // namespace

Trace assemble_trace(const AttackerView& view, double avg_victim, double gap_correction) {
    if (!(avg_victim > 0.0)) throw TraceError("assemble_trace: average victim duration must be positive");
    // Each run contributes its duration plus one trailing gap; the leading gap
    // was removed from `net`.
    return assemble(view, gap_correction, [&](double net) {
        return infer_execution_count(net, avg_victim + gap_correction).count;
    });
}

Trace assemble_trace_known_batch(const AttackerView& view, std::size_t batch, double gap_correction) {
    if (batch < 1) throw TraceError("assemble_trace: batch must be at least 1");
    return assemble(view, gap_correction, [&](double) { return batch; });
}

double estimate_avg_victim(std::span<const double> warmup_intervals, double gap_correction) {
    if (warmup_intervals.empty()) throw TraceError("estimate_avg_victim: no warm-up intervals");
    double sum = 0.0;
    for (double x : warmup_intervals) sum += x - 2.0 * gap_correction;
    const double avg = sum / static_cast<double>(warmup_intervals.size());
    if (!(avg > 0.0)) throw TraceError("estimate_avg_victim: gap correction exceeds warm-up intervals");
    return avg;
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
    csv::write_row(out, {"duration_s"});
    for (double d : trace.durations) csv::write_row(out, {csv::format(d)});
}

}  // namespace qleak::trace

#include <cmath>
#include <limits>

#include "qleak/stats.hpp"

namespace qleak::stats {

SampleSummary summarize(std::span<const double> samples) {
    if (samples.empty()) throw DegenerateSample("summarize: no observations");
    SampleSummary s;
    double m2 = 0.0;
    for (double x : samples) {
        ++s.n;
        const double delta = x - s.mean;
        s.mean += delta / static_cast<double>(s.n);
        m2 += delta * (x - s.mean);
    }
    s.variance = s.n > 1 ? m2 / static_cast<double>(s.n - 1) : 0.0;
    return s;
}

TimingDistribution::TimingDistribution(double mean_, double variance_)
    : mean(mean_), variance(variance_) {
    if (!std::isfinite(mean) || !std::isfinite(variance))
        throw std::invalid_argument("TimingDistribution: non-finite parameter");
    if (!(variance > 0.0)) throw std::invalid_argument("TimingDistribution: variance must be positive");
}

double TimingDistribution::stddev() const { return std::sqrt(variance); }

void PowerSpec::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("PowerSpec: alpha must lie in (0, 1)");
    if (!(power > 0.0 && power < 1.0)) throw std::invalid_argument("PowerSpec: power must lie in (0, 1)");
}

double welch_t(const SampleSummary& a, const SampleSummary& b) {
    if (a.n < 2 || b.n < 2) throw DegenerateSample("welch_t: each sample needs at least two observations");
    const double se2 = a.variance / static_cast<double>(a.n) + b.variance / static_cast<double>(b.n);
    const double diff = a.mean - b.mean;
    if (se2 <= 0.0) {
        if (diff == 0.0) throw DegenerateSample("welch_t: zero variance and equal means");
        return diff > 0.0 ? std::numeric_limits<double>::infinity()
                          : -std::numeric_limits<double>::infinity();
    }
    return diff / std::sqrt(se2);
}

double welch_df(const SampleSummary& a, const SampleSummary& b) {
    if (a.n < 2 || b.n < 2) throw DegenerateSample("welch_df: each sample needs at least two observations");
    const double va = a.variance / static_cast<double>(a.n);
    const double vb = b.variance / static_cast<double>(b.n);
    const double denom = va * va / static_cast<double>(a.n - 1) + vb * vb / static_cast<double>(b.n - 1);
    if (denom <= 0.0) return std::numeric_limits<double>::infinity();
    return (va + vb) * (va + vb) / denom;
}

std::vector<DomPoint> dom_series(std::span<const double> a, std::span<const double> b, double confidence) {
    if (a.size() < 2 || b.size() < 2) throw DegenerateSample("dom_series: both sets need at least two observations");
    if (!(confidence > 0.0 && confidence < 1.0))
        throw std::invalid_argument("dom_series: confidence must lie in (0, 1)");

    const double z = normal_quantile((1.0 + confidence) / 2.0);
    const std::size_t m = std::min(a.size(), b.size());
    std::vector<DomPoint> out;
    out.reserve(m - 1);

    double mean_a = 0.0, m2_a = 0.0, mean_b = 0.0, m2_b = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double n = static_cast<double>(i + 1);
        const double da = a[i] - mean_a;
        mean_a += da / n;
        m2_a += da * (a[i] - mean_a);
        const double db = b[i] - mean_b;
        mean_b += db / n;
        m2_b += db * (b[i] - mean_b);
        if (i == 0) continue;
        const double var_a = m2_a / (n - 1.0);
        const double var_b = m2_b / (n - 1.0);
        out.push_back({i + 1, mean_a - mean_b, z * std::sqrt((var_a + var_b) / n)});
    }
    return out;
}

std::size_t first_crossing(std::span<const DomPoint> series) {
    for (const auto& p : series)
        if (p.exceeds()) return p.n;
    return 0;
}

std::size_t stable_crossing(std::span<const DomPoint> series) {
    std::size_t since = 0;
    for (auto it = series.rbegin(); it != series.rend() && it->exceeds(); ++it) since = it->n;
    return since;
}

}  // namespace qleak::stats

#include <cmath>
#include <limits>
#include <vector>

#include "qleak/random.hpp"
#include "qleak/stats.hpp"

namespace qleak::stats {

double t_test_power(double d, double n, double alpha) {
    if (!(n > 1.0)) throw std::domain_error("t_test_power: n must exceed 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("t_test_power: alpha must lie in (0, 1)");
    const double df = 2.0 * n - 2.0;
    const double ncp = std::fabs(d) * std::sqrt(n / 2.0);
    const double crit = student_t_quantile(1.0 - alpha / 2.0, df);
    return noncentral_t_sf(crit, df, ncp) + noncentral_t_cdf(-crit, df, ncp);
}

double normal_approx_sample_size(double d, const PowerSpec& spec) {
    spec.validate();
    if (!(d > 0.0)) return std::numeric_limits<double>::infinity();
    const double z = normal_quantile(1.0 - spec.alpha / 2.0) + normal_quantile(spec.power);
    return 2.0 * (z / d) * (z / d);
}

double lehr_sample_size(double d) {
    if (!(d > 0.0)) throw std::domain_error("lehr_sample_size: effect size must be positive");
    return 16.0 / (d * d);
}

double required_sample_size(double d, const PowerSpec& spec) {
    spec.validate();
    if (!(d > 0.0)) return std::numeric_limits<double>::infinity();

    auto excess = [&](double n) { return t_test_power(d, n, spec.alpha) - spec.power; };

    double lo = 2.0;
    double f_lo = excess(lo);
    if (f_lo >= 0.0) return 1.0;

    double hi = std::max(4.0, 2.0 * normal_approx_sample_size(d, spec));
    double f_hi = excess(hi);
    while (f_hi < 0.0) {
        lo = hi;
        f_lo = f_hi;
        hi *= 2.0;
        if (!std::isfinite(hi)) return std::numeric_limits<double>::infinity();
        f_hi = excess(hi);
    }

    // Illinois variant of regula falsi; power is monotone in n on the bracket.
    int side = 0;
    for (int iter = 0; iter < 200 && (hi - lo) > 1e-11 * hi; ++iter) {
        double n = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        if (!(n > lo && n < hi)) n = 0.5 * (lo + hi);
        const double f = excess(n);
        if (f == 0.0) return n;
        if (f < 0.0) {
            lo = n;
            f_lo = f;
            if (side == -1) f_hi *= 0.5;
            side = -1;
        } else {
            hi = n;
            f_hi = f;
            if (side == 1) f_lo *= 0.5;
            side = 1;
        }
    }
    return 0.5 * (lo + hi);
}

double effect_size(const TimingDistribution& p, const TimingDistribution& q) {
    return std::fabs(p.mean - q.mean) / std::sqrt(0.5 * (p.variance + q.variance));
}

double mc_power_oracle(const TimingDistribution& p, const TimingDistribution& q, std::size_t n,
                       const PowerSpec& spec, std::size_t trials, std::uint64_t seed, unsigned jobs) {
    spec.validate();
    if (n < 2) throw std::invalid_argument("mc_power_oracle: n must be at least 2");
    if (trials < 1000) throw std::invalid_argument("mc_power_oracle: at least 1000 trials required");

    std::vector<char> rejected(trials, 0);
    parallel_for(trials, jobs, [&](std::size_t trial) {
        Rng rng = make_rng(seed, trial);
        const auto a = summarize(draw(p, n, rng));
        const auto b = summarize(draw(q, n, rng));
        const double t = welch_t(a, b);
        const double crit = student_t_quantile(1.0 - spec.alpha / 2.0, welch_df(a, b));
        rejected[trial] = std::fabs(t) > crit;
    });
    std::size_t hits = 0;
    for (char r : rejected) hits += r != 0;
    return static_cast<double>(hits) / static_cast<double>(trials);
}

}  // namespace qleak::stats

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qleak::stats {

// Raised for numerically meaningless inputs: zero-variance samples with equal
// means, prefixes shorter than two observations, etc.
class DegenerateSample : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Sufficient statistics of a set of duration observations (seconds).
// The variance uses the n-1 divisor; a single observation carries variance 0
// and is reported as degenerate.
struct SampleSummary {
    std::size_t n = 0;
    double mean = 0.0;
    double variance = 0.0;

    bool degenerate() const { return n < 2 || variance <= 0.0; }
};

SampleSummary summarize(std::span<const double> samples);

// Gaussian latency model of one circuit on one backend.
struct TimingDistribution {
    double mean = 0.0;      // seconds
    double variance = 0.0;  // seconds^2

    TimingDistribution() = default;
    TimingDistribution(double mean, double variance);

    double stddev() const;
    friend bool operator==(const TimingDistribution&, const TimingDistribution&) = default;
};

struct PowerSpec {
    double alpha = 0.05;  // two-sided significance level
    double power = 0.80;

    void validate() const;
};

// One point of a difference-of-means curve. `band` is the half-width of the
// equal-population confidence band at prefix length n.
struct DomPoint {
    std::size_t n = 0;
    double dom = 0.0;
    double band = 0.0;

    bool exceeds() const { return dom > band || dom < -band; }
};

// ---------------------------------------------------------------------------
// Distribution numerics
// ---------------------------------------------------------------------------

double normal_pdf(double x);
double normal_cdf(double x);
double normal_quantile(double p);

// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

// Central Student t with real-valued degrees of freedom.
double student_t_cdf(double t, double df);
double student_t_sf(double t, double df);
double student_t_quantile(double p, double df);

// Noncentral t: P(T' <= t) and P(T' > t) for real df > 0 and any noncentrality.
double noncentral_t_cdf(double t, double df, double ncp);
double noncentral_t_sf(double t, double df, double ncp);

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

// Welch two-sample t-score. Returns +/-infinity when both variances are zero
// and the means differ; throws DegenerateSample when they do not.
double welch_t(const SampleSummary& a, const SampleSummary& b);

// Welch-Satterthwaite degrees of freedom.
double welch_df(const SampleSummary& a, const SampleSummary& b);

// Difference-of-means series over equal-length prefixes n = 2..min(|a|, |b|).
// The band is z_{(1+confidence)/2} * sqrt(var_a/n + var_b/n) with running
// unbiased variances.
std::vector<DomPoint> dom_series(std::span<const double> a, std::span<const double> b,
                                 double confidence = 0.95);

// First prefix length whose point exceeds the band, or 0 if none does.
std::size_t first_crossing(std::span<const DomPoint> series);

// First prefix length from which every remaining point exceeds the band,
// or 0 if the final point does not.
std::size_t stable_crossing(std::span<const DomPoint> series);

// ---------------------------------------------------------------------------
// Overlap and power analysis
// ---------------------------------------------------------------------------

// Overlapping coefficient: integral of min(pdf_p, pdf_q) over the real line.
double ovl(const TimingDistribution& p, const TimingDistribution& q);

// Per-group power of a two-sided pooled two-sample t-test with n observations
// per group and standardized effect size d. n may be fractional.
double t_test_power(double d, double n, double alpha);

// Continuous per-group sample size reaching spec.power for effect size d.
// Searches n >= 2 (the smallest size with a defined pooled variance); when the
// target is already met at n = 2 a single measurement is reported (1.0).
// Returns +infinity for d <= 0.
double required_sample_size(double d, const PowerSpec& spec = {});

// n = 2 * ((z_{1-alpha/2} + z_{power}) / d)^2
double normal_approx_sample_size(double d, const PowerSpec& spec = {});

// Lehr's rule of thumb, n = 16 / d^2.
double lehr_sample_size(double d);

// Standardized effect |mu_p - mu_q| / sigma with sigma^2 the mean of the two
// variances (equal to the common variance in the homoscedastic case).
double effect_size(const TimingDistribution& p, const TimingDistribution& q);

// Fraction of trials in which Welch's test on n draws from each distribution
// rejects at spec.alpha. Deterministic for a fixed seed and independent of
// `jobs`.
double mc_power_oracle(const TimingDistribution& p, const TimingDistribution& q, std::size_t n,
                       const PowerSpec& spec, std::size_t trials, std::uint64_t seed,
                       unsigned jobs = 1);

}  // namespace qleak::stats

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "qleak/stats.hpp"

namespace qleak::stats {

namespace {

constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;

// Continued fraction for I_x(a, b), modified Lentz. Converges quickly for
// x < (a + 1) / (a + b + 2).
double beta_continued_fraction(double a, double b, double x) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m < 100000; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    return h;
}

// Stirling series remainder of lgamma.
double stirling_tail(double z) {
    const double r = 1.0 / (z * z);
    return (1.0 / 12.0 - r * (1.0 / 360.0 - r * (1.0 / 1260.0 - r / 1680.0))) / z;
}

// lgamma(b) - lgamma(a + b) without the cancellation of two huge lgammas.
double log_gamma_ratio(double a, double b) {
    if (b < 20.0) return std::lgamma(b) - std::lgamma(a + b);
    return -(b - 0.5) * std::log1p(a / b) - a * std::log(a + b) + a + stirling_tail(b) - stirling_tail(a + b);
}

double log_beta(double a, double b) {
    const double lo = std::min(a, b), hi = std::max(a, b);
    return std::lgamma(lo) + log_gamma_ratio(lo, hi);
}

// I_x(a, b) with y = 1 - x supplied separately so callers can avoid
// cancellation when x is close to 1.
double ibeta(double a, double b, double x, double y) {
    if (x <= 0.0) return 0.0;
    if (y <= 0.0) return 1.0;
    const double log_front =
        -log_beta(a, b) + a * std::log(x) + b * std::log(y);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, y) / b;
}

// Upper tail of the central t for t >= 0.
double t_upper(double t, double df) {
    const double t2 = t * t;
    const double denom = df + t2;
    // P(T > t) = 0.5 * I_{df/(df+t^2)}(df/2, 1/2)
    return 0.5 * ibeta(df / 2.0, 0.5, df / denom, t2 / denom);
}

double student_t_pdf(double t, double df) {
    const double log_norm = -log_gamma_ratio(0.5, df / 2.0) - 0.5 * std::log(df * std::numbers::pi);
    return std::exp(log_norm - (df + 1.0) / 2.0 * std::log1p(t * t / df));
}

// P(T' <= t) for t >= 0 as a Poisson mixture of incomplete beta functions.
// The sum is taken around the Poisson mode so large noncentralities do not
// underflow the leading weights.
double noncentral_cdf_nonneg(double t, double df, double ncp) {
    const double base = normal_cdf(-ncp);
    if (t == 0.0) return base;
    const double t2 = t * t;
    const double x = t2 / (t2 + df);
    const double y = df / (t2 + df);
    const double lambda = ncp * ncp / 2.0;
    if (lambda == 0.0) return base + 0.5 * ibeta(0.5, df / 2.0, x, y);

    const double log_lambda = std::log(lambda);
    const double spread = 15.0 * std::sqrt(lambda) + 40.0;
    const auto mode = static_cast<long>(std::floor(lambda));
    const long lo = std::max(0L, mode - static_cast<long>(spread));
    const long hi = mode + static_cast<long>(spread);
    const double scale = ncp / std::numbers::sqrt2;

    auto term = [&](long j) {
        const double jd = static_cast<double>(j);
        const double log_pow = -lambda + jd * log_lambda;
        const double p_j = std::exp(log_pow - std::lgamma(jd + 1.0));
        const double q_j = std::exp(log_pow - std::lgamma(jd + 1.5));
        return p_j * ibeta(jd + 0.5, df / 2.0, x, y) + scale * q_j * ibeta(jd + 1.0, df / 2.0, x, y);
    };
    // Walk outwards from the mode; stop once contributions are negligible.
    // Terms are unimodal in j, so a small and shrinking term ends each walk.
    double sum = 0.0;
    double prev = std::numeric_limits<double>::infinity();
    for (long j = std::max(lo, mode); j <= hi; ++j) {
        const double v = term(j);
        sum += v;
        if (j > mode + 5 && std::fabs(v) < 1e-18 && std::fabs(v) <= prev) break;
        prev = std::fabs(v);
    }
    prev = std::numeric_limits<double>::infinity();
    for (long j = std::max(lo, mode) - 1; j >= lo; --j) {
        const double v = term(j);
        sum += v;
        if (j < mode - 5 && std::fabs(v) < 1e-18 && std::fabs(v) <= prev) break;
        prev = std::fabs(v);
    }
    return base + 0.5 * sum;
}

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be finite");
}

}  // namespace

double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p must lie in (0, 1)");

    // Acklam's rational approximation followed by one Halley step.
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // Upper-tail residual keeps precision for p close to 1.
    const double e = (p > 0.5) ? (0.5 * std::erfc(x / std::numbers::sqrt2) - (1.0 - p))
                               : (normal_cdf(x) - p);
    const double u = (p > 0.5 ? -e : e) * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) throw std::domain_error("incomplete_beta: a and b must be positive");
    if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("incomplete_beta: x must lie in [0, 1]");
    return ibeta(a, b, x, 1.0 - x);
}

double student_t_sf(double t, double df) {
    require_finite(t, "t");
    if (!(df > 0.0)) throw std::domain_error("student_t: df must be positive");
    return t >= 0.0 ? t_upper(t, df) : 1.0 - t_upper(-t, df);
}

double student_t_cdf(double t, double df) {
    require_finite(t, "t");
    if (!(df > 0.0)) throw std::domain_error("student_t: df must be positive");
    return t >= 0.0 ? 1.0 - t_upper(t, df) : t_upper(-t, df);
}

double student_t_quantile(double p, double df) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("student_t_quantile: p must lie in (0, 1)");
    if (!(df > 0.0)) throw std::domain_error("student_t_quantile: df must be positive");
    if (p == 0.5) return 0.0;
    if (p < 0.5) return -student_t_quantile(1.0 - p, df);

    const double tail = 1.0 - p;
    double lo = 0.0;
    double hi = std::max(1.0, normal_quantile(p));
    while (t_upper(hi, df) > tail) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) return std::numeric_limits<double>::infinity();
    }
    // Safeguarded Newton on the upper tail.
    double t = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        const double f = t_upper(t, df) - tail;
        if (f > 0.0) lo = t;
        else hi = t;
        const double step = f / student_t_pdf(t, df);  // d(sf)/dt = -pdf
        double next = t + step;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::fabs(next - t) <= 1e-15 * std::max(1.0, std::fabs(t))) return next;
        t = next;
        if (hi - lo <= 1e-15 * std::max(1.0, hi)) break;
    }
    return t;
}

double noncentral_t_cdf(double t, double df, double ncp) {
    require_finite(t, "t");
    require_finite(df, "df");
    require_finite(ncp, "ncp");
    if (!(df > 0.0)) throw std::domain_error("noncentral_t: df must be positive");
    if (t >= 0.0) return std::clamp(noncentral_cdf_nonneg(t, df, ncp), 0.0, 1.0);
    return std::clamp(1.0 - noncentral_cdf_nonneg(-t, df, -ncp), 0.0, 1.0);
}

double noncentral_t_sf(double t, double df, double ncp) {
    require_finite(t, "t");
    require_finite(df, "df");
    require_finite(ncp, "ncp");
    if (!(df > 0.0)) throw std::domain_error("noncentral_t: df must be positive");
    // P(T' > t) = P(-T' < -t), and -T' is noncentral t with -ncp.
    if (t <= 0.0) return std::clamp(noncentral_cdf_nonneg(-t, df, -ncp), 0.0, 1.0);
    return std::clamp(1.0 - noncentral_cdf_nonneg(t, df, ncp), 0.0, 1.0);
}

}  // namespace qleak::stats

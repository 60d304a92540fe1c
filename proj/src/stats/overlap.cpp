#include <algorithm>
#include <cmath>
#include <utility>

#include "qleak/stats.hpp"

namespace qleak::stats {

double ovl(const TimingDistribution& p, const TimingDistribution& q) {
    if (!(p.variance > 0.0 && q.variance > 0.0)) throw std::invalid_argument("ovl: variances must be positive");

    const double dv = q.variance - p.variance;
    if (std::fabs(dv) <= 1e-12 * std::max(p.variance, q.variance)) {
        const double sigma = std::sqrt(0.5 * (p.variance + q.variance));
        return 2.0 * normal_cdf(-std::fabs(p.mean - q.mean) / (2.0 * sigma));
    }

    // The densities cross twice. Between the crossings the narrower density is
    // on top, so the minimum is the wider one there and the narrower outside.
    const auto& narrow = p.variance < q.variance ? p : q;
    const auto& wide = p.variance < q.variance ? q : p;
    const double sn = narrow.stddev();
    const double sw = wide.stddev();

    // (x - mw)^2 / (2 vw) - (x - mn)^2 / (2 vn) + log(sw / sn) = 0
    const double a = 1.0 / (2.0 * wide.variance) - 1.0 / (2.0 * narrow.variance);
    const double b = narrow.mean / narrow.variance - wide.mean / wide.variance;
    const double c = wide.mean * wide.mean / (2.0 * wide.variance) -
                     narrow.mean * narrow.mean / (2.0 * narrow.variance) + std::log(sw / sn);
    const double disc = b * b - 4.0 * a * c;
    const double root = std::sqrt(std::max(disc, 0.0));
    const double qq = -0.5 * (b + std::copysign(root, b));
    double x1 = qq / a;
    double x2 = qq != 0.0 ? c / qq : x1;
    if (x1 > x2) std::swap(x1, x2);

    auto cdf = [](const TimingDistribution& d, double x, double s) { return normal_cdf((x - d.mean) / s); };
    const double outside = cdf(narrow, x1, sn) + normal_cdf((narrow.mean - x2) / sn);
    const double inside = cdf(wide, x2, sw) - cdf(wide, x1, sw);
    return std::clamp(outside + inside, 0.0, 1.0);
}

}  // namespace qleak::stats

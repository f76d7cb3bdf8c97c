#include "feederflow/numerics.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "feederflow/errors.hpp"
#include "feederflow/model.hpp"

namespace feederflow {

Eigen::ArrayXd derivative_4th(const Eigen::ArrayXd& f, double h) {
    const auto n = f.size();
    if (n < 5) {
        throw ValidationError("4th-order differencing needs at least 5 samples");
    }
    Eigen::ArrayXd d(n);
    const double inv = 1.0 / (12.0 * h);
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) * inv;
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) * inv;
    for (Eigen::Index i = 2; i + 2 < n; ++i) {
        d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) * inv;
    }
    d[n - 2] = (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]) * inv;
    d[n - 1] = (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5]) * inv;
    return d;
}

double simpson(const Eigen::ArrayXd& f, double h) {
    const auto n = f.size();
    if (n < 3 || n % 2 == 0) {
        throw ValidationError("Simpson quadrature needs an odd sample count (even intervals)");
    }
    double odd = 0.0, even = 0.0;
    for (Eigen::Index i = 1; i + 1 < n; i += 2) odd += f[i];
    for (Eigen::Index i = 2; i + 1 < n; i += 2) even += f[i];
    return h / 3.0 * (f[0] + f[n - 1] + 4.0 * odd + 2.0 * even);
}

Eigen::Vector2d simpson_profile(const Profile& profile, double L, int n_intervals) {
    if (n_intervals < 2 || n_intervals % 2 != 0) {
        throw ValidationError("Simpson quadrature needs an even interval count");
    }
    const double h = L / n_intervals;
    Eigen::Vector2d total = Eigen::Vector2d::Zero();
    for (int k = 0; k + 2 <= n_intervals; k += 2) {
        const Eigen::Vector2d lo = profile.density(k * h, Side::Right);
        const Eigen::Vector2d mid = profile.density((k + 1) * h, Side::Right);
        const Eigen::Vector2d hi = profile.density((k + 2) * h, Side::Left);
        total += h / 3.0 * (lo + 4.0 * mid + hi);
    }
    return total;
}

Eigen::Vector2d integrate_profile(const Profile& profile, double a, double b) {
    return integrate_profile_weighted(profile, a, b, 1.0, 1.0);
}

Eigen::Vector2d integrate_profile_weighted(const Profile& profile, double a, double b, double w_a,
                                           double w_b) {
    Eigen::Vector2d total = Eigen::Vector2d::Zero();
    if (!(b > a)) return total;
    std::vector<double> cuts;
    cuts.push_back(a);
    for (double bp : profile.breakpoints()) {
        if (bp > a && bp < b) cuts.push_back(bp);
    }
    cuts.push_back(b);
    const auto weight = [&](double x) { return w_a + (w_b - w_a) * ((x - a) / (b - a)); };
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double lo = cuts[i];
        const double hi = cuts[i + 1];
        if (!(hi > lo)) continue;
        // Simpson on the smooth piece; edge samples take the limit from
        // inside so adjacent jumps do not bleed across.
        constexpr int kSamples = 8;
        const double step = (hi - lo) / kSamples;
        Eigen::Vector2d sum = profile.density(lo, Side::Right) * weight(lo) +
                              profile.density(hi, Side::Left) * weight(hi);
        for (int j = 1; j < kSamples; ++j) {
            const double x = lo + j * step;
            sum += (j % 2 != 0 ? 4.0 : 2.0) * weight(x) * profile.density(x);
        }
        total += step / 3.0 * sum;
    }
    return total;
}

double observed_order(double err_coarse, double err_fine) {
    if (err_fine <= 0.0) return std::numeric_limits<double>::infinity();
    if (err_coarse <= 0.0) return -std::numeric_limits<double>::infinity();
    return std::log2(err_coarse / err_fine);
}

}  // namespace feederflow

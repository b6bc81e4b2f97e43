#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "maxscore/errors.hpp"

namespace maxscore {

inline constexpr double kPi = 3.14159265358979323846;

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi); }

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Inverse standard normal CDF (Wichura's PPND16 rational approximation,
/// accurate to ~1e-16 relative error over (0, 1)).
inline double normal_quantile(double p) {
    if (p <= 0.0) return -std::numeric_limits<double>::infinity();
    if (p >= 1.0) return std::numeric_limits<double>::infinity();
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        const double num =
            (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                  6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
                1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
              1.3314166789178437745e+2) * r + 3.3871328727963666080e+0);
        const double den =
            (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                  3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
                5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
              4.2313330701600911252e+1) * r + 1.0);
        return q * num / den;
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        const double num =
            (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
                3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
              4.63033784615654529590e+0) * r + 1.42343711074968357734e+0);
        const double den =
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
              2.05319162663775882187e+0) * r + 1.0);
        value = num / den;
    } else {
        r -= 5.0;
        const double num =
            (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
              5.46378491116411436990e+0) * r + 6.65790464350110377720e+0);
        const double den =
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
        value = num / den;
    }
    return (q < 0.0) ? -value : value;
}

/// CDF of Student's t with 3 degrees of freedom, via the closed form
/// F(t) = 1/2 + (atan(u) + u/(1+u^2))/pi with u = t/sqrt(3).
inline double student_t3_cdf(double t) {
    const double u = t / std::sqrt(3.0);
    return 0.5 + (std::atan(u) + u / (1.0 + u * u)) / kPi;
}

inline double student_t3_pdf(double t) {
    const double u2 = t * t / 3.0;
    return 2.0 / (kPi * std::sqrt(3.0) * (1.0 + u2) * (1.0 + u2));
}

/// Additive low-discrepancy sequence in [0,1)^dim (generalized golden ratio).
class RSequence {
  public:
    explicit RSequence(int dim, std::uint64_t start_index = 0)
        : alpha_(dim), index_(start_index) {
        double phi = 2.0;
        for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / (dim + 1.0));
        double a = 1.0;
        for (int j = 0; j < dim; ++j) {
            a /= phi;
            alpha_[j] = a;
        }
    }

    Eigen::VectorXd next() {
        ++index_;
        Eigen::VectorXd u(alpha_.size());
        for (Eigen::Index j = 0; j < u.size(); ++j) {
            double v = 0.5 + static_cast<double>(index_) * alpha_[j];
            u[j] = v - std::floor(v);
        }
        return u;
    }

  private:
    Eigen::VectorXd alpha_;
    std::uint64_t index_;
};

/// Deterministic low-discrepancy directions on the unit sphere in R^dim.
inline Eigen::MatrixXd quasi_sphere_points(Eigen::Index count, int dim,
                                           std::uint64_t start_index = 0) {
    RSequence seq(dim, start_index);
    Eigen::MatrixXd out(count, dim);
    for (Eigen::Index k = 0; k < count; ++k) {
        Eigen::VectorXd u = seq.next();
        Eigen::VectorXd z(dim);
        for (int j = 0; j < dim; ++j) {
            z[j] = normal_quantile(std::clamp(u[j], 1e-12, 1.0 - 1e-12));
        }
        const double norm = z.norm();
        if (norm < 1e-14) {
            z.setZero();
            z[0] = 1.0;
            out.row(k) = z;
        } else {
            out.row(k) = z / norm;
        }
    }
    return out;
}

/// Empirical quantile by linear interpolation between order statistics at
/// 1-based position 1 + (n-1)*a.
inline double empirical_quantile(const std::vector<double>& sorted, double a) {
    if (sorted.empty()) throw InsufficientDraws("empirical_quantile: empty sample");
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    double pos = 1.0 + static_cast<double>(n - 1) * a;
    pos = std::clamp(pos, 1.0, static_cast<double>(n));
    const std::size_t i = std::min(static_cast<std::size_t>(pos), n - 1);
    const double frac = pos - static_cast<double>(i);
    return sorted[i - 1] + frac * (sorted[i] - sorted[i - 1]);
}

/// Two-sample Kolmogorov-Smirnov distance sup_x |F_a(x) - F_b(x)|.
inline double ks_distance(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw EmptySample("ks_distance: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        const double fa = static_cast<double>(i) / static_cast<double>(a.size());
        const double fb = static_cast<double>(j) / static_cast<double>(b.size());
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

/// One-sample Kolmogorov-Smirnov distance against a reference CDF.
template <typename Cdf>
double ks_distance_cdf(std::vector<double> sample, Cdf&& cdf) {
    if (sample.empty()) throw EmptySample("ks_distance_cdf: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

}  // namespace maxscore

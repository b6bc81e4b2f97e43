#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "maxscore/dataset.hpp"
#include "maxscore/errors.hpp"
#include "maxscore/math.hpp"
#include "maxscore/rng.hpp"
#include "maxscore/score.hpp"
#include "maxscore/smoothing.hpp"

namespace maxscore {

struct BootstrapScheme {
    enum class Kind { Classical, MOutOfN, Smoothed, Reference };

    Kind kind = Kind::Classical;
    double gamma = 0.0;  // MOutOfN subsample exponent, in (0,1)
    int replicates = 0;  // B
    // testing hook: a fixed pre-simulated draws matrix standing in for the
    // rate-scaled estimator distribution
    std::shared_ptr<const Eigen::MatrixXd> reference_draws;

    static BootstrapScheme classical(int B) { return {Kind::Classical, 0.0, B, nullptr}; }
    static BootstrapScheme m_out_of_n(double gamma, int B) {
        if (!(gamma > 0.0 && gamma < 1.0)) {
            throw ConfigError("BootstrapScheme: gamma must lie in (0,1)");
        }
        return {Kind::MOutOfN, gamma, B, nullptr};
    }
    static BootstrapScheme smoothed(int B) { return {Kind::Smoothed, 0.0, B, nullptr}; }
    static BootstrapScheme reference(Eigen::MatrixXd draws) {
        auto shared = std::make_shared<const Eigen::MatrixXd>(std::move(draws));
        return {Kind::Reference, 0.0, static_cast<int>(shared->rows()), shared};
    }

    std::string label() const {
        switch (kind) {
            case Kind::Classical: return "classical";
            case Kind::MOutOfN: return "moon[" + format_double(gamma) + "]";
            case Kind::Smoothed: return "smoothed";
            case Kind::Reference: return "reference";
        }
        return "?";
    }
};

/// m = ceil(n^gamma); the tiny slack guards against pow() landing a hair above
/// an exact integer.
inline Eigen::Index moon_m(Eigen::Index n, double gamma) {
    const double raw = std::pow(static_cast<double>(n), gamma);
    auto m = static_cast<Eigen::Index>(std::ceil(raw - 1e-9));
    return std::clamp<Eigen::Index>(m, 1, n);
}

/// n rows drawn uniformly with replacement.
inline Dataset classical_resample(const Dataset& data, RandomStream& rng) {
    if (data.n() < 1) throw EmptyDataset("classical_resample: empty dataset");
    Dataset out;
    out.x.resize(data.n(), data.dim());
    out.y.resize(data.n());
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        const auto k = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(data.n())));
        out.x.row(i) = data.x.row(k);
        out.y[i] = data.y[k];
    }
    return out;
}

/// ceil(n^gamma) rows drawn uniformly with replacement.
inline Dataset moon_resample(const Dataset& data, double gamma, RandomStream& rng) {
    if (data.n() < 1) throw EmptyDataset("moon_resample: empty dataset");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("moon_resample: gamma must lie in (0,1)");
    const Eigen::Index m = moon_m(data.n(), gamma);
    Dataset out;
    out.x.resize(m, data.dim());
    out.y.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto k = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(data.n())));
        out.x.row(i) = data.x.row(k);
        out.y[i] = data.y[k];
    }
    return out;
}

/// The fitted joint model the smoothed scheme resamples from, together with
/// the smoothed-criterion maximizer used as the bootstrap centering.
struct SmoothedSampler {
    std::function<Eigen::MatrixXd(Eigen::Index, RandomStream&)> sample_x;
    std::function<double(const Eigen::VectorXd&)> kappa;
    SphereVector center;
};

inline SmoothedSampler make_smoothed_sampler(const DensityModel& density,
                                             const RegressionModel& regression,
                                             SphereVector center) {
    return SmoothedSampler{
        [&density](Eigen::Index m, RandomStream& rng) { return kde_sample(density, m, rng); },
        [&regression](const Eigen::VectorXd& x) { return nw_eval(regression, x); },
        std::move(center)};
}

/// n rows with X* from the sampler and Y* | X* ~ Bernoulli(kappa(X*)), the
/// probability clamped to [0,1]. The stream is consumed as the full X* batch
/// followed by one uniform per row.
inline Dataset smoothed_resample(
    const std::function<Eigen::MatrixXd(Eigen::Index, RandomStream&)>& sample_x,
    const std::function<double(const Eigen::VectorXd&)>& kappa, Eigen::Index n,
    RandomStream& rng) {
    Dataset out;
    out.x = sample_x(n, rng);
    out.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double p = std::clamp(kappa(out.x.row(i)), 0.0, 1.0);
        out.y[i] = (rng.uniform01() < p) ? 1 : 0;
    }
    return out;
}

inline Dataset smoothed_resample(const DensityModel& density,
                                 const std::function<double(const Eigen::VectorXd&)>& kappa,
                                 Eigen::Index n, RandomStream& rng) {
    return smoothed_resample(
        [&density](Eigen::Index m, RandomStream& r) { return kde_sample(density, m, r); }, kappa,
        n, rng);
}

/// Centered, rate-scaled bootstrap draws approximating the law of the
/// rate-scaled estimator error.
struct BootstrapDistribution {
    Eigen::MatrixXd draws;  // B x d matrix of Delta* rows
    SphereVector center;
    double rate = 0.0;      // n^{1/3} or m^{1/3}
    BootstrapScheme scheme;
    Eigen::Index m = 0;     // subsample size (MOutOfN only, otherwise n)
    std::uint64_t seed = 0;
};

namespace detail {

inline constexpr std::uint64_t kCenterStreamTag = ~std::uint64_t{0};

}  // namespace detail

/// Runs B independent replicates of the chosen scheme. Per replicate b the
/// resample and the score maximization consume stream.child(b), so the draws
/// matrix is identical no matter how replicates are scheduled. Centering and
/// rate: (data estimate, n^{1/3}) for Classical, (data estimate, m^{1/3}) for
/// MOutOfN, (smoothed center, n^{1/3}) for Smoothed.
inline BootstrapDistribution bootstrap_distribution(const Dataset& data,
                                                    const BootstrapScheme& scheme,
                                                    const RandomStream& stream,
                                                    const OptimizerOptions& opts = {},
                                                    const SmoothedSampler* smoothed = nullptr,
                                                    const SphereVector* data_estimate = nullptr) {
    if (data.n() < 1) throw EmptyDataset("bootstrap_distribution: empty dataset");
    if (scheme.replicates < 1) throw ConfigError("bootstrap_distribution: B must be >= 1");
    const Eigen::Index n = data.n();
    const Eigen::Index d = data.dim();

    const auto estimate_center = [&]() -> SphereVector {
        if (data_estimate != nullptr) return *data_estimate;
        RandomStream center_rng = stream.child(detail::kCenterStreamTag);
        return maximize_score(data, opts, center_rng).beta;
    };

    BootstrapDistribution out;
    out.scheme = scheme;
    out.seed = stream.seed();
    out.m = n;

    if (scheme.kind == BootstrapScheme::Kind::Reference) {
        if (!scheme.reference_draws) {
            throw ConfigError("bootstrap_distribution: reference scheme without draws");
        }
        out.draws = *scheme.reference_draws;
        out.center = estimate_center();
        out.rate = std::cbrt(static_cast<double>(n));
        return out;
    }

    SphereVector center = (scheme.kind == BootstrapScheme::Kind::Smoothed)
                              ? (smoothed != nullptr
                                     ? smoothed->center
                                     : throw ConfigError(
                                           "bootstrap_distribution: smoothed scheme needs fitted models"))
                              : estimate_center();

    double rate = std::cbrt(static_cast<double>(n));
    if (scheme.kind == BootstrapScheme::Kind::MOutOfN) {
        out.m = moon_m(n, scheme.gamma);
        rate = std::cbrt(static_cast<double>(out.m));
    }

    out.draws.resize(scheme.replicates, d);
    for (int b = 0; b < scheme.replicates; ++b) {
        RandomStream rep = stream.child(static_cast<std::uint64_t>(b));
        Dataset resample;
        switch (scheme.kind) {
            case BootstrapScheme::Kind::Classical:
                resample = classical_resample(data, rep);
                break;
            case BootstrapScheme::Kind::MOutOfN:
                resample = moon_resample(data, scheme.gamma, rep);
                break;
            case BootstrapScheme::Kind::Smoothed:
                resample = smoothed_resample(smoothed->sample_x, smoothed->kappa, n, rep);
                break;
            case BootstrapScheme::Kind::Reference:
                break;  // handled above
        }
        const ScoreMaximum replicate = maximize_score(resample, opts, rep);
        out.draws.row(b) = rate * (replicate.beta.coords() - center.coords());
    }
    out.center = std::move(center);
    out.rate = rate;
    return out;
}

struct ConfidenceInterval {
    double lower = 0.0;
    double upper = 0.0;
    double level = 0.0;
    Eigen::Index coordinate = 0;
};

/// Root-inversion percentile interval
///   [est - q_{1-a/2}/n^{1/3}, est - q_{a/2}/n^{1/3}],  a = 1 - level,
/// with empirical quantiles interpolated at 1-based positions 1 + (B-1)p.
inline ConfidenceInterval percentile_ci(const BootstrapDistribution& dist,
                                        const SphereVector& estimate, Eigen::Index n,
                                        double level, Eigen::Index coordinate) {
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("percentile_ci: level must lie in (0,1)");
    if (coordinate < 0 || coordinate >= dist.draws.cols()) {
        throw DimensionMismatch("percentile_ci: coordinate out of range");
    }
    if (dist.draws.rows() < 2) throw InsufficientDraws("percentile_ci: need at least two draws");
    std::vector<double> column(static_cast<std::size_t>(dist.draws.rows()));
    for (Eigen::Index b = 0; b < dist.draws.rows(); ++b) {
        column[static_cast<std::size_t>(b)] = dist.draws(b, coordinate);
    }
    std::sort(column.begin(), column.end());
    const double alpha = 1.0 - level;
    const double q_lo = empirical_quantile(column, alpha / 2.0);
    const double q_hi = empirical_quantile(column, 1.0 - alpha / 2.0);
    const double scale = std::cbrt(static_cast<double>(n));
    ConfidenceInterval ci;
    ci.lower = estimate[coordinate] - q_hi / scale;
    ci.upper = estimate[coordinate] - q_lo / scale;
    ci.level = level;
    ci.coordinate = coordinate;
    return ci;
}

/// Percentile interval without root inversion (diagnostic alternative):
///   [est + q_{a/2}/n^{1/3}, est + q_{1-a/2}/n^{1/3}].
inline ConfidenceInterval percentile_ci_direct(const BootstrapDistribution& dist,
                                               const SphereVector& estimate, Eigen::Index n,
                                               double level, Eigen::Index coordinate) {
    ConfidenceInterval root = percentile_ci(dist, estimate, n, level, coordinate);
    const double est = estimate[coordinate];
    ConfidenceInterval ci;
    ci.lower = 2.0 * est - root.upper;
    ci.upper = 2.0 * est - root.lower;
    ci.level = level;
    ci.coordinate = coordinate;
    return ci;
}

}  // namespace maxscore

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "maxscore/dataset.hpp"
#include "maxscore/errors.hpp"
#include "maxscore/math.hpp"
#include "maxscore/rng.hpp"

namespace maxscore {

/// Orthonormal basis of the hyperplane {x : beta'x = 0}, as columns of a
/// d x (d-1) matrix.
struct HyperplaneBasis {
    Eigen::MatrixXd h;

    Eigen::Index ambient_dim() const { return h.rows(); }
    Eigen::Index hyperplane_dim() const { return h.cols(); }

    /// Maps hyperplane coordinates to the ambient space.
    Eigen::VectorXd lift(const Eigen::VectorXd& xi) const { return h * xi; }
};

/// Deterministic basis via the Householder reflection that maps the d-th
/// standard basis vector to beta; the reflection's first d-1 columns are
/// orthonormal and orthogonal to beta, and the sign convention is fixed by the
/// reflection itself.
inline HyperplaneBasis hyperplane_basis(const SphereVector& beta) {
    const Eigen::Index d = beta.dim();
    if (d < 2) throw DimensionMismatch("hyperplane_basis: requires d >= 2");
    Eigen::VectorXd v = -beta.coords();
    v[d - 1] += 1.0;  // v = e_d - beta
    const double vv = v.squaredNorm();
    Eigen::MatrixXd q = Eigen::MatrixXd::Identity(d, d);
    if (vv > 1e-24) q -= (2.0 / vv) * v * v.transpose();
    return HyperplaneBasis{q.leftCols(d - 1)};
}

struct QuadratureConfig {
    double support_radius = 0.0;  // the density vanishes for |xi| beyond this
    long points = 200000;
};

namespace detail {

/// Composite Simpson on [lo, hi] with an even number of panels.
template <typename F>
double simpson(F&& f, double lo, double hi, long panels) {
    if (panels < 2) panels = 2;
    if (panels % 2 != 0) ++panels;
    const double h = (hi - lo) / static_cast<double>(panels);
    double sum = f(lo) + f(hi);
    for (long k = 1; k < panels; ++k) {
        sum += f(lo + h * static_cast<double>(k)) * ((k % 2 != 0) ? 4.0 : 2.0);
    }
    return sum * h / 3.0;
}

/// 1-D integral over [-R, R], split at 0 where the hinge integrands kink,
/// refined once if two resolutions disagree.
template <typename F>
double integrate_line(F&& f, double radius, long points) {
    const long half = std::max<long>(points / 2, 64);
    const auto run = [&](long panels) {
        return simpson(f, -radius, 0.0, panels) + simpson(f, 0.0, radius, panels);
    };
    const double coarse = run(half);
    const double fine = run(2 * half);
    if (std::abs(fine - coarse) > std::max(1e-12, 1e-9 * std::abs(fine))) return run(4 * half);
    return fine;
}

/// Quasi-Monte Carlo mean over the box [-R, R]^dim times the box volume.
template <typename F>
double integrate_box(F&& f, int dim, double radius, long points) {
    RSequence seq(dim);
    double sum = 0.0;
    for (long k = 0; k < points; ++k) {
        Eigen::VectorXd u = seq.next();
        Eigen::VectorXd xi = (2.0 * u.array() - 1.0) * radius;
        sum += f(xi);
    }
    const double volume = std::pow(2.0 * radius, static_cast<double>(dim));
    return sum / static_cast<double>(points) * volume;
}

inline void require_support(const QuadratureConfig& quad, const char* where) {
    if (!(quad.support_radius > 0.0) || !std::isfinite(quad.support_radius)) {
        throw QuadratureFailure(std::string(where) +
                                ": no finite support bound for the hyperplane density");
    }
}

}  // namespace detail

/// Covariance of the limiting Gaussian process,
///   Sigma(s,t) = (1/8) int (|s'xi| + |t'xi| - |(s-t)'xi|) p(H xi) d xi,
/// integrated over the hyperplane coordinates (1-D quadrature when the
/// hyperplane is a line, quasi-Monte Carlo otherwise).
inline double sigma_cov(const Eigen::VectorXd& s, const Eigen::VectorXd& t,
                        const std::function<double(const Eigen::VectorXd&)>& density,
                        const HyperplaneBasis& basis, const QuadratureConfig& quad) {
    const Eigen::Index k = basis.hyperplane_dim();
    if (s.size() != k || t.size() != k) {
        throw DimensionMismatch("sigma_cov: argument dimension mismatch");
    }
    detail::require_support(quad, "sigma_cov");
    const auto integrand = [&](const Eigen::VectorXd& xi) {
        const double a = std::abs(s.dot(xi));
        const double b = std::abs(t.dot(xi));
        const double c = std::abs((s - t).dot(xi));
        return (a + b - c) * density(basis.lift(xi));
    };
    if (k == 1) {
        const auto line = [&](double x) {
            Eigen::VectorXd xi(1);
            xi << x;
            return integrand(xi);
        };
        return detail::integrate_line(line, quad.support_radius, quad.points) / 8.0;
    }
    return detail::integrate_box(integrand, static_cast<int>(k), quad.support_radius,
                                 quad.points) / 8.0;
}

/// Drift matrix V = int (grad kappa(H xi)' beta0) p(H xi) xi xi' d xi; the
/// quadratic drift of the limit process is -1/2 s'Vs. `kappa_slope` receives
/// hyperplane coordinates xi.
inline Eigen::MatrixXd drift_matrix(const std::function<double(const Eigen::VectorXd&)>& kappa_slope,
                                    const std::function<double(const Eigen::VectorXd&)>& density,
                                    const HyperplaneBasis& basis, const QuadratureConfig& quad) {
    const Eigen::Index k = basis.hyperplane_dim();
    detail::require_support(quad, "drift_matrix");
    Eigen::MatrixXd v(k, k);
    if (k == 1) {
        const auto line = [&](double x) {
            Eigen::VectorXd xi(1);
            xi << x;
            return kappa_slope(xi) * density(basis.lift(xi)) * x * x;
        };
        v(0, 0) = detail::integrate_line(line, quad.support_radius, quad.points);
        return v;
    }
    for (Eigen::Index a = 0; a < k; ++a) {
        for (Eigen::Index b = a; b < k; ++b) {
            const auto entry = [&](const Eigen::VectorXd& xi) {
                return kappa_slope(xi) * density(basis.lift(xi)) * xi[a] * xi[b];
            };
            const double value = detail::integrate_box(entry, static_cast<int>(k),
                                                       quad.support_radius, quad.points);
            v(a, b) = value;
            v(b, a) = value;
        }
    }
    return v;
}

/// Specification of the limit process Lambda(s) = W(s) - 1/2 s'Vs on a grid.
/// When the hyperplane is a line and no covariance function is given, W is
/// a scaled two-sided Brownian motion W(s) = noise_scale * Z(s); otherwise W
/// is the zero-mean Gaussian field with the given covariance.
struct LimitProcessSpec {
    Eigen::MatrixXd drift;  // V, symmetric nonnegative-definite
    double noise_scale = 0.0;
    std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)> covariance;
    double grid_half_width = 6.0;
    double grid_step = 0.005;
    double first_coord_scale = 1.0;  // (H s*)_1 factor reported alongside 1-D draws

    static LimitProcessSpec scalar(double noise, double quadratic_coef, double half_width,
                                   double step, double first_coord = 1.0) {
        LimitProcessSpec spec;
        spec.drift = Eigen::MatrixXd::Constant(1, 1, 2.0 * quadratic_coef);
        spec.noise_scale = noise;
        spec.grid_half_width = half_width;
        spec.grid_step = step;
        spec.first_coord_scale = first_coord;
        return spec;
    }
};

struct LimitSample {
    Eigen::MatrixXd argmax_draws;     // B x (d-1)
    Eigen::VectorXd first_coord_draws;  // scaled 1-D convenience output
    Eigen::Index boundary_hits = 0;
};

/// Simulates B draws of argmax Lambda over the grid {-L, ..., L}^{d-1} with
/// step delta. Brownian paths are built from N(0, delta) increments away from
/// Z(0) = 0 (right side first, then left). Ties go to the first grid point in
/// scan order, i.e. the coordinate-lexicographically smallest one. Draws whose
/// argmax touches the grid boundary are counted; more than 1% of them
/// invalidates the run.
inline LimitSample simulate_limit_argmax(const LimitProcessSpec& spec, Eigen::Index B,
                                         RandomStream& rng) {
    const Eigen::Index dims = spec.drift.rows();
    if (dims < 1 || spec.drift.cols() != dims) {
        throw ConfigError("simulate_limit_argmax: drift matrix must be square");
    }
    if ((spec.drift - spec.drift.transpose()).lpNorm<Eigen::Infinity>() > 1e-10) {
        throw ConfigError("simulate_limit_argmax: drift matrix must be symmetric");
    }
    const double L = spec.grid_half_width;
    const double delta = spec.grid_step;
    if (!(L > 0.0) || !(delta > 0.0)) {
        throw ConfigError("simulate_limit_argmax: grid parameters must be positive");
    }
    if (delta > L / 10.0 * (1.0 + 1e-12)) {
        throw GridTooCoarse("simulate_limit_argmax: grid step exceeds one tenth of the half-width");
    }
    const auto half_points = static_cast<Eigen::Index>(std::ceil(L / delta - 1e-9));
    const Eigen::Index side = 2 * half_points + 1;

    LimitSample sample;
    sample.argmax_draws.resize(B, dims);

    if (dims == 1 && !spec.covariance) {
        const double a = spec.noise_scale;
        const double b = 0.5 * spec.drift(0, 0);
        const double sd = std::sqrt(delta);
        Eigen::VectorXd path(side);
        sample.first_coord_draws.resize(B);
        for (Eigen::Index rep = 0; rep < B; ++rep) {
            path[half_points] = 0.0;
            for (Eigen::Index i = half_points + 1; i < side; ++i) {
                path[i] = path[i - 1] + sd * rng.normal();
            }
            for (Eigen::Index i = half_points - 1; i >= 0; --i) {
                path[i] = path[i + 1] + sd * rng.normal();
            }
            Eigen::Index best = 0;
            double best_val = -std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < side; ++i) {
                const double s = static_cast<double>(i - half_points) * delta;
                const double val = a * path[i] - b * s * s;
                if (val > best_val) {
                    best_val = val;
                    best = i;
                }
            }
            if (best == 0 || best == side - 1) ++sample.boundary_hits;
            const double s_star = static_cast<double>(best - half_points) * delta;
            sample.argmax_draws(rep, 0) = s_star;
            sample.first_coord_draws[rep] = spec.first_coord_scale * s_star;
        }
    } else {
        if (!spec.covariance) {
            throw ConfigError("simulate_limit_argmax: multidimensional spec needs a covariance");
        }
        double total_points = 1.0;
        for (Eigen::Index j = 0; j < dims; ++j) total_points *= static_cast<double>(side);
        if (total_points > std::pow(40.0, static_cast<double>(dims))) {
            throw ConfigError("simulate_limit_argmax: grid exceeds the 40^(d-1) point budget");
        }
        const auto total = static_cast<Eigen::Index>(total_points);

        std::vector<Eigen::VectorXd> grid(static_cast<std::size_t>(total));
        for (Eigen::Index idx = 0; idx < total; ++idx) {
            Eigen::VectorXd s(dims);
            Eigen::Index rem = idx;
            for (Eigen::Index j = dims - 1; j >= 0; --j) {
                s[j] = static_cast<double>(rem % side - half_points) * delta;
                rem /= side;
            }
            grid[static_cast<std::size_t>(idx)] = s;
        }
        Eigen::MatrixXd cov(total, total);
        for (Eigen::Index p = 0; p < total; ++p) {
            for (Eigen::Index q = p; q < total; ++q) {
                const double c = spec.covariance(grid[static_cast<std::size_t>(p)],
                                                 grid[static_cast<std::size_t>(q)]);
                cov(p, q) = c;
                cov(q, p) = c;
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
        if (eig.info() != Eigen::Success) {
            throw NumericalError("simulate_limit_argmax: covariance eigendecomposition failed");
        }
        const Eigen::MatrixXd root =
            eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
        Eigen::VectorXd drift_vals(total);
        for (Eigen::Index p = 0; p < total; ++p) {
            const auto& s = grid[static_cast<std::size_t>(p)];
            drift_vals[p] = -0.5 * s.dot(spec.drift * s);
        }
        Eigen::VectorXd z(total);
        for (Eigen::Index rep = 0; rep < B; ++rep) {
            for (Eigen::Index p = 0; p < total; ++p) z[p] = rng.normal();
            const Eigen::VectorXd field = root * z + drift_vals;
            Eigen::Index best = 0;
            double best_val = -std::numeric_limits<double>::infinity();
            for (Eigen::Index p = 0; p < total; ++p) {
                if (field[p] > best_val) {
                    best_val = field[p];
                    best = p;
                }
            }
            const auto& s = grid[static_cast<std::size_t>(best)];
            const double extreme = static_cast<double>(half_points) * delta;
            if (s.cwiseAbs().maxCoeff() >= extreme - 1e-15) ++sample.boundary_hits;
            sample.argmax_draws.row(rep) = s;
        }
    }

    if (static_cast<double>(sample.boundary_hits) > 0.01 * static_cast<double>(B)) {
        throw BoundarySaturation("simulate_limit_argmax: " +
                                 format_int(sample.boundary_hits) + " of " + format_int(B) +
                                 " draws hit the grid boundary");
    }
    return sample;
}

}  // namespace maxscore

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
#include "maxscore/smoothing.hpp"

namespace maxscore {

struct OptimizerOptions {
    int restarts = 20;
    int grid_size = 4096;
    int refine_iters = 200;
    double tolerance = 1e-6;
};

struct ScoreMaximum {
    SphereVector beta;
    double value;
};

/// (1/m) sum_i w_i 1{beta'x_i >= 0}; the boundary counts as inside.
inline double weighted_score(const Eigen::MatrixXd& points, const Eigen::VectorXd& weights,
                             const Eigen::VectorXd& beta) {
    if (points.cols() != beta.size()) {
        throw DimensionMismatch("weighted_score: direction dimension mismatch");
    }
    if (points.rows() < 1) throw EmptyDataset("weighted_score: no points");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        if (points.row(i).dot(beta) >= 0.0) sum += weights[i];
    }
    return sum / static_cast<double>(points.rows());
}

/// Empirical score (1/n) sum (Y_i - 1/2) 1{beta'X_i >= 0}.
inline double score(const Dataset& data, const SphereVector& beta) {
    if (data.dim() != beta.dim()) throw DimensionMismatch("score: direction dimension mismatch");
    if (data.n() < 1) throw EmptyDataset("score: empty dataset");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        if (data.x.row(i).dot(beta.coords()) >= 0.0) {
            sum += (data.y[i] == 1) ? 0.5 : -0.5;
        }
    }
    return sum / static_cast<double>(data.n());
}

namespace detail {

inline double normalize_angle(double a) {
    const double two_pi = 2.0 * kPi;
    while (a < 0.0) a += two_pi;
    while (a >= two_pi) a -= two_pi;
    return a;
}

/// Membership of angle t in the closed arc [a, b] on the circle, all in [0, 2pi).
inline bool angle_in_arc(double t, double a, double b) {
    if (a <= b) return a <= t && t <= b;
    return t >= a || t <= b;
}

}  // namespace detail

/// Exact maximizer of the weighted score over the circle.
///
/// Each point x_i with |x_i| > 0 is included exactly for directions in a closed
/// half-circle arc [phi_i - pi/2, phi_i + pi/2]; the objective is therefore
/// piecewise constant in the angle with breakpoints at the arc endpoints. The
/// sweep evaluates every arc interior (at its midpoint) and every breakpoint
/// (boundary-inclusive) by event bookkeeping, which is exact arithmetic for
/// half-integer weights. Ties go to the smallest candidate angle in [0, 2pi).
inline ScoreMaximum maximize_weighted_2d(const Eigen::MatrixXd& points,
                                         const Eigen::VectorXd& weights) {
    if (points.cols() != 2) throw DimensionMismatch("maximize_weighted_2d: requires d = 2");
    if (points.rows() < 1) throw EmptyDataset("maximize_weighted_2d: no points");
    const double m = static_cast<double>(points.rows());

    struct Event {
        double angle;
        double enter;  // weight entering at this angle
        double leave;  // weight leaving just after this angle
    };
    std::vector<double> arc_lo, arc_hi, arc_w;
    std::vector<Event> events;
    double base = 0.0;  // zero points are inside every half-plane
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const double x0 = points(i, 0), x1 = points(i, 1);
        if (x0 == 0.0 && x1 == 0.0) {
            base += weights[i];
            continue;
        }
        const double phi = std::atan2(x1, x0);
        const double a = detail::normalize_angle(phi - 0.5 * kPi);
        const double b = detail::normalize_angle(phi + 0.5 * kPi);
        arc_lo.push_back(a);
        arc_hi.push_back(b);
        arc_w.push_back(weights[i]);
        events.push_back({a, weights[i], 0.0});
        events.push_back({b, 0.0, weights[i]});
    }
    if (events.empty()) {
        Eigen::VectorXd e1(2);
        e1 << 1.0, 0.0;
        return {SphereVector(e1), base / m};
    }
    std::sort(events.begin(), events.end(),
              [](const Event& a, const Event& b) { return a.angle < b.angle; });

    // coalesce events at exactly equal angles
    std::vector<Event> groups;
    for (const auto& e : events) {
        if (!groups.empty() && groups.back().angle == e.angle) {
            groups.back().enter += e.enter;
            groups.back().leave += e.leave;
        } else {
            groups.push_back(e);
        }
    }

    // score at the first breakpoint, computed combinatorially from the arcs
    double at = 0.0;
    for (std::size_t i = 0; i < arc_w.size(); ++i) {
        if (detail::angle_in_arc(groups.front().angle, arc_lo[i], arc_hi[i])) at += arc_w[i];
    }

    // Arc interiors and breakpoints are tracked separately: the reported
    // maximizer is the midpoint of the first maximizing arc, falling back to a
    // breakpoint angle only when the maximum is attained nowhere else.
    double best_arc_sum = -std::numeric_limits<double>::infinity();
    double best_arc_angle = 0.0;
    double best_break_sum = -std::numeric_limits<double>::infinity();
    double best_break_angle = 0.0;
    const auto consider_arc = [&](double angle, double sum) {
        if (sum > best_arc_sum || (sum == best_arc_sum && angle < best_arc_angle)) {
            best_arc_sum = sum;
            best_arc_angle = angle;
        }
    };
    const auto consider_break = [&](double angle, double sum) {
        if (sum > best_break_sum || (sum == best_break_sum && angle < best_break_angle)) {
            best_break_sum = sum;
            best_break_angle = angle;
        }
    };

    consider_break(groups.front().angle, at);
    for (std::size_t k = 0; k < groups.size(); ++k) {
        if (k > 0) {
            at += groups[k].enter;
            consider_break(groups[k].angle, at);
        }
        const double arc = at - groups[k].leave;  // on the open arc after this angle
        const double next =
            (k + 1 < groups.size()) ? groups[k + 1].angle : groups.front().angle + 2.0 * kPi;
        consider_arc(detail::normalize_angle(0.5 * (groups[k].angle + next)), arc);
        at = arc;
    }

    const bool break_only = best_break_sum > best_arc_sum;
    const double best_sum = break_only ? best_break_sum : best_arc_sum;
    const double best_angle = break_only ? best_break_angle : best_arc_angle;
    Eigen::VectorXd beta(2);
    beta << std::cos(best_angle), std::sin(best_angle);
    return {SphereVector(beta), (best_sum + base) / m};
}

/// Exact maximum score estimator for d = 2.
inline ScoreMaximum maximize_score_2d(const Dataset& data) {
    if (data.dim() != 2) throw DimensionMismatch("maximize_score_2d: requires d = 2");
    if (data.n() < 1) throw EmptyDataset("maximize_score_2d: empty dataset");
    Eigen::VectorXd w(data.n());
    for (Eigen::Index i = 0; i < data.n(); ++i) w[i] = (data.y[i] == 1) ? 0.5 : -0.5;
    return maximize_weighted_2d(data.x, w);
}

namespace detail {

inline bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    for (Eigen::Index j = 0; j < a.size(); ++j) {
        if (a[j] != b[j]) return a[j] < b[j];
    }
    return false;
}

/// Raw (unnormalized) weighted score sum.
inline double weighted_sum(const Eigen::MatrixXd& points, const Eigen::VectorXd& weights,
                           const Eigen::VectorXd& beta) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        if (points.row(i).dot(beta) >= 0.0) sum += weights[i];
    }
    return sum;
}

/// Greedy pattern search on the sphere: try +/- step along every coordinate,
/// renormalize, accept the best strict improvement, halve the step otherwise.
inline void pattern_refine(const Eigen::MatrixXd& points, const Eigen::VectorXd& weights,
                           const OptimizerOptions& opts, Eigen::VectorXd& beta, double& sum) {
    const Eigen::Index d = points.cols();
    double step = 0.5;
    for (int it = 0; it < opts.refine_iters && step >= opts.tolerance; ++it) {
        bool improved = false;
        Eigen::VectorXd best_cand = beta;
        double best_val = sum;
        for (Eigen::Index j = 0; j < d; ++j) {
            for (const double sign : {1.0, -1.0}) {
                Eigen::VectorXd cand = beta;
                cand[j] += sign * step;
                const double norm = cand.norm();
                if (norm < 1e-12) continue;
                cand /= norm;
                const double val = weighted_sum(points, weights, cand);
                if (val > best_val || (val == best_val && improved && lex_less(cand, best_cand))) {
                    best_val = val;
                    best_cand = cand;
                    improved = true;
                }
            }
        }
        if (improved) {
            beta = best_cand;
            sum = best_val;
        } else {
            step *= 0.5;
        }
    }
}

}  // namespace detail

/// Multi-start heuristic maximizer of the weighted score for any d >= 2:
/// a coarse pass over quasi-random sphere directions plus random restarts, each
/// refined by pattern search with geometrically shrinking steps. Not guaranteed
/// global; ties across starts resolve to the lexicographically smallest vector.
inline ScoreMaximum maximize_weighted_nd(const Eigen::MatrixXd& points,
                                         const Eigen::VectorXd& weights,
                                         const OptimizerOptions& opts, RandomStream& rng) {
    const Eigen::Index d = points.cols();
    if (d < 2) throw DimensionMismatch("maximize_weighted_nd: requires d >= 2");
    if (points.rows() < 1) throw EmptyDataset("maximize_weighted_nd: no points");

    std::vector<Eigen::VectorXd> starts;
    const Eigen::MatrixXd grid = quasi_sphere_points(opts.grid_size, static_cast<int>(d));
    Eigen::VectorXd grid_best;
    double grid_best_val = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < grid.rows(); ++k) {
        const Eigen::VectorXd cand = grid.row(k);
        const double val = detail::weighted_sum(points, weights, cand);
        if (val > grid_best_val ||
            (val == grid_best_val && detail::lex_less(cand, grid_best))) {
            grid_best_val = val;
            grid_best = cand;
        }
    }
    starts.push_back(grid_best);
    for (int r = 0; r < opts.restarts; ++r) {
        Eigen::VectorXd z(d);
        for (Eigen::Index j = 0; j < d; ++j) z[j] = rng.normal();
        const double norm = z.norm();
        starts.push_back(norm < 1e-12 ? grid_best : Eigen::VectorXd(z / norm));
    }

    Eigen::VectorXd best = grid_best;
    double best_val = grid_best_val;
    for (auto& start : starts) {
        Eigen::VectorXd beta = start;
        double val = detail::weighted_sum(points, weights, beta);
        detail::pattern_refine(points, weights, opts, beta, val);
        if (val > best_val || (val == best_val && detail::lex_less(beta, best))) {
            best_val = val;
            best = beta;
        }
    }
    return {SphereVector(best), best_val / static_cast<double>(points.rows())};
}

/// Heuristic maximum score estimator for d >= 2.
inline ScoreMaximum maximize_score_nd(const Dataset& data, const OptimizerOptions& opts,
                                      RandomStream& rng) {
    if (data.dim() < 2) throw DimensionMismatch("maximize_score_nd: requires d >= 2");
    if (data.n() < 1) throw EmptyDataset("maximize_score_nd: empty dataset");
    Eigen::VectorXd w(data.n());
    for (Eigen::Index i = 0; i < data.n(); ++i) w[i] = (data.y[i] == 1) ? 0.5 : -0.5;
    return maximize_weighted_nd(data.x, w, opts, rng);
}

/// Exact sweep for d = 2, heuristic search otherwise.
inline ScoreMaximum maximize_score(const Dataset& data, const OptimizerOptions& opts,
                                   RandomStream& rng) {
    if (data.dim() == 2) return maximize_score_2d(data);
    return maximize_score_nd(data, opts, rng);
}

inline Eigen::Index default_smoothing_mc_size(Eigen::Index n) {
    return std::max<Eigen::Index>(10 * n, 10000);
}

/// Monte Carlo maximizer of the smoothed population score
/// integral over {beta'x >= 0} of (kappa(x) - 1/2) p(x) dx:
/// draws x_1..x_M from the fitted density, weights them by kappa(x_j) - 1/2,
/// and maximizes the weighted score with the exact d = 2 sweep (or the d >= 3
/// search, which continues on the same stream).
inline SphereVector smoothed_argmax(const DensityModel& density,
                                    const std::function<double(const Eigen::VectorXd&)>& kappa,
                                    Eigen::Index mc_size, const OptimizerOptions& opts,
                                    RandomStream& rng) {
    if (mc_size < 1) throw DataError("smoothed_argmax: mc_size must be positive");
    const Eigen::MatrixXd sample = kde_sample(density, mc_size, rng);
    Eigen::VectorXd w(mc_size);
    for (Eigen::Index i = 0; i < mc_size; ++i) w[i] = kappa(sample.row(i)) - 0.5;
    if (density.dim() == 2) return maximize_weighted_2d(sample, w).beta;
    return maximize_weighted_nd(sample, w, opts, rng).beta;
}

}  // namespace maxscore

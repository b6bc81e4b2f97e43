#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "maxscore/dataset.hpp"
#include "maxscore/errors.hpp"
#include "maxscore/math.hpp"
#include "maxscore/rng.hpp"

namespace maxscore {

struct BandwidthVector {
    Eigen::VectorXd h;

    explicit BandwidthVector(Eigen::VectorXd values) : h(std::move(values)) {
        for (Eigen::Index j = 0; j < h.size(); ++j) {
            if (!(h[j] > 0.0) || !std::isfinite(h[j])) {
                throw DataError("BandwidthVector: entries must be positive and finite");
            }
        }
    }
};

/// Normal reference rule h_j = sd_j * n^{-1/(d+4)} with the n-1 divisor.
inline BandwidthVector scott_bandwidths(const Dataset& data) {
    const Eigen::Index n = data.n();
    const Eigen::Index d = data.dim();
    if (n < 2) throw DataError("scott_bandwidths: need at least two observations");
    const double factor = std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(d) + 4.0));
    Eigen::VectorXd h(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        const double mean = data.x.col(j).mean();
        const double ss = (data.x.col(j).array() - mean).square().sum();
        const double sd = std::sqrt(ss / static_cast<double>(n - 1));
        if (sd == 0.0) {
            throw DegenerateColumn("scott_bandwidths: column " + format_int(j + 1) +
                                   " has zero sample standard deviation");
        }
        h[j] = sd * factor;
    }
    return BandwidthVector(h);
}

namespace detail {

/// Canonical training order: rows sorted lexicographically (responses, when
/// present, break ties), so evaluation sums run in a row-order-independent
/// sequence and permuting the input leaves every evaluation bit-identical.
inline std::vector<Eigen::Index> canonical_order(const Eigen::MatrixXd& points,
                                                 const Eigen::VectorXd* responses) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(points.rows()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index j = 0; j < points.cols(); ++j) {
            if (points(a, j) != points(b, j)) return points(a, j) < points(b, j);
        }
        if (responses != nullptr && (*responses)[a] != (*responses)[b]) {
            return (*responses)[a] < (*responses)[b];
        }
        return false;
    });
    return order;
}

}  // namespace detail

/// Product-Gaussian kernel density estimate over fixed training points.
class DensityModel {
  public:
    DensityModel(Eigen::MatrixXd points, BandwidthVector bandwidths)
        : h_(std::move(bandwidths)) {
        if (points.rows() < 1) throw EmptyDataset("DensityModel: no training points");
        if (points.cols() != h_.h.size()) {
            throw DimensionMismatch("DensityModel: bandwidth dimension mismatch");
        }
        const auto order = detail::canonical_order(points, nullptr);
        points_.resize(points.rows(), points.cols());
        for (std::size_t i = 0; i < order.size(); ++i) {
            points_.row(static_cast<Eigen::Index>(i)) = points.row(order[i]);
        }
        double h_prod = 1.0;
        for (Eigen::Index j = 0; j < h_.h.size(); ++j) h_prod *= h_.h[j];
        norm_ = std::pow(2.0 * kPi, -0.5 * static_cast<double>(points.cols())) /
                (static_cast<double>(points.rows()) * h_prod);
    }

    const Eigen::MatrixXd& points() const { return points_; }
    const BandwidthVector& bandwidths() const { return h_; }
    Eigen::Index n() const { return points_.rows(); }
    Eigen::Index dim() const { return points_.cols(); }
    double normalization() const { return norm_; }

  private:
    Eigen::MatrixXd points_;
    BandwidthVector h_;
    double norm_;
};

/// (1/(n prod h_j)) sum_i prod_j phi((x_j - X_ij)/h_j).
inline double kde_eval(const DensityModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.dim()) throw DimensionMismatch("kde_eval: query dimension mismatch");
    const auto& pts = model.points();
    const auto& h = model.bandwidths().h;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        double q = 0.0;
        for (Eigen::Index j = 0; j < pts.cols(); ++j) {
            const double z = (x[j] - pts(i, j)) / h[j];
            q += z * z;
        }
        sum += std::exp(-0.5 * q);
    }
    return model.normalization() * sum;
}

/// Draws from the fitted density: a uniformly resampled training point plus
/// independent N(0, diag(h^2)) jitter. Per row the stream is consumed as one
/// index draw followed by d normals.
inline Eigen::MatrixXd kde_sample(const DensityModel& model, Eigen::Index m, RandomStream& rng) {
    const auto& pts = model.points();
    const auto& h = model.bandwidths().h;
    Eigen::MatrixXd out(m, model.dim());
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto k = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(pts.rows())));
        for (Eigen::Index j = 0; j < model.dim(); ++j) {
            out(i, j) = pts(k, j) + h[j] * rng.normal();
        }
    }
    return out;
}

/// Nadaraya-Watson regression of a binary response on the covariates, with the
/// same product-Gaussian kernel.
class RegressionModel {
  public:
    RegressionModel(Eigen::MatrixXd points, Eigen::VectorXi responses, BandwidthVector bandwidths)
        : h_(std::move(bandwidths)) {
        if (points.rows() < 1) throw EmptyDataset("RegressionModel: no training points");
        if (points.rows() != responses.size()) {
            throw DimensionMismatch("RegressionModel: response length mismatch");
        }
        if (points.cols() != h_.h.size()) {
            throw DimensionMismatch("RegressionModel: bandwidth dimension mismatch");
        }
        Eigen::VectorXd yd = responses.cast<double>();
        const auto order = detail::canonical_order(points, &yd);
        points_.resize(points.rows(), points.cols());
        y_.resize(points.rows());
        for (std::size_t i = 0; i < order.size(); ++i) {
            points_.row(static_cast<Eigen::Index>(i)) = points.row(order[i]);
            y_[static_cast<Eigen::Index>(i)] = yd[order[i]];
        }
        mean_response_ = y_.mean();
    }

    const Eigen::MatrixXd& points() const { return points_; }
    const Eigen::VectorXd& responses() const { return y_; }
    const BandwidthVector& bandwidths() const { return h_; }
    double mean_response() const { return mean_response_; }
    Eigen::Index dim() const { return points_.cols(); }

  private:
    Eigen::MatrixXd points_;
    Eigen::VectorXd y_;
    BandwidthVector h_;
    double mean_response_;
};

/// sum_i Y_i K((x - X_i)/h) / sum_i K((x - X_i)/h). Falls back to the global
/// response mean when the denominator underflows (|den| < 1e-300), which keeps
/// far-tail queries deterministic. The ratio lies in [0,1] without clamping.
inline double nw_eval(const RegressionModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.dim()) throw DimensionMismatch("nw_eval: query dimension mismatch");
    const auto& pts = model.points();
    const auto& y = model.responses();
    const auto& h = model.bandwidths().h;
    double num = 0.0;
    double den = 0.0;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        double q = 0.0;
        for (Eigen::Index j = 0; j < pts.cols(); ++j) {
            const double z = (x[j] - pts(i, j)) / h[j];
            q += z * z;
        }
        const double w = std::exp(-0.5 * q);
        num += y[i] * w;
        den += w;
    }
    if (den < 1e-300) return model.mean_response();
    return num / den;
}

/// Class-conditional route to kappa: pi f1(x) / ((1-pi) f0(x) + pi f1(x)).
struct ClassDensityKappa {
    std::optional<DensityModel> f0;  // X | Y = 0
    std::optional<DensityModel> f1;  // X | Y = 1
    double pi = 0.0;                 // relative frequency of Y = 1
};

inline double class_kappa_eval(const ClassDensityKappa& model, const Eigen::VectorXd& x) {
    const double d0 = model.f0 ? kde_eval(*model.f0, x) : 0.0;
    const double d1 = model.f1 ? kde_eval(*model.f1, x) : 0.0;
    const double num = model.pi * d1;
    const double den = (1.0 - model.pi) * d0 + num;
    if (den < 1e-300) return 0.5;
    return num / den;
}

/// Fits the class-conditional form: pi from the response frequency and one
/// normal-reference-rule density per class.
inline ClassDensityKappa fit_class_density_kappa(const Dataset& data) {
    if (data.n() < 1) throw EmptyDataset("fit_class_density_kappa: empty dataset");
    ClassDensityKappa model;
    std::vector<Eigen::Index> idx0, idx1;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        (data.y[i] == 1 ? idx1 : idx0).push_back(i);
    }
    model.pi = static_cast<double>(idx1.size()) / static_cast<double>(data.n());
    const auto build = [&](const std::vector<Eigen::Index>& idx) -> std::optional<DensityModel> {
        if (idx.empty()) return std::nullopt;
        Eigen::MatrixXd pts(static_cast<Eigen::Index>(idx.size()), data.dim());
        Eigen::VectorXi yy(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            pts.row(static_cast<Eigen::Index>(i)) = data.x.row(idx[i]);
            yy[static_cast<Eigen::Index>(i)] = 0;
        }
        Dataset sub{pts, yy};
        return DensityModel(pts, scott_bandwidths(sub));
    };
    model.f0 = build(idx0);
    model.f1 = build(idx1);
    return model;
}

}  // namespace maxscore

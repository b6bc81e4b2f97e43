#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <utility>

#include "maxscore/dataset.hpp"
#include "maxscore/errors.hpp"
#include "maxscore/math.hpp"
#include "maxscore/rng.hpp"

namespace maxscore {

enum class DgpKind { HeteroNormal, HeteroStudentT3, CustomKappa };

/// Data-generating process for the binary choice model Y = 1{b0'X + U >= 0}.
///
/// The two built-in processes draw X uniform on [-1,1]^d and a heteroscedastic
/// error U with conditional scale 1/(1+|X|^2): Gaussian for HeteroNormal and
/// Student-t(3) for HeteroStudentT3. CustomKappa carries its own covariate
/// sampler and success-probability function instead.
struct DgpSpec {
    DgpKind kind;
    Eigen::Index dim;
    SphereVector beta0;
    std::function<double(const Eigen::VectorXd&)> kappa;           // CustomKappa only
    std::function<Eigen::VectorXd(RandomStream&)> sample_x;        // CustomKappa only

    static DgpSpec hetero_normal(Eigen::Index d) {
        return hetero_normal(d, SphereVector::diagonal(d));
    }
    static DgpSpec hetero_normal(Eigen::Index d, SphereVector beta0) {
        if (beta0.dim() != d) throw DimensionMismatch("DgpSpec: beta0 dimension mismatch");
        return DgpSpec{DgpKind::HeteroNormal, d, std::move(beta0), nullptr, nullptr};
    }
    static DgpSpec hetero_student_t3(Eigen::Index d) {
        return hetero_student_t3(d, SphereVector::diagonal(d));
    }
    static DgpSpec hetero_student_t3(Eigen::Index d, SphereVector beta0) {
        if (beta0.dim() != d) throw DimensionMismatch("DgpSpec: beta0 dimension mismatch");
        return DgpSpec{DgpKind::HeteroStudentT3, d, std::move(beta0), nullptr, nullptr};
    }
    static DgpSpec custom(SphereVector beta0,
                          std::function<double(const Eigen::VectorXd&)> kappa,
                          std::function<Eigen::VectorXd(RandomStream&)> sample_x) {
        const Eigen::Index d = beta0.dim();
        return DgpSpec{DgpKind::CustomKappa, d, std::move(beta0), std::move(kappa),
                       std::move(sample_x)};
    }
};

/// kappa(x) = P(Y = 1 | X = x).
///
/// For the built-ins this is F(b0'x (1 + |x|^2)) with F the standard normal or
/// Student-t(3) CDF.
inline double kappa_true(const DgpSpec& spec, const Eigen::VectorXd& x) {
    const double index = spec.beta0.coords().dot(x) * (1.0 + x.squaredNorm());
    switch (spec.kind) {
        case DgpKind::HeteroNormal:
            return normal_cdf(index);
        case DgpKind::HeteroStudentT3:
            return student_t3_cdf(index);
        case DgpKind::CustomKappa:
            return spec.kappa(x);
    }
    return 0.5;
}

/// Covariate density of the built-in processes (uniform on [-1,1]^d). The
/// closed support carries a 1e-12 fuzz so points mapped onto the boundary by
/// rounded arithmetic still count as inside.
inline double covariate_density(const DgpSpec& spec, const Eigen::VectorXd& x) {
    if (spec.kind == DgpKind::CustomKappa) {
        throw DataError("covariate_density: not available for a custom process");
    }
    if (x.lpNorm<Eigen::Infinity>() > 1.0 + 1e-12) return 0.0;
    return std::pow(0.5, static_cast<double>(spec.dim));
}

/// Directional derivative of the true kappa along beta0,
/// grad kappa(x)' beta0 = f(g(x)) * ((1+|x|^2) + 2 (b0'x)^2) with g(x) = b0'x (1+|x|^2)
/// and f the error density; on the separating hyperplane this is f(0)(1+|x|^2).
inline double hyperplane_kappa_slope(const DgpSpec& spec, const Eigen::VectorXd& x) {
    const double bx = spec.beta0.coords().dot(x);
    const double g = bx * (1.0 + x.squaredNorm());
    const double deriv = (1.0 + x.squaredNorm()) + 2.0 * bx * bx;
    switch (spec.kind) {
        case DgpKind::HeteroNormal:
            return normal_pdf(g) * deriv;
        case DgpKind::HeteroStudentT3:
            return student_t3_pdf(g) * deriv;
        case DgpKind::CustomKappa:
            throw DataError("hyperplane_kappa_slope: not available for a custom process");
    }
    return 0.0;
}

/// Draws n observations. Per row the stream is consumed as: d uniforms for X,
/// then one error draw (built-ins) or one uniform for the Bernoulli response
/// (CustomKappa).
inline Dataset dgp_sample(const DgpSpec& spec, Eigen::Index n, RandomStream& rng) {
    Dataset data;
    data.x.resize(n, spec.dim);
    data.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd xi(spec.dim);
        if (spec.kind == DgpKind::CustomKappa) {
            xi = spec.sample_x(rng);
            if (xi.size() != spec.dim) {
                throw DimensionMismatch("dgp_sample: covariate sampler dimension mismatch");
            }
            data.x.row(i) = xi;
            data.y[i] = (rng.uniform01() < spec.kappa(xi)) ? 1 : 0;
            continue;
        }
        for (Eigen::Index j = 0; j < spec.dim; ++j) xi[j] = rng.uniform(-1.0, 1.0);
        const double scale = 1.0 / (1.0 + xi.squaredNorm());
        const double u = (spec.kind == DgpKind::HeteroNormal) ? rng.normal() * scale
                                                              : rng.student_t3() * scale;
        data.x.row(i) = xi;
        data.y[i] = (spec.beta0.coords().dot(xi) + u >= 0.0) ? 1 : 0;
    }
    return data;
}

/// Covariate, latent error, and response of one reconstructed observation.
struct LatentDraw {
    Eigen::VectorXd v;
    double u;
    int w;
};

/// Rebuilds a latent error consistent with the observed conditional success
/// probability: U = (b0'v / Psi^{-1}(kappa(v))) Z for a fresh standard normal Z,
/// zero when kappa(v) lies in {0, 1/2, 1}. Psi is the standard normal CDF.
/// Requires the sign condition b0'v (kappa(v) - 1/2) >= 0; the multiplier is
/// then strictly positive away from the degenerate kappa values, so
/// P(W = 1 | V = v) = kappa(v) and med(U | V = v) = 0.
inline LatentDraw reconstruct_latent(const std::function<double(const Eigen::VectorXd&)>& kappa,
                                     const SphereVector& beta0, const Eigen::VectorXd& v,
                                     RandomStream& rng) {
    if (v.size() != beta0.dim()) {
        throw DimensionMismatch("reconstruct_latent: covariate dimension mismatch");
    }
    const double k = kappa(v);
    const double bv = beta0.coords().dot(v);
    if (bv * (k - 0.5) < 0.0) {
        throw SignConditionViolated("reconstruct_latent: beta0'v and kappa(v) - 1/2 disagree in sign");
    }
    const double z = rng.normal();
    double u = 0.0;
    if (k != 0.0 && k != 0.5 && k != 1.0) {
        u = bv / normal_quantile(k) * z;
    }
    LatentDraw draw;
    draw.v = v;
    draw.u = u;
    draw.w = (u + bv >= 0.0) ? 1 : 0;
    return draw;
}

}  // namespace maxscore

#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ura/codebook.hpp"
#include "ura/errors.hpp"
#include "ura/rng.hpp"

namespace ura {

struct ADConfig {
    enum class Order { fixed, shuffled };

    int max_passes = 10;
    double rel_tol = 1e-6;     // stop when the per-pass relative objective decrease falls below this
    int delta = 5;             // over-selection beyond K_a
    Order order = Order::shuffled;
    int refresh_every = 5;     // full precision recompute cadence in passes; 0 disables
};

// Detector state: activity vector over codebook columns plus the maintained
// inverse of the model covariance N0 I + sum_k gamma_k a_k a_k^H.
struct GammaEstimate {
    Eigen::VectorXd gamma;
    Eigen::MatrixXcd precision;
};

struct ADResult {
    GammaEstimate estimate;
    std::vector<double> pass_objectives;  // negative log-likelihood after each pass
    int passes = 0;
};

namespace detail {

inline double cholesky_logdet(Eigen::LLT<Eigen::MatrixXcd>& llt) {
    double logdet = 0.0;
    const auto& L = llt.matrixLLT();
    for (Eigen::Index i = 0; i < L.rows(); ++i) logdet += std::log(L(i, i).real());
    return 2.0 * logdet;
}

// log|Sigma| + trace(Sigma^{-1} SampleCov) for an explicitly built Sigma
// (lower triangle suffices).
inline double nll_from_model(const Eigen::MatrixXcd& sigma, const Eigen::MatrixXcd& sample_cov) {
    Eigen::LLT<Eigen::MatrixXcd> llt(sigma);
    if (llt.info() != Eigen::Success)
        throw NumericalFailure("nll objective: covariance model not positive definite (jitter)");
    double value = cholesky_logdet(llt) + llt.solve(sample_cov).trace().real();
    if (!std::isfinite(value)) throw NumericalFailure("nll objective: non-finite value");
    return value;
}

// One coordinate-descent update at column a. Maintains only the lower
// triangles of `precision` and, when given, of the model covariance `sigma`.
// Returns the unclipped step d*; applies the clipped step to all state.
inline double coordinate_step_impl(const Eigen::VectorXcd& a, double& gamma_k, Eigen::MatrixXcd& precision,
                                   const Eigen::MatrixXcd& sample_cov, Eigen::MatrixXcd* sigma,
                                   Eigen::VectorXcd& u, Eigen::VectorXcd& t) {
    u.noalias() = precision.selfadjointView<Eigen::Lower>() * a;
    const double q = a.dot(u).real();           // a^H Sigma^{-1} a
    t.noalias() = sample_cov.selfadjointView<Eigen::Lower>() * u;
    const double fit = u.dot(t).real();         // a^H Sigma^{-1} SampleCov Sigma^{-1} a
    const double d_star = (fit - q) / (q * q);
    const double step = std::max(gamma_k + d_star, 0.0) - gamma_k;  // clipped step keeps gamma >= 0
    if (step != 0.0) {
        const double den = 1.0 + step * q;
        if (!(den > 1e-12)) throw NumericalFailure("coordinate step: rank-1 denominator vanished");
        gamma_k += step;
        precision.selfadjointView<Eigen::Lower>().rankUpdate(u, -step / den);
        if (sigma) sigma->selfadjointView<Eigen::Lower>().rankUpdate(a, step);
    }
    return d_star;
}

inline void mirror_lower(Eigen::MatrixXcd& m) { m.triangularView<Eigen::StrictlyUpper>() = m.adjoint(); }

// N0 I + sum over nonzero gamma of gamma_k a_k a_k^H, assembled by GEMM
// over the active columns.
inline Eigen::MatrixXcd build_model_cov(const Eigen::VectorXd& gamma, const Codebook& codebook, double N0) {
    const Eigen::Index n = codebook.columns.rows();
    std::vector<Eigen::Index> active;
    for (Eigen::Index k = 0; k < gamma.size(); ++k)
        if (gamma(k) != 0.0) active.push_back(k);
    Eigen::MatrixXcd sigma = N0 * Eigen::MatrixXcd::Identity(n, n);
    if (!active.empty()) {
        Eigen::MatrixXcd scaled(n, static_cast<Eigen::Index>(active.size()));
        for (std::size_t i = 0; i < active.size(); ++i)
            scaled.col(static_cast<Eigen::Index>(i)) = codebook.columns.col(active[i]) * std::sqrt(gamma(active[i]));
        sigma.selfadjointView<Eigen::Lower>().rankUpdate(scaled, 1.0);
    }
    return sigma;
}

}  // namespace detail

// Covariance-matching negative log-likelihood log|Sigma| + trace(Sigma^{-1} SampleCov)
// with Sigma = A diag(gamma) A^H + N0 I.
inline double nll_objective(const Eigen::VectorXd& gamma, const Codebook& codebook,
                            const Eigen::MatrixXcd& sample_cov, double N0) {
    if (gamma.size() != codebook.columns.cols())
        throw std::invalid_argument("nll_objective: gamma length does not match codebook");
    if ((gamma.array() < 0.0).any()) throw std::invalid_argument("nll_objective: gamma must be nonnegative");
    if (N0 <= 0.0) throw std::invalid_argument("nll_objective: N0 must be positive");
    return detail::nll_from_model(detail::build_model_cov(gamma, codebook, N0), sample_cov);
}

// Single coordinate update on public state. Returns the unclipped d*; state
// (gamma_k and the precision matrix) receives the clipped step so the two
// always stay consistent.
inline double coordinate_step(const Codebook& codebook, std::uint32_t k, GammaEstimate& state,
                              const Eigen::MatrixXcd& sample_cov) {
    if (k >= codebook.num_columns()) throw std::invalid_argument("coordinate_step: column index out of range");
    Eigen::VectorXcd u(codebook.columns.rows()), t(codebook.columns.rows());
    const Eigen::VectorXcd a = codebook.columns.col(static_cast<Eigen::Index>(k));
    double d_star = detail::coordinate_step_impl(a, state.gamma(static_cast<Eigen::Index>(k)), state.precision,
                                                 sample_cov, nullptr, u, t);
    detail::mirror_lower(state.precision);
    return d_star;
}

// Algorithm: start from Sigma = N0 I, gamma = 0 and sweep coordinate updates
// over the support set until the objective stalls or max_passes is reached.
// gamma stays zero outside `support` throughout.
inline ADResult coordinate_descent(const Eigen::MatrixXcd& sample_cov, const Codebook& codebook,
                                   const SupportSet& support, const ADConfig& config, double N0,
                                   std::uint64_t shuffle_seed = 0) {
    if (support.indices.empty()) throw std::invalid_argument("coordinate_descent: empty support");
    if (config.max_passes < 1) throw std::invalid_argument("coordinate_descent: max_passes must be >= 1");
    const Eigen::Index n = codebook.columns.rows();

    ADResult result;
    result.estimate.gamma = Eigen::VectorXd::Zero(codebook.columns.cols());
    result.estimate.precision = (1.0 / N0) * Eigen::MatrixXcd::Identity(n, n);
    Eigen::MatrixXcd sigma = N0 * Eigen::MatrixXcd::Identity(n, n);  // model covariance, tracked alongside

    Eigen::VectorXcd u(n), t(n);
    std::vector<std::uint32_t> order(support.indices);
    Rng shuffle_stream(shuffle_seed, {0x5f1e});

    double f_prev = detail::nll_from_model(sigma, sample_cov);
    for (int pass = 1; pass <= config.max_passes; ++pass) {
        if (config.order == ADConfig::Order::shuffled) {
            order = support.indices;
            shuffle_stream.shuffle(order);
        }
        for (std::uint32_t k : order) {
            detail::coordinate_step_impl(codebook.columns.col(static_cast<Eigen::Index>(k)),
                                         result.estimate.gamma(static_cast<Eigen::Index>(k)),
                                         result.estimate.precision, sample_cov, &sigma, u, t);
        }
        result.passes = pass;

        if (config.refresh_every > 0 && pass % config.refresh_every == 0) {
            // recompute both tracked matrices from gamma to cap rank-1 drift
            sigma = detail::build_model_cov(result.estimate.gamma, codebook, N0);
            Eigen::LLT<Eigen::MatrixXcd> llt(sigma);
            if (llt.info() != Eigen::Success)
                throw NumericalFailure("coordinate descent: refresh Cholesky failed");
            result.estimate.precision = llt.solve(Eigen::MatrixXcd::Identity(n, n));
        }

        const double f = detail::nll_from_model(sigma, sample_cov);
        result.pass_objectives.push_back(f);
        const double denom = std::max(std::abs(f_prev), 1e-300);
        if ((f_prev - f) / denom < config.rel_tol) break;
        f_prev = f;
    }
    detail::mirror_lower(result.estimate.precision);
    return result;
}

// Indices of the (at most) K_a + delta largest strictly-positive gamma
// entries, ties broken by ascending index; returned sorted by index.
inline std::vector<ScoredFragment> select_fragments(const GammaEstimate& estimate, int ka, int delta) {
    if (ka < 0 || delta < 0) throw std::invalid_argument("select_fragments: negative K_a or delta");
    std::vector<ScoredFragment> nonzero;
    for (Eigen::Index k = 0; k < estimate.gamma.size(); ++k)
        if (estimate.gamma(k) > 0.0) nonzero.push_back({static_cast<std::uint32_t>(k), estimate.gamma(k)});
    const std::size_t keep = std::min(nonzero.size(), static_cast<std::size_t>(ka) + static_cast<std::size_t>(delta));
    std::partial_sort(nonzero.begin(), nonzero.begin() + static_cast<std::ptrdiff_t>(keep), nonzero.end(),
                      [](const ScoredFragment& a, const ScoredFragment& b) {
                          if (a.score != b.score) return a.score > b.score;
                          return a.index < b.index;
                      });
    nonzero.resize(keep);
    std::sort(nonzero.begin(), nonzero.end(),
              [](const ScoredFragment& a, const ScoredFragment& b) { return a.index < b.index; });
    return nonzero;
}

}  // namespace ura

#include "medtest/linmod.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "medtest/distributions.hpp"
#include "medtest/errors.hpp"

namespace medtest::linmod {

namespace {

double reference_cdf(double t, int df, Reference ref) {
    double u = (ref == Reference::StudentT) ? dist::student_t_cdf(t, df)
                                            : dist::normal_cdf(t);
    // U must stay inside the open unit interval for the region tests.
    return std::clamp(u, 1e-300, 1.0 - 1e-16);
}

}  // namespace

FitSummary ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                   Eigen::Index target_col, Reference ref) {
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    if (y.size() != n) throw DomainError("ols_fit: y length must match X rows");
    if (target_col < 0 || target_col >= p) throw DomainError("ols_fit: target column out of range");
    if (n <= p) throw InsufficientDataError("ols_fit: need more observations than columns");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < p) throw SingularDesignError("ols_fit: design matrix is rank deficient");

    const Eigen::VectorXd coef = qr.solve(y);
    const Eigen::VectorXd resid = y - X * coef;
    const double rss = resid.squaredNorm();
    const int df = static_cast<int>(n - p);
    const double scale = std::max(y.squaredNorm(), 1.0);
    if (rss <= 1e-24 * scale)
        throw DegenerateFitError("ols_fit: residual variance is zero, t statistic undefined");
    const double sigma2 = rss / df;

    // Var(coef_j) = sigma^2 [ (X'X)^{-1} ]_{jj} = sigma^2 || R^{-T} P' e_j ||^2
    const Eigen::MatrixXd R = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
    Eigen::VectorXd ej = Eigen::VectorXd::Zero(p);
    ej(target_col) = 1.0;
    const Eigen::VectorXd pe = qr.colsPermutation().transpose() * ej;
    const Eigen::VectorXd w = R.transpose().triangularView<Eigen::Lower>().solve(pe);
    const double se = std::sqrt(sigma2 * w.squaredNorm());

    FitSummary fit;
    fit.estimate = coef(target_col);
    fit.se = se;
    fit.t_stat = fit.estimate / se;
    fit.df = df;
    fit.u = reference_cdf(fit.t_stat, df, ref);
    return fit;
}

MediationFits mediation_fits(const Eigen::VectorXd& exposure,
                             const Eigen::VectorXd& mediator,
                             const Eigen::VectorXd& outcome,
                             const Eigen::MatrixXd& covariates,
                             Reference ref) {
    const Eigen::Index n = exposure.size();
    if (mediator.size() != n || outcome.size() != n)
        throw DomainError("mediation_fits: column lengths differ");
    if (covariates.size() != 0 && covariates.rows() != n)
        throw DomainError("mediation_fits: covariate rows differ");
    const Eigen::Index n_cov = covariates.size() == 0 ? 0 : covariates.cols();

    std::vector<Eigen::Index> keep;
    keep.reserve(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        bool ok = std::isfinite(exposure(i)) && std::isfinite(mediator(i)) &&
                  std::isfinite(outcome(i));
        for (Eigen::Index j = 0; ok && j < n_cov; ++j) ok = std::isfinite(covariates(i, j));
        if (ok) keep.push_back(i);
    }
    const Eigen::Index m = static_cast<Eigen::Index>(keep.size());
    if (m < 10) throw InsufficientDataError("mediation_fits: fewer than 10 complete rows");

    Eigen::MatrixXd Xb(m, 2 + n_cov);           // mediator ~ 1 + exposure + covariates
    Eigen::MatrixXd Xg(m, 3 + n_cov);           // outcome ~ 1 + exposure + mediator + covariates
    Eigen::VectorXd yb(m), yg(m);
    for (Eigen::Index r = 0; r < m; ++r) {
        const Eigen::Index i = keep[r];
        Xb(r, 0) = 1.0;
        Xb(r, 1) = exposure(i);
        Xg(r, 0) = 1.0;
        Xg(r, 1) = exposure(i);
        Xg(r, 2) = mediator(i);
        for (Eigen::Index j = 0; j < n_cov; ++j) {
            Xb(r, 2 + j) = covariates(i, j);
            Xg(r, 3 + j) = covariates(i, j);
        }
        yb(r) = mediator(i);
        yg(r) = outcome(i);
    }

    MediationFits fits;
    fits.beta = ols_fit(Xb, yb, 1, ref);
    fits.gamma = ols_fit(Xg, yg, 2, ref);
    fits.n_complete = static_cast<int>(m);
    fits.n_dropped = static_cast<int>(n - m);
    return fits;
}

}  // namespace medtest::linmod

#ifndef MEDTEST_LINMOD_HPP
#define MEDTEST_LINMOD_HPP

#include <Eigen/Dense>

#include "medtest/regions.hpp"

namespace medtest::linmod {

// Reference distribution for the cumulative probability U = F(t).
enum class Reference { StudentT, Normal };

struct FitSummary {
    double estimate = 0.0;
    double se = 0.0;
    double t_stat = 0.0;
    int df = 0;       // residual degrees of freedom
    double u = 0.5;   // F(t_stat) under the reference distribution
};

// OLS for one target coefficient. X must include any intercept column
// explicitly. Throws InsufficientDataError (n <= columns),
// SingularDesignError (rank deficient) or DegenerateFitError (zero residual
// variance, t undefined).
FitSummary ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                   Eigen::Index target_col, Reference ref = Reference::StudentT);

struct MediationFits {
    FitSummary beta;    // exposure coefficient in  mediator ~ 1 + exposure + covariates
    FitSummary gamma;   // mediator coefficient in  outcome ~ 1 + exposure + mediator + covariates
    int n_complete = 0;
    int n_dropped = 0;

    regions::CumulativePair pair() const { return {beta.u, gamma.u}; }
};

// Fits the two mediation regressions on the complete cases (rows with any NaN
// among the used columns are dropped). Requires >= 10 complete rows.
MediationFits mediation_fits(const Eigen::VectorXd& exposure,
                             const Eigen::VectorXd& mediator,
                             const Eigen::VectorXd& outcome,
                             const Eigen::MatrixXd& covariates,
                             Reference ref = Reference::StudentT);

}  // namespace medtest::linmod

#endif

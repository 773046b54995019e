#ifndef MEDTEST_DISTRIBUTIONS_HPP
#define MEDTEST_DISTRIBUTIONS_HPP

#include <string>

namespace medtest::dist {

// ---------------------------------------------------------------------------
// Scalar building blocks
// ---------------------------------------------------------------------------

double normal_cdf(double x);
double normal_pdf(double x);
// Inverse standard normal CDF (Wichura AS241), p in (0,1).
double normal_quantile(double p);

double student_t_cdf(double x, int df);
double student_t_pdf(double x, int df);
double student_t_quantile(double p, int df);

// Noncentral t with integer df and noncentrality delta; CDF/pdf computed by
// conditioning on the chi scale factor and integrating numerically.
double noncentral_t_cdf(double x, int df, double delta);
double noncentral_t_pdf(double x, int df, double delta);
double noncentral_t_quantile(double p, int df, double delta);

// Pr(|Z1*Z2| > c) for independent standard normals; exact at c = 0 (=1),
// strictly decreasing in c.
double product_normal_tail(double c);
double product_normal_cdf(double x);
double product_normal_quantile(double p);
double product_normal_pdf(double x);

// ---------------------------------------------------------------------------
// Tagged distribution handle
// ---------------------------------------------------------------------------

enum class Kind {
    StandardNormal,
    StudentT,          // df
    NoncentralT,       // df, delta
    NoncentralNormal,  // delta (unit variance)
    ProductNormal,
};

struct Distribution {
    Kind kind = Kind::StandardNormal;
    int df = 0;
    double delta = 0.0;

    static Distribution standard_normal() { return {Kind::StandardNormal, 0, 0.0}; }
    static Distribution student_t(int df);
    static Distribution noncentral_t(int df, double delta);
    static Distribution noncentral_normal(double delta) {
        return {Kind::NoncentralNormal, 0, delta};
    }
    static Distribution product_normal() { return {Kind::ProductNormal, 0, 0.0}; }

    std::string name() const;
};

double cdf(const Distribution& d, double x);
double pdf(const Distribution& d, double x);
double quantile(const Distribution& d, double p);

}  // namespace medtest::dist

#endif

#include "medtest/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "medtest/errors.hpp"
#include "medtest/quadrature.hpp"

namespace medtest::dist {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488;

void require_finite(double x, const char* what) {
    if (!std::isfinite(x)) throw DomainError(std::string(what) + ": non-finite argument");
}

void require_prob_open(double p, const char* what) {
    if (!(p > 0.0 && p < 1.0))
        throw DomainError(std::string(what) + ": p must lie in (0,1)");
}

// Continued fraction for the regularized incomplete beta (Numerical Recipes).
double betacf(double a, double b, double x) {
    constexpr double kFpMin = 1e-300;
    constexpr double kEps = 3e-16;
    constexpr int kMaxIter = 500;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    throw NumericalError("betacf: no convergence", h, std::fabs(h));
}

double ibeta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double lbeta = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
    const double front = std::exp(lbeta + a * std::log(x) + b * std::log1p(-x));
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

// Density of S = sqrt(chi2_df / df); the mixing weight for noncentral t.
double chi_scale_pdf(double s, int df) {
    if (s <= 0.0) return 0.0;
    const double half = 0.5 * df;
    const double log_norm = std::log(2.0) + half * std::log(half) - std::lgamma(half);
    return std::exp(log_norm + (df - 1) * std::log(s) - half * s * s);
}

// Upper integration limit for the chi scale: beyond this the density mass is
// below ~1e-16 for df >= 1.
double chi_scale_cutoff(int df) { return 1.0 + 12.0 / std::sqrt(static_cast<double>(df)); }

// Generic monotone CDF inversion: bisection hardened with Newton steps.
template <typename Cdf, typename Pdf>
double invert_cdf(double p, Cdf cdf_fn, Pdf pdf_fn, double lo, double hi) {
    // Expand bracket if needed.
    for (int i = 0; i < 200 && cdf_fn(lo) > p; ++i) lo = lo * 2.0 - 1.0;
    for (int i = 0; i < 200 && cdf_fn(hi) < p; ++i) hi = hi * 2.0 + 1.0;
    double x = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        const double fx = cdf_fn(x) - p;
        if (fx > 0.0)
            hi = x;
        else
            lo = x;
        const double dfx = pdf_fn(x);
        double next = (dfx > 0.0) ? x - fx / dfx : std::numeric_limits<double>::quiet_NaN();
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::fabs(next - x) < 1e-13 * (1.0 + std::fabs(x))) return next;
        x = next;
    }
    return x;
}

}  // namespace

// ---------------------------------------------------------------------------
// Normal
// ---------------------------------------------------------------------------

double normal_cdf(double x) {
    require_finite(x, "normal_cdf");
    return 0.5 * std::erfc(-x / kSqrt2);
}

double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) * 0.39894228040143267794;
}

// Wichura's AS 241 (PPND16): |relative error| < 1e-15 across (0,1).
double normal_quantile(double p) {
    require_prob_open(p, "normal_quantile");
    const double q = p - 0.5;
    double r;
    if (std::fabs(q) <= 0.425) {
        r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                     6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
                   1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
                 1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
               (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                     3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
                   5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
                 4.2313330701600911252e+1) * r + 1.0);
    }
    r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                      2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
                    3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
                  4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
                (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                      1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                    6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
                  2.05319162663775882187e+0) * r + 1.0);
    } else {
        r -= 5.0;
        value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                      1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                    2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
                  5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
                (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                      1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                    1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                  5.99832206555887937690e-1) * r + 1.0);
    }
    return (q < 0.0) ? -value : value;
}

// ---------------------------------------------------------------------------
// Student t
// ---------------------------------------------------------------------------

double student_t_cdf(double x, int df) {
    require_finite(x, "student_t_cdf");
    if (df < 1) throw DomainError("student_t_cdf: df must be >= 1");
    const double v = static_cast<double>(df);
    const double p_half = 0.5 * ibeta(0.5 * v, 0.5, v / (v + x * x));
    return (x >= 0.0) ? 1.0 - p_half : p_half;
}

double student_t_pdf(double x, int df) {
    if (df < 1) throw DomainError("student_t_pdf: df must be >= 1");
    const double v = static_cast<double>(df);
    const double log_norm =
        std::lgamma(0.5 * (v + 1.0)) - std::lgamma(0.5 * v) - 0.5 * std::log(v * M_PI);
    return std::exp(log_norm - 0.5 * (v + 1.0) * std::log1p(x * x / v));
}

double student_t_quantile(double p, int df) {
    require_prob_open(p, "student_t_quantile");
    if (df < 1) throw DomainError("student_t_quantile: df must be >= 1");
    if (p == 0.5) return 0.0;
    const double z = normal_quantile(p);
    return invert_cdf(
        p, [df](double x) { return student_t_cdf(x, df); },
        [df](double x) { return student_t_pdf(x, df); }, z - 2.0 - 4.0 * std::fabs(z),
        z + 2.0 + 4.0 * std::fabs(z));
}

// ---------------------------------------------------------------------------
// Noncentral t
// ---------------------------------------------------------------------------

double noncentral_t_cdf(double x, int df, double delta) {
    require_finite(x, "noncentral_t_cdf");
    require_finite(delta, "noncentral_t_cdf");
    if (df < 1) throw DomainError("noncentral_t_cdf: df must be >= 1");
    const double hi = chi_scale_cutoff(df);
    quad::QuadOptions opts;
    opts.abs_tol = 1e-11;
    // Phi(x*s - delta) turns on near s = delta/x.
    if (x != 0.0) {
        const double s_star = delta / x;
        if (s_star > 0.0 && s_star < hi) opts.breakpoints.push_back(s_star);
    }
    opts.breakpoints.push_back(1.0);
    auto integrand = [x, df, delta](double s) {
        return normal_cdf(x * s - delta) * chi_scale_pdf(s, df);
    };
    quad::QuadResult r = quad::integrate(integrand, 0.0, hi, opts);
    if (!r.converged)
        throw NumericalError("noncentral_t_cdf: quadrature did not converge", r.value,
                             r.error_estimate);
    return std::clamp(r.value, 0.0, 1.0);
}

double noncentral_t_pdf(double x, int df, double delta) {
    require_finite(x, "noncentral_t_pdf");
    if (df < 1) throw DomainError("noncentral_t_pdf: df must be >= 1");
    const double hi = chi_scale_cutoff(df);
    quad::QuadOptions opts;
    opts.abs_tol = 1e-12;
    if (x != 0.0) {
        const double s_star = delta / x;
        if (s_star > 0.0 && s_star < hi) opts.breakpoints.push_back(s_star);
    }
    opts.breakpoints.push_back(1.0);
    auto integrand = [x, df, delta](double s) {
        return s * normal_pdf(x * s - delta) * chi_scale_pdf(s, df);
    };
    quad::QuadResult r = quad::integrate(integrand, 0.0, hi, opts);
    if (!r.converged)
        throw NumericalError("noncentral_t_pdf: quadrature did not converge", r.value,
                             r.error_estimate);
    return std::max(r.value, 0.0);
}

double noncentral_t_quantile(double p, int df, double delta) {
    require_prob_open(p, "noncentral_t_quantile");
    if (df < 1) throw DomainError("noncentral_t_quantile: df must be >= 1");
    const double start = normal_quantile(p) + delta;
    return invert_cdf(
        p, [df, delta](double x) { return noncentral_t_cdf(x, df, delta); },
        [df, delta](double x) { return noncentral_t_pdf(x, df, delta); },
        start - 4.0 - std::fabs(start), start + 4.0 + std::fabs(start));
}

// ---------------------------------------------------------------------------
// Product normal
// ---------------------------------------------------------------------------

double product_normal_tail(double c) {
    if (!(c >= 0.0)) throw DomainError("product_normal_tail: c must be >= 0");
    if (c == 0.0) return 1.0;
    // Pr(|Z1 Z2| > c) = 4 * int_0^inf phi(z) * (1 - Phi(c/z)) dz.
    quad::QuadOptions opts;
    opts.abs_tol = 1e-11;
    opts.breakpoints = {std::sqrt(c), 1.0, 2.0};
    auto integrand = [c](double z) {
        if (z <= 0.0) return 0.0;
        return normal_pdf(z) * (1.0 - normal_cdf(c / z));
    };
    quad::QuadResult r = quad::integrate(integrand, 0.0, 42.0, opts);
    if (!r.converged)
        throw NumericalError("product_normal_tail: quadrature did not converge", 4.0 * r.value,
                             4.0 * r.error_estimate);
    return std::clamp(4.0 * r.value, 0.0, 1.0);
}

double product_normal_cdf(double x) {
    require_finite(x, "product_normal_cdf");
    if (x >= 0.0) return 1.0 - 0.5 * product_normal_tail(x);
    return 0.5 * product_normal_tail(-x);
}

double product_normal_quantile(double p) {
    require_prob_open(p, "product_normal_quantile");
    return invert_cdf(
        p, [](double x) { return product_normal_cdf(x); },
        [](double x) { return product_normal_pdf(x); }, -40.0, 40.0);
}

double product_normal_pdf(double x) {
    // Density K0(|x|)/pi, evaluated without Bessel code as
    // int_0^inf phi(z) phi(x/z) / z dz * 2. Diverges (logarithmically) at 0.
    const double ax = std::fabs(x);
    if (ax == 0.0) return std::numeric_limits<double>::infinity();
    quad::QuadOptions opts;
    opts.abs_tol = 1e-12;
    opts.breakpoints = {std::sqrt(ax), 1.0};
    auto integrand = [ax](double z) {
        if (z <= 0.0) return 0.0;
        return normal_pdf(z) * normal_pdf(ax / z) / z;
    };
    quad::QuadResult r = quad::integrate(integrand, 0.0, 42.0, opts);
    return 2.0 * r.value;
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

Distribution Distribution::student_t(int df) {
    if (df < 1) throw DomainError("Distribution: df must be >= 1");
    return {Kind::StudentT, df, 0.0};
}

Distribution Distribution::noncentral_t(int df, double delta) {
    if (df < 1) throw DomainError("Distribution: df must be >= 1");
    return {Kind::NoncentralT, df, delta};
}

std::string Distribution::name() const {
    switch (kind) {
        case Kind::StandardNormal: return "standard-normal";
        case Kind::StudentT: return "student-t(" + std::to_string(df) + ")";
        case Kind::NoncentralT:
            return "noncentral-t(" + std::to_string(df) + "," + std::to_string(delta) + ")";
        case Kind::NoncentralNormal: return "noncentral-normal(" + std::to_string(delta) + ")";
        case Kind::ProductNormal: return "product-normal";
    }
    return "unknown";
}

double cdf(const Distribution& d, double x) {
    require_finite(x, "cdf");
    switch (d.kind) {
        case Kind::StandardNormal: return normal_cdf(x);
        case Kind::StudentT: return student_t_cdf(x, d.df);
        case Kind::NoncentralT: return noncentral_t_cdf(x, d.df, d.delta);
        case Kind::NoncentralNormal: return normal_cdf(x - d.delta);
        case Kind::ProductNormal: return product_normal_cdf(x);
    }
    throw DomainError("cdf: unknown distribution kind");
}

double pdf(const Distribution& d, double x) {
    switch (d.kind) {
        case Kind::StandardNormal: return normal_pdf(x);
        case Kind::StudentT: return student_t_pdf(x, d.df);
        case Kind::NoncentralT: return noncentral_t_pdf(x, d.df, d.delta);
        case Kind::NoncentralNormal: return normal_pdf(x - d.delta);
        case Kind::ProductNormal: return product_normal_pdf(x);
    }
    throw DomainError("pdf: unknown distribution kind");
}

double quantile(const Distribution& d, double p) {
    require_prob_open(p, "quantile");
    switch (d.kind) {
        case Kind::StandardNormal: return normal_quantile(p);
        case Kind::StudentT: return student_t_quantile(p, d.df);
        case Kind::NoncentralT: return noncentral_t_quantile(p, d.df, d.delta);
        case Kind::NoncentralNormal: return normal_quantile(p) + d.delta;
        case Kind::ProductNormal: return product_normal_quantile(p);
    }
    throw DomainError("quantile: unknown distribution kind");
}

}  // namespace medtest::dist

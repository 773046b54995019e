#include "medtest/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "medtest/errors.hpp"

namespace medtest::quad {

namespace {

// Gauss-Kronrod 15-point nodes/weights on [-1,1] (7-point Gauss embedded).
constexpr double kKronrodNodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.000000000000000};
constexpr double kKronrodWeights[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
constexpr double kGaussWeights[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

struct Segment {
    double a, b;
    double value;
    double error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

Segment evaluate(const std::function<double(double)>& f, double a, double b, int& evals) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double fv[15];
    for (int i = 0; i < 7; ++i) {
        fv[i] = f(mid - half * kKronrodNodes[i]);
        fv[14 - i] = f(mid + half * kKronrodNodes[i]);
    }
    fv[7] = f(mid);
    evals += 15;

    double kronrod = 0.0;
    for (int i = 0; i < 7; ++i) kronrod += kKronrodWeights[i] * (fv[i] + fv[14 - i]);
    kronrod += kKronrodWeights[7] * fv[7];
    kronrod *= half;

    // Gauss points are the odd Kronrod nodes.
    double gauss = kGaussWeights[3] * fv[7];
    for (int i = 0; i < 3; ++i) gauss += kGaussWeights[i] * (fv[2 * i + 1] + fv[13 - 2 * i]);
    gauss *= half;

    const double diff = std::fabs(kronrod - gauss);
    // Standard QUADPACK-style error sharpening.
    double resabs = 0.0;
    for (int i = 0; i < 7; ++i) resabs += kKronrodWeights[i] * (std::fabs(fv[i]) + std::fabs(fv[14 - i]));
    resabs += kKronrodWeights[7] * std::fabs(fv[7]);
    resabs *= std::fabs(half);
    double err = diff;
    if (resabs > 0.0 && diff > 0.0) {
        const double scaled = std::pow(200.0 * diff / resabs, 1.5);
        if (scaled < 1.0) err = resabs * scaled;
    }
    return {a, b, kronrod, err};
}

}  // namespace

QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     const QuadOptions& opts) {
    QuadResult result;
    if (a == b) return result;
    double sign = 1.0;
    double lo = a, hi = b;
    if (lo > hi) {
        std::swap(lo, hi);
        sign = -1.0;
    }

    std::vector<double> cuts{lo, hi};
    for (double c : opts.breakpoints)
        if (c > lo && c < hi) cuts.push_back(c);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::priority_queue<Segment> segments;
    double total = 0.0, total_err = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        Segment s = evaluate(f, cuts[i], cuts[i + 1], result.evaluations);
        total += s.value;
        total_err += s.error;
        segments.push(s);
    }

    int splits = 0;
    while (total_err > opts.abs_tol && splits < opts.max_subdivisions) {
        Segment worst = segments.top();
        segments.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            // Interval at floating point resolution; nothing left to split.
            segments.push(worst);
            break;
        }
        Segment left = evaluate(f, worst.a, mid, result.evaluations);
        Segment right = evaluate(f, mid, worst.b, result.evaluations);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        segments.push(left);
        segments.push(right);
        ++splits;
    }

    result.value = sign * total;
    result.error_estimate = total_err;
    result.converged = total_err <= opts.abs_tol;
    return result;
}

double integrate_or_throw(const std::function<double(double)>& f, double a, double b,
                          double abs_tol, std::span<const double> breakpoints) {
    if (!(abs_tol > 0.0)) throw DomainError("integrate: tol must be positive");
    QuadOptions opts;
    opts.abs_tol = abs_tol;
    opts.breakpoints.assign(breakpoints.begin(), breakpoints.end());
    QuadResult r = integrate(f, a, b, opts);
    if (!r.converged)
        throw NumericalError("integrate: subdivision budget exhausted", r.value,
                             r.error_estimate);
    return r.value;
}

}  // namespace medtest::quad

#include "medtest/regions.hpp"

#include <algorithm>
#include <cmath>

#include "medtest/errors.hpp"
#include "medtest/quadrature.hpp"

namespace medtest::regions {

namespace {

constexpr double kTiny = 1e-12;

void check_alpha(double alpha) {
    if (!(alpha > 0.0) || alpha > kAlphaMax + kTiny)
        throw DomainError("alpha must lie in (0, 0.2]");
}

void check_lambda(double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0 + kTiny))
        throw DomainError("lambda must lie in [0, 1]");
}

void check_pair(const CumulativePair& p) {
    if (!(p.u >= 0.0 && p.u <= 1.0 && p.v >= 0.0 && p.v <= 1.0))
        throw DomainError("cumulative pair must lie in the unit square");
}

// The four band segments are images of one canonical segment (the D1 band
// half running from the (0,0) corner of the central square toward the center)
// under the dihedral maps below.
struct Mapped {
    double a, b;
};

constexpr int kNumMaps = 4;

Mapped corner_map(int which, double u, double v) {
    switch (which) {
        case 0: return {u, v};                  // D1, lower half (corner (0,0))
        case 1: return {1.0 - u, 1.0 - v};      // D1, upper half (corner (1,1))
        case 2: return {u, 1.0 - v};            // D2, half at corner (0,1)
        default: return {1.0 - u, v};           // D2, half at corner (1,0)
    }
}

// Feasible alpha-interval of one band segment for a fixed point: the set of
// levels at which the (mapped) point lies in the kept segment. All four
// defining constraints are half-lines in alpha:
//   alpha >= 4|a-b|                      (band half-width alpha/4)
//   alpha <= 2 min(m(a), m(b))           (central square)
//   a+b <= alpha + lambda(1 - 5 alpha/4) (reach limit toward the center)
struct BandInterval {
    double lo = 0.0;
    double hi = -1.0;
    bool nonempty = false;
    // True when the upper end is the central-square exit (and the segment
    // stays feasible up to it within the alpha domain): the configuration
    // whose p-value continuation creates the junction wedges.
    bool c_exit_binding = false;
};

BandInterval band_interval(const Mapped& q, double lambda) {
    BandInterval out;
    const double w4 = 4.0 * std::fabs(q.a - q.b);
    const double hi_c = 2.0 * std::min(fold(q.a), fold(q.b));
    const double s = q.a + q.b;
    const double coef = 1.0 - 1.25 * lambda;

    double lo = w4;
    double hi = std::min(hi_c, kAlphaMax);
    bool c_binding = hi_c <= kAlphaMax;

    if (s > lambda) {
        if (coef <= 0.0) return out;  // reach cannot extend past lambda
        lo = std::max(lo, (s - lambda) / coef);
    } else if (coef < 0.0) {
        const double hi_reach = (s - lambda) / coef;
        if (hi_reach < hi_c) c_binding = false;
        hi = std::min(hi, hi_reach);
    }

    if (lo > hi || hi <= 0.0) return out;
    out.lo = lo;
    out.hi = hi;
    out.nonempty = true;
    out.c_exit_binding = c_binding;
    return out;
}

// --- slice machinery ---------------------------------------------------------

struct Interval {
    double lo, hi;
};

void push(std::vector<Interval>& out, double lo, double hi) {
    lo = std::max(lo, 0.0);
    hi = std::min(hi, 1.0);
    if (lo < hi) out.push_back({lo, hi});
}

double union_measure(std::vector<Interval>& iv) {
    if (iv.empty()) return 0.0;
    std::sort(iv.begin(), iv.end(), [](const Interval& x, const Interval& y) {
        return x.lo < y.lo;
    });
    double total = 0.0;
    double cur_lo = iv[0].lo, cur_hi = iv[0].hi;
    for (std::size_t i = 1; i < iv.size(); ++i) {
        if (iv[i].lo > cur_hi) {
            total += cur_hi - cur_lo;
            cur_lo = iv[i].lo;
            cur_hi = iv[i].hi;
        } else {
            cur_hi = std::max(cur_hi, iv[i].hi);
        }
    }
    return total + (cur_hi - cur_lo);
}

void s1_slice(double x, double alpha, std::vector<Interval>& out) {
    if (fold(x) <= 0.5 * alpha) {
        push(out, 0.0, 0.5 * alpha);
        push(out, 1.0 - 0.5 * alpha, 1.0);
    }
}

void s2_slice(double x, double alpha, std::vector<Interval>& out) {
    const double c_lo = 0.5 * alpha, c_hi = 1.0 - 0.5 * alpha;
    if (x < c_lo || x > c_hi) return;
    push(out, std::max(x - 0.25 * alpha, c_lo), std::min(x + 0.25 * alpha, c_hi));
    push(out, std::max(1.0 - x - 0.25 * alpha, c_lo), std::min(1.0 - x + 0.25 * alpha, c_hi));
}

void s3_slice(double x, double alpha, std::vector<Interval>& out) {
    const double c_lo = 0.5 * alpha, c_hi = 1.0 - 0.5 * alpha;
    if (x < c_lo || x > c_hi) return;
    const double reach_left = 0.75 * alpha - x;            // left triangle
    if (reach_left >= 0.0) push(out, 0.5 - reach_left, 0.5 + reach_left);
    const double reach_right = 0.75 * alpha - (1.0 - x);   // right triangle
    if (reach_right >= 0.0) push(out, 0.5 - reach_right, 0.5 + reach_right);
    const double d = std::fabs(x - 0.5);
    if (d <= 0.25 * alpha) {
        push(out, c_lo, 0.75 * alpha - d);                 // bottom triangle
        push(out, 1.0 - (0.75 * alpha - d), c_hi);         // top triangle
    }
}

void crossing_slice(double x, double alpha, std::vector<Interval>& out) {
    const double lo = std::max(x - 0.25 * alpha, 1.0 - x - 0.25 * alpha);
    const double hi = std::min(x + 0.25 * alpha, 1.0 - x + 0.25 * alpha);
    push(out, lo, hi);  // subset of the central square for alpha <= 0.2
}

// v-interval of the canonical band segment at mapped abscissa a, mapped back
// through the corner transform.
void band_slice(int map, double x, double alpha, double lambda,
                std::vector<Interval>& out) {
    const Mapped probe = corner_map(map, x, 0.0);
    const double a = probe.a;
    const bool flip_v = probe.b == 1.0;  // maps 1 and 2 mirror the v axis
    const double c_lo = 0.5 * alpha, c_hi = 1.0 - 0.5 * alpha;
    if (a < c_lo || a > c_hi) return;
    const double reach = alpha + lambda * (1.0 - 1.25 * alpha);
    const double b_lo = std::max(a - 0.25 * alpha, c_lo);
    const double b_hi = std::min({a + 0.25 * alpha, c_hi, reach - a});
    if (b_lo > b_hi) return;
    if (flip_v)
        push(out, 1.0 - b_hi, 1.0 - b_lo);
    else
        push(out, b_lo, b_hi);
}

// v-intervals of the two junction wedges belonging to one corner map: the
// points whose band alpha-interval is nonempty, ends at the central-square
// exit, and starts at or below the requested level.
void wedge_slice(int map, double x, double alpha, double lambda,
                 std::vector<Interval>& out) {
    const Mapped probe = corner_map(map, x, 0.0);
    const double a = probe.a;
    const bool flip_v = probe.b == 1.0;
    if (a <= 0.0 || a > 0.5) return;
    const double coef = 1.0 - 1.25 * lambda;

    auto emit = [&](double lo, double hi) {
        if (lo > hi) return;
        if (flip_v)
            push(out, 1.0 - hi, 1.0 - lo);
        else
            push(out, lo, hi);
    };

    // Constraints shared by both reach pieces, orientation b < a:
    //   b >= 2a/3          (band start 4(a-b) fits inside the square exit 2b)
    //   b >= a - alpha/4   (band start at or below the requested level)
    //   b <= min(a, 0.1)   (orientation; square exit 2b within the domain)
    // and, orientation b > a:
    //   b <= min(3a/2, a + alpha/4), a <= 0.1.
    struct Orient {
        double lo, hi;
        bool valid;
    };
    const Orient orients[2] = {
        {std::max(2.0 * a / 3.0, a - 0.25 * alpha), std::min(a, 0.5 * kAlphaMax), true},
        {a, std::min(1.5 * a, a + 0.25 * alpha), a <= 0.5 * kAlphaMax},
    };

    for (const Orient& o : orients) {
        if (!o.valid || o.lo > o.hi) continue;
        // Piece with s = a + b <= lambda: the reach imposes nothing.
        emit(o.lo, std::min(o.hi, lambda - a));
        // Piece with s > lambda: feasible only while the reach still grows
        // with alpha; three more linear constraints on b.
        if (coef > 0.0) {
            double lo = std::max(o.lo, lambda - a);
            double hi = std::min(o.hi, lambda + alpha * coef - a);        // start <= alpha
            hi = std::min(hi, lambda + kAlphaMax * coef - a);             // start <= cap
            const double slope = 2.0 * coef - 1.0;                        // start <= 2b
            if (slope > 0.0)
                lo = std::max(lo, (a - lambda) / slope);
            else if (slope < 0.0)
                hi = std::min(hi, (a - lambda) / slope);
            else if (a > lambda)
                continue;
            emit(lo, hi);
        }
    }
}

void asq_slice(double x, double level, double lambda, bool omit_center,
               std::vector<Interval>& out) {
    const double h = 0.5 * level;
    const int chain_len = static_cast<int>(std::lround(1.0 / level));
    const int kept = static_cast<int>(std::lround(lambda * chain_len));
    for (int map = 0; map < kNumMaps; ++map) {
        const Mapped probe = corner_map(map, x, 0.0);
        const double a = probe.a;
        const bool flip_v = probe.b == 1.0;
        const int k_floor = static_cast<int>(std::floor(a / h));
        for (int k = k_floor - 1; k <= k_floor; ++k) {
            if (k < 0 || k >= kept) continue;
            if (omit_center && k == chain_len - 1) continue;
            if (a < k * h || a > (k + 1) * h) continue;
            if (flip_v)
                push(out, 1.0 - (k + 1) * h, 1.0 - k * h);
            else
                push(out, k * h, (k + 1) * h);
        }
    }
}

std::vector<double> slice_breakpoints(double alpha, double lambda) {
    const double reach = alpha + lambda * (1.0 - 1.25 * alpha);
    std::vector<double> pts = {alpha / 4.0,     alpha / 3.0,
                               alpha / 2.0,     2.0 * alpha / 3.0,
                               0.75 * alpha,    alpha,
                               1.25 * alpha,    0.5 * kAlphaMax,
                               0.75 * kAlphaMax,
                               0.5 - 0.25 * alpha, 0.5,
                               0.5 * (reach - 0.25 * alpha),
                               0.5 * (reach + 0.25 * alpha),
                               reach - 0.5 * alpha,
                               reach - 0.5};
    std::vector<double> all;
    for (double p : pts) {
        all.push_back(p);
        all.push_back(1.0 - p);
    }
    return all;
}

double area_by_slices(const std::function<double(double)>& slice,
                      std::vector<double> breakpoints) {
    quad::QuadOptions opts;
    opts.abs_tol = 1e-9;
    opts.max_subdivisions = 8000;
    opts.breakpoints = std::move(breakpoints);
    quad::QuadResult r = quad::integrate(slice, 0.0, 1.0, opts);
    if (!r.converged)
        throw NumericalError("region_area: quadrature did not converge", r.value,
                             r.error_estimate);
    return r.value;
}

int asq_kept_count(double level, double lambda, bool omit_center) {
    const int chain_len = static_cast<int>(std::lround(1.0 / level));
    int kept = static_cast<int>(std::lround(lambda * chain_len));
    kept = std::min(kept, chain_len);
    if (omit_center && kept == chain_len) kept -= 1;
    return kept;
}

bool near_integer(double x) { return std::fabs(x - std::lround(x)) <= 1e-9 * std::max(1.0, std::fabs(x)); }

}  // namespace

// --- spec validation ---------------------------------------------------------

void RegionSpec::validate() const {
    check_alpha(alpha);
    check_lambda(lambda);
    if (family != Family::ASQ) return;
    const std::vector<double>& lv = ladder.empty() ? default_ladder() : ladder;
    double prev = 0.0;
    for (std::size_t i = 0; i < lv.size(); ++i) {
        const double level = lv[i];
        check_alpha(level);
        if (!near_integer(1.0 / level))
            throw ConfigError("ASQ ladder: 1/level must be an integer");
        if (!near_integer(lambda / level))
            throw ConfigError("ASQ ladder: lambda/level must be an integer");
        if (i > 0) {
            if (level >= prev) throw ConfigError("ASQ ladder must be strictly descending");
            if (!near_integer(prev / level))
                throw ConfigError("ASQ ladder: each level must divide evenly into all larger levels");
        }
        prev = level;
    }
}

// --- membership ---------------------------------------------------------------

bool s1_contains(const CumulativePair& p, double alpha) {
    check_alpha(alpha);
    check_pair(p);
    return fold(p.u) <= 0.5 * alpha && fold(p.v) <= 0.5 * alpha;
}

bool s2_contains(const CumulativePair& p, double alpha) {
    check_alpha(alpha);
    check_pair(p);
    const double c_lo = 0.5 * alpha, c_hi = 1.0 - 0.5 * alpha;
    if (p.u < c_lo || p.u > c_hi || p.v < c_lo || p.v > c_hi) return false;
    return std::fabs(p.u - p.v) <= 0.25 * alpha ||
           std::fabs(p.u + p.v - 1.0) <= 0.25 * alpha;
}

bool s3_contains(const CumulativePair& p, double alpha) {
    check_alpha(alpha);
    check_pair(p);
    const double c_lo = 0.5 * alpha, c_hi = 1.0 - 0.5 * alpha;
    if (p.u < c_lo || p.u > c_hi || p.v < c_lo || p.v > c_hi) return false;
    const double du = std::fabs(p.u - 0.5), dv = std::fabs(p.v - 0.5);
    return dv <= 0.75 * alpha - p.u || dv <= 0.75 * alpha - (1.0 - p.u) ||
           du <= 0.75 * alpha - p.v || du <= 0.75 * alpha - (1.0 - p.v);
}

bool crossing_contains(const CumulativePair& p, double alpha) {
    check_alpha(alpha);
    check_pair(p);
    return std::fabs(p.u - p.v) <= 0.25 * alpha &&
           std::fabs(p.u + p.v - 1.0) <= 0.25 * alpha;
}

bool s_contains(const CumulativePair& p, double alpha) {
    return s1_contains(p, alpha) || s2_contains(p, alpha) || s3_contains(p, alpha);
}

bool ps_contains(const CumulativePair& p, double alpha, double lambda) {
    check_alpha(alpha);
    check_lambda(lambda);
    check_pair(p);
    if (s1_contains(p, alpha)) return true;
    for (int map = 0; map < kNumMaps; ++map) {
        const BandInterval band = band_interval(corner_map(map, p.u, p.v), lambda);
        if (band.nonempty && band.lo <= alpha && alpha <= band.hi) return true;
    }
    return false;
}

bool ps_effective_contains(const CumulativePair& p, double alpha, double lambda) {
    check_alpha(alpha);
    check_lambda(lambda);
    check_pair(p);
    if (s1_contains(p, alpha)) return true;
    for (int map = 0; map < kNumMaps; ++map) {
        const BandInterval band = band_interval(corner_map(map, p.u, p.v), lambda);
        if (!band.nonempty || band.lo > alpha) continue;
        if (alpha <= band.hi || band.c_exit_binding) return true;
    }
    return false;
}

bool asq_contains(const CumulativePair& p, double level, double lambda, bool omit_center) {
    check_alpha(level);
    check_lambda(lambda);
    check_pair(p);
    if (!near_integer(1.0 / level)) throw ConfigError("ASQ: 1/level must be an integer");
    if (!near_integer(lambda / level)) throw ConfigError("ASQ: lambda/level must be an integer");
    const double h = 0.5 * level;
    const int chain_len = static_cast<int>(std::lround(1.0 / level));
    const int kept = static_cast<int>(std::lround(lambda * chain_len));
    for (int map = 0; map < kNumMaps; ++map) {
        const Mapped q = corner_map(map, p.u, p.v);
        const int ka = static_cast<int>(std::floor(q.a / h));
        const int kb = static_cast<int>(std::floor(q.b / h));
        for (int k = std::min(ka, kb) - 1; k <= std::max(ka, kb); ++k) {
            if (k < 0 || k >= kept) continue;
            if (omit_center && k == chain_len - 1) continue;
            if (q.a >= k * h && q.a <= (k + 1) * h && q.b >= k * h && q.b <= (k + 1) * h)
                return true;
        }
    }
    return false;
}

// --- p-values -----------------------------------------------------------------

double ps_pvalue(const CumulativePair& p, double lambda) {
    check_lambda(lambda);
    check_pair(p);
    double best = 2.0 * std::max(fold(p.u), fold(p.v));  // corner-square component
    for (int map = 0; map < kNumMaps; ++map) {
        const BandInterval band = band_interval(corner_map(map, p.u, p.v), lambda);
        if (band.nonempty) best = std::min(best, band.lo);
    }
    return std::min(best, 1.0);
}

std::optional<double> asq_threshold(const CumulativePair& p, const RegionSpec& spec) {
    RegionSpec checked = spec;
    checked.family = Family::ASQ;
    checked.validate();
    check_pair(p);
    std::vector<double> ladder = spec.ladder.empty() ? RegionSpec::default_ladder() : spec.ladder;
    std::optional<double> smallest;
    for (double level : ladder)
        if (asq_contains(p, level, spec.lambda, spec.omit_center)) smallest = level;
    return smallest;
}

// --- measures -----------------------------------------------------------------

double cross_section(const RegionSpec& spec, double coord, double at_alpha, bool effective) {
    check_alpha(at_alpha);
    if (!(coord >= 0.0 && coord <= 1.0)) throw DomainError("cross_section: coord in [0,1]");
    std::vector<Interval> iv;
    switch (spec.family) {
        case Family::S:
            s1_slice(coord, at_alpha, iv);
            s2_slice(coord, at_alpha, iv);
            s3_slice(coord, at_alpha, iv);
            break;
        case Family::PS:
            check_lambda(spec.lambda);
            s1_slice(coord, at_alpha, iv);
            for (int map = 0; map < kNumMaps; ++map) {
                band_slice(map, coord, at_alpha, spec.lambda, iv);
                if (effective) wedge_slice(map, coord, at_alpha, spec.lambda, iv);
            }
            break;
        case Family::ASQ:
            asq_slice(coord, at_alpha, spec.lambda, spec.omit_center, iv);
            break;
    }
    return union_measure(iv);
}

double region_area(const RegionSpec& spec, double at_alpha, bool effective) {
    check_alpha(at_alpha);
    if (spec.family == Family::ASQ) {
        if (!near_integer(1.0 / at_alpha)) throw ConfigError("ASQ: 1/level must be an integer");
        if (!near_integer(spec.lambda / at_alpha))
            throw ConfigError("ASQ: lambda/level must be an integer");
        return asq_kept_count(at_alpha, spec.lambda, spec.omit_center) * at_alpha * at_alpha;
    }
    auto slice = [&](double x) { return cross_section(spec, x, at_alpha, effective); };
    return area_by_slices(slice, slice_breakpoints(at_alpha, spec.lambda));
}

double s3_area(double alpha) {
    check_alpha(alpha);
    auto slice = [alpha](double x) {
        std::vector<Interval> iv;
        s3_slice(x, alpha, iv);
        return union_measure(iv);
    };
    return area_by_slices(slice, slice_breakpoints(alpha, 1.0));
}

double crossing_area(double alpha) {
    check_alpha(alpha);
    auto slice = [alpha](double x) {
        std::vector<Interval> iv;
        crossing_slice(x, alpha, iv);
        return union_measure(iv);
    };
    return area_by_slices(slice, slice_breakpoints(alpha, 1.0));
}

}  // namespace medtest::regions

#ifndef MEDTEST_REGIONS_HPP
#define MEDTEST_REGIONS_HPP

#include <optional>
#include <vector>

namespace medtest::regions {

// All tests operate on the cumulative-probability pair (U_beta, U_gamma)
// inside the unit square.
struct CumulativePair {
    double u = 0.0;
    double v = 0.0;
};

enum class Family { S, PS, ASQ };

// Levels above this interact across region components; rejected as invalid.
inline constexpr double kAlphaMax = 0.2;

struct RegionSpec {
    Family family = Family::PS;
    double alpha = 0.05;
    double lambda = 0.5;                 // fraction of the corner-to-center reach
    std::vector<double> ladder{};        // ASQ only, descending levels
    bool omit_center = true;             // ASQ only

    static std::vector<double> default_ladder() { return {0.1, 0.05, 0.01, 0.005, 0.001}; }
    // Throws ConfigError/DomainError on invariant violations.
    void validate() const;
};

inline double fold(double x) { return x < 0.5 ? x : 1.0 - x; }  // min(x, 1-x)

// --- membership -------------------------------------------------------------

// Corner squares: both coordinates within alpha/2 of an edge pair.
bool s1_contains(const CumulativePair& p, double alpha);
// Diagonal bands D1 (|u-v| <= alpha/4) and D2 (|u+v-1| <= alpha/4), clipped
// to the central square.
bool s2_contains(const CumulativePair& p, double alpha);
// Four edge-midpoint triangles, base alpha/2, height alpha/4.
bool s3_contains(const CumulativePair& p, double alpha);
// Band crossing D1 ∩ D2 at the center (area alpha^2/8).
bool crossing_contains(const CumulativePair& p, double alpha);

bool s_contains(const CumulativePair& p, double alpha);
bool ps_contains(const CumulativePair& p, double alpha, double lambda);
// Fixed-alpha region plus the corner-junction wedges the p-value construction
// adds (total wedge area alpha^2/6); the object whose double-null mass is
// alpha(1 - 5 alpha/24) at lambda = 1.
bool ps_effective_contains(const CumulativePair& p, double alpha, double lambda);
bool asq_contains(const CumulativePair& p, double level, double lambda, bool omit_center);

// --- p-values ---------------------------------------------------------------

// Smallest alpha at which the PS-test rejects. Band components exist only
// below kAlphaMax; beyond it rejection can come only from the corner-square
// component (the maxP p-value). Returns 1 when nothing rejects.
double ps_pvalue(const CumulativePair& p, double lambda);

// Smallest ladder level whose region contains p, or nullopt. The report is a
// p-value threshold: the exact p-value is below the returned level.
std::optional<double> asq_threshold(const CumulativePair& p, const RegionSpec& spec);

// --- measures ---------------------------------------------------------------

// 1D measure of the slice {v : (coord, v) in region} (or the u-slice; every
// family here is u/v symmetric). This is the Appendix's g(.) when applied to
// the effective PS region.
double cross_section(const RegionSpec& spec, double coord, double at_alpha, bool effective);

// Area of the region; exact for ASQ, slice quadrature otherwise (abs error
// well under 1e-5).
double region_area(const RegionSpec& spec, double at_alpha, bool effective);

// Areas of the named S-test parts, by slice quadrature (identity checks).
double s3_area(double alpha);
double crossing_area(double alpha);

}  // namespace medtest::regions

#endif

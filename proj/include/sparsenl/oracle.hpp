#pragma once
#include <sparsenl/estimators.hpp>
#include <vector>

namespace sparsenl {

/// Box grid for the brute-force oracle: coordinate j ranges over the
/// multiples of `spacing` in [lo_j, hi_j] (so 0 is always a candidate when
/// the box contains it).
struct GridSpec
{
    std::vector<double> lo;
    std::vector<double> hi;
    double spacing = 1e-2;

    static GridSpec box(Index p, double half_width, double spacing);
};

struct OracleResult
{
    Vector v;
    double objective = kInf;
    long long evaluated = 0;
};

// Exhaustive minimization of the penalized objective over grid points in D.
// Ties go to the lexicographically smallest point. Throws ValidationError
// for p > 3 or grids above 1e8 points.
OracleResult brute_force_fit(const EstimationProblem& prob, const GridSpec& grid);

// Coarse-to-fine search: the full box at `coarse`, then boxes of +-4 spacings
// around the incumbent, shrinking 5x per level until `fine` is reached.
OracleResult brute_force_refined(const EstimationProblem& prob, double half_width, double coarse, double fine);

} // namespace sparsenl

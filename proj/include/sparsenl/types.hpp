#pragma once
#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

namespace sparsenl {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Closed interval [lo, hi]; either end may be infinite.
struct Interval
{
    double lo = -kInf;
    double hi = kInf;

    bool contains(double x) const { return x >= lo && x <= hi; }
    bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
    double length() const { return hi - lo; }
    double max_abs() const { return std::max(std::abs(lo), std::abs(hi)); }
    bool subset_of(const Interval& other) const { return lo >= other.lo && hi <= other.hi; }
};

} // namespace sparsenl

#pragma once
#include <sparsenl/types.hpp>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace sparsenl {

/**
 * Fixed n x p design matrix.
 *
 * Rows are observations X_i, columns are features V_j. Every column must be
 * nonzero. The matrix is immutable once built; copies share storage and the
 * norm caches, so passing by value is cheap and safe across threads.
 */
class DesignMatrix
{
public:
    explicit DesignMatrix(Matrix entries);

    Index rows() const { return data_->entries.rows(); }
    Index cols() const { return data_->entries.cols(); }
    const Matrix& entries() const { return data_->entries; }

    const Vector& col_l2() const { return data_->col_l2; }
    const Vector& col_linf() const { return data_->col_linf; }

    // (sum_i |X_ij|^{2k})^{1/(2k)} for every column. Filled lazily per k.
    const Vector& col_l2k(int k) const;

    // max_j ||V_j||_{2k} * n^{-1/(2k)}, the column factor in the analytic c1 series.
    double scaled_max_l2k(int k) const;

    Vector apply(const Vector& v) const { return data_->entries * v; }
    Vector apply_transpose(const Vector& r) const { return data_->entries.transpose() * r; }

    DesignMatrix with_scaled_column(Index j, double factor) const;

private:
    struct Storage
    {
        Matrix entries;
        Vector col_l2;
        Vector col_linf;
        mutable std::mutex cache_mutex;
        mutable std::map<int, std::unique_ptr<Vector>> col_l2k;
    };
    std::shared_ptr<const Storage> data_;
};

struct CoherenceStats
{
    double mu = 0.0; // max_{i<j} |V_i'V_j| / (|V_i| |V_j|)
    double a = 0.0;  // min_j |V_j|^2 / n
    double b = 0.0;  // max_j |V_j|^2 / n
};

// p = 1 has no column pairs; mu is reported as 0 in that case.
CoherenceStats coherence_stats(const DesignMatrix& X);

Vector column_norm_2k(const DesignMatrix& X, int k);

// ||v||_{1,inf} = sum_j |v_j| ||V_j||_inf
double weighted_l1_norm(const Vector& v, const DesignMatrix& X);

/// Search domain: {v : X_i'v in I for all i} optionally intersected with a
/// weighted-l1 ball and a support-size cap.
struct DomainSpec
{
    Interval interval;
    std::optional<double> weighted_l1_cap;
    std::optional<Index> support_cap;
};

struct DomainViolation
{
    enum class Kind { Row, WeightedL1Cap, SupportCap };
    Kind kind;
    Index row = -1;  // for Kind::Row
    double margin;   // amount by which the constraint is exceeded (> 0)
};

struct DomainReport
{
    bool inside = true;
    std::vector<DomainViolation> violations;
};

// `tol` is an absolute slack on every constraint family.
DomainReport domain_contains(const Vector& v, const DesignMatrix& X, const DomainSpec& D,
                             double tol = 0.0);

/**
 * Certified upper bound on delta(D), the smallest ||.||_{1,inf} radius of a
 * ball containing D.
 *
 * Uses the user cap when present. Otherwise, for full column rank X, every
 * v in D equals X^+ z for some z in I^n, so each coordinate lies in a box
 * computable from the pseudo-inverse; the weighted half-width of that box
 * bounds delta(D). Throws DomainError when neither route applies.
 */
double delta_D_upper(const DomainSpec& D, const DesignMatrix& X);

// Sparse-support helpers.
std::vector<Index> support(const Vector& v);
Index support_size(const Vector& v);
Vector restrict_to(const Vector& v, const std::vector<Index>& S);
Vector restrict_to_complement(const Vector& v, const std::vector<Index>& S);

} // namespace sparsenl

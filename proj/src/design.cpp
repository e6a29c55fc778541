#include <sparsenl/design.hpp>
#include <sparsenl/error.hpp>
#include <algorithm>
#include <string>

namespace sparsenl {

DesignMatrix::DesignMatrix(Matrix entries)
{
    if (entries.rows() < 1 || entries.cols() < 1) {
        throw ValidationError("design matrix must have n >= 1 and p >= 1");
    }
    if (!entries.allFinite()) {
        throw ValidationError("design matrix contains non-finite entries");
    }
    auto storage = std::make_shared<Storage>();
    storage->entries = std::move(entries);
    const auto& M = storage->entries;
    storage->col_l2 = M.colwise().norm().transpose();
    storage->col_linf = M.cwiseAbs().colwise().maxCoeff().transpose();
    for (Index j = 0; j < M.cols(); ++j) {
        if (storage->col_linf(j) == 0.0) {
            throw ValidationError("design column " + std::to_string(j) + " is zero");
        }
    }
    data_ = std::move(storage);
}

const Vector& DesignMatrix::col_l2k(int k) const
{
    if (k < 1) throw ValidationError("column_norm_2k requires k >= 1");
    std::lock_guard<std::mutex> lock(data_->cache_mutex);
    auto& slot = data_->col_l2k[k];
    if (!slot) {
        const auto& M = data_->entries;
        Vector out(M.cols());
        const double power = 2.0 * k;
        for (Index j = 0; j < M.cols(); ++j) {
            // Scale by the max entry so large k does not overflow.
            const double scale = data_->col_linf(j);
            double acc = 0.0;
            for (Index i = 0; i < M.rows(); ++i) {
                acc += std::pow(std::abs(M(i, j)) / scale, power);
            }
            out(j) = scale * std::pow(acc, 1.0 / power);
        }
        slot = std::make_unique<Vector>(std::move(out));
    }
    return *slot;
}

double DesignMatrix::scaled_max_l2k(int k) const
{
    const double n = static_cast<double>(rows());
    return std::pow(n, -1.0 / (2.0 * k)) * col_l2k(k).maxCoeff();
}

DesignMatrix DesignMatrix::with_scaled_column(Index j, double factor) const
{
    Matrix copy = entries();
    copy.col(j) *= factor;
    return DesignMatrix(std::move(copy));
}

CoherenceStats coherence_stats(const DesignMatrix& X)
{
    const auto& M = X.entries();
    const Vector& norms = X.col_l2();
    const double n = static_cast<double>(X.rows());
    CoherenceStats out;
    out.a = norms.array().square().minCoeff() / n;
    out.b = norms.array().square().maxCoeff() / n;

    const Matrix gram = M.transpose() * M;
    double mu = 0.0;
    for (Index i = 0; i < X.cols(); ++i) {
        for (Index j = i + 1; j < X.cols(); ++j) {
            mu = std::max(mu, std::abs(gram(i, j)) / (norms(i) * norms(j)));
        }
    }
    // Rounding can push a duplicate-column ratio a hair above 1.
    out.mu = std::min(mu, 1.0);
    return out;
}

Vector column_norm_2k(const DesignMatrix& X, int k)
{
    return X.col_l2k(k);
}

double weighted_l1_norm(const Vector& v, const DesignMatrix& X)
{
    if (v.size() != X.cols()) throw ValidationError("weighted_l1_norm: dimension mismatch");
    return v.cwiseAbs().dot(X.col_linf());
}

DomainReport domain_contains(const Vector& v, const DesignMatrix& X, const DomainSpec& D, double tol)
{
    if (v.size() != X.cols()) throw ValidationError("domain_contains: dimension mismatch");
    DomainReport report;
    const Vector z = X.apply(v);
    for (Index i = 0; i < z.size(); ++i) {
        double excess = 0.0;
        if (z(i) < D.interval.lo) excess = D.interval.lo - z(i);
        else if (z(i) > D.interval.hi) excess = z(i) - D.interval.hi;
        if (excess > tol) {
            report.violations.push_back({DomainViolation::Kind::Row, i, excess});
        }
    }
    if (D.weighted_l1_cap) {
        const double excess = weighted_l1_norm(v, X) - *D.weighted_l1_cap;
        if (excess > tol) {
            report.violations.push_back({DomainViolation::Kind::WeightedL1Cap, -1, excess});
        }
    }
    if (D.support_cap) {
        const Index excess = support_size(v) - *D.support_cap;
        if (excess > 0) {
            report.violations.push_back(
                {DomainViolation::Kind::SupportCap, -1, static_cast<double>(excess)});
        }
    }
    report.inside = report.violations.empty();
    return report;
}

double delta_D_upper(const DomainSpec& D, const DesignMatrix& X)
{
    std::optional<double> best;
    if (D.weighted_l1_cap) {
        if (!(*D.weighted_l1_cap > 0.0)) throw ValidationError("weighted_l1_cap must be positive");
        best = *D.weighted_l1_cap;
    }
    if (D.interval.bounded() && X.cols() <= X.rows()) {
        const auto& M = X.entries();
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(M);
        if (cod.rank() == X.cols()) {
            const Eigen::MatrixXd pinv = cod.pseudoInverse();
            const double half_len = 0.5 * D.interval.length();
            double bound = 0.0;
            for (Index j = 0; j < X.cols(); ++j) {
                bound += half_len * pinv.row(j).cwiseAbs().sum() * X.col_linf()(j);
            }
            best = best ? std::min(*best, bound) : bound;
        }
    }
    if (!best) {
        throw DomainError("delta undefined: domain is unbounded (finite interval with full column "
                          "rank design, or an explicit weighted_l1_cap, is required)");
    }
    return *best;
}

std::vector<Index> support(const Vector& v)
{
    std::vector<Index> out;
    for (Index j = 0; j < v.size(); ++j) {
        if (v(j) != 0.0) out.push_back(j);
    }
    return out;
}

Index support_size(const Vector& v)
{
    return static_cast<Index>((v.array() != 0.0).count());
}

Vector restrict_to(const Vector& v, const std::vector<Index>& S)
{
    Vector out = Vector::Zero(v.size());
    for (Index j : S) out(j) = v(j);
    return out;
}

Vector restrict_to_complement(const Vector& v, const std::vector<Index>& S)
{
    Vector out = v;
    for (Index j : S) out(j) = 0.0;
    return out;
}

} // namespace sparsenl

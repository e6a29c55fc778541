#include <sparsenl/oracle.hpp>
#include <sparsenl/error.hpp>
#include <cmath>

namespace sparsenl {

GridSpec GridSpec::box(Index p, double half_width, double spacing)
{
    GridSpec g;
    g.lo.assign(p, -half_width);
    g.hi.assign(p, half_width);
    g.spacing = spacing;
    return g;
}

OracleResult brute_force_fit(const EstimationProblem& prob, const GridSpec& grid)
{
    prob.validate();
    const Index p = prob.X.cols();
    if (p > 3) throw ValidationError("brute_force_fit: p must be <= 3");
    if (static_cast<Index>(grid.lo.size()) != p || static_cast<Index>(grid.hi.size()) != p) {
        throw ValidationError("brute_force_fit: grid dimension does not match p");
    }
    if (!(grid.spacing > 0.0)) throw ValidationError("brute_force_fit: spacing must be positive");

    std::vector<long long> first(p), last(p);
    double total = 1.0;
    for (Index j = 0; j < p; ++j) {
        if (!std::isfinite(grid.lo[j]) || !std::isfinite(grid.hi[j]) || grid.lo[j] > grid.hi[j]) {
            throw ValidationError("brute_force_fit: grid must be a bounded box");
        }
        first[j] = static_cast<long long>(std::ceil(grid.lo[j] / grid.spacing - 1e-9));
        last[j] = static_cast<long long>(std::floor(grid.hi[j] / grid.spacing + 1e-9));
        total *= static_cast<double>(std::max(0LL, last[j] - first[j] + 1));
    }
    if (total > 1e8) throw ValidationError("brute_force_fit: grid has more than 1e8 points");

    OracleResult best;
    if (total == 0.0) return best;
    const Matrix& X = prob.X.entries();
    std::vector<long long> k = first;
    Vector v(p);
    while (true) {
        for (Index j = 0; j < p; ++j) v(j) = static_cast<double>(k[j]) * grid.spacing;
        ++best.evaluated;
        if (domain_contains(v, prob.X, prob.domain, 0.0).inside) {
            double value;
            try {
                value = smooth_objective(prob, X * v) + prob.c_r * v.lpNorm<1>();
            } catch (const DomainError&) {
                value = kInf;
            }
            // Lexicographic enumeration keeps the smallest point among ties.
            if (value < best.objective) {
                best.objective = value;
                best.v = v;
            }
        }
        Index j = p - 1;
        while (j >= 0 && k[j] == last[j]) {
            k[j] = first[j];
            --j;
        }
        if (j < 0) break;
        ++k[j];
    }
    return best;
}

OracleResult brute_force_refined(const EstimationProblem& prob, double half_width, double coarse, double fine)
{
    if (!(coarse >= fine) || !(fine > 0.0)) throw ValidationError("brute_force_refined: need coarse >= fine > 0");
    const Index p = prob.X.cols();
    OracleResult best = brute_force_fit(prob, GridSpec::box(p, half_width, coarse));
    long long evaluated = best.evaluated;
    double spacing = coarse;
    while (spacing > fine * (1.0 + 1e-9) && best.v.size() == p) {
        const double next = std::max(fine, spacing / 5.0);
        const double reach = 4.0 * spacing;
        // Re-centre while the minimizer sits on the edge of the window.
        for (int walk = 0; walk < 100; ++walk) {
            GridSpec g;
            g.spacing = next;
            for (Index j = 0; j < p; ++j) {
                g.lo.push_back(std::max(-half_width, best.v(j) - reach));
                g.hi.push_back(std::min(half_width, best.v(j) + reach));
            }
            OracleResult level = brute_force_fit(prob, g);
            evaluated += level.evaluated;
            if (level.v.size() != p || level.objective > best.objective) break;
            bool on_edge = false;
            for (Index j = 0; j < p; ++j) {
                const bool at_lo = level.v(j) <= g.lo[j] + 0.5 * next && g.lo[j] > -half_width;
                const bool at_hi = level.v(j) >= g.hi[j] - 0.5 * next && g.hi[j] < half_width;
                on_edge = on_edge || at_lo || at_hi;
            }
            const bool moved = (level.v - best.v).lpNorm<Eigen::Infinity>() > 0.5 * next;
            best = level;
            if (!on_edge || !moved) break;
        }
        spacing = next;
    }
    best.evaluated = evaluated;
    return best;
}

} // namespace sparsenl

#pragma once
#include <functional>
#include <vector>

namespace sparsenl::quadrature {

struct Rule
{
    std::vector<double> nodes;   // on [-1, 1]
    std::vector<double> weights;
};

// Gauss-Legendre rule of the given order, nodes by Newton iteration on P_n.
const Rule& gauss_legendre(int order);

// Adaptive Gauss-Legendre: a panel is accepted when the 10- and 20-point
// rules agree to within its share of abs_tol.
double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol = 1e-10);

// Same for vector-valued integrands of fixed length; the error test uses the
// max-norm over components.
std::vector<double> integrate_vector(const std::function<std::vector<double>(double)>& f, double a,
                                     double b, double abs_tol = 1e-10);

} // namespace sparsenl::quadrature

#pragma once

#include <Eigen/Dense>
#include <memory>
#include <stdexcept>

namespace capfoil {

// Log-graded radial grid on [1, r_max]: uniform in t = log r, so the mode
// ODEs have constant coefficients and both the boundary layer at r = 1 and
// the power-law tail are resolved.
struct RadialGrid {
    int count = 0;
    double r_max = 0.0;
    double h = 0.0;        // spacing in t
    Eigen::VectorXd t, r;  // ascending, r[0] = 1 exactly

    static std::shared_ptr<const RadialGrid> make(double r_max = 50.0, int count = 640) {
        if (r_max < 10.0) throw std::invalid_argument("RadialGrid: r_max >= 10 required");
        if (count < 16) throw std::invalid_argument("RadialGrid: too few points");
        auto g = std::make_shared<RadialGrid>();
        g->count = count;
        g->r_max = r_max;
        g->h = std::log(r_max) / (count - 1);
        g->t.resize(count);
        g->r.resize(count);
        for (int i = 0; i < count; ++i) {
            g->t[i] = i * g->h;
            g->r[i] = std::exp(g->t[i]);
        }
        g->r[0] = 1.0;
        return g;
    }
};

// finite-difference weights for the m-th derivative on arbitrary offsets,
// exact on polynomials of degree < offsets.size()
Eigen::VectorXd fd_weights(const Eigen::VectorXd& offsets, int der_order);

// d/dt and d^2/dt^2 of uniformly sampled columns, 6th order
// (7-point central stencils, one-sided at the ends)
void differentiate_uniform(const Eigen::MatrixXd& values, double h, Eigen::MatrixXd& d1,
                           Eigen::MatrixXd* d2 = nullptr);

}  // namespace capfoil

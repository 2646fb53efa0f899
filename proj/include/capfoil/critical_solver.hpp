#pragma once

#include <string>
#include <vector>

#include "capfoil/capacitor.hpp"

namespace capfoil {

struct NewtonOptions {
    double tol_factor = 1e-9;  // converged when ||G~||_inf < tol_factor * (n-2)
    int max_outer = 30;
    double damping = 0.5;        // engaged when the residual increases
    double tau_fd_step = 1e-4;   // central-difference step for the tau Jacobian
    CorrectionOptions inner;
};

struct SolveReport {
    bool converged = false;
    std::string error;

    Shape shape;  // physical parameterization (rho, tau, w)
    double rho = 0.0;
    Eigen::VectorXd tau;
    double w_norm_rescaled = 0.0;  // ||w||_2 in the rho^{n-1}-rescaled convention
    double w_norm_physical = 0.0;

    double neumann_constant = 0.0;    // physical scale (1/length)
    double constancy_residual = 0.0;  // sup |trace - mean| / |mean|
    double residual_norm = 0.0;       // final ||G~||_inf

    int iterations = 0;    // outer evaluations
    int gtilde_evals = 0;  // total residual evaluations including FD probes
    Eigen::MatrixXd jacobian_tau;

    // certificates from the converged potential
    double harmonic_residual = 0.0;
    double dirichlet_residual = 0.0;
    double decay_envelope = 0.0;
    double aliasing_defect = 0.0;
};

// Two-block Newton iteration on the reduced residual: the degree-1 block is
// cleared through the measured tau Jacobian, the complement through the
// diagonal inverse of the linearized boundary operator.
class CriticalSolver {
public:
    CriticalSolver(MetricModel model, std::shared_ptr<const SphereBasis> basis,
                   std::shared_ptr<const RadialGrid> grid, NewtonOptions opts = {});

    const CapacitorContext& context() const { return ctx_; }

    struct WarmStart {
        Eigen::VectorXd tau;
        Eigen::VectorXd w_coeffs;  // rescaled convention
        Eigen::MatrixXd jacobian;  // may be empty
    };

    SolveReport solve_at(double rho_physical, const WarmStart* warm = nullptr) const;
    /// ascending rho grid; warm-started sweeps run sequentially
    std::vector<SolveReport> sweep(const std::vector<double>& rho_grid, bool warm_start) const;

private:
    Eigen::MatrixXd measure_tau_jacobian(double rho_tilde, const Eigen::VectorXd& tau,
                                         const SphereField& w, int fixed_iters,
                                         int* evals) const;

    MetricModel model_;
    NewtonOptions opts_;
    CapacitorContext ctx_;
};

}  // namespace capfoil

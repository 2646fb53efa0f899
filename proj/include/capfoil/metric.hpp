#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "capfoil/kernels.hpp"

namespace capfoil {

// Parametric correction h_ij(y) = amplitude * |y|^{-n} (1 + beta <y/|y|, dir>)
// * chi(|y|) * delta_ij with a quintic smoothstep cutoff chi vanishing near
// the origin. beta = 0 is the isotropic family; beta != 0 adds the degree-1
// modulation that drives a nonzero translation in the solver.
struct HPerturbation {
    double amplitude = 0.0;
    std::string profile = "none";  // "none" or "power"
    double beta = 0.0;
    Eigen::VectorXd direction;  // normalized on use; defaults to e_1
    double inner = 2.0, outer = 4.0;

    bool active() const { return profile == "power" && amplitude != 0.0; }
};

/// quintic smoothstep: 0 below `lo`, 1 above `hi`, C^2 joins
double smoothstep_quintic(double t, double lo, double hi, double* deriv = nullptr);

// Asymptotically flat model g_ij(y) = (1 + sigma |y|^{1-n}) delta_ij + h_ij(y).
struct MetricModel {
    int n = 3;
    double sigma = 0.0;
    HPerturbation h;

    /// ambient metric at y; optionally the derivatives d g_ij / d y_m
    void eval(const Eigen::VectorXd& y, Eigen::MatrixXd& g,
              std::vector<Eigen::MatrixXd>* dg = nullptr) const;

    MetricModel rotated(const Eigen::MatrixXd& R) const;  // rotate the h direction
};

// Perturbed-sphere parameterization x -> rho (tau + (1 + w(x/|x|)) x).
struct Shape {
    double rho = 1.0;
    Eigen::VectorXd tau;
    SphereField w;

    Shape() = default;
    Shape(double rho_, Eigen::VectorXd tau_, SphereField w_)
        : rho(rho_), tau(std::move(tau_)), w(std::move(w_)) {}

    static Shape trivial(double rho, std::shared_ptr<const SphereBasis> basis) {
        return {rho, Eigen::VectorXd::Zero(basis->n()), SphereField(basis)};
    }
    /// ||w||_inf < 1/2 keeps the parameterization an embedding
    void check_embedding() const;
    Eigen::VectorXd map(const Eigen::VectorXd& x) const;  // the point y
};

struct MetricAtPoint {
    Eigen::MatrixXd g, g_inv;  // rescaled pullback rho^{-2} Phi^* g
    double sqrt_det = 0.0;
    // Laplace-Beltrami coefficients: Delta u = a_ij d2_ij u + b_j d_j u
    Eigen::MatrixXd a;  // == g_inv
    Eigen::VectorXd b;
};

/// exact pullback g_rho = rho^{-2} Phi^*_{rho,w,tau}(g) at x, |x| >= 1
MetricAtPoint pullback_metric(const MetricModel& model, const Shape& shape,
                              const Eigen::VectorXd& x);

/// inward unit normal to the sphere at theta, g_rho-normalized
Eigen::VectorXd unit_normal(const MetricModel& model, const Shape& shape,
                            const Eigen::VectorXd& theta);

// Coefficients of Delta_{g_rho} tabulated on the product grid, plus the
// boundary data needed for Neumann traces and flux integrals. Assembled once
// per (model, shape); every operator application then reuses the tables.
struct MetricTables {
    std::shared_ptr<const SphereBasis> basis;
    std::shared_ptr<const RadialGrid> grid;
    int n = 0;
    std::vector<Eigen::MatrixXd> a;  // n(n+1)/2 entries, nodes x layers
    std::vector<Eigen::MatrixXd> b;  // n entries
    Eigen::MatrixXd sqrt_det;        // nodes x layers
    Eigen::MatrixXd normal;          // nodes x n, inward g_rho-unit normal at r=1
    Eigen::MatrixXd normal_delta;    // normal + Theta, assembled cancellation-free
    Eigen::VectorXd bdry_area;       // nodes: induced g_rho area element factor at r=1
    double max_deviation = 0.0;      // max |g - id| over the grid (diagnostic)
};

MetricTables assemble_metric_tables(const MetricModel& model, const Shape& shape,
                                    std::shared_ptr<const SphereBasis> basis,
                                    std::shared_ptr<const RadialGrid> grid,
                                    Exec exec = default_exec());

struct ApplyInfo {
    double aliasing_defect = 0.0;  // relative tail of the pointwise product
};

/// Delta_{g_rho} u assembled pointwise from the tables, projected back to modes
ExteriorField laplace_beltrami_apply(const MetricTables& tables, const ExteriorField& u,
                                     Exec exec = default_exec(), ApplyInfo* info = nullptr);

}  // namespace capfoil

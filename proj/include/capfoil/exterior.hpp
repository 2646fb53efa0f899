#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>

#include "capfoil/radial.hpp"
#include "capfoil/sphere_basis.hpp"

namespace capfoil {

struct IndicialPair {
    double gamma_minus = 0.0;  // decaying branch, 2-n-k
    double gamma_plus = 0.0;   // growing branch, k
};

/// growth/decay exponents of the degree-k radial mode equation
inline IndicialPair indicial_roots(int n, int k) {
    if (n < 3 || k < 0) throw std::invalid_argument("indicial_roots: need n >= 3, k >= 0");
    return {double(2 - n - k), double(k)};
}

// Scalar field on R^n \ B stored mode-wise: one radial profile per harmonic
// index, sampled on a shared log-graded grid, plus the decay exponent nu of
// the weighted class the field is meant to live in (metadata used for
// far-field closures and envelope checks, not an enforced norm).
struct ExteriorField {
    std::shared_ptr<const SphereBasis> basis;
    std::shared_ptr<const RadialGrid> grid;
    Eigen::MatrixXd modes;  // grid->count x basis->dim
    double nu = 0.0;

    ExteriorField() = default;
    ExteriorField(std::shared_ptr<const SphereBasis> b, std::shared_ptr<const RadialGrid> g,
                  double nu_ = 0.0)
        : basis(std::move(b)),
          grid(std::move(g)),
          modes(Eigen::MatrixXd::Zero(grid->count, basis->dim())),
          nu(nu_) {}

    SphereField boundary_values() const { return {basis, modes.row(0).transpose()}; }
    /// max over modes of |profile(r_max)| / r_max^nu
    double envelope_factor() const;
};

// Kelvin image: field on B \ {0}, sampled at s_i = 1/r_i (descending from 1).
struct InteriorField {
    std::shared_ptr<const SphereBasis> basis;
    Eigen::VectorXd s;      // descending, s[0] = 1
    Eigen::MatrixXd modes;  // s.size() x dim
    double nu = 0.0;
};

/// K(u)(x) = |x|^{2-n} u(x/|x|^2), mode-wise
InteriorField kelvin(const ExteriorField& u);
/// inverse map back to the exterior (same formula; involution)
ExteriorField kelvin(const InteriorField& u, std::shared_ptr<const RadialGrid> grid);

/// flat Laplacian applied mode-wise with 6th-order stencils (all grid points)
ExteriorField laplace0_apply(const ExteriorField& u);
Eigen::MatrixXd laplace0_modes(int n, const SphereBasis& basis, const Eigen::VectorXd& logr,
                               const Eigen::MatrixXd& modes);

struct FlatSolveOptions {
    // far-field power of f per mode (f ~ C r^p); estimated from the samples
    // when not supplied
    std::optional<double> tail_exponent;
    bool check_resolution = true;
};

// Solve Delta_0 u = f on R^n \ B with u = dirichlet on r = 1 and the
// decaying branch selected at r_max (exact discrete Robin closure).
// Requires nu in (2-n, 0); f should decay like r^{nu-2} or faster.
ExteriorField solve_flat(const ExteriorField& f, const SphereField& dirichlet, double nu,
                         const FlatSolveOptions& opts = {});

/// decaying harmonic extension of boundary data (f = 0)
ExteriorField harmonic_extension_flat(const SphereField& dirichlet,
                                      std::shared_ptr<const RadialGrid> grid);

/// -d_r u at r = 1, mode-wise, one-sided stencil of order 6
SphereField normal_trace(const ExteriorField& u);

/// radial profiles of d/dr and d^2/dr^2 (chain rule through t = log r)
void radial_derivatives(const ExteriorField& u, Eigen::MatrixXd& d1, Eigen::MatrixXd* d2 = nullptr);

}  // namespace capfoil

#pragma once

#include <memory>
#include <vector>

#include "capfoil/exterior.hpp"

namespace capfoil {

/// raised when an inversion right-hand side carries degree-1 content
struct kernel_obstruction : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shifted Dirichlet-to-Neumann operator of the flat exterior problem:
// w -> d_nu psi_w - (n-1) w, where psi_w is the decaying harmonic extension
// and nu = -x. Diagonal on spherical harmonics with eigenvalues k - 1; the
// kernel is exactly the degree-1 block. Inversion uses the eigenvalues
// measured from this discretization, keeping the nonlinear solver consistent
// with the grid (the analytic table is an acceptance oracle, not an input).
class DtnOperator {
public:
    DtnOperator(std::shared_ptr<const SphereBasis> basis, std::shared_ptr<const RadialGrid> grid);

    const SphereBasis& basis() const { return *basis_; }
    std::shared_ptr<const SphereBasis> basis_ptr() const { return basis_; }
    std::shared_ptr<const RadialGrid> grid() const { return grid_; }

    ExteriorField harmonic_extension(const SphereField& w) const;
    /// normal_trace(harmonic_extension(w)) - (n-1) w
    SphereField apply(const SphereField& w) const;
    /// same operator computed through the interior problem on the unit ball
    /// (independent verification route)
    SphereField apply_via_interior(const SphereField& w) const;

    /// diagonal inverse on the complement of the degree-1 block;
    /// throws kernel_obstruction if rhs has degree-1 mass above tolerance
    SphereField invert(const SphereField& rhs, double deg1_tol = 1e-9) const;

    double measured_eigenvalue(int degree) const { return measured_[degree]; }
    struct SpectrumRow {
        int degree;
        double measured, analytic, abs_error;
    };
    std::vector<SpectrumRow> spectrum() const;
    double max_spectrum_error() const;

private:
    std::shared_ptr<const SphereBasis> basis_;
    std::shared_ptr<const RadialGrid> grid_;
    Eigen::VectorXd measured_;  // per degree 0..L
};

}  // namespace capfoil

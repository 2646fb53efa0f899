#pragma once

#include <memory>
#include <optional>

#include "capfoil/dtn.hpp"
#include "capfoil/metric.hpp"

namespace capfoil {

struct CorrectionOptions {
    double fp_tol = 1e-13;      // tolerance on the preconditioned residual
    double stagnation_accept = 1e-10;  // accept a stalled iteration below this
    int max_iterations = 50;
    int fixed_iterations = -1;  // >= 0: run exactly this many sweeps (smooth FD probes)
    bool use_gmres = false;     // Krylov acceleration outside the perturbative regime
    int gmres_max = 160;
};

// v, the correction, the assembled potential, and its boundary data.
// The trace is carried both in full and as the excess over the round-sphere
// value (n-2): the excess is assembled from small quantities only, so it
// stays meaningful under the rho^{1-n} rescale of the reduced residual.
struct PotentialBundle {
    ExteriorField v, correction, total;  // total = v + correction, sample-wise
    SphereField neumann_g;               // trace in the rescaled metric g_rho
    SphereField neumann_physical;        // rho_tilde * neumann_g
    SphereField trace_excess;            // trace - (n-2), cancellation-free
    double harmonic_residual = 0.0;      // final preconditioned residual (sup of mode coeffs)
    double dirichlet_residual = 0.0;     // max |total - 1| on r = 1
    double contraction = 0.0;            // measured fixed-point factor
    int iterations = 0;
    double aliasing_defect = 0.0;
    double decay_envelope = 0.0;  // max_node r_max^{n-2} |total(r_max)|
    bool converged = false;
};

// zero-Dirichlet solution of the radial source r^{1-2n}
struct AuxField {
    ExteriorField field;      // degree-0 only, value profile
    double deriv_at_1 = 0.0;  // measured derivative at r = 1
};
AuxField solve_aux_source(std::shared_ptr<const SphereBasis> basis,
                          std::shared_ptr<const RadialGrid> grid);

/// v(x) = |(1 + w(x/|x|)) x|^{2-n}, band-limited
ExteriorField approx_v(const Shape& shape, std::shared_ptr<const SphereBasis> basis,
                       std::shared_ptr<const RadialGrid> grid);

/// Neumann trace g_rho(grad u, normal) on the unit sphere from the tables
SphereField neumann_trace_g(const MetricTables& tables, const ExteriorField& u);

// Evaluation context for one (model, discretization): caches the operator
// table, the auxiliary field and scratch shared by repeated evaluations.
// Internally everything runs in the small parameter rho_tilde = 1/rho; the
// public shape carries the physical rho.
class CapacitorContext {
public:
    CapacitorContext(MetricModel model, std::shared_ptr<const SphereBasis> basis,
                     std::shared_ptr<const RadialGrid> grid, CorrectionOptions opts = {});

    const MetricModel& model() const { return model_; }
    std::shared_ptr<const SphereBasis> basis() const { return basis_; }
    std::shared_ptr<const RadialGrid> grid() const { return grid_; }
    const DtnOperator& dtn() const { return dtn_; }
    const AuxField& aux() const { return aux_; }
    double kprime1() const { return aux_.deriv_at_1; }
    const CorrectionOptions& options() const { return opts_; }

    /// solve for the correction and assemble the potential for a shape
    PotentialBundle solve_potential(const Shape& shape, int fixed_iterations = -1) const;

    // Reduced Neumann residual at the internal small parameter: the physical
    // shape is (rho = 1/rho_tilde, tau, rho_tilde^{n-1} w).
    SphereField reduced_residual(double rho_tilde, const Eigen::VectorXd& tau,
                                 const SphereField& w, PotentialBundle* bundle = nullptr,
                                 int fixed_iterations = -1) const;

private:
    MetricModel model_;
    std::shared_ptr<const SphereBasis> basis_;
    std::shared_ptr<const RadialGrid> grid_;
    CorrectionOptions opts_;
    DtnOperator dtn_;
    AuxField aux_;
};

}  // namespace capfoil

#include "capfoil/capacitor.hpp"

#include <cmath>
#include <functional>

namespace capfoil {

namespace {

double coeff_sup(const Eigen::MatrixXd& modes) { return modes.cwiseAbs().maxCoeff(); }

Eigen::VectorXd boundary_radial_derivative(const Eigen::MatrixXd& modes, double h) {
    const int W = 9;
    Eigen::VectorXd off(W);
    for (int j = 0; j < W; ++j) off[j] = j;
    const Eigen::VectorXd wts = fd_weights(off, 1);
    Eigen::VectorXd dr = Eigen::VectorXd::Zero(modes.cols());
    for (int j = 0; j < W; ++j) dr += wts[j] * modes.row(j).transpose();
    return dr / h;  // d_r = d_t at r = 1
}

// Delta_g applied to the round-sphere potential r^{2-n}: the derivatives are
// analytic, so no stencil roundoff touches this O(1) piece.
Eigen::MatrixXd apply_to_power_law(const MetricTables& T) {
    const int n = T.n, Q = T.basis->num_nodes(), N = T.grid->count;
    const auto& nodes = T.basis->nodes();
    Eigen::MatrixXd values(Q, N);
    for (int i = 0; i < N; ++i) {
        const double r = T.grid->r[i];
        const double drv = (2.0 - n) * std::pow(r, 1.0 - n);
        const double hfac = (2.0 - n) * std::pow(r, -double(n));
        for (int q = 0; q < Q; ++q) {
            double s = 0.0;
            for (int a = 0; a < n; ++a) {
                for (int b = a; b < n; ++b) {
                    const double hab =
                        hfac * ((a == b ? 1.0 : 0.0) - n * nodes(q, a) * nodes(q, b));
                    s += (a == b ? 1.0 : 2.0) * T.a[T.basis->sym(a, b)](q, i) * hab;
                }
                s += T.b[a](q, i) * drv * nodes(q, a);
            }
            values(q, i) = s;
        }
    }
    return values;
}

// preconditioned residual of Delta_g (r^{2-n} + delta) = 0, assembled from
// the analytic power-law part plus a jet of the small remainder
ExteriorField preconditioned_split_residual(const MetricTables& T,
                                            const Eigen::MatrixXd& power_law_values,
                                            const Eigen::MatrixXd& delta_modes,
                                            ApplyInfo* info) {
    const int n = T.n;
    ExteriorField delta(T.basis, T.grid, 0.5 * (2.0 - n));
    delta.modes = delta_modes;
    ExteriorField lap = laplace_beltrami_apply(T, delta, default_exec(), info);
    Eigen::MatrixXd correction_modes = analyze_layers(*T.basis, power_law_values);
    lap.modes += correction_modes;
    SphereField zero(T.basis);
    return solve_flat(lap, zero, 0.5 * (2.0 - n), {.check_resolution = false});
}

// GMRES on the preconditioned operator d -> Delta_0^{-1} Delta_g d, used
// where the plain fixed point stops contracting (large deformations in the
// capacity module).
void gmres_correct(const MetricTables& T,
                   const std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>& residual_of,
                   Eigen::MatrixXd& psi_modes, double tol, int max_iter) {
    const int n = T.n;
    const SphereField zero(T.basis);
    auto apply_A = [&](const Eigen::MatrixXd& modes) {
        ExteriorField d(T.basis, T.grid, 0.5 * (2.0 - n));
        d.modes = modes;
        ExteriorField lap = laplace_beltrami_apply(T, d);
        return solve_flat(lap, zero, 0.5 * (2.0 - n), {.check_resolution = false}).modes;
    };

    Eigen::MatrixXd r0 = -residual_of(psi_modes);
    const double beta = r0.norm();
    if (beta == 0.0) return;
    const int m = std::min(max_iter, 200);
    std::vector<Eigen::MatrixXd> V;
    V.push_back(r0 / beta);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
    Eigen::VectorXd cs = Eigen::VectorXd::Zero(m), sn = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(m + 1);
    g[0] = beta;
    int k = 0;
    for (; k < m; ++k) {
        Eigen::MatrixXd wv = apply_A(V[k]);
        for (int i = 0; i <= k; ++i) {
            H(i, k) = (wv.array() * V[i].array()).sum();
            wv -= H(i, k) * V[i];
        }
        H(k + 1, k) = wv.norm();
        const bool breakdown = H(k + 1, k) < 1e-300;
        if (!breakdown) V.push_back(wv / H(k + 1, k));
        for (int i = 0; i < k; ++i) {
            const double t = cs[i] * H(i, k) + sn[i] * H(i + 1, k);
            H(i + 1, k) = -sn[i] * H(i, k) + cs[i] * H(i + 1, k);
            H(i, k) = t;
        }
        const double d = std::hypot(H(k, k), H(k + 1, k));
        cs[k] = H(k, k) / d;
        sn[k] = H(k + 1, k) / d;
        H(k, k) = d;
        H(k + 1, k) = 0.0;
        g[k + 1] = -sn[k] * g[k];
        g[k] = cs[k] * g[k];
        if (std::abs(g[k + 1]) < tol * std::max(1.0, beta) || breakdown) {
            ++k;
            break;
        }
    }
    Eigen::VectorXd y = Eigen::VectorXd::Zero(k);
    for (int i = k - 1; i >= 0; --i) {
        double s = g[i];
        for (int j = i + 1; j < k; ++j) s -= H(i, j) * y[j];
        y[i] = s / H(i, i);
    }
    for (int i = 0; i < k; ++i) psi_modes += y[i] * V[i];
}

// trace assembly from boundary coefficients and the radial derivative there
SphereField trace_from_boundary(const MetricTables& T, const Eigen::VectorXd& bdry,
                                const Eigen::VectorXd& dr) {
    const auto& basis = *T.basis;
    const int n = basis.n(), Q = basis.num_nodes();
    Eigen::VectorXd ur = basis.values() * dr;
    Eigen::VectorXd trace = Eigen::VectorXd::Zero(Q);
    for (int a = 0; a < n; ++a) {
        Eigen::VectorXd da = basis.nodes().col(a).cwiseProduct(ur) + basis.grad(a) * bdry;
        trace += T.normal.col(a).cwiseProduct(da);
    }
    return project_samples(T.basis, trace);
}

}  // namespace

AuxField solve_aux_source(std::shared_ptr<const SphereBasis> basis,
                          std::shared_ptr<const RadialGrid> grid) {
    const int n = basis->n();
    const double c0 = std::sqrt(sphere_area(n));
    ExteriorField f(basis, grid, 0.5 * (2.0 - n) - 2.0);
    for (int i = 0; i < grid->count; ++i) f.modes(i, 0) = c0 * std::pow(grid->r[i], 1.0 - 2.0 * n);
    AuxField aux;
    aux.field = solve_flat(f, SphereField(basis), 0.5 * (2.0 - n),
                           {.tail_exponent = 1.0 - 2.0 * n, .check_resolution = false});
    aux.deriv_at_1 = -normal_trace(aux.field).coeffs[0] / c0;
    return aux;
}

ExteriorField approx_v(const Shape& shape, std::shared_ptr<const SphereBasis> basis,
                       std::shared_ptr<const RadialGrid> grid) {
    shape.check_embedding();
    const int n = basis->n();
    // v = f(Theta) r^{2-n} with f = (1+w)^{2-n}; every mode shares the power
    Eigen::VectorXd wvals = basis->synthesize(shape.w.coeffs);
    Eigen::VectorXd fvals(wvals.size());
    for (int q = 0; q < wvals.size(); ++q) fvals[q] = std::pow(1.0 + wvals[q], 2.0 - n);
    Eigen::VectorXd fcoef = basis->project(fvals);
    ExteriorField v(basis, grid, 2.0 - n);
    for (int i = 0; i < grid->count; ++i)
        v.modes.row(i) = fcoef.transpose() * std::pow(grid->r[i], 2.0 - n);
    return v;
}

SphereField neumann_trace_g(const MetricTables& T, const ExteriorField& u) {
    return trace_from_boundary(T, u.modes.row(0).transpose(),
                               boundary_radial_derivative(u.modes, u.grid->h));
}

CapacitorContext::CapacitorContext(MetricModel model, std::shared_ptr<const SphereBasis> basis,
                                   std::shared_ptr<const RadialGrid> grid, CorrectionOptions opts)
    : model_(std::move(model)),
      basis_(std::move(basis)),
      grid_(std::move(grid)),
      opts_(opts),
      dtn_(basis_, grid_),
      aux_(solve_aux_source(basis_, grid_)) {
    if (model_.n != basis_->n())
        throw std::invalid_argument("CapacitorContext: model/basis dimension mismatch");
}

PotentialBundle CapacitorContext::solve_potential(const Shape& shape,
                                                  int fixed_iterations) const {
    const int n = model_.n;
    const int Q = basis_->num_nodes();
    MetricTables T = assemble_metric_tables(model_, shape, basis_, grid_);

    PotentialBundle B;

    // excess boundary factor df = (1+w)^{2-n} - 1, kept small exactly
    Eigen::VectorXd wvals = basis_->synthesize(shape.w.coeffs);
    Eigen::VectorXd dfvals(Q);
    for (int q = 0; q < Q; ++q) dfvals[q] = std::expm1((2.0 - n) * std::log1p(wvals[q]));
    Eigen::VectorXd dfcoef = basis_->project(dfvals);

    // v for reporting: (1 + df) r^{2-n}
    B.v = ExteriorField(basis_, grid_, 2.0 - n);
    {
        Eigen::VectorXd fcoef = dfcoef;
        fcoef[0] += std::sqrt(sphere_area(n));
        for (int i = 0; i < grid_->count; ++i)
            B.v.modes.row(i) = fcoef.transpose() * std::pow(grid_->r[i], 2.0 - n);
    }

    // split u = r^{2-n} + delta, delta = df r^{2-n} + correction: the power
    // law goes through analytic derivatives, the stencils only ever touch
    // small fields, so the trace excess survives the rho^{1-n} rescale
    const Eigen::MatrixXd power_law_values = apply_to_power_law(T);
    Eigen::MatrixXd dv_modes(grid_->count, basis_->dim());
    for (int i = 0; i < grid_->count; ++i)
        dv_modes.row(i) = dfcoef.transpose() * std::pow(grid_->r[i], 2.0 - n);

    // correction starts as the decaying extension of its Dirichlet data -df
    SphereField d(basis_);
    d.coeffs = -dfcoef;
    B.correction = harmonic_extension_flat(d, grid_);
    B.correction.nu = 0.5 * (2.0 - n);

    auto residual_of = [&](const Eigen::MatrixXd& psi_modes) {
        ApplyInfo info;
        ExteriorField e =
            preconditioned_split_residual(T, power_law_values, dv_modes + psi_modes, &info);
        B.aliasing_defect = info.aliasing_defect;
        return e.modes;
    };

    const int fixed = (fixed_iterations >= 0) ? fixed_iterations : opts_.fixed_iterations;
    if (opts_.use_gmres) {
        gmres_correct(T, residual_of, B.correction.modes, opts_.fp_tol, opts_.gmres_max);
        B.iterations = opts_.gmres_max;
    }
    {
        const int max_sweeps = (fixed >= 0) ? fixed : opts_.max_iterations;
        double prev = 0.0;
        int sweeps = 0;
        while (true) {
            Eigen::MatrixXd e = residual_of(B.correction.modes);
            const double en = coeff_sup(e);
            if (prev > 0.0) B.contraction = en / prev;
            B.harmonic_residual = en;
            if (fixed < 0 && en < opts_.fp_tol) {
                B.converged = true;
                break;
            }
            // the preconditioned residual bottoms out at the derivative
            // roundoff floor; a stalled iteration below the acceptance level
            // is converged-to-floor, and sweeping further would only push
            // that noise into the correction
            if (fixed < 0 && prev > 0.0 && en > 0.7 * prev) {
                B.converged = en < opts_.stagnation_accept;
                break;
            }
            prev = en;
            if (sweeps >= max_sweeps) {
                B.converged = (fixed >= 0) || opts_.use_gmres;
                break;
            }
            B.correction.modes -= e;
            ++sweeps;
        }
        B.iterations += sweeps;
    }

    B.total = B.v;
    B.total.modes += B.correction.modes;
    B.total.nu = 2.0 - n;

    // certificates from the small pieces (the boundary value of u - 1 is
    // df + correction|_{r=1}, which the sweeps leave untouched)
    Eigen::VectorXd bdry_excess_coeffs = dfcoef + B.correction.modes.row(0).transpose();
    B.dirichlet_residual = basis_->synthesize(bdry_excess_coeffs).cwiseAbs().maxCoeff();
    B.decay_envelope = basis_->synthesize(B.total.modes.row(grid_->count - 1).transpose())
                           .cwiseAbs()
                           .maxCoeff() *
                       std::pow(grid_->r_max, n - 2.0);

    // Neumann trace as (n-2) + excess: N = -Theta + dN, grad u = (2-n) Theta
    // + grad(delta); every product here involves at least one small factor
    {
        Eigen::VectorXd ddr_coeffs = (2.0 - n) * dfcoef +
                                     boundary_radial_derivative(B.correction.modes, grid_->h);
        Eigen::VectorXd ddr = basis_->values() * ddr_coeffs;  // d_r delta at nodes
        Eigen::VectorXd excess = Eigen::VectorXd::Zero(Q);
        const auto& nodes = basis_->nodes();
        for (int a = 0; a < n; ++a) {
            Eigen::VectorXd grad_delta_a =
                nodes.col(a).cwiseProduct(ddr) + basis_->grad(a) * bdry_excess_coeffs;
            excess += (2.0 - n) * T.normal_delta.col(a).cwiseProduct(nodes.col(a)) -
                      nodes.col(a).cwiseProduct(grad_delta_a) +
                      T.normal_delta.col(a).cwiseProduct(grad_delta_a);
        }
        B.trace_excess = project_samples(basis_, excess);
        B.neumann_g = B.trace_excess;
        B.neumann_g.coeffs[0] += (n - 2.0) * std::sqrt(sphere_area(n));
        B.neumann_physical = B.neumann_g;
        B.neumann_physical.coeffs /= shape.rho;
    }
    return B;
}

SphereField CapacitorContext::reduced_residual(double rho_tilde, const Eigen::VectorXd& tau,
                                               const SphereField& w, PotentialBundle* bundle,
                                               int fixed_iterations) const {
    const int n = model_.n;
    if (!(rho_tilde > 0.0)) throw std::invalid_argument("reduced_residual: rho_tilde > 0");
    SphereField w_phys = w;
    w_phys.coeffs *= std::pow(rho_tilde, n - 1.0);
    Shape shape{1.0 / rho_tilde, tau, w_phys};

    PotentialBundle B = solve_potential(shape, fixed_iterations);

    // G = rho_t^{1-n} (trace - (n-2)(1 - sigma rho_t^{n-1}/2)), then the
    // sigma-inhomogeneity is removed through the auxiliary field
    SphereField G = B.trace_excess;
    G.coeffs[0] +=
        0.5 * (n - 2.0) * model_.sigma * std::pow(rho_tilde, n - 1.0) * std::sqrt(sphere_area(n));
    G.coeffs *= std::pow(rho_tilde, 1.0 - n);
    const double CK = 0.5 * (n - 1.0) * (n - 2.0) * (n - 2.0);
    G.coeffs[0] += CK * model_.sigma * (-aux_.deriv_at_1) * std::sqrt(sphere_area(n));

    if (bundle) *bundle = std::move(B);
    return G;
}

}  // namespace capfoil

#include "capfoil/critical_solver.hpp"

#include <cmath>

namespace capfoil {

namespace {
double sup_on_sphere(const SphereField& f) { return f.sup_norm(); }
}  // namespace

CriticalSolver::CriticalSolver(MetricModel model, std::shared_ptr<const SphereBasis> basis,
                               std::shared_ptr<const RadialGrid> grid, NewtonOptions opts)
    : model_(std::move(model)),
      opts_(opts),
      ctx_(model_, std::move(basis), std::move(grid), opts.inner) {}

Eigen::MatrixXd CriticalSolver::measure_tau_jacobian(double rho_tilde, const Eigen::VectorXd& tau,
                                                     const SphereField& w, int fixed_iters,
                                                     int* evals) const {
    const int n = model_.n;
    const double eps = opts_.tau_fd_step;
    Eigen::MatrixXd J(n, n);
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd tp = tau, tm = tau;
        tp[i] += eps;
        tm[i] -= eps;
        SphereField gp = ctx_.reduced_residual(rho_tilde, tp, w, nullptr, fixed_iters);
        SphereField gm = ctx_.reduced_residual(rho_tilde, tm, w, nullptr, fixed_iters);
        if (evals) *evals += 2;
        auto [d1p, vp] = pi_v1(gp);
        auto [d1m, vm] = pi_v1(gm);
        J.col(i) = (vp - vm) / (2.0 * eps);
    }
    return J;
}

SolveReport CriticalSolver::solve_at(double rho_physical, const WarmStart* warm) const {
    const int n = model_.n;
    auto basis = ctx_.basis();
    SolveReport rep;
    rep.rho = rho_physical;
    const double rho_tilde = 1.0 / rho_physical;
    const double tol = opts_.tol_factor * (n - 2.0);

    Eigen::VectorXd tau = Eigen::VectorXd::Zero(n);
    SphereField w(basis);
    Eigen::MatrixXd J;
    if (warm) {
        tau = warm->tau;
        w.coeffs = warm->w_coeffs;
        J = warm->jacobian;
    }

    try {
        PotentialBundle bundle;
        SphereField G = ctx_.reduced_residual(rho_tilde, tau, w, &bundle);
        ++rep.gtilde_evals;
        ++rep.iterations;
        double res = sup_on_sphere(G);
        int base_iters = bundle.iterations;
        bool tau_active = true;

        for (int outer = 0; outer < opts_.max_outer && res >= tol; ++outer) {
            auto [gdeg1, tvec] = pi_v1(G);
            if (tau_active && tvec.norm() > 0.1 * tol) {
                if (J.size() == 0) {
                    J = measure_tau_jacobian(rho_tilde, tau, w, base_iters, &rep.gtilde_evals);
                    if (J.cwiseAbs().maxCoeff() < 1e-10) tau_active = false;  // flat sigma = 0
                }
            }

            // combined update from the current residual
            Eigen::VectorXd dtau = Eigen::VectorXd::Zero(n);
            if (tau_active && J.size() > 0 && tvec.norm() > 0.1 * tol)
                dtau = J.fullPivLu().solve(tvec);
            SphereField rhs = pi_perp(G);
            SphereField dw = ctx_.dtn().invert(rhs);
            dw.coeffs /= (n - 2.0);  // w-block Jacobian carries the (n-2) factor

            double step = 1.0;
            bool accepted = false;
            for (int tries = 0; tries < 5; ++tries) {
                Eigen::VectorXd tau_new = tau - step * dtau;
                SphereField w_new = w;
                w_new.coeffs -= step * dw.coeffs;
                PotentialBundle btry;
                SphereField Gtry = ctx_.reduced_residual(rho_tilde, tau_new, w_new, &btry);
                ++rep.gtilde_evals;
                const double res_new = sup_on_sphere(Gtry);
                if (res_new < res || res_new < tol) {
                    tau = tau_new;
                    w = w_new;
                    G = Gtry;
                    res = res_new;
                    bundle = std::move(btry);
                    base_iters = bundle.iterations;
                    accepted = true;
                    ++rep.iterations;
                    break;
                }
                step *= opts_.damping;
            }
            if (!accepted) {
                // stale warm Jacobian is the usual cause; remeasure once
                if (warm && J.size() > 0) {
                    J = measure_tau_jacobian(rho_tilde, tau, w, base_iters, &rep.gtilde_evals);
                    continue;
                }
                rep.error = "newton iteration stopped contracting";
                break;
            }
        }

        rep.converged = (res < tol) && rep.error.empty();
        rep.residual_norm = res;
        rep.jacobian_tau = J;
        rep.tau = tau;
        rep.w_norm_rescaled = w.coeffs.norm();
        SphereField w_phys = w;
        w_phys.coeffs *= std::pow(rho_tilde, n - 1.0);
        rep.w_norm_physical = w_phys.coeffs.norm();
        rep.shape = Shape{rho_physical, tau, w_phys};

        const double mean = mean_value(bundle.neumann_physical);
        rep.neumann_constant = mean;
        SphereField dev = bundle.neumann_physical;
        dev.coeffs[0] -= mean * std::sqrt(sphere_area(n));
        rep.constancy_residual = sup_on_sphere(dev) / std::abs(mean);
        rep.harmonic_residual = bundle.harmonic_residual;
        rep.dirichlet_residual = bundle.dirichlet_residual;
        rep.decay_envelope = bundle.decay_envelope;
        rep.aliasing_defect = bundle.aliasing_defect;
    } catch (const std::exception& e) {
        rep.converged = false;
        rep.error = e.what();
    }
    return rep;
}

std::vector<SolveReport> CriticalSolver::sweep(const std::vector<double>& rho_grid,
                                               bool warm_start) const {
    for (std::size_t i = 1; i < rho_grid.size(); ++i)
        if (!(rho_grid[i] > rho_grid[i - 1]))
            throw std::invalid_argument("sweep: rho grid must be strictly increasing");

    std::vector<SolveReport> out(rho_grid.size());
    if (!warm_start) {
        for (std::size_t i = 0; i < rho_grid.size(); ++i) out[i] = solve_at(rho_grid[i]);
        return out;
    }
    WarmStart ws;
    bool have = false;
    for (std::size_t i = 0; i < rho_grid.size(); ++i) {
        out[i] = solve_at(rho_grid[i], have ? &ws : nullptr);
        if (out[i].converged) {
            ws.tau = out[i].tau;
            ws.w_coeffs = out[i].shape.w.coeffs * std::pow(rho_grid[i], model_.n - 1.0);
            ws.jacobian = out[i].jacobian_tau;
            have = true;
        }
    }
    return out;
}

}  // namespace capfoil

#include "capfoil/dtn.hpp"

#include <cmath>

namespace capfoil {

namespace {

// Interior harmonic extension on the unit ball, mode-wise: the regular
// branch s^k is selected at the inner end by the exact discrete relation of
// the same Numerov scheme used for the exterior solve.
Eigen::VectorXd interior_extension_mode(int n, double lam, const RadialGrid& g, double dval) {
    const int N = g.count;
    const double h = g.h;
    const double beta = 0.5 * (n - 2);
    const double mu2 = beta * beta + lam;
    const double x = h * h * mu2;
    const double a = 1.0 - x / 12.0;
    const double b = -2.0 * (1.0 + 5.0 * x / 12.0);
    const double c = -b / (2.0 * a);
    const double xi = c - std::sqrt(c * c - 1.0);

    // grid in tau = log s, ascending from -log(r_max) to 0; u = e^{-beta tau} z
    Eigen::VectorXd dl(N), dd(N), du(N), rhs(N);
    dd[0] = 1.0;
    du[0] = -xi;  // z_0 = xi z_1: regular (decaying toward the center) branch
    rhs[0] = 0.0;
    for (int i = 1; i + 1 < N; ++i) {
        dl[i] = a;
        dd[i] = b;
        du[i] = a;
        rhs[i] = 0.0;
    }
    dl[N - 1] = 0.0;
    dd[N - 1] = 1.0;
    rhs[N - 1] = dval;  // z(0) = u(s=1)

    for (int i = 1; i < N; ++i) {
        const double m = dl[i] / dd[i - 1];
        dd[i] -= m * du[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    Eigen::VectorXd z(N);
    z[N - 1] = rhs[N - 1] / dd[N - 1];
    for (int i = N - 2; i >= 0; --i) z[i] = (rhs[i] - du[i] * z[i + 1]) / dd[i];

    Eigen::VectorXd u(N);
    for (int i = 0; i < N; ++i) {
        const double tau = -g.t[N - 1 - i] + 0.0;  // ascending -T..0
        u[i] = std::exp(-beta * tau) * z[i];
    }
    return u;
}

}  // namespace

DtnOperator::DtnOperator(std::shared_ptr<const SphereBasis> basis,
                         std::shared_ptr<const RadialGrid> grid)
    : basis_(std::move(basis)), grid_(std::move(grid)) {
    const int L = basis_->L();
    measured_.resize(L + 1);
    // one representative mode per degree; the solver is mode-diagonal
    for (int k = 0; k <= L; ++k) {
        int j = -1;
        for (int jj = 0; jj < basis_->dim(); ++jj)
            if (basis_->degree_of(jj) == k) {
                j = jj;
                break;
            }
        SphereField w(basis_);
        w.coeffs[j] = 1.0;
        SphereField lw = apply(w);
        measured_[k] = lw.coeffs[j];
    }
}

ExteriorField DtnOperator::harmonic_extension(const SphereField& w) const {
    return harmonic_extension_flat(w, grid_);
}

SphereField DtnOperator::apply(const SphereField& w) const {
    SphereField tr = normal_trace(harmonic_extension(w));
    const double nm1 = basis_->n() - 1.0;
    tr.coeffs -= nm1 * w.coeffs;
    return tr;
}

SphereField DtnOperator::apply_via_interior(const SphereField& w) const {
    const int n = basis_->n();
    const int N = grid_->count;
    // interior extension per mode, then d_s at s = 1 minus w
    const int W = 9;
    Eigen::VectorXd off(W);
    for (int j = 0; j < W; ++j) off[j] = -j;  // backward in the ascending tau grid
    const Eigen::VectorXd wts = fd_weights(off, 1);
    SphereField out(basis_);
    for (int j = 0; j < basis_->dim(); ++j) {
        const double lam = sphere_eigenvalue(n, basis_->degree_of(j));
        Eigen::VectorXd u = interior_extension_mode(n, lam, *grid_, w.coeffs[j]);
        double dtau = 0.0;
        for (int p = 0; p < W; ++p) dtau += wts[p] * u[N - 1 - p];
        dtau /= grid_->h;
        // d_s u at s=1 equals d_tau u; operator is d_s - 1 on each mode
        out.coeffs[j] = dtau - w.coeffs[j];
    }
    return out;
}

SphereField DtnOperator::invert(const SphereField& rhs, double deg1_tol) const {
    double deg1 = 0.0;
    for (int j = 0; j < basis_->dim(); ++j)
        if (basis_->degree_of(j) == 1) deg1 = std::max(deg1, std::abs(rhs.coeffs[j]));
    const double scale = rhs.coeffs.norm();
    if (deg1 > deg1_tol * (scale > 0 ? scale : 1.0))
        throw kernel_obstruction(
            "DtnOperator::invert: right-hand side has degree-1 content (kernel of the operator)");
    SphereField w(basis_);
    for (int j = 0; j < basis_->dim(); ++j) {
        const int k = basis_->degree_of(j);
        w.coeffs[j] = (k == 1) ? 0.0 : rhs.coeffs[j] / measured_[k];
    }
    return w;
}

std::vector<DtnOperator::SpectrumRow> DtnOperator::spectrum() const {
    std::vector<SpectrumRow> rows;
    for (int k = 0; k <= basis_->L(); ++k) {
        const double analytic = k - 1.0;
        rows.push_back({k, measured_[k], analytic, std::abs(measured_[k] - analytic)});
    }
    return rows;
}

double DtnOperator::max_spectrum_error() const {
    double m = 0.0;
    for (const auto& r : spectrum()) m = std::max(m, r.abs_error);
    return m;
}

}  // namespace capfoil

#include "capfoil/exterior.hpp"

#include <cmath>

namespace capfoil {

// Fornberg's recursion: numerically stable generation of finite-difference
// weights on arbitrary offsets (derivative taken at offset 0).
Eigen::VectorXd fd_weights(const Eigen::VectorXd& offsets, int der_order) {
    const int npts = static_cast<int>(offsets.size());
    const int m = der_order;
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(npts, m + 1);
    C(0, 0) = 1.0;
    double c1 = 1.0;
    double c4 = offsets[0];
    for (int i = 1; i < npts; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = offsets[i];
        for (int j = 0; j < i; ++j) {
            const double c3 = offsets[i] - offsets[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    C(i, k) = c1 * (k * C(i - 1, k - 1) - c5 * C(i - 1, k)) / c2;
                C(i, 0) = -c1 * c5 * C(i - 1, 0) / c2;
            }
            for (int k = mn; k >= 1; --k) C(j, k) = (c4 * C(j, k) - k * C(j, k - 1)) / c3;
            C(j, 0) = c4 * C(j, 0) / c3;
        }
        c1 = c2;
    }
    return C.col(m);
}

namespace {
// 9-point central stencils in the interior; wider 10-point windows near the
// boundary rows where one-sided second derivatives lose two orders
constexpr int kCentralW = 9;
constexpr int kEdgeW = 10;

struct StencilCache {
    std::vector<Eigen::VectorXd> w1c, w2c;  // central windows, by position
    std::vector<Eigen::VectorXd> w1e, w2e;  // edge windows, by position
    StencilCache() {
        for (int pos = 0; pos < kCentralW; ++pos) {
            Eigen::VectorXd off(kCentralW);
            for (int j = 0; j < kCentralW; ++j) off[j] = j - pos;
            w1c.push_back(fd_weights(off, 1));
            w2c.push_back(fd_weights(off, 2));
        }
        for (int pos = 0; pos < kEdgeW; ++pos) {
            Eigen::VectorXd off(kEdgeW);
            for (int j = 0; j < kEdgeW; ++j) off[j] = j - pos;
            w1e.push_back(fd_weights(off, 1));
            w2e.push_back(fd_weights(off, 2));
        }
    }
};
const StencilCache& stencils() {
    static StencilCache c;
    return c;
}
}  // namespace

void differentiate_uniform(const Eigen::MatrixXd& values, double h, Eigen::MatrixXd& d1,
                           Eigen::MatrixXd* d2) {
    const int N = static_cast<int>(values.rows());
    if (N < kEdgeW) throw std::invalid_argument("differentiate_uniform: too few samples");
    d1.resizeLike(values);
    if (d2) d2->resizeLike(values);
    const auto& sc = stencils();
    const int half = kCentralW / 2;
    for (int i = 0; i < N; ++i) {
        const bool edge = (i < half) || (i >= N - half);
        const int W = edge ? kEdgeW : kCentralW;
        const int start = std::min(std::max(i - W / 2, 0), N - W);
        const int pos = i - start;
        const auto& w1 = edge ? sc.w1e[pos] : sc.w1c[pos];
        const auto& w2 = edge ? sc.w2e[pos] : sc.w2c[pos];
        d1.row(i).setZero();
        if (d2) d2->row(i).setZero();
        for (int j = 0; j < W; ++j) {
            d1.row(i) += w1[j] * values.row(start + j);
            if (d2) d2->row(i) += w2[j] * values.row(start + j);
        }
        d1.row(i) /= h;
        if (d2) d2->row(i) /= (h * h);
    }
}

double ExteriorField::envelope_factor() const {
    const int N = grid->count;
    const double env = std::pow(grid->r_max, nu);
    return modes.row(N - 1).cwiseAbs().maxCoeff() / env;
}

InteriorField kelvin(const ExteriorField& u) {
    const int n = u.basis->n();
    InteriorField v;
    v.basis = u.basis;
    v.s = u.grid->r.cwiseInverse();
    v.modes.resizeLike(u.modes);
    for (int i = 0; i < u.grid->count; ++i)
        v.modes.row(i) = std::pow(v.s[i], 2.0 - n) * u.modes.row(i);
    v.nu = 2.0 - n - u.nu;
    return v;
}

ExteriorField kelvin(const InteriorField& u, std::shared_ptr<const RadialGrid> grid) {
    const int n = u.basis->n();
    if (grid->count != u.s.size()) throw std::invalid_argument("kelvin: grid size mismatch");
    ExteriorField v(u.basis, std::move(grid), 2.0 - n - u.nu);
    for (int i = 0; i < v.grid->count; ++i)
        v.modes.row(i) = std::pow(v.grid->r[i], 2.0 - n) * u.modes.row(i);
    return v;
}

Eigen::MatrixXd laplace0_modes(int n, const SphereBasis& basis, const Eigen::VectorXd& logr,
                               const Eigen::MatrixXd& modes) {
    const double h = logr[1] - logr[0];
    Eigen::MatrixXd d1, d2;
    differentiate_uniform(modes, h, d1, &d2);
    Eigen::MatrixXd out(modes.rows(), modes.cols());
    for (int i = 0; i < modes.rows(); ++i) {
        const double r2 = std::exp(2.0 * logr[i]);
        for (int j = 0; j < modes.cols(); ++j) {
            const double lam = sphere_eigenvalue(n, basis.degree_of(j));
            out(i, j) = (d2(i, j) + (n - 2.0) * d1(i, j) - lam * modes(i, j)) / r2;
        }
    }
    return out;
}

ExteriorField laplace0_apply(const ExteriorField& u) {
    ExteriorField out(u.basis, u.grid, u.nu - 2.0);
    out.modes = laplace0_modes(u.basis->n(), *u.basis, u.grid->t, u.modes);
    return out;
}

namespace {

// One Numerov mode solve of u'' + (n-1)/r u' - lam/r^2 u = f with Dirichlet
// data at r = 1 and the decaying discrete branch imposed at r_max.
// In t = log r with u = e^{-beta t} z, beta = (n-2)/2, the equation becomes
// z'' - mu^2 z = S with mu^2 = beta^2 + lam and S = r^{beta+2} f.
void solve_mode(int n, double lam, const RadialGrid& g, const Eigen::VectorXd& f, double dval,
                double tail_p, Eigen::VectorXd& u) {
    const int N = g.count;
    const double h = g.h;
    const double beta = 0.5 * (n - 2);
    const double mu2 = beta * beta + lam;
    const double x = h * h * mu2;
    const double a = 1.0 - x / 12.0;
    const double b = -2.0 * (1.0 + 5.0 * x / 12.0);

    // discrete decaying branch z_{i+1} = xi z_i, cosh(mu_hat h) = -b/(2a)
    const double c = -b / (2.0 * a);
    const double xi = c - std::sqrt(c * c - 1.0);

    Eigen::VectorXd S(N);
    for (int i = 0; i < N; ++i) S[i] = std::pow(g.r[i], beta + 2.0) * f[i];

    // particular far-field tail for f ~ f(r_max) (r/r_max)^p
    double zpT = 0.0, zpTm = 0.0;
    const double fT = f[N - 1];
    if (fT != 0.0) {
        const double s = tail_p + 2.0;
        const double q = s * (s + n - 2.0) - lam;
        const double T = g.t[N - 1];
        if (std::abs(q) > 1e-8 * (std::abs(lam) + 1.0)) {
            const double C = fT * std::pow(g.r_max, -tail_p) / q;
            zpT = C * std::exp((s + beta) * T);
            zpTm = C * std::exp((s + beta) * (T - h));
        } else {
            // resonant power: particular solution C r^s log r
            const double C = fT * std::pow(g.r_max, -tail_p) / (2.0 * s + n - 2.0);
            zpT = C * std::exp((s + beta) * T) * T;
            zpTm = C * std::exp((s + beta) * (T - h)) * (T - h);
        }
    }

    Eigen::VectorXd dl(N), dd(N), du(N), rhs(N);
    dd[0] = 1.0;
    du[0] = 0.0;
    rhs[0] = dval;  // z(0) = u(1)
    for (int i = 1; i + 1 < N; ++i) {
        dl[i] = a;
        dd[i] = b;
        du[i] = a;
        rhs[i] = h * h / 12.0 * (S[i - 1] + 10.0 * S[i] + S[i + 1]);
    }
    dl[N - 1] = -xi;
    dd[N - 1] = 1.0;
    rhs[N - 1] = zpT - xi * zpTm;

    for (int i = 1; i < N; ++i) {
        const double m = dl[i] / dd[i - 1];
        dd[i] -= m * du[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    Eigen::VectorXd z(N);
    z[N - 1] = rhs[N - 1] / dd[N - 1];
    for (int i = N - 2; i >= 0; --i) z[i] = (rhs[i] - du[i] * z[i + 1]) / dd[i];

    u.resize(N);
    for (int i = 0; i < N; ++i) u[i] = std::exp(-beta * g.t[i]) * z[i];
}

double estimate_tail_exponent(const RadialGrid& g, const Eigen::VectorXd& f, double fallback) {
    const int N = g.count;
    const double fmax = f.cwiseAbs().maxCoeff();
    const double fT = std::abs(f[N - 1]);
    const int back = 6;
    if (fmax == 0.0 || fT < 1e-13 * fmax || std::abs(f[N - 1 - back]) < 1e-300) return fallback;
    const double p = (std::log(fT) - std::log(std::abs(f[N - 1 - back]))) / (back * g.h);
    return std::min(-0.5, std::max(p, -40.0));
}

}  // namespace

ExteriorField solve_flat(const ExteriorField& f, const SphereField& dirichlet, double nu,
                         const FlatSolveOptions& opts) {
    const int n = f.basis->n();
    if (!(nu > 2.0 - n && nu < 0.0))
        throw std::invalid_argument("solve_flat: nu must lie in (2-n, 0)");
    if (dirichlet.basis != f.basis) throw std::invalid_argument("solve_flat: basis mismatch");

    ExteriorField u(f.basis, f.grid, nu);
    Eigen::VectorXd prof;
    for (int j = 0; j < f.basis->dim(); ++j) {
        const double lam = sphere_eigenvalue(n, f.basis->degree_of(j));
        const double p = opts.tail_exponent
                             ? *opts.tail_exponent
                             : estimate_tail_exponent(*f.grid, f.modes.col(j), nu - 2.0);
        solve_mode(n, lam, *f.grid, f.modes.col(j), dirichlet.coeffs[j], p, prof);
        u.modes.col(j) = prof;
    }

    if (opts.check_resolution) {
        // the closure is exact for power-law tails; trip only when the source
        // at r_max is so large that any tail model dominates the solution
        const double umax = u.modes.cwiseAbs().maxCoeff() + 1e-300;
        const double ftail = f.modes.row(f.grid->count - 1).cwiseAbs().maxCoeff();
        if (ftail * f.grid->r_max * f.grid->r_max > 0.5 * umax)
            throw std::runtime_error("solve_flat: r_max too small for the requested tolerance");
    }
    return u;
}

ExteriorField harmonic_extension_flat(const SphereField& dirichlet,
                                      std::shared_ptr<const RadialGrid> grid) {
    const int n = dirichlet.basis->n();
    ExteriorField zero(dirichlet.basis, std::move(grid), 0.0);
    const double nu = 0.5 * (2.0 - n);  // any admissible weight; f = 0
    ExteriorField u =
        solve_flat(zero, dirichlet, nu, {.tail_exponent = 0.0, .check_resolution = false});
    u.nu = 2.0 - n;
    return u;
}

SphereField normal_trace(const ExteriorField& u) {
    const int N = u.grid->count;
    const int W = 9;
    if (N < W) throw std::runtime_error("normal_trace: insufficient grid resolution near r=1");
    Eigen::VectorXd off(W);
    for (int j = 0; j < W; ++j) off[j] = j;
    const Eigen::VectorXd w = fd_weights(off, 1);
    Eigen::VectorXd ut0 = Eigen::VectorXd::Zero(u.basis->dim());
    for (int j = 0; j < W; ++j) ut0 += w[j] * u.modes.row(j).transpose();
    ut0 /= u.grid->h;
    // d_r = d_t at r = 1; trace is taken along the inward normal -x
    return {u.basis, -ut0};
}

void radial_derivatives(const ExteriorField& u, Eigen::MatrixXd& d1, Eigen::MatrixXd* d2) {
    Eigen::MatrixXd dt1, dt2;
    differentiate_uniform(u.modes, u.grid->h, dt1, d2 ? &dt2 : nullptr);
    const int N = u.grid->count;
    d1.resizeLike(u.modes);
    if (d2) d2->resizeLike(u.modes);
    for (int i = 0; i < N; ++i) {
        const double r = u.grid->r[i];
        d1.row(i) = dt1.row(i) / r;
        if (d2) d2->row(i) = (dt2.row(i) - dt1.row(i)) / (r * r);
    }
}

}  // namespace capfoil

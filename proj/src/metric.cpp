#include "capfoil/metric.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace capfoil {

double smoothstep_quintic(double t, double lo, double hi, double* deriv) {
    if (t <= lo) {
        if (deriv) *deriv = 0.0;
        return 0.0;
    }
    if (t >= hi) {
        if (deriv) *deriv = 0.0;
        return 1.0;
    }
    const double s = (t - lo) / (hi - lo);
    if (deriv) *deriv = (30.0 * s * s * s * s - 60.0 * s * s * s + 30.0 * s * s) / (hi - lo);
    return ((6.0 * s - 15.0) * s + 10.0) * s * s * s;
}

namespace {

// The model family is conformal: g(y) = c(y) * delta. Everything downstream
// exploits that; the matrix-valued eval() below is a thin wrapper.
void conformal_factor(const MetricModel& m, const double* y, int n, double& c, double* dc) {
    double r2 = 0.0;
    for (int i = 0; i < n; ++i) r2 += y[i] * y[i];
    const double r = std::sqrt(r2);
    const double rp = std::pow(r, 1.0 - n);  // |y|^{1-n}
    c = 1.0 + m.sigma * rp;
    if (dc)
        for (int i = 0; i < n; ++i) dc[i] = m.sigma * (1.0 - n) * rp / r2 * y[i];

    if (m.h.active()) {
        Eigen::VectorXd dir = m.h.direction;
        if (dir.size() == 0) {
            dir = Eigen::VectorXd::Zero(n);
            dir[0] = 1.0;
        }
        dir.normalize();
        double ydir = 0.0;
        for (int i = 0; i < n; ++i) ydir += y[i] * dir[i];
        const double u = ydir / r;
        double dchi = 0.0;
        const double chi = smoothstep_quintic(r, m.h.inner, m.h.outer, &dchi);
        const double rn = rp / r;  // |y|^{-n}
        const double mod = 1.0 + m.h.beta * u;
        c += m.h.amplitude * rn * mod * chi;
        if (dc) {
            for (int i = 0; i < n; ++i) {
                const double dr_i = y[i] / r;
                const double du_i = (dir[i] - u * dr_i) / r;
                dc[i] += m.h.amplitude *
                         ((-n) * rn / r * dr_i * mod * chi + rn * m.h.beta * du_i * chi +
                          rn * mod * dchi * dr_i);
            }
        }
    }
}

constexpr int NMAX = 6;

struct PointOut {
    double g[NMAX][NMAX], ginv[NMAX][NMAX];
    double sqrt_det = 0.0;
    double b[NMAX];
    double dev = 0.0;  // max |g - id|
};

// LU inverse + determinant for small n (partial pivoting)
bool invert_small(int n, const double a_in[NMAX][NMAX], double inv[NMAX][NMAX], double& det) {
    double a[NMAX][NMAX];
    int piv[NMAX];
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a[i][j] = a_in[i][j];
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) inv[i][j] = (i == j) ? 1.0 : 0.0;
    det = 1.0;
    for (int col = 0; col < n; ++col) {
        int p = col;
        for (int i = col + 1; i < n; ++i)
            if (std::abs(a[i][col]) > std::abs(a[p][col])) p = i;
        if (a[p][col] == 0.0) return false;
        if (p != col) {
            for (int j = 0; j < n; ++j) {
                std::swap(a[p][j], a[col][j]);
                std::swap(inv[p][j], inv[col][j]);
            }
            det = -det;
        }
        det *= a[col][col];
        const double d = 1.0 / a[col][col];
        for (int j = 0; j < n; ++j) {
            a[col][j] *= d;
            inv[col][j] *= d;
        }
        for (int i = 0; i < n; ++i) {
            if (i == col) continue;
            const double f = a[i][col];
            if (f == 0.0) continue;
            for (int j = 0; j < n; ++j) {
                a[i][j] -= f * a[col][j];
                inv[i][j] -= f * inv[col][j];
            }
        }
        (void)piv;
    }
    return true;
}

// Exact pullback metric and Laplace-Beltrami coefficients at x from the
// local data of w (value, gradient, Hessian of the degree-0 extension at
// the unit sphere, i.e. unscaled).
void metric_point(const MetricModel& model, double rho, const double* tau, const double* x,
                  double w0, const double* wg, const double* wh, bool need_b, PointOut& out) {
    const int n = model.n;
    double r2 = 0.0;
    for (int i = 0; i < n; ++i) r2 += x[i] * x[i];
    const double r = std::sqrt(r2);

    double wgx[NMAX], whx[NMAX][NMAX];
    for (int i = 0; i < n; ++i) wgx[i] = wg[i] / r;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) whx[i][j] = wh[i * n + j] / r2;

    // differential of x -> tau + (1+w) x (the rho factors cancel in g_rho)
    double M[NMAX][NMAX];
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i) M[k][i] = (k == i ? 1.0 + w0 : 0.0) + x[k] * wgx[i];

    double y[NMAX];
    for (int k = 0; k < n; ++k) y[k] = rho * (tau[k] + (1.0 + w0) * x[k]);

    double c, dc[NMAX];
    conformal_factor(model, y, n, c, need_b ? dc : nullptr);

    // g = c M^T M
    double P[NMAX][NMAX];
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += M[k][i] * M[k][j];
            P[i][j] = P[j][i] = s;
        }
    out.dev = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            out.g[i][j] = c * P[i][j];
            out.dev = std::max(out.dev, std::abs(out.g[i][j] - (i == j ? 1.0 : 0.0)));
        }

    double det;
    if (!invert_small(n, out.g, out.ginv, det) || det <= 0.0)
        throw std::runtime_error("pullback_metric: singular parameterization Jacobian");
    out.sqrt_det = std::sqrt(det);

    if (!need_b) return;

    // dM[m][k][i] = d/dx_m M[k][i]; the gradient extension is homogeneous of
    // degree -1, so its derivative field has sphere values wh scaled by r^-2
    double dM[NMAX][NMAX][NMAX];
    for (int m = 0; m < n; ++m)
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                dM[m][k][i] = (k == i ? wgx[m] : 0.0) + (k == m ? wgx[i] : 0.0) +
                              x[k] * whx[i][m];

    // dg[m] = c (dM^T M + M^T dM) + (dc . dy_m) P, with dy_m/dx = rho M[., m]
    double dg[NMAX][NMAX][NMAX];
    for (int m = 0; m < n; ++m) {
        double dcy = 0.0;
        for (int q = 0; q < n; ++q) dcy += dc[q] * rho * M[q][m];
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                double s = 0.0;
                for (int k = 0; k < n; ++k)
                    s += dM[m][k][i] * M[k][j] + M[k][i] * dM[m][k][j];
                const double v = c * s + dcy * P[i][j];
                dg[m][i][j] = dg[m][j][i] = v;
            }
    }

    // b^j = sum_i [ -(g^{-1} dg[i] g^{-1})_{ij} + 0.5 g^{ij} tr(g^{-1} dg[i]) ]
    for (int j = 0; j < n; ++j) out.b[j] = 0.0;
    double t1[NMAX][NMAX];
    for (int i = 0; i < n; ++i) {
        // t1 = ginv * dg[i]
        double trace = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = 0; q < n; ++q) {
                double s = 0.0;
                for (int k = 0; k < n; ++k) s += out.ginv[p][k] * dg[i][k][q];
                t1[p][q] = s;
                if (p == q) trace += s;
            }
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int q = 0; q < n; ++q) s += t1[i][q] * out.ginv[q][j];
            out.b[j] += -s + 0.5 * out.ginv[i][j] * trace;
        }
    }
}

}  // namespace

void MetricModel::eval(const Eigen::VectorXd& y, Eigen::MatrixXd& g,
                       std::vector<Eigen::MatrixXd>* dg) const {
    double c, dc[NMAX];
    conformal_factor(*this, y.data(), n, c, dg ? dc : nullptr);
    g = c * Eigen::MatrixXd::Identity(n, n);
    if (dg) {
        dg->assign(n, Eigen::MatrixXd::Zero(n, n));
        for (int m = 0; m < n; ++m) (*dg)[m] = dc[m] * Eigen::MatrixXd::Identity(n, n);
    }
}

MetricModel MetricModel::rotated(const Eigen::MatrixXd& R) const {
    MetricModel m = *this;
    if (m.h.direction.size() == 0) {
        m.h.direction = Eigen::VectorXd::Zero(n);
        m.h.direction[0] = 1.0;
    }
    m.h.direction = R * m.h.direction;
    return m;
}

void Shape::check_embedding() const {
    if (w.sup_norm() >= 0.5)
        throw std::invalid_argument("Shape: ||w||_inf must stay below 1/2");
}

Eigen::VectorXd Shape::map(const Eigen::VectorXd& x) const {
    const double r = x.norm();
    const double wv = w.evaluate(x / r);
    return rho * (tau + (1.0 + wv) * x);
}

MetricAtPoint pullback_metric(const MetricModel& model, const Shape& shape,
                              const Eigen::VectorXd& x) {
    const int n = model.n;
    if (x.norm() < 1.0 - 1e-12) throw std::invalid_argument("pullback_metric: |x| >= 1 required");
    shape.check_embedding();
    const Eigen::VectorXd theta = x / x.norm();
    double w0;
    std::vector<double> wg(n), wh(n * n);
    shape.w.evaluate_jet(theta, &w0, wg.data(), wh.data());

    PointOut out;
    metric_point(model, shape.rho, shape.tau.data(), x.data(), w0, wg.data(), wh.data(), true,
                 out);
    MetricAtPoint res;
    res.g.resize(n, n);
    res.g_inv.resize(n, n);
    res.b.resize(n);
    for (int i = 0; i < n; ++i) {
        res.b[i] = out.b[i];
        for (int j = 0; j < n; ++j) {
            res.g(i, j) = out.g[i][j];
            res.g_inv(i, j) = out.ginv[i][j];
        }
    }
    res.sqrt_det = out.sqrt_det;
    res.a = res.g_inv;
    return res;
}

Eigen::VectorXd unit_normal(const MetricModel& model, const Shape& shape,
                            const Eigen::VectorXd& theta) {
    MetricAtPoint m = pullback_metric(model, shape, theta);
    Eigen::VectorXd v = m.g_inv * theta;
    const double norm2 = theta.dot(v);
    if (norm2 <= 0.0) throw std::runtime_error("unit_normal: degenerate tangent frame");
    return -v / std::sqrt(norm2);
}

MetricTables assemble_metric_tables(const MetricModel& model, const Shape& shape,
                                    std::shared_ptr<const SphereBasis> basis,
                                    std::shared_ptr<const RadialGrid> grid, Exec exec) {
    shape.check_embedding();
    const int n = model.n, Q = basis->num_nodes(), N = grid->count, S = basis->num_sym();
    MetricTables T;
    T.basis = basis;
    T.grid = grid;
    T.n = n;
    T.a.assign(S, Eigen::MatrixXd(Q, N));
    T.b.assign(n, Eigen::MatrixXd(Q, N));
    T.sqrt_det.resize(Q, N);
    T.normal.resize(Q, n);
    T.normal_delta.resize(Q, n);
    T.bdry_area.resize(Q);

    SphereJet wj = sphere_jet(*basis, shape.w.coeffs, true);

    std::vector<double> devs(N, 0.0);
    const bool par = (exec == Exec::Fast);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (par)
#endif
    for (int i = 0; i < N; ++i) {
        const double r = grid->r[i];
        double x[NMAX], wh[NMAX * NMAX];
        PointOut out;
        double dev = 0.0;
        for (int q = 0; q < Q; ++q) {
            for (int a = 0; a < n; ++a) x[a] = r * basis->nodes()(q, a);
            for (int a = 0; a < n; ++a)
                for (int b = a; b < n; ++b)
                    wh[a * n + b] = wh[b * n + a] = wj.hess[basis->sym(a, b)][q];
            double wg[NMAX];
            for (int a = 0; a < n; ++a) wg[a] = wj.grad(q, a);
            metric_point(model, shape.rho, shape.tau.data(), x, wj.val[q], wg, wh, true, out);
            dev = std::max(dev, out.dev);
            T.sqrt_det(q, i) = out.sqrt_det;
            for (int a = 0; a < n; ++a) T.b[a](q, i) = out.b[a];
            for (int a = 0; a < n; ++a)
                for (int b = a; b < n; ++b) T.a[basis->sym(a, b)](q, i) = out.ginv[a][b];

            if (i == 0) {
                // boundary data: inward unit normal and induced area factor.
                // The normal is assembled as -Theta + delta with the small
                // part delta kept free of O(1) cancellations.
                double ev[NMAX];  // (g^{-1} - id) Theta
                double qq = 0.0;
                for (int a = 0; a < n; ++a) {
                    double s = 0.0;
                    for (int b = 0; b < n; ++b)
                        s += (out.ginv[a][b] - (a == b ? 1.0 : 0.0)) * x[b];
                    ev[a] = s;
                    qq += x[a] * s;
                }
                const double mu = std::expm1(-0.5 * std::log1p(qq));  // 1/sqrt(1+q) - 1
                for (int a = 0; a < n; ++a) {
                    const double delta = -ev[a] * (1.0 + mu) - x[a] * mu;
                    T.normal_delta(q, a) = delta;
                    T.normal(q, a) = -x[a] + delta;
                }
                T.bdry_area[q] = out.sqrt_det * std::sqrt(1.0 + qq);
            }
        }
        devs[i] = dev;
    }
    T.max_deviation = *std::max_element(devs.begin(), devs.end());
    return T;
}

ExteriorField laplace_beltrami_apply(const MetricTables& tables, const ExteriorField& u,
                                     Exec exec, ApplyInfo* info) {
    if (u.basis != tables.basis || u.grid != tables.grid)
        throw std::invalid_argument("laplace_beltrami_apply: discretization mismatch");
    const int n = tables.n, Q = tables.basis->num_nodes(), N = tables.grid->count;

    FieldJet jet = field_jet(*tables.basis, *tables.grid, u.modes, true, exec);

    Eigen::MatrixXd values = Eigen::MatrixXd::Zero(Q, N);
    for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b) {
            const double mult = (a == b) ? 1.0 : 2.0;
            values.noalias() +=
                mult * tables.a[tables.basis->sym(a, b)].cwiseProduct(
                           jet.hess[tables.basis->sym(a, b)]);
        }
    for (int a = 0; a < n; ++a) values.noalias() += tables.b[a].cwiseProduct(jet.grad[a]);

    ExteriorField out(u.basis, u.grid, u.nu - 2.0);
    out.modes = analyze_layers(*tables.basis, values, exec);

    if (info) {
        // aliasing defect: energy of the pointwise product missed by the
        // band-limited projection
        Eigen::MatrixXd back = tables.basis->values() * out.modes.transpose();
        const auto& w = tables.basis->weights();
        const double num = (w.asDiagonal() * (values - back).cwiseAbs2()).sum();
        const double den = (w.asDiagonal() * values.cwiseAbs2()).sum();
        info->aliasing_defect = (den > 0.0) ? std::sqrt(num / den) : 0.0;
    }
    return out;
}

}  // namespace capfoil

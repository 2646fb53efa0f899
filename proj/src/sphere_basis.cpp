#include "capfoil/sphere_basis.hpp"

#include <cmath>

namespace capfoil {

namespace {

// C_k^lambda(u) by the three-term recurrence
double gegenbauer(int k, double lambda, double u) {
    if (k < 0) return 0.0;
    if (k == 0) return 1.0;
    double cm2 = 1.0, cm1 = 2.0 * lambda * u;
    if (k == 1) return cm1;
    double c = 0.0;
    for (int j = 2; j <= k; ++j) {
        c = (2.0 * u * (j + lambda - 1.0) * cm1 - (j + 2.0 * lambda - 2.0) * cm2) / j;
        cm2 = cm1;
        cm1 = c;
    }
    return c;
}

Eigen::VectorXd unit_or_default(const Eigen::VectorXd& axis, int n) {
    if (axis.size() == 0) {
        Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
        a[0] = 1.0;
        return a;
    }
    if (axis.size() != n) throw std::invalid_argument("SphereBasis: axis dimension mismatch");
    const double nn = axis.norm();
    if (nn < 1e-14) throw std::invalid_argument("SphereBasis: zero axis");
    return axis / nn;
}

}  // namespace

SphereBasis::SphereBasis(int n, int L, int quad_mult, const Eigen::VectorXd& axis)
    : n_(n), L_(L), axis_(unit_or_default(axis, n)) {
    if (n < 3) throw std::invalid_argument("SphereBasis: n >= 3 required");
    if (L < 0) throw std::invalid_argument("SphereBasis: L >= 0 required");
    if (quad_mult < 1) quad_mult = 1;
    if (n == 3)
        build_n3(quad_mult);
    else
        build_general(quad_mult);
}

int SphereBasis::find(int degree, int order) const {
    for (int j = 0; j < dim(); ++j)
        if (index_[j].degree == degree && index_[j].order == order) return j;
    throw std::invalid_argument("SphereBasis::find: no such mode");
}

void SphereBasis::build_n3(int quad_mult) {
    // Solid harmonics as polynomials: for each m, Cm/Sm(x,y) times the
    // normalized associated-Legendre lift W_{k,m}(z, r^2). Absolute scale is
    // fixed afterwards by quadrature.
    const Poly3 X = Poly3::variable(0), Y = Poly3::variable(1), Z = Poly3::variable(2);
    const Poly3 R2 = X * X + Y * Y + Z * Z;

    std::vector<Poly3> C(L_ + 1), S(L_ + 1);
    C[0] = Poly3::constant(1.0);
    S[0] = Poly3::constant(0.0);
    for (int m = 1; m <= L_; ++m) {
        C[m] = X * C[m - 1] - Y * S[m - 1];
        S[m] = X * S[m - 1] + Y * C[m - 1];
    }

    // W[m][k-m]
    std::vector<std::vector<Poly3>> W(L_ + 1);
    for (int m = 0; m <= L_; ++m) {
        W[m].resize(L_ - m + 1);
        W[m][0] = Poly3::constant(1.0);
        if (m + 1 <= L_) W[m][1] = std::sqrt(2.0 * m + 3.0) * Z;
        for (int k = m + 2; k <= L_; ++k) {
            const double a = std::sqrt((4.0 * k * k - 1.0) / (double(k) * k - double(m) * m));
            const double b =
                std::sqrt((double(k - 1) * (k - 1) - double(m) * m) / (4.0 * double(k - 1) * (k - 1) - 1.0));
            W[m][k - m] = a * (Z * W[m][k - m - 1] - b * (R2 * W[m][k - m - 2]));
        }
    }

    poly_.clear();
    index_.clear();
    for (int k = 0; k <= L_; ++k)
        for (int m = -k; m <= k; ++m) {
            index_.push_back({k, m});
            if (m < 0)
                poly_.push_back(S[-m] * W[-m][k + m]);
            else if (m == 0)
                poly_.push_back(W[0][k]);
            else
                poly_.push_back(C[m] * W[m][k - m]);
        }

    // product quadrature: Gauss-Legendre in cos(theta), uniform in phi,
    // exact for spherical polynomials of degree <= 2*quad_mult*L
    const int target = std::max(2, 2 * quad_mult * L_);
    const int nth = target / 2 + 1;
    const int nph = target + 2;
    Rule1d gl = gauss_legendre(nth);
    nodes_.resize(nth * nph, 3);
    weights_.resize(nth * nph);
    for (int i = 0; i < nth; ++i) {
        const double u = gl.nodes[i], s = std::sqrt(std::max(0.0, 1.0 - u * u));
        for (int j = 0; j < nph; ++j) {
            const double phi = 2.0 * M_PI * j / nph;
            const int id = i * nph + j;
            nodes_(id, 0) = s * std::cos(phi);
            nodes_(id, 1) = s * std::sin(phi);
            nodes_(id, 2) = u;
            weights_[id] = gl.weights[i] * (2.0 * M_PI / nph);
        }
    }

    // normalize to unit L^2 norm on the sphere
    for (std::size_t j = 0; j < poly_.size(); ++j) {
        double nrm2 = 0.0;
        for (int i = 0; i < num_nodes(); ++i) {
            const double v = poly_[j].eval(nodes_(i, 0), nodes_(i, 1), nodes_(i, 2));
            nrm2 += weights_[i] * v * v;
        }
        poly_[j] = (1.0 / std::sqrt(nrm2)) * poly_[j];
    }

    poly_grad_.resize(poly_.size());
    poly_hess_.resize(poly_.size());
    for (std::size_t j = 0; j < poly_.size(); ++j) {
        for (int a = 0; a < 3; ++a) poly_grad_[j][a] = poly_[j].derivative(a);
        for (int a = 0; a < 3; ++a)
            for (int b = a; b < 3; ++b) poly_hess_[j][sym(a, b)] = poly_grad_[j][a].derivative(b);
    }

    tabulate();
    proj_val_ = val_;
    kappa0_ = 1.0 / std::sqrt(sphere_area(3));
    kappa1_ = std::sqrt(3.0 / sphere_area(3));
}

void SphereBasis::build_general(int quad_mult) {
    const double area = sphere_area(n_);
    kappa0_ = 1.0 / std::sqrt(area);
    kappa1_ = std::sqrt(n_ / area);

    index_.push_back({0, 0});
    for (int m = 0; m < n_; ++m) index_.push_back({1, m});
    for (int k = 2; k <= L_; ++k) index_.push_back({k, 0});

    // ring quadrature in u = <Theta, axis>
    const int q = std::max(2, quad_mult * L_ + 1);
    Rule1d gg = gauss_gegenbauer(q, 0.5 * (n_ - 3));
    // fixed vector orthogonal to the axis for ring representatives
    int imin = 0;
    for (int i = 1; i < n_; ++i)
        if (std::abs(axis_[i]) < std::abs(axis_[imin])) imin = i;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n_);
    b[imin] = 1.0;
    b -= b.dot(axis_) * axis_;
    b.normalize();

    const double ring = sphere_area(n_ - 1);
    nodes_.resize(q, n_);
    weights_.resize(q);
    for (int i = 0; i < q; ++i) {
        const double u = gg.nodes[i], s = std::sqrt(std::max(0.0, 1.0 - u * u));
        nodes_.row(i) = (u * axis_ + s * b).transpose();
        weights_[i] = ring * gg.weights[i];
    }

    // zonal normalizations for degrees 2..L
    const double lambda = 0.5 * (n_ - 2);
    zonal_norm_.assign(std::max(0, L_ - 1), 1.0);
    for (int k = 2; k <= L_; ++k) {
        double nrm2 = 0.0;
        for (int i = 0; i < q; ++i) {
            const double v = gegenbauer(k, lambda, nodes_.row(i).dot(axis_));
            nrm2 += weights_[i] * v * v;
        }
        zonal_norm_[k - 2] = 1.0 / std::sqrt(nrm2);
    }

    tabulate();

    // ring-averaged values for projection: degree-1 averages to u * axis component
    proj_val_ = val_;
    for (int m = 0; m < n_; ++m) {
        const int j = 1 + m;
        for (int i = 0; i < q; ++i)
            proj_val_(i, j) = kappa1_ * nodes_.row(i).dot(axis_) * axis_[m];
    }
}

void SphereBasis::zonal_eval(int k, double u, double* g, double* dg, double* ddg) const {
    const double lambda = 0.5 * (n_ - 2);
    const double norm = zonal_norm_[k - 2];
    if (g) *g = norm * gegenbauer(k, lambda, u);
    if (dg) *dg = norm * 2.0 * lambda * gegenbauer(k - 1, lambda + 1.0, u);
    if (ddg) *ddg = norm * 4.0 * lambda * (lambda + 1.0) * gegenbauer(k - 2, lambda + 2.0, u);
}

void SphereBasis::eval_mode(int j, const double* theta, double* val, double* grad, double* hess) const {
    if (n_ == 3) {
        const double x = theta[0], y = theta[1], z = theta[2];
        const int k = index_[j].degree;
        const double P = poly_[j].eval(x, y, z);
        if (val) *val = P;
        double Pi[3];
        if (grad || hess)
            for (int a = 0; a < 3; ++a) Pi[a] = poly_grad_[j][a].eval(x, y, z);
        if (grad)
            for (int a = 0; a < 3; ++a) grad[a] = Pi[a] - k * P * theta[a];
        if (hess) {
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) {
                    const double Pab = poly_hess_[j][sym(a, b)].eval(x, y, z);
                    hess[a * 3 + b] = Pab - k * (Pi[a] * theta[b] + Pi[b] * theta[a]) -
                                      k * P * (a == b ? 1.0 : 0.0) +
                                      k * (k + 2.0) * P * theta[a] * theta[b];
                }
        }
        return;
    }

    // general n: constants, degree-1 about e_m, zonal about axis_
    const int k = index_[j].degree;
    const Eigen::Map<const Eigen::VectorXd> th(theta, n_);
    if (k == 0) {
        if (val) *val = kappa0_;
        if (grad) std::fill(grad, grad + n_, 0.0);
        if (hess) std::fill(hess, hess + n_ * n_, 0.0);
        return;
    }
    Eigen::VectorXd a;
    double g = 0, dg = 0, ddg = 0;
    if (k == 1) {
        a = Eigen::VectorXd::Zero(n_);
        a[index_[j].order] = 1.0;
        g = kappa1_ * th.dot(a);
        dg = kappa1_;
        ddg = 0.0;
    } else {
        a = axis_;
        zonal_eval(k, th.dot(a), &g, &dg, &ddg);
    }
    const double u = th.dot(a);
    if (val) *val = g;
    if (grad)
        for (int i = 0; i < n_; ++i) grad[i] = dg * (a[i] - u * theta[i]);
    if (hess)
        for (int i = 0; i < n_; ++i)
            for (int jj = 0; jj < n_; ++jj) {
                hess[i * n_ + jj] = ddg * (a[i] - u * theta[i]) * (a[jj] - u * theta[jj]) +
                                    dg * (-a[i] * theta[jj] - a[jj] * theta[i] -
                                          (i == jj ? u : 0.0) + 3.0 * u * theta[i] * theta[jj]);
            }
}

void SphereBasis::tabulate() {
    const int nn = num_nodes(), d = dim();
    val_.resize(nn, d);
    grad_.assign(n_, Eigen::MatrixXd(nn, d));
    hess_.assign(num_sym(), Eigen::MatrixXd(nn, d));
    std::vector<double> g(n_), h(n_ * n_);
    for (int i = 0; i < nn; ++i) {
        Eigen::VectorXd th = nodes_.row(i).transpose();
        for (int j = 0; j < d; ++j) {
            double v;
            eval_mode(j, th.data(), &v, g.data(), h.data());
            val_(i, j) = v;
            for (int a = 0; a < n_; ++a) grad_[a](i, j) = g[a];
            for (int a = 0; a < n_; ++a)
                for (int b = a; b < n_; ++b) hess_[sym(a, b)](i, j) = h[a * n_ + b];
        }
    }
}

Eigen::VectorXd SphereBasis::project(const Eigen::VectorXd& samples) const {
    if (samples.size() != num_nodes())
        throw std::invalid_argument("SphereBasis::project: sample count != node count");
    return proj_val_.transpose() * weights_.cwiseProduct(samples).matrix();
}

Eigen::VectorXd SphereBasis::synthesize(const Eigen::VectorXd& coeffs) const {
    if (coeffs.size() != dim())
        throw std::invalid_argument("SphereBasis::synthesize: coefficient count mismatch");
    return val_ * coeffs;
}

Eigen::VectorXd SphereBasis::degree1_direction(int order) const {
    if (n_ != 3) {
        Eigen::VectorXd d = Eigen::VectorXd::Zero(n_);
        d[order] = 1.0;
        return d;
    }
    const int j = find(1, order);
    Eigen::VectorXd d(3);
    const double area = sphere_area(3);
    for (int i = 0; i < 3; ++i) {
        double s = 0.0;
        for (int q = 0; q < num_nodes(); ++q) s += weights_[q] * val_(q, j) * nodes_(q, i);
        d[i] = s * (3.0 / area) / kappa1_;
    }
    return d;
}

namespace {
void check_unit(const Eigen::VectorXd& theta, int n) {
    if (theta.size() != n) throw std::invalid_argument("evaluate: point dimension mismatch");
    if (std::abs(theta.norm() - 1.0) > 1e-12)
        throw std::invalid_argument("evaluate: point not on the unit sphere");
}
}  // namespace

double SphereField::evaluate(const Eigen::VectorXd& theta) const {
    check_unit(theta, basis->n());
    double s = 0.0;
    for (int j = 0; j < basis->dim(); ++j) {
        if (coeffs[j] == 0.0) continue;
        double v;
        basis->eval_mode(j, theta.data(), &v, nullptr, nullptr);
        s += coeffs[j] * v;
    }
    return s;
}

void SphereField::evaluate_jet(const Eigen::VectorXd& theta, double* val, double* grad,
                               double* hess) const {
    check_unit(theta, basis->n());
    const int n = basis->n();
    if (val) *val = 0.0;
    if (grad) std::fill(grad, grad + n, 0.0);
    if (hess) std::fill(hess, hess + n * n, 0.0);
    std::vector<double> g(n), h(n * n);
    double v;
    for (int j = 0; j < basis->dim(); ++j) {
        if (coeffs[j] == 0.0) continue;
        basis->eval_mode(j, theta.data(), &v, grad ? g.data() : nullptr, hess ? h.data() : nullptr);
        if (val) *val += coeffs[j] * v;
        if (grad)
            for (int a = 0; a < n; ++a) grad[a] += coeffs[j] * g[a];
        if (hess)
            for (int a = 0; a < n * n; ++a) hess[a] += coeffs[j] * h[a];
    }
}

double SphereField::sup_norm() const {
    return basis->synthesize(coeffs).cwiseAbs().maxCoeff();
}

SphereField constant_field(std::shared_ptr<const SphereBasis> basis, double value) {
    SphereField f(basis);
    f.coeffs[0] = value * std::sqrt(sphere_area(basis->n()));
    return f;
}

SphereField project_samples(std::shared_ptr<const SphereBasis> basis, const Eigen::VectorXd& samples) {
    return {basis, basis->project(samples)};
}

SphereField laplace_sphere(const SphereField& f) {
    SphereField r = f;
    for (int j = 0; j < f.basis->dim(); ++j) r.coeffs[j] *= -f.basis->eigenvalue(j);
    return r;
}

std::pair<SphereField, Eigen::VectorXd> pi_v1(const SphereField& f) {
    const auto& b = *f.basis;
    SphereField deg1(f.basis);
    Eigen::VectorXd tau = Eigen::VectorXd::Zero(b.n());
    for (int j = 0; j < b.dim(); ++j) {
        if (b.degree_of(j) != 1) continue;
        deg1.coeffs[j] = f.coeffs[j];
        tau += b.degree1_scale() * f.coeffs[j] * b.degree1_direction(b.index(j).order);
    }
    return {deg1, tau};
}

SphereField pi_perp(const SphereField& f) {
    SphereField r = f;
    for (int j = 0; j < f.basis->dim(); ++j)
        if (f.basis->degree_of(j) == 1) r.coeffs[j] = 0.0;
    return r;
}

SphereField linear_field(std::shared_ptr<const SphereBasis> basis, const Eigen::VectorXd& tau) {
    const auto& b = *basis;
    if (tau.size() != b.n()) throw std::invalid_argument("linear_field: vector dimension mismatch");
    SphereField f(basis);
    for (int j = 0; j < b.dim(); ++j) {
        if (b.degree_of(j) != 1) continue;
        f.coeffs[j] = tau.dot(b.degree1_direction(b.index(j).order)) / b.degree1_scale();
    }
    return f;
}

double inner(const SphereField& a, const SphereField& b) {
    if (a.basis != b.basis) throw std::invalid_argument("inner: basis mismatch");
    return a.coeffs.dot(b.coeffs);
}

double mean_value(const SphereField& f) {
    return f.coeffs[0] / std::sqrt(sphere_area(f.basis->n()));
}

}  // namespace capfoil

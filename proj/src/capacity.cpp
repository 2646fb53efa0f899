#include "capfoil/capacity.hpp"

#include <cmath>

namespace capfoil {

StarDomain StarDomain::ball(std::shared_ptr<const SphereBasis> basis, double R) {
    if (R <= 0.0) throw std::invalid_argument("StarDomain::ball: R > 0 required");
    return {constant_field(std::move(basis), R)};
}

StarDomain StarDomain::ellipsoid(std::shared_ptr<const SphereBasis> basis,
                                 const Eigen::Vector3d& semi_axes, const Eigen::Vector3d& center) {
    if (basis->n() != 3) throw std::invalid_argument("StarDomain::ellipsoid: n = 3 only");
    const int Q = basis->num_nodes();
    Eigen::VectorXd vals(Q);
    for (int q = 0; q < Q; ++q) {
        const Eigen::Vector3d th = basis->nodes().row(q).transpose();
        // |c + R th| on the ellipsoid: A R^2 + 2 B R + C = 1 with the
        // quadratic form of the axes
        double A = 0.0, Bq = 0.0, C = -1.0;
        for (int i = 0; i < 3; ++i) {
            const double a2 = semi_axes[i] * semi_axes[i];
            A += th[i] * th[i] / a2;
            Bq += center[i] * th[i] / a2;
            C += center[i] * center[i] / a2;
        }
        const double disc = Bq * Bq - A * C;
        if (disc <= 0.0) throw std::invalid_argument("StarDomain::ellipsoid: not star-shaped");
        vals[q] = (-Bq + std::sqrt(disc)) / A;
    }
    return {project_samples(std::move(basis), vals)};
}

StarDomain StarDomain::translated_ball(std::shared_ptr<const SphereBasis> basis, double R,
                                       const Eigen::VectorXd& center) {
    const int Q = basis->num_nodes();
    if (center.norm() >= R)
        throw std::invalid_argument("StarDomain::translated_ball: center outside the ball");
    Eigen::VectorXd vals(Q);
    for (int q = 0; q < Q; ++q) {
        const Eigen::VectorXd th = basis->nodes().row(q).transpose();
        const double b = center.dot(th);
        vals[q] = b + std::sqrt(R * R - (center.squaredNorm() - b * b));
    }
    return {project_samples(std::move(basis), vals)};
}

namespace {

// composite Simpson on a uniform grid (3/8 block when the interval count is odd)
double simpson_uniform(const Eigen::VectorXd& f, double h) {
    const int N = static_cast<int>(f.size());
    if (N < 4) throw std::invalid_argument("simpson_uniform: too few samples");
    double s = 0.0;
    int start = 0;
    if ((N - 1) % 2 == 1) {
        s += 3.0 * h / 8.0 * (f[0] + 3.0 * f[1] + 3.0 * f[2] + f[3]);
        start = 3;
    }
    for (int i = start; i + 2 < N; i += 2) s += h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
    return s;
}

}  // namespace

struct CapacityContext::Solved {
    double scale = 0.0;
    Shape shape;
    MetricTables tables;
    PotentialBundle bundle;
};

CapacityContext::CapacityContext(std::shared_ptr<const SphereBasis> basis,
                                 std::shared_ptr<const RadialGrid> grid, CorrectionOptions opts)
    : basis_(std::move(basis)), grid_(std::move(grid)), opts_(opts) {
    opts_.use_gmres = true;
}

CapacityContext::Solved CapacityContext::solve(const StarDomain& K) const {
    if (K.radius.basis != basis_)
        throw std::invalid_argument("CapacityContext: domain uses a different basis");
    const Eigen::VectorXd Rvals = basis_->synthesize(K.radius.coeffs);
    const double rmin = Rvals.minCoeff(), rmax = Rvals.maxCoeff();
    if (rmin <= 0.0) throw std::invalid_argument("capacity: radial graph must stay positive");

    Solved S;
    // midrange scale keeps ||w||_inf = (rmax-rmin)/(rmax+rmin) under the
    // embedding bound for aspect ratios up to 3
    S.scale = 0.5 * (rmin + rmax);
    SphereField w = project_samples(basis_, Rvals / S.scale);
    w.coeffs[0] -= std::sqrt(sphere_area(basis_->n()));
    S.shape = Shape{S.scale, Eigen::VectorXd::Zero(basis_->n()), w};

    MetricModel flat{basis_->n(), 0.0, {}};
    CapacitorContext ctx(flat, basis_, grid_, opts_);
    S.bundle = ctx.solve_potential(S.shape);
    S.tables = assemble_metric_tables(flat, S.shape, basis_, grid_);
    return S;
}

CapacityReport CapacityContext::capacity(const StarDomain& K) const {
    const int n = basis_->n();
    const int Q = basis_->num_nodes(), N = grid_->count;
    Solved S = solve(K);
    const double s = S.scale;
    const double norm_const = 1.0 / (n * (n - 2.0) * ball_volume(n));

    CapacityReport rep;
    rep.solver_residual = S.bundle.harmonic_residual;
    rep.converged = S.bundle.converged;

    // flux route: physical trace integrated over the boundary area element
    {
        Eigen::VectorXd trace = basis_->synthesize(S.bundle.neumann_physical.coeffs);
        double flux = 0.0;
        for (int q = 0; q < Q; ++q)
            flux += basis_->weights()[q] * trace[q] * S.tables.bdry_area[q];
        rep.cap_flux = norm_const * flux * std::pow(s, n - 1.0);
    }

    // energy route: pointwise g^{ij} d_i u d_j u sqrt(det g) s^{n-2} over the
    // grid, closed by the flux through r = r_max
    {
        FieldJet jet = field_jet(*basis_, *grid_, S.bundle.total.modes, false);
        Eigen::MatrixXd density = Eigen::MatrixXd::Zero(Q, N);
        for (int a = 0; a < n; ++a)
            for (int b = a; b < n; ++b) {
                const double mult = (a == b) ? 1.0 : 2.0;
                density.noalias() += mult * S.tables.a[basis_->sym(a, b)]
                                                .cwiseProduct(jet.grad[a])
                                                .cwiseProduct(jet.grad[b]);
            }
        density = density.cwiseProduct(S.tables.sqrt_det);

        Eigen::VectorXd shell(N);
        for (int i = 0; i < N; ++i) {
            double acc = 0.0;
            for (int q = 0; q < Q; ++q) acc += basis_->weights()[q] * density(q, i);
            shell[i] = acc * std::pow(grid_->r[i], double(n));  // dr = r dt
        }
        double energy = simpson_uniform(shell, grid_->h);

        // tail: int_{r>R} |grad U|^2 = boundary term U dU/d(outward conormal)
        const int i = N - 1;
        const double R = grid_->r_max;
        Eigen::VectorXd uvals = basis_->synthesize(S.bundle.total.modes.row(i).transpose());
        double tail = 0.0;
        for (int q = 0; q < Q; ++q) {
            double du = 0.0, nrm2 = 0.0;
            for (int a = 0; a < n; ++a) {
                double ga = 0.0;
                for (int b = 0; b < n; ++b) {
                    const double gab = S.tables.a[basis_->sym(a, b)](q, i);
                    ga += gab * basis_->nodes()(q, b);
                    nrm2 += gab * basis_->nodes()(q, a) * basis_->nodes()(q, b);
                }
                du += ga * jet.grad[a](q, i);
            }
            // outward unit conormal (g^{-1} Theta)/sqrt(Theta g^{-1} Theta),
            // area element sqrt(det g * Theta g^{-1} Theta) R^{n-1}
            tail += basis_->weights()[q] * uvals[q] * du / std::sqrt(nrm2) *
                    S.tables.sqrt_det(q, i) * std::sqrt(nrm2) * std::pow(R, n - 1.0);
        }
        rep.cap_energy = norm_const * std::pow(s, n - 2.0) * (energy + tail);
    }
    rep.cap = rep.cap_flux;

    // geometry
    {
        const Eigen::VectorXd Rvals = basis_->synthesize(K.radius.coeffs);
        SphereJet rj = sphere_jet(*basis_, K.radius.coeffs, false);
        double vol = 0.0, area = 0.0;
        for (int q = 0; q < Q; ++q) {
            vol += basis_->weights()[q] * std::pow(Rvals[q], double(n)) / n;
            const double grad2 = rj.grad.row(q).squaredNorm();
            area += basis_->weights()[q] * std::pow(Rvals[q], n - 2.0) *
                    std::sqrt(Rvals[q] * Rvals[q] + grad2);
        }
        rep.volume = vol;
        rep.area = area;
    }

    rep.E0 = rep.cap / std::pow(rep.volume, (n - 2.0) / n);
    rep.E1 = rep.cap / std::pow(rep.area, (n - 2.0) / (n - 1.0));
    rep.lambda = (n - 2.0) * std::sqrt(ball_volume(n) * rep.cap / rep.volume);
    return rep;
}

SphereField CapacityContext::mean_curvature(const StarDomain& K) const {
    const int n = basis_->n(), Q = basis_->num_nodes();
    const Eigen::VectorXd Rvals = basis_->synthesize(K.radius.coeffs);
    SphereJet rj = sphere_jet(*basis_, K.radius.coeffs, false);

    // outward Euclidean unit normal of the graph, extended degree-0
    Eigen::MatrixXd Nvals(Q, n);
    for (int q = 0; q < Q; ++q) {
        Eigen::VectorXd nu = basis_->nodes().row(q).transpose();
        nu -= rj.grad.row(q).transpose() / Rvals[q];
        Nvals.row(q) = nu.transpose() / nu.norm();
    }
    Eigen::VectorXd divergence = Eigen::VectorXd::Zero(Q);
    for (int a = 0; a < n; ++a)
        divergence += basis_->grad(a) * basis_->project(Nvals.col(a));
    // H with the sign convention d|Sigma|/dt = int <X,eta> H, eta inward
    Eigen::VectorXd H = -divergence.cwiseQuotient(Rvals);
    return project_samples(basis_, H);
}

double CapacityContext::first_variation_E0(const StarDomain& K,
                                           const SphereField& normal_speed) const {
    const int n = basis_->n(), Q = basis_->num_nodes();
    Solved S = solve(K);
    CapacityReport rep = capacity(K);
    const double lam2 = rep.lambda * rep.lambda;

    Eigen::VectorXd v = basis_->synthesize(normal_speed.coeffs);
    Eigen::VectorXd trace = basis_->synthesize(S.bundle.neumann_physical.coeffs);
    double i1 = 0.0, i2 = 0.0;
    const double area_fac = std::pow(S.scale, n - 1.0);
    for (int q = 0; q < Q; ++q) {
        const double da = basis_->weights()[q] * S.tables.bdry_area[q] * area_fac;
        i1 += da * v[q];
        i2 += da * v[q] * trace[q] * trace[q];
    }
    const double norm_const = 1.0 / (n * (n - 2.0) * ball_volume(n));
    return norm_const / std::pow(rep.volume, (n - 2.0) / n) * (lam2 * i1 - i2);
}

double CapacityContext::first_variation_E1(const StarDomain& K,
                                           const SphereField& normal_speed) const {
    const int n = basis_->n(), Q = basis_->num_nodes();
    Solved S = solve(K);
    CapacityReport rep = capacity(K);
    SphereField Hfield = mean_curvature(K);

    Eigen::VectorXd v = basis_->synthesize(normal_speed.coeffs);
    Eigen::VectorXd trace = basis_->synthesize(S.bundle.neumann_physical.coeffs);
    Eigen::VectorXd H = basis_->synthesize(Hfield.coeffs);
    double iH = 0.0, i2 = 0.0;
    const double area_fac = std::pow(S.scale, n - 1.0);
    for (int q = 0; q < Q; ++q) {
        const double da = basis_->weights()[q] * S.tables.bdry_area[q] * area_fac;
        iH += da * v[q] * H[q];
        i2 += da * v[q] * trace[q] * trace[q];
    }
    const double norm_const = 1.0 / (n * (n - 2.0) * ball_volume(n));
    const double bracket = (n - 2.0) / (n - 1.0) * rep.cap / rep.area * iH + norm_const * i2;
    return -bracket / std::pow(rep.area, (n - 2.0) / (n - 1.0));
}

}  // namespace capfoil

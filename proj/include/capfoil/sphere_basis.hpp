#pragma once

#include <Eigen/Dense>
#include <memory>
#include <stdexcept>
#include <vector>

#include "capfoil/poly3.hpp"
#include "capfoil/quadrature.hpp"

namespace capfoil {

struct HarmonicIndex {
    int degree = 0;  // k >= 0
    int order = 0;   // dimension-dependent range, see SphereBasis docs
};

/// Laplace-Beltrami eigenvalue -k(k+n-2) acts as multiplication by this on degree k.
inline double sphere_eigenvalue(int n, int k) { return double(k) * (k + n - 2); }

// Real spherical harmonics on S^{n-1}, orthonormal in L^2, together with a
// quadrature grid and tabulated Cartesian derivatives of the degree-zero
// homogeneous extension Y(x/|x|) at the nodes.
//
// n == 3: the full basis through degree L. Mode ordering is (degree, order)
// lexicographic with order m = -k..k (m < 0 are the sin-type harmonics).
//
// n >= 4: degree 0, the full degree-1 block (order m = 0..n-1 meaning the
// coordinate direction e_m), and zonal harmonics of degree 2..L about a fixed
// axis (order 0). Quadrature nodes are ring representatives; project() is
// exact for fields that are axisymmetric about the axis (plus any
// axis-aligned degree-1 content). Off-axis degree-1 coefficients are fully
// supported in coefficient space but are not recoverable from ring samples.
class SphereBasis {
public:
    SphereBasis(int n, int L, int quad_mult = 2, const Eigen::VectorXd& axis = Eigen::VectorXd());

    int n() const { return n_; }
    int L() const { return L_; }
    int dim() const { return static_cast<int>(index_.size()); }
    int num_nodes() const { return static_cast<int>(weights_.size()); }

    const Eigen::MatrixXd& nodes() const { return nodes_; }      // num_nodes x n, unit vectors
    const Eigen::VectorXd& weights() const { return weights_; }  // positive, sum = |S^{n-1}|
    const Eigen::VectorXd& axis() const { return axis_; }

    HarmonicIndex index(int j) const { return index_[j]; }
    int degree_of(int j) const { return index_[j].degree; }
    int find(int degree, int order) const;
    double eigenvalue(int j) const { return sphere_eigenvalue(n_, index_[j].degree); }

    // Node tables for Y and the Cartesian derivatives of its degree-0 extension.
    const Eigen::MatrixXd& values() const { return val_; }                     // nodes x dim
    const Eigen::MatrixXd& grad(int i) const { return grad_[i]; }              // nodes x dim
    const Eigen::MatrixXd& hess(int i, int j) const { return hess_[sym(i, j)]; }
    // Table used for projection; differs from values() only for n >= 4,
    // where it holds ring averages.
    const Eigen::MatrixXd& proj_values() const { return proj_val_; }

    // Value, Cartesian gradient and Hessian (degree-0 extension, at r=1) of
    // mode j at an arbitrary unit vector. grad has n entries, hess n*n
    // (row-major); either may be null.
    void eval_mode(int j, const double* theta, double* val, double* grad, double* hess) const;

    Eigen::VectorXd project(const Eigen::VectorXd& samples) const;
    Eigen::VectorXd synthesize(const Eigen::VectorXd& coeffs) const;

    // direction vector d_m with Y_{1,m} = kappa1 * <x, d_m>
    Eigen::VectorXd degree1_direction(int order) const;
    double degree1_scale() const { return kappa1_; }

    int sym(int i, int j) const { return (i <= j) ? i * n_ - i * (i - 1) / 2 + (j - i)
                                                  : sym(j, i); }
    int num_sym() const { return n_ * (n_ + 1) / 2; }

private:
    void build_n3(int quad_mult);
    void build_general(int quad_mult);
    void tabulate();

    int n_, L_;
    Eigen::VectorXd axis_;
    std::vector<HarmonicIndex> index_;
    Eigen::MatrixXd nodes_;
    Eigen::VectorXd weights_;
    Eigen::MatrixXd val_, proj_val_;
    std::vector<Eigen::MatrixXd> grad_, hess_;

    // n == 3 machinery: solid harmonic polynomials and their partials
    std::vector<Poly3> poly_;
    std::vector<std::array<Poly3, 3>> poly_grad_;
    std::vector<std::array<Poly3, 6>> poly_hess_;

    // n >= 4 zonal machinery
    double kappa0_ = 0.0, kappa1_ = 0.0;
    std::vector<double> zonal_norm_;  // per degree 2..L
    void zonal_eval(int k, double u, double* g, double* dg, double* ddg) const;
};

// Scalar function on the sphere stored as coefficients in a shared basis.
struct SphereField {
    std::shared_ptr<const SphereBasis> basis;
    Eigen::VectorXd coeffs;

    SphereField() = default;
    explicit SphereField(std::shared_ptr<const SphereBasis> b)
        : basis(std::move(b)), coeffs(Eigen::VectorXd::Zero(basis->dim())) {}
    SphereField(std::shared_ptr<const SphereBasis> b, Eigen::VectorXd c)
        : basis(std::move(b)), coeffs(std::move(c)) {
        if (coeffs.size() != basis->dim())
            throw std::invalid_argument("SphereField: coefficient count mismatch");
    }

    double evaluate(const Eigen::VectorXd& theta) const;
    // value, sphere gradient (tangential, n entries) and extension Hessian at theta
    void evaluate_jet(const Eigen::VectorXd& theta, double* val, double* grad, double* hess) const;

    double l2_norm() const { return coeffs.norm(); }
    double sup_norm() const;  // max over quadrature nodes

    SphereField& operator+=(const SphereField& o) { coeffs += o.coeffs; return *this; }
    SphereField& operator-=(const SphereField& o) { coeffs -= o.coeffs; return *this; }
    SphereField& operator*=(double s) { coeffs *= s; return *this; }
    friend SphereField operator+(SphereField a, const SphereField& b) { return a += b; }
    friend SphereField operator-(SphereField a, const SphereField& b) { return a -= b; }
    friend SphereField operator*(double s, SphereField f) { return f *= s; }
};

/// constant field with the given value everywhere
SphereField constant_field(std::shared_ptr<const SphereBasis> basis, double value);

/// projection of node samples (exact for band-limited input of degree <= L)
SphereField project_samples(std::shared_ptr<const SphereBasis> basis, const Eigen::VectorXd& samples);

/// Laplace-Beltrami: multiplies degree-k coefficients by -k(k+n-2)
SphereField laplace_sphere(const SphereField& f);

/// degree-1 component and its identification with a vector (x_i -> e_i)
std::pair<SphereField, Eigen::VectorXd> pi_v1(const SphereField& f);
/// complement: f with the degree-1 block removed
SphereField pi_perp(const SphereField& f);
/// field <x, tau> restricted to the sphere
SphereField linear_field(std::shared_ptr<const SphereBasis> basis, const Eigen::VectorXd& tau);

/// quadrature inner product of band-limited fields (= coefficient dot product)
double inner(const SphereField& a, const SphereField& b);

/// mean value over the sphere
double mean_value(const SphereField& f);

}  // namespace capfoil

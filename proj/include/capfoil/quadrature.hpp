#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace capfoil {

struct Rule1d {
    Eigen::VectorXd nodes;    // ascending in (-1, 1)
    Eigen::VectorXd weights;  // positive
};

// Gauss rule for the weight (1-x^2)^alpha on [-1,1] via Golub-Welsch.
// alpha = 0 is Gauss-Legendre; alpha = (n-3)/2 integrates zonal functions
// on S^{n-1} after multiplying by |S^{n-2}|.
inline Rule1d gauss_gegenbauer(int npts, double alpha) {
    if (npts < 1) throw std::invalid_argument("gauss_gegenbauer: npts < 1");
    const double ab = 2.0 * alpha;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(npts, npts);
    for (int k = 1; k < npts; ++k) {
        // Monic Jacobi (alpha,alpha) recurrence: a_k = 0 by symmetry.
        const double num = 4.0 * k * (k + alpha) * (k + alpha) * (k + ab);
        const double den = (2 * k + ab) * (2 * k + ab) * (2 * k + ab + 1) * (2 * k + ab - 1);
        const double bk = num / den;
        J(k, k - 1) = J(k - 1, k) = std::sqrt(bk);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    if (es.info() != Eigen::Success) throw std::runtime_error("gauss_gegenbauer: eigensolve failed");
    // mu0 = int_{-1}^{1} (1-x^2)^alpha dx = 2^(2a+1) B(a+1,a+1)
    const double mu0 = std::exp((ab + 1.0) * std::log(2.0) + 2.0 * std::lgamma(alpha + 1.0) -
                                std::lgamma(ab + 2.0));
    Rule1d rule;
    rule.nodes = es.eigenvalues();
    rule.weights.resize(npts);
    for (int i = 0; i < npts; ++i) {
        const double v = es.eigenvectors()(0, i);
        rule.weights[i] = mu0 * v * v;
    }
    return rule;
}

inline Rule1d gauss_legendre(int npts) { return gauss_gegenbauer(npts, 0.0); }

// Area of S^{n-1} and volume of the unit n-ball, in closed form.
inline double sphere_area(int n) {
    return 2.0 * std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n);
}
inline double ball_volume(int n) {
    return std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

}  // namespace capfoil

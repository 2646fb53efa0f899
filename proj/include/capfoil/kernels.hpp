#pragma once

#include <Eigen/Dense>
#include <vector>

#include "capfoil/exterior.hpp"
#include "capfoil/sphere_basis.hpp"

namespace capfoil {

// Execution mode for the hot kernels. Fast uses matrix products in layer
// blocks (OpenMP across blocks when available); Serial is the plain-loop
// reference kept for testing and benchmarking.
enum class Exec { Serial, Fast };

Exec default_exec();
void set_default_exec(Exec e);

// Pointwise jet of a mode-represented exterior field on the
// (quadrature node) x (radial layer) grid.
struct FieldJet {
    int nodes = 0, layers = 0, n = 0;
    Eigen::MatrixXd val;                // nodes x layers
    std::vector<Eigen::MatrixXd> grad;  // n entries, nodes x layers
    std::vector<Eigen::MatrixXd> hess;  // n(n+1)/2 entries (empty unless requested)
};

FieldJet field_jet(const SphereBasis& basis, const RadialGrid& grid, const Eigen::MatrixXd& modes,
                   bool with_hess, Exec exec = default_exec());

// Per-layer projection of pointwise values to harmonic coefficients.
// Returns layers x dim.
Eigen::MatrixXd analyze_layers(const SphereBasis& basis, const Eigen::MatrixXd& values,
                               Exec exec = default_exec());

// Jet of a sphere field at the quadrature nodes (single layer, r = 1).
struct SphereJet {
    Eigen::VectorXd val;                 // nodes
    Eigen::MatrixXd grad;                // nodes x n
    std::vector<Eigen::VectorXd> hess;   // n(n+1)/2 entries
};
SphereJet sphere_jet(const SphereBasis& basis, const Eigen::VectorXd& coeffs, bool with_hess);

}  // namespace capfoil

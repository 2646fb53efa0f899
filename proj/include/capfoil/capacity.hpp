#pragma once

#include "capfoil/capacitor.hpp"

namespace capfoil {

// Compact star-shaped set K = { r <= R(Theta) } given by a band-limited
// radial graph.
struct StarDomain {
    SphereField radius;

    static StarDomain ball(std::shared_ptr<const SphereBasis> basis, double R);
    /// n = 3 ellipsoid with the given semi-axes, centered at `center`
    static StarDomain ellipsoid(std::shared_ptr<const SphereBasis> basis,
                                const Eigen::Vector3d& semi_axes,
                                const Eigen::Vector3d& center = Eigen::Vector3d::Zero());
    static StarDomain translated_ball(std::shared_ptr<const SphereBasis> basis, double R,
                                      const Eigen::VectorXd& center);

    StarDomain scaled(double c) const {
        StarDomain K = *this;
        K.radius.coeffs *= c;
        return K;
    }
};

struct CapacityReport {
    double cap = 0.0;          // headline value (flux route)
    double cap_energy = 0.0;   // Dirichlet-energy route
    double cap_flux = 0.0;     // boundary-flux route
    double volume = 0.0;       // |K|
    double area = 0.0;         // |boundary|
    double E0 = 0.0, E1 = 0.0;
    double lambda = 0.0;  // (n-2) sqrt(omega_n cap / |K|)
    double solver_residual = 0.0;
    bool converged = false;
};

// Euclidean capacity through the pullback-to-unit-ball reformulation; the
// correction solve runs the Krylov-accelerated path since capacity domains
// sit far outside the perturbative regime of the critical solver.
class CapacityContext {
public:
    CapacityContext(std::shared_ptr<const SphereBasis> basis,
                    std::shared_ptr<const RadialGrid> grid, CorrectionOptions opts = {});

    std::shared_ptr<const SphereBasis> basis() const { return basis_; }

    CapacityReport capacity(const StarDomain& K) const;

    // First variations of the normalized energies under a flow with normal
    // speed <X, eta> (eta the inward unit normal), evaluated by the
    // boundary-integral formulas.
    double first_variation_E0(const StarDomain& K, const SphereField& normal_speed) const;
    double first_variation_E1(const StarDomain& K, const SphereField& normal_speed) const;

    /// mean curvature H of the boundary graph with the convention
    /// d|Sigma|/dt = int <X, eta> H (negative for spheres)
    SphereField mean_curvature(const StarDomain& K) const;

private:
    struct Solved;
    Solved solve(const StarDomain& K) const;

    std::shared_ptr<const SphereBasis> basis_;
    std::shared_ptr<const RadialGrid> grid_;
    CorrectionOptions opts_;
};

}  // namespace capfoil

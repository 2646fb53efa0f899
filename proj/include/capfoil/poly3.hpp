#pragma once

#include <array>
#include <cmath>
#include <map>
#include <vector>

namespace capfoil {

// Dense-enough trivariate polynomial, used to build solid spherical
// harmonics and their exact Cartesian derivatives at setup time.
// Not performance-critical: everything is tabulated once per basis.
class Poly3 {
public:
    Poly3() = default;

    static Poly3 constant(double c) {
        Poly3 p;
        if (c != 0.0) p.terms_[{0, 0, 0}] = c;
        return p;
    }
    static Poly3 variable(int axis) {
        Poly3 p;
        std::array<int, 3> e{0, 0, 0};
        e[axis] = 1;
        p.terms_[e] = 1.0;
        return p;
    }

    Poly3& operator+=(const Poly3& o) {
        for (const auto& [e, c] : o.terms_) add_term(e, c);
        return *this;
    }
    friend Poly3 operator+(Poly3 a, const Poly3& b) { return a += b; }
    friend Poly3 operator-(Poly3 a, const Poly3& b) {
        for (const auto& [e, c] : b.terms_) a.add_term(e, -c);
        return a;
    }
    friend Poly3 operator*(const Poly3& a, const Poly3& b) {
        Poly3 r;
        for (const auto& [ea, ca] : a.terms_)
            for (const auto& [eb, cb] : b.terms_)
                r.add_term({ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]}, ca * cb);
        return r;
    }
    friend Poly3 operator*(double s, Poly3 p) {
        for (auto& [e, c] : p.terms_) c *= s;
        return p;
    }

    Poly3 derivative(int axis) const {
        Poly3 r;
        for (const auto& [e, c] : terms_) {
            if (e[axis] == 0) continue;
            auto d = e;
            d[axis] -= 1;
            r.add_term(d, c * e[axis]);
        }
        return r;
    }

    Poly3 laplacian() const {
        Poly3 r;
        for (int a = 0; a < 3; ++a) r += derivative(a).derivative(a);
        return r;
    }

    double eval(double x, double y, double z) const {
        double s = 0.0;
        for (const auto& [e, c] : terms_)
            s += c * ipow(x, e[0]) * ipow(y, e[1]) * ipow(z, e[2]);
        return s;
    }

    int degree() const {
        int d = 0;
        for (const auto& [e, c] : terms_) d = std::max(d, e[0] + e[1] + e[2]);
        return d;
    }

    double max_abs_coeff() const {
        double m = 0.0;
        for (const auto& [e, c] : terms_) m = std::max(m, std::abs(c));
        return m;
    }

    bool empty() const { return terms_.empty(); }

private:
    static double ipow(double b, int n) {
        double r = 1.0;
        for (int i = 0; i < n; ++i) r *= b;
        return r;
    }
    void add_term(const std::array<int, 3>& e, double c) {
        auto it = terms_.find(e);
        if (it == terms_.end()) {
            if (c != 0.0) terms_[e] = c;
        } else {
            it->second += c;
            if (it->second == 0.0) terms_.erase(it);
        }
    }
    std::map<std::array<int, 3>, double> terms_;
};

}  // namespace capfoil

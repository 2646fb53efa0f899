#include "capfoil/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace capfoil {

namespace {
Exec g_exec = Exec::Fast;
constexpr int kBlock = 48;  // layers per block
}  // namespace

Exec default_exec() { return g_exec; }
void set_default_exec(Exec e) { g_exec = e; }

FieldJet field_jet(const SphereBasis& basis, const RadialGrid& grid, const Eigen::MatrixXd& modes,
                   bool with_hess, Exec exec) {
    const int Q = basis.num_nodes(), N = grid.count, n = basis.n(), M = basis.dim();
    const int S = basis.num_sym();
    FieldJet jet;
    jet.nodes = Q;
    jet.layers = N;
    jet.n = n;
    jet.val.resize(Q, N);
    jet.grad.assign(n, Eigen::MatrixXd(Q, N));
    if (with_hess) jet.hess.assign(S, Eigen::MatrixXd(Q, N));

    // radial derivative profiles
    Eigen::MatrixXd d1t, d2t;
    differentiate_uniform(modes, grid.h, d1t, with_hess ? &d2t : nullptr);
    Eigen::MatrixXd U1(N, M), U2;
    for (int i = 0; i < N; ++i) U1.row(i) = d1t.row(i) / grid.r[i];
    if (with_hess) {
        U2.resize(N, M);
        for (int i = 0; i < N; ++i)
            U2.row(i) = (d2t.row(i) - d1t.row(i)) / (grid.r[i] * grid.r[i]);
    }

    const auto& B = basis.values();
    const auto& nodes = basis.nodes();

    if (exec == Exec::Serial) {
        // reference implementation: plain loops
        std::vector<double> gr(n), hs(S);
        for (int i = 0; i < N; ++i) {
            const double r = grid.r[i];
            for (int q = 0; q < Q; ++q) {
                double v = 0.0;
                std::fill(gr.begin(), gr.end(), 0.0);
                std::fill(hs.begin(), hs.end(), 0.0);
                for (int j = 0; j < M; ++j) {
                    const double c0 = modes(i, j), c1 = U1(i, j);
                    const double Y = B(q, j);
                    v += c0 * Y;
                    for (int a = 0; a < n; ++a)
                        gr[a] += c1 * nodes(q, a) * Y + c0 * basis.grad(a)(q, j) / r;
                    if (with_hess) {
                        const double c2 = U2(i, j);
                        for (int a = 0; a < n; ++a)
                            for (int b = a; b < n; ++b) {
                                const double ta = nodes(q, a), tb = nodes(q, b);
                                double hval = c2 * ta * tb * Y;
                                hval += c1 / r * (((a == b) ? 1.0 : 0.0) - ta * tb) * Y;
                                hval += c1 / r *
                                        (ta * basis.grad(b)(q, j) + tb * basis.grad(a)(q, j));
                                hval += c0 / (r * r) * basis.hess(a, b)(q, j);
                                hs[basis.sym(a, b)] += hval;
                            }
                    }
                }
                jet.val(q, i) = v;
                for (int a = 0; a < n; ++a) jet.grad[a](q, i) = gr[a];
                if (with_hess)
                    for (int s = 0; s < S; ++s) jet.hess[s](q, i) = hs[s];
            }
        }
        return jet;
    }

    const int nblocks = (N + kBlock - 1) / kBlock;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int blk = 0; blk < nblocks; ++blk) {
        const int i0 = blk * kBlock;
        const int len = std::min(kBlock, N - i0);
        const Eigen::MatrixXd C0 = modes.middleRows(i0, len).transpose();  // M x len
        const Eigen::MatrixXd C1 = U1.middleRows(i0, len).transpose();

        Eigen::MatrixXd A0 = B * C0;  // Q x len
        Eigen::MatrixXd A1 = B * C1;
        Eigen::MatrixXd A2;
        if (with_hess) A2 = B * U2.middleRows(i0, len).transpose();

        std::vector<Eigen::MatrixXd> G0(n), G1(with_hess ? n : 0);
        for (int a = 0; a < n; ++a) {
            G0[a] = basis.grad(a) * C0;
            if (with_hess) G1[a] = basis.grad(a) * C1;
        }

        jet.val.middleCols(i0, len) = A0;
        for (int a = 0; a < n; ++a) {
            auto& out = jet.grad[a];
            for (int i = 0; i < len; ++i) {
                const double rinv = 1.0 / grid.r[i0 + i];
                out.col(i0 + i) = nodes.col(a).cwiseProduct(A1.col(i)) + rinv * G0[a].col(i);
            }
        }
        if (with_hess) {
            for (int a = 0; a < n; ++a)
                for (int b = a; b < n; ++b) {
                    Eigen::MatrixXd H0 = basis.hess(a, b) * C0;
                    auto& out = jet.hess[basis.sym(a, b)];
                    for (int i = 0; i < len; ++i) {
                        const double r = grid.r[i0 + i];
                        Eigen::VectorXd col =
                            nodes.col(a).cwiseProduct(nodes.col(b))
                                .cwiseProduct(A2.col(i) - A1.col(i) / r) +
                            (nodes.col(a).cwiseProduct(G1[b].col(i)) +
                             nodes.col(b).cwiseProduct(G1[a].col(i))) /
                                r +
                            H0.col(i) / (r * r);
                        if (a == b) col += A1.col(i) / r;
                        out.col(i0 + i) = col;
                    }
                }
        }
    }
    return jet;
}

Eigen::MatrixXd analyze_layers(const SphereBasis& basis, const Eigen::MatrixXd& values, Exec exec) {
    const int Q = basis.num_nodes(), N = static_cast<int>(values.cols()), M = basis.dim();
    Eigen::MatrixXd out(N, M);
    const auto& P = basis.proj_values();
    const auto& w = basis.weights();

    if (exec == Exec::Serial) {
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < M; ++j) {
                double s = 0.0;
                for (int q = 0; q < Q; ++q) s += w[q] * values(q, i) * P(q, j);
                out(i, j) = s;
            }
        return out;
    }

    const int nblocks = (N + kBlock - 1) / kBlock;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int blk = 0; blk < nblocks; ++blk) {
        const int i0 = blk * kBlock;
        const int len = std::min(kBlock, N - i0);
        out.middleRows(i0, len) =
            (P.transpose() * (w.asDiagonal() * values.middleCols(i0, len))).transpose();
    }
    return out;
}

SphereJet sphere_jet(const SphereBasis& basis, const Eigen::VectorXd& coeffs, bool with_hess) {
    SphereJet j;
    j.val = basis.values() * coeffs;
    j.grad.resize(basis.num_nodes(), basis.n());
    for (int a = 0; a < basis.n(); ++a) j.grad.col(a) = basis.grad(a) * coeffs;
    if (with_hess) {
        j.hess.resize(basis.num_sym());
        for (int a = 0; a < basis.n(); ++a)
            for (int b = a; b < basis.n(); ++b)
                j.hess[basis.sym(a, b)] = basis.hess(a, b) * coeffs;
    }
    return j;
}

}  // namespace capfoil

#include "boed/lanczos.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace boed {

namespace {

// Orthogonalize w against the columns of Q in the given inner product
// (classical Gram-Schmidt, applied twice).
void reorthogonalize(Vec& w, const std::vector<Vec>& basis, const InnerProduct& ip) {
    for (int pass = 0; pass < 2; ++pass) {
        for (const Vec& q : basis) w -= ip(w, q) * q;
    }
}

void check_self_adjoint(const std::function<Vec(const Vec&)>& apply_A,
                        const InnerProduct& ip, int dim, std::uint64_t seed) {
    RngStream stream(seed, "lanczos-symmetry-probe", 0);
    for (int probe = 0; probe < 2; ++probe) {
        const Vec v = stream.gaussian_vector(dim);
        const Vec w = stream.gaussian_vector(dim);
        const Vec Av = apply_A(v);
        const Vec Aw = apply_A(w);
        const double a = ip(Av, w);
        const double b = ip(v, Aw);
        const double scale = std::max({1.0, std::abs(a), std::abs(b)});
        if (std::abs(a - b) > 1e-8 * scale)
            throw std::invalid_argument(
                "lanczos_eigs: operator is not self-adjoint in the given inner product");
    }
}

}  // namespace

EigPairs lanczos_eigs(const std::function<Vec(const Vec&)>& apply_A,
                      const InnerProduct& inner, int k, int dim_hint,
                      const LanczosOptions& opts) {
    if (k < 1) throw std::invalid_argument("lanczos_eigs: k must be >= 1");
    if (k > dim_hint) throw std::invalid_argument("lanczos_eigs: k exceeds dim_hint");
    if (opts.check_symmetry) check_self_adjoint(apply_A, inner, dim_hint, opts.seed);

    RngStream stream(opts.seed, "lanczos-start", 0);

    std::vector<Vec> basis;      // ip-orthonormal Lanczos vectors
    std::vector<double> alpha;   // tridiagonal diagonal
    std::vector<double> beta;    // tridiagonal off-diagonal (beta[j] couples j, j+1)
    basis.reserve(std::min(dim_hint, k + 16));

    auto fresh_direction = [&]() {
        for (int attempt = 0; attempt < 32; ++attempt) {
            Vec v = stream.gaussian_vector(dim_hint);
            reorthogonalize(v, basis, inner);
            const double n = std::sqrt(std::max(0.0, inner(v, v)));
            if (n > 1e-10) return Vec(v / n);
        }
        throw std::runtime_error("lanczos_eigs: unable to generate independent start vector");
    };

    basis.push_back(fresh_direction());

    auto step = [&]() {
        const Vec& q = basis.back();
        Vec w = apply_A(q);
        const double a = inner(w, q);
        alpha.push_back(a);
        reorthogonalize(w, basis, inner);
        double b = std::sqrt(std::max(0.0, inner(w, w)));
        const double breakdown_tol = 1e-12 * std::max(1.0, std::abs(a));
        if (static_cast<int>(basis.size()) == dim_hint) {
            beta.push_back(0.0);
            return;
        }
        if (b <= breakdown_tol) {
            // Invariant subspace exhausted; decouple and continue elsewhere.
            beta.push_back(0.0);
            basis.push_back(fresh_direction());
        } else {
            beta.push_back(b);
            basis.push_back(Vec(w / b));
        }
    };

    auto ritz = [&](int m) {
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            T(i, i) = alpha[i];
            if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        return es;
    };

    const int initial = std::min(dim_hint, k + 10);
    while (static_cast<int>(alpha.size()) < initial) step();

    EigPairs out;
    while (true) {
        const int m = static_cast<int>(alpha.size());
        auto es = ritz(m);
        // Eigen sorts ascending; take the top k in descending order.
        out.values = Vec(k);
        out.vectors = Mat(dim_hint, k);
        for (int i = 0; i < k; ++i) {
            const int src = m - 1 - i;
            out.values[i] = es.eigenvalues()[src];
            Vec v = Vec::Zero(dim_hint);
            for (int j = 0; j < m; ++j) v += es.eigenvectors()(j, src) * basis[j];
            const double n = std::sqrt(std::max(0.0, inner(v, v)));
            if (n > 0.0) v /= n;
            out.vectors.col(i) = v;
        }
        // Explicit residual check on the requested pairs.
        bool ok = true;
        for (int i = 0; i < k && ok; ++i) {
            const Vec v = out.vectors.col(i);
            const Vec r = apply_A(v) - out.values[i] * v;
            const double rn = std::sqrt(std::max(0.0, inner(r, r)));
            if (rn > opts.residual_tol * std::max(out.values[i], 1.0)) ok = false;
        }
        if (ok || m >= dim_hint) break;
        const int target = std::min(dim_hint, m + std::max(8, k));
        while (static_cast<int>(alpha.size()) < target) step();
    }

    const double lmax = out.values.size() ? std::max(0.0, out.values[0]) : 0.0;
    for (int i = 0; i < out.values.size(); ++i) {
        if (out.values[i] < opts.truncation_rel * lmax) out.values[i] = 0.0;
    }
    return out;
}

}  // namespace boed

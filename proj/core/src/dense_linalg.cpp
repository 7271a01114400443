#include "deimlab/dense_linalg.hpp"

#include "deimlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace deimlab {

void gemm_acc(std::size_t m, std::size_t n, std::size_t k,
              const double* a, std::size_t lda,
              const double* b, std::size_t ldb,
              double* c, std::size_t ldc) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * lda;
        double* crow = c + i * ldc;
        std::size_t kk = 0;
        for (; kk + 4 <= k; kk += 4) {
            const double a0 = arow[kk + 0];
            const double a1 = arow[kk + 1];
            const double a2 = arow[kk + 2];
            const double a3 = arow[kk + 3];
            const double* b0 = b + (kk + 0) * ldb;
            const double* b1 = b + (kk + 1) * ldb;
            const double* b2 = b + (kk + 2) * ldb;
            const double* b3 = b + (kk + 3) * ldb;
            for (std::size_t j = 0; j < n; ++j) {
                crow[j] += a0 * b0[j] + a1 * b1[j] + a2 * b2[j] + a3 * b3[j];
            }
        }
        for (; kk < k; ++kk) {
            const double av = arow[kk];
            const double* brow = b + kk * ldb;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

namespace {

struct MatView {
    std::size_t rows, cols;
    Tensor storage; // used only when a transpose had to be materialized
    const double* ptr;
};

MatView as_matrix(const Tensor& t, bool trans, const char* op) {
    if (t.ndim() == 1) {
        if (trans) return {1, t.size(), {}, t.data()};
        return {t.size(), 1, {}, t.data()};
    }
    if (t.ndim() != 2) {
        throw DimensionError(std::string(op) + ": operand must be 1-D or 2-D, got " +
                             t.shape_str());
    }
    if (!trans) return {t.rows(), t.cols(), {}, t.data()};
    Tensor tr = t.transposed();
    const double* p = tr.data();
    return {tr.rows(), tr.cols(), std::move(tr), p};
}

} // namespace

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
    MatView av = as_matrix(a, trans_a, "matmul");
    MatView bv = as_matrix(b, trans_b, "matmul");
    if (av.cols != bv.rows) {
        throw DimensionError("matmul: inner dimensions disagree, " + a.shape_str() +
                             (trans_a ? "^T" : "") + " * " + b.shape_str() +
                             (trans_b ? "^T" : ""));
    }
    Tensor c({av.rows, bv.cols});
    gemm_acc(av.rows, bv.cols, av.cols, av.ptr, av.cols, bv.ptr, bv.cols,
             c.data(), bv.cols);
    // Collapse to 1-D when the right operand was a vector.
    if (b.ndim() == 1 && !trans_b && bv.cols == 1) return c.reshaped({av.rows});
    return c;
}

namespace {

// One-sided Jacobi on the columns of W: plane rotations drive all column
// pairs orthogonal; singular values are the final column norms.
// Cyclic (p,q) order makes the iteration deterministic.
struct JacobiResult {
    Tensor w; // rotated copy of the input, columns = u_i * sigma_i
    Tensor v; // accumulated rotations (N x N)
};

JacobiResult one_sided_jacobi(const Tensor& a) {
    const std::size_t n = a.rows();
    const std::size_t N = a.cols();
    Tensor w = a;
    Tensor v = Tensor::identity(N);

    const double tol = 1e-15;
    const int max_sweeps = 60;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < N; ++p) {
            for (std::size_t q = p + 1; q < N; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double wp = w(i, p), wq = w(i, q);
                    app += wp * wp;
                    aqq += wq * wq;
                    apq += wp * wq;
                }
                if (std::abs(apq) <= tol * std::sqrt(app * aqq)) continue;
                rotated = true;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double cs = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = cs * t;
                for (std::size_t i = 0; i < n; ++i) {
                    const double wp = w(i, p), wq = w(i, q);
                    w(i, p) = cs * wp - sn * wq;
                    w(i, q) = sn * wp + cs * wq;
                }
                for (std::size_t i = 0; i < N; ++i) {
                    const double vp = v(i, p), vq = v(i, q);
                    v(i, p) = cs * vp - sn * vq;
                    v(i, q) = sn * vp + cs * vq;
                }
            }
        }
        if (!rotated) break;
    }
    return {std::move(w), std::move(v)};
}

// Deterministic orthonormal completion for null columns: Gram-Schmidt of
// canonical basis vectors against the columns already in place.
void complete_orthonormal(Tensor& u, std::size_t first_null) {
    const std::size_t n = u.rows();
    const std::size_t r = u.cols();
    std::size_t next_canonical = 0;
    for (std::size_t c = first_null; c < r; ++c) {
        while (true) {
            if (next_canonical >= n) {
                throw InputError("svd: cannot complete orthonormal basis");
            }
            Tensor cand({n});
            cand[next_canonical++] = 1.0;
            for (std::size_t j = 0; j < c; ++j) {
                double proj = 0.0;
                for (std::size_t i = 0; i < n; ++i) proj += u(i, j) * cand[i];
                for (std::size_t i = 0; i < n; ++i) cand[i] -= proj * u(i, j);
            }
            const double nrm = norm2(cand);
            if (nrm > 0.5) { // canonical vector not already spanned
                for (std::size_t i = 0; i < n; ++i) u(i, c) = cand[i] / nrm;
                break;
            }
        }
    }
}

SvdResult thin_svd_tall(const Tensor& a) {
    const std::size_t n = a.rows();
    const std::size_t N = a.cols();
    const std::size_t r = N; // caller guarantees N <= n

    JacobiResult jr = one_sided_jacobi(a);

    std::vector<double> sigma(r);
    for (std::size_t j = 0; j < r; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += jr.w(i, j) * jr.w(i, j);
        sigma[j] = std::sqrt(s);
    }

    std::vector<std::size_t> order(r);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

    Tensor u({n, r});
    Tensor vt({r, N});
    std::vector<double> s_sorted(r);
    const double smax = sigma.empty() ? 0.0 : sigma[order[0]];
    const double null_tol = smax * 1e-14;
    std::size_t rank = 0;
    for (std::size_t c = 0; c < r; ++c) {
        const std::size_t src = order[c];
        s_sorted[c] = sigma[src];
        for (std::size_t i = 0; i < N; ++i) vt(c, i) = jr.v(i, src);
        if (sigma[src] > null_tol) {
            for (std::size_t i = 0; i < n; ++i) u(i, c) = jr.w(i, src) / sigma[src];
            rank = c + 1;
        } else {
            s_sorted[c] = sigma[src]; // keep tiny value; column filled below
        }
    }
    if (rank < r) complete_orthonormal(u, rank);

    return {std::move(u), std::move(s_sorted), std::move(vt)};
}

void fix_signs(SvdResult& res) {
    const std::size_t n = res.U.rows();
    const std::size_t r = res.U.cols();
    const std::size_t N = res.Vt.cols();
    for (std::size_t c = 0; c < r; ++c) {
        std::size_t arg = 0;
        double best = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = std::abs(res.U(i, c));
            if (v > best) { best = v; arg = i; }
        }
        if (res.U(arg, c) < 0.0) {
            for (std::size_t i = 0; i < n; ++i) res.U(i, c) = -res.U(i, c);
            for (std::size_t i = 0; i < N; ++i) res.Vt(c, i) = -res.Vt(c, i);
        }
    }
}

} // namespace

SvdResult thin_svd(const Tensor& a) {
    if (a.ndim() != 2 || a.rows() == 0 || a.cols() == 0) {
        throw DimensionError("thin_svd: need a nonempty 2-D matrix, got " + a.shape_str());
    }
    if (!a.all_finite()) throw InputError("thin_svd: input has non-finite entries");

    SvdResult res;
    if (a.cols() <= a.rows()) {
        res = thin_svd_tall(a);
    } else {
        // Orthogonalizing the shorter side is much cheaper; swap roles.
        SvdResult t = thin_svd_tall(a.transposed());
        res.U = Tensor({a.rows(), t.sigma.size()});
        for (std::size_t i = 0; i < a.rows(); ++i)
            for (std::size_t c = 0; c < t.sigma.size(); ++c)
                res.U(i, c) = t.Vt(c, i);
        res.sigma = std::move(t.sigma);
        res.Vt = t.U.transposed();
    }
    fix_signs(res);
    return res;
}

std::size_t numerical_rank(const std::vector<double>& sigma,
                           std::size_t n, std::size_t N) {
    if (sigma.empty()) return 0;
    const double tol = static_cast<double>(std::max(n, N)) *
                       std::numeric_limits<double>::epsilon() * sigma.front();
    std::size_t r = 0;
    for (double s : sigma) {
        if (s > tol) ++r;
    }
    return r;
}

LuFactor::LuFactor(const Tensor& m) {
    if (m.ndim() != 2 || m.rows() != m.cols()) {
        throw DimensionError("lu: matrix must be square, got " + m.shape_str());
    }
    n_ = m.rows();
    lu_ = m;
    perm_.resize(n_);
    std::iota(perm_.begin(), perm_.end(), 0);

    const double pivot_floor = 1e-12 * max_abs(m);
    for (std::size_t k = 0; k < n_; ++k) {
        std::size_t piv = k;
        double best = std::abs(lu_(k, k));
        for (std::size_t i = k + 1; i < n_; ++i) {
            const double v = std::abs(lu_(i, k));
            if (v > best) { best = v; piv = i; }
        }
        if (best < pivot_floor || best == 0.0) {
            throw SingularMatrixError("lu: pivot " + std::to_string(best) +
                                          " below threshold at elimination step " +
                                          std::to_string(k),
                                      static_cast<int>(k));
        }
        if (piv != k) {
            for (std::size_t j = 0; j < n_; ++j) std::swap(lu_(k, j), lu_(piv, j));
            std::swap(perm_[k], perm_[piv]);
        }
        const double inv = 1.0 / lu_(k, k);
        for (std::size_t i = k + 1; i < n_; ++i) {
            const double f = lu_(i, k) * inv;
            lu_(i, k) = f;
            for (std::size_t j = k + 1; j < n_; ++j) lu_(i, j) -= f * lu_(k, j);
        }
    }
}

Tensor LuFactor::solve(const Tensor& b) const {
    const std::size_t k = b.ndim() == 1 ? 1 : b.cols();
    if (b.rows() != n_) {
        throw DimensionError("lu solve: rhs rows " + b.shape_str() + " vs matrix dim " +
                             std::to_string(n_));
    }
    Tensor x = b.ndim() == 1 ? Tensor({n_, 1}) : Tensor({n_, k});
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < k; ++j)
            x(i, j) = b.ndim() == 1 ? b[perm_[i]] : b(perm_[i], j);

    for (std::size_t i = 1; i < n_; ++i)
        for (std::size_t p = 0; p < i; ++p)
            for (std::size_t j = 0; j < k; ++j)
                x(i, j) -= lu_(i, p) * x(p, j);

    for (std::size_t ii = n_; ii-- > 0;) {
        for (std::size_t p = ii + 1; p < n_; ++p)
            for (std::size_t j = 0; j < k; ++j)
                x(ii, j) -= lu_(ii, p) * x(p, j);
        const double inv = 1.0 / lu_(ii, ii);
        for (std::size_t j = 0; j < k; ++j) x(ii, j) *= inv;
    }
    return b.ndim() == 1 ? x.reshaped({n_}) : x;
}

Tensor LuFactor::solve_transposed(const Tensor& b) const {
    // M^T x = b  <=>  U^T L^T P x = b: forward with U^T, back with L^T, unpermute.
    const std::size_t k = b.ndim() == 1 ? 1 : b.cols();
    if (b.rows() != n_) {
        throw DimensionError("lu solve_transposed: rhs rows " + b.shape_str() +
                             " vs matrix dim " + std::to_string(n_));
    }
    Tensor y = b.ndim() == 1 ? Tensor({n_, 1}) : Tensor({n_, k});
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < k; ++j)
            y(i, j) = b.ndim() == 1 ? b[i] : b(i, j);

    for (std::size_t i = 0; i < n_; ++i) {
        const double inv = 1.0 / lu_(i, i);
        for (std::size_t j = 0; j < k; ++j) y(i, j) *= inv;
        for (std::size_t p = i + 1; p < n_; ++p)
            for (std::size_t j = 0; j < k; ++j)
                y(p, j) -= lu_(i, p) * y(i, j);
    }
    for (std::size_t ii = n_; ii-- > 0;) {
        for (std::size_t p = ii + 1; p < n_; ++p)
            for (std::size_t j = 0; j < k; ++j)
                y(ii, j) -= lu_(p, ii) * y(p, j);
    }
    Tensor x = y;
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < k; ++j)
            x(perm_[i], j) = y(i, j);
    return b.ndim() == 1 ? x.reshaped({n_}) : x;
}

SolveResult solve_small(const Tensor& m, const Tensor& b) {
    LuFactor lu(m);
    Tensor x = lu.solve(b);
    Tensor r = matmul(m, x);
    double res = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) res = std::max(res, std::abs(r[i] - b[i]));
    return {std::move(x), res};
}

double orthonormality_defect(const Tensor& q) {
    Tensor g = matmul(q, q, /*trans_a=*/true, /*trans_b=*/false);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j)
            worst = std::max(worst, std::abs(g(i, j) - (i == j ? 1.0 : 0.0)));
    return worst;
}

} // namespace deimlab

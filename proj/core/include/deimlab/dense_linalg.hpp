#pragma once

#include "deimlab/tensor.hpp"

#include <cstddef>
#include <vector>

namespace deimlab {

/// C += A * B for row-major buffers. The k-inner / j-vectorized ordering is
/// what the compiler auto-vectorizes well at these sizes.
void gemm_acc(std::size_t m, std::size_t n, std::size_t k,
              const double* a, std::size_t lda,
              const double* b, std::size_t ldb,
              double* c, std::size_t ldc);

/// Dense product op(A) * op(B); 1-D right operands are treated as columns.
Tensor matmul(const Tensor& a, const Tensor& b,
              bool trans_a = false, bool trans_b = false);

/// Economy SVD A = U diag(sigma) Vt with r = min(n, N).
///
/// Sign convention: the largest-magnitude entry of each column of U is
/// positive (first such entry on ties), so results are reproducible across
/// runs and platforms. sigma is nonincreasing. Columns whose singular value
/// vanishes are completed to an orthonormal set deterministically.
struct SvdResult {
    Tensor U;                  // n x r, orthonormal columns
    std::vector<double> sigma; // r, descending, nonnegative
    Tensor Vt;                 // r x N
};

SvdResult thin_svd(const Tensor& a);

/// Numerical rank: number of singular values above max(n,N) * eps * sigma_max.
std::size_t numerical_rank(const std::vector<double>& sigma,
                           std::size_t n, std::size_t N);

/// Partial-pivot LU factorization of a small square matrix.
/// Throws SingularMatrixError (with the offending elimination step) when a
/// pivot falls below 1e-12 * max|M|; for DEIM operators this signals a
/// degenerate point selection.
class LuFactor {
public:
    explicit LuFactor(const Tensor& m);

    /// Solve M x = b (b may be l or l x k).
    Tensor solve(const Tensor& b) const;
    /// Solve M^T x = b.
    Tensor solve_transposed(const Tensor& b) const;

    std::size_t dim() const { return n_; }

private:
    std::size_t n_ = 0;
    Tensor lu_;
    std::vector<std::size_t> perm_;
};

struct SolveResult {
    Tensor X;
    double residual; // max|M X - B|
};

/// Solve M X = B by partial-pivot LU, reporting the achieved residual.
SolveResult solve_small(const Tensor& m, const Tensor& b);

/// max |Q^T Q - I| over all entries; orthonormality diagnostic.
double orthonormality_defect(const Tensor& q);

} // namespace deimlab

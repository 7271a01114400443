#include "deimlab/rom_deim.hpp"

#include "deimlab/dense_linalg.hpp"
#include "deimlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace deimlab {

PodBasis build_pod(const SnapshotMatrix& snapshots, const Truncation& rule) {
    if (snapshots.size() == 0) throw InputError("build_pod: empty snapshot matrix");
    SvdResult svd = thin_svd(snapshots);
    const std::size_t r = svd.sigma.size();

    double total = 0.0;
    for (double s : svd.sigma) total += s * s;
    std::vector<double> cumulative(r);
    double acc = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        acc += svd.sigma[i] * svd.sigma[i];
        cumulative[i] = total > 0.0 ? acc / total : 1.0;
    }
    if (!cumulative.empty()) cumulative.back() = 1.0; // pin against roundoff

    std::size_t m = 0;
    if (rule.energy_threshold) {
        const double th = *rule.energy_threshold;
        if (!(th > 0.0 && th <= 1.0)) {
            throw ParameterError("build_pod: energy threshold must be in (0, 1]");
        }
        m = r;
        for (std::size_t i = 0; i < r; ++i) {
            if (cumulative[i] >= th) { m = i + 1; break; }
        }
    } else {
        m = rule.count;
        const std::size_t rank = numerical_rank(svd.sigma, snapshots.rows(), snapshots.cols());
        if (m == 0 || m > rank) {
            throw ParameterError("build_pod: requested " + std::to_string(m) +
                                 " modes but snapshot rank is " + std::to_string(rank));
        }
    }

    PodBasis basis;
    basis.psi = Tensor({snapshots.rows(), m});
    for (std::size_t i = 0; i < snapshots.rows(); ++i)
        for (std::size_t j = 0; j < m; ++j)
            basis.psi(i, j) = svd.U(i, j);
    basis.sigma = std::move(svd.sigma);
    basis.energy_fractions = std::move(cumulative);
    return basis;
}

std::vector<std::size_t> deim_greedy_indices(const Tensor& phi) {
    if (phi.ndim() != 2 || phi.cols() == 0) {
        throw DimensionError("deim: basis must have at least one column, got " +
                             phi.shape_str());
    }
    const std::size_t n = phi.rows();
    const std::size_t l = phi.cols();

    auto argmax_abs = [n](const std::vector<double>& v) {
        std::size_t arg = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double a = std::abs(v[i]);
            if (a > best) { best = a; arg = i; }
        }
        return arg;
    };

    std::vector<std::size_t> indices;
    indices.reserve(l);
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = phi(i, 0);
    indices.push_back(argmax_abs(col));

    for (std::size_t k = 1; k < l; ++k) {
        // Interpolate column k on the points chosen so far, then pick the
        // largest residual entry.
        Tensor a({k, k});
        Tensor b({k});
        for (std::size_t r = 0; r < k; ++r) {
            for (std::size_t c = 0; c < k; ++c) a(r, c) = phi(indices[r], c);
            b[r] = phi(indices[r], k);
        }
        Tensor coeff;
        try {
            coeff = solve_small(a, b).X;
        } catch (const SingularMatrixError& e) {
            throw SingularMatrixError("deim greedy: singular interpolation system at k = " +
                                          std::to_string(k) + " (" + e.what() + ")",
                                      e.pivot_index);
        }
        for (std::size_t i = 0; i < n; ++i) {
            double r = phi(i, k);
            for (std::size_t c = 0; c < k; ++c) r -= phi(i, c) * coeff[c];
            col[i] = r;
        }
        indices.push_back(argmax_abs(col));
    }

    std::set<std::size_t> uniq(indices.begin(), indices.end());
    if (uniq.size() != indices.size()) {
        throw InputError("deim greedy: duplicate interpolation points; basis columns "
                         "are not linearly independent");
    }
    return indices;
}

DeimOperator make_deim_operator(const Tensor& psi, const Tensor& phi,
                                std::vector<std::size_t> indices) {
    const std::size_t l = indices.size();
    if (phi.cols() != l) {
        throw DimensionError("deim operator: " + std::to_string(l) + " indices vs " +
                             std::to_string(phi.cols()) + " basis columns");
    }
    if (psi.rows() != phi.rows()) {
        throw DimensionError("deim operator: bases live on different grids, " +
                             psi.shape_str() + " vs " + phi.shape_str());
    }
    DeimOperator op;
    op.phi_rows = Tensor({l, l});
    for (std::size_t r = 0; r < l; ++r)
        for (std::size_t c = 0; c < l; ++c)
            op.phi_rows(r, c) = phi(indices[r], c);

    // projector = (Psi^T Phi) (P^T Phi)^{-1}, assembled by solving
    // (P^T Phi)^T X^T = (Psi^T Phi)^T.
    Tensor w = matmul(psi, phi, /*trans_a=*/true);          // m x l
    Tensor xt = solve_small(op.phi_rows.transposed(), w.transposed()).X;
    op.projector = xt.transposed();
    op.indices = std::move(indices);
    return op;
}

DeimOperator deim_select(const PodBasis& basis, const NonlinearBasis& phi) {
    return make_deim_operator(basis.psi, phi.psi, deim_greedy_indices(phi.psi));
}

Tensor deim_apply(const DeimOperator& op, const Tensor& sampled_values,
                  EvalCounter* counter) {
    if (sampled_values.size() != op.point_count()) {
        throw DimensionError("deim_apply: expected " + std::to_string(op.point_count()) +
                             " sampled values, got " + std::to_string(sampled_values.size()));
    }
    if (!sampled_values.all_finite()) {
        throw InputError("deim_apply: non-finite sampled values");
    }
    if (counter) counter->stage_points += static_cast<long>(op.point_count());
    return matmul(op.projector, sampled_values);
}

RomOperator build_rom_operator(PodBasis basis, const Grid1D& grid, double re) {
    if (basis.psi.rows() != grid.n) {
        throw DimensionError("rom operator: basis rows " + basis.psi.shape_str() +
                             " vs grid " + std::to_string(grid.n));
    }
    RomOperator rom;
    Tensor d2 = second_difference_matrix(grid);
    Tensor d2psi = matmul(d2, basis.psi);           // n x m
    Tensor lr = matmul(basis.psi, d2psi, true);     // m x m
    for (std::size_t i = 0; i < lr.size(); ++i) lr[i] /= re;
    rom.reduced_linear = std::move(lr);
    rom.basis = std::move(basis);
    rom.grid = grid;
    rom.re = re;
    return rom;
}

namespace {

std::vector<double> reconstruct_full(const Tensor& psi, const Tensor& a) {
    Tensor u = matmul(psi, a);
    return std::vector<double>(u.data(), u.data() + u.size());
}

} // namespace

Tensor galerkin_rhs_full(const RomOperator& rom, const Tensor& a, EvalCounter* counter) {
    std::vector<double> u = reconstruct_full(rom.basis.psi, a);
    std::vector<double> nf;
    nonlinear_term(u, rom.grid, nf);
    if (counter) {
        counter->rhs_calls += 1;
        counter->full_field_points += static_cast<long>(rom.grid.n);
    }
    Tensor nft({nf.size()}, std::move(nf));
    Tensor reduced_nl = matmul(rom.basis.psi, nft, /*trans_a=*/true);
    Tensor out = matmul(rom.reduced_linear, a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += reduced_nl[i];
    return out;
}

Tensor galerkin_rhs_deim(const RomOperator& rom, const DeimOperator& op,
                         const Tensor& a, EvalCounter* counter) {
    const std::size_t m = rom.basis.mode_count();
    const std::size_t l = op.point_count();
    // Reconstruct the state only where the sampled stencils read it.
    thread_local std::vector<double> scratch;
    scratch.resize(rom.grid.n);
    std::vector<std::size_t> footprint;
    footprint.reserve(5 * l);
    for (std::size_t p : op.indices) {
        auto pts = nonlinear_stencil_footprint(p, rom.grid.n);
        footprint.insert(footprint.end(), pts.begin(), pts.end());
    }
    std::sort(footprint.begin(), footprint.end());
    footprint.erase(std::unique(footprint.begin(), footprint.end()), footprint.end());
    for (std::size_t j : footprint) {
        double s = 0.0;
        for (std::size_t k = 0; k < m; ++k) s += rom.basis.psi(j, k) * a[k];
        scratch[j] = s;
    }
    Tensor sampled({l});
    for (std::size_t k = 0; k < l; ++k) {
        sampled[k] = nonlinear_term_at(scratch, rom.grid, op.indices[k]);
    }
    if (counter) counter->rhs_calls += 1;
    Tensor reduced_nl = deim_apply(op, sampled, counter);
    Tensor out = matmul(rom.reduced_linear, a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += reduced_nl[i];
    return out;
}

RomResult run_rom(const RomOperator& rom, const RomSampler& sampler,
                  const std::vector<double>& u0, double dt, std::size_t n_steps,
                  const SnapshotMatrix* fom_states) {
    const std::size_t n = rom.grid.n;
    const std::size_t m = rom.basis.mode_count();
    if (u0.size() != n) {
        throw DimensionError("run_rom: initial state size " + std::to_string(u0.size()) +
                             " vs grid " + std::to_string(n));
    }
    if (fom_states && (fom_states->rows() != n || fom_states->cols() < n_steps + 1)) {
        throw DimensionError("run_rom: FOM snapshot matrix " + fom_states->shape_str() +
                             " too small for " + std::to_string(n_steps) + " steps");
    }

    RomResult res;
    res.coefficients = Tensor({m, n_steps + 1});
    res.reconstructed = SnapshotMatrix({n, n_steps + 1});

    Tensor u0t({n}, std::vector<double>(u0.begin(), u0.end()));
    Tensor a = matmul(rom.basis.psi, u0t, /*trans_a=*/true);

    const bool is_full = std::holds_alternative<FullSampling>(sampler);
    const StaticDeim* stat = std::get_if<StaticDeim>(&sampler);
    const AdaptiveDeim* adaptive = std::get_if<AdaptiveDeim>(&sampler);

    for (std::size_t step = 0; step <= n_steps; ++step) {
        if (!a.all_finite()) {
            throw InstabilityError("run_rom: non-finite coefficients at step " +
                                       std::to_string(step),
                                   static_cast<long>(step));
        }
        std::vector<double> u_rec = reconstruct_full(rom.basis.psi, a);
        for (std::size_t k = 0; k < m; ++k) res.coefficients(k, step) = a[k];
        set_column(res.reconstructed, step, u_rec);
        if (fom_states) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = u_rec[i] - (*fom_states)(i, step);
                s += d * d;
            }
            res.mse.push_back(s / static_cast<double>(n));
        }
        if (step == n_steps) break;

        // Pick this step's operator; it serves all three RK stages.
        const DeimOperator* op = nullptr;
        DeimOperator adaptive_op;
        if (stat) {
            op = &stat->op;
        } else if (adaptive) {
            AdaptiveSelection sel = adaptive->select(u_rec, a, step);
            if (sel.fell_back) res.fallback_steps.push_back(step);
            adaptive_op = std::move(sel.op);
            op = &adaptive_op;
        }
        if (op) {
            res.evals.batch_points += static_cast<long>(op->point_count());
            res.index_trajectory.push_back(op->indices);
        }

        auto rhs = [&](const Tensor& state) {
            if (is_full) return galerkin_rhs_full(rom, state, &res.evals);
            return galerkin_rhs_deim(rom, *op, state, &res.evals);
        };

        // Shu-Osher stages on the reduced coefficients.
        Tensor k1 = rhs(a);
        Tensor a1({m});
        for (std::size_t i = 0; i < m; ++i) a1[i] = a[i] + dt * k1[i];
        Tensor k2 = rhs(a1);
        Tensor a2({m});
        for (std::size_t i = 0; i < m; ++i)
            a2[i] = 0.75 * a[i] + 0.25 * (a1[i] + dt * k2[i]);
        Tensor k3 = rhs(a2);
        for (std::size_t i = 0; i < m; ++i)
            a[i] = (1.0 / 3.0) * a[i] + (2.0 / 3.0) * (a2[i] + dt * k3[i]);
    }
    return res;
}

double time_mean(const std::vector<double>& series) {
    if (series.empty()) return 0.0;
    return std::accumulate(series.begin(), series.end(), 0.0) /
           static_cast<double>(series.size());
}

} // namespace deimlab

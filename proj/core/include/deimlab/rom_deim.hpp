#pragma once

#include "deimlab/burgers.hpp"
#include "deimlab/tensor.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

namespace deimlab {

/// Orthonormal POD modes with the full singular spectrum of the snapshots.
struct PodBasis {
    Tensor psi;                            // n x m, orthonormal columns
    std::vector<double> sigma;             // all min(n,N) singular values
    std::vector<double> energy_fractions;  // cumulative sigma^2 shares; last = 1
    std::size_t mode_count() const { return psi.cols(); }
    std::size_t full_dim() const { return psi.rows(); }
};

/// Basis for the nonlinear-term snapshots; same contract as PodBasis.
using NonlinearBasis = PodBasis;

/// Truncation rule for build_pod: keep a fixed mode count, or the smallest
/// count whose cumulative energy reaches a threshold.
struct Truncation {
    static Truncation modes(std::size_t m) { return {m, std::nullopt}; }
    static Truncation energy(double threshold) { return {0, threshold}; }
    std::size_t count;
    std::optional<double> energy_threshold;
};

PodBasis build_pod(const SnapshotMatrix& snapshots, const Truncation& rule);

/// Greedy interpolation-point selection: p1 = argmax|phi_1|; afterwards each
/// p_k maximizes the residual of column k against the interpolation of the
/// previous points. Ties break to the lowest index.
std::vector<std::size_t> deim_greedy_indices(const Tensor& phi);

/// Sampling operator: indices plus the precomputed reduced projector.
struct DeimOperator {
    std::vector<std::size_t> indices; // greedy order, pairwise distinct
    Tensor projector;                 // m x l = Psi^T Phi (P^T Phi)^{-1}
    Tensor phi_rows;                  // l x l = P^T Phi, kept for diagnostics
    std::size_t point_count() const { return indices.size(); }
};

/// Build the operator for a given index set (argmax-selected or greedy).
DeimOperator make_deim_operator(const Tensor& psi, const Tensor& phi,
                                std::vector<std::size_t> indices);

/// Greedy selection plus operator assembly.
DeimOperator deim_select(const PodBasis& basis, const NonlinearBasis& phi);

/// Nonlinear-term evaluation accounting. The paper-consistent headline
/// counts one l-point batch per time step; the stage counter counts every
/// RHS invocation separately.
struct EvalCounter {
    long batch_points = 0;      // one l-point batch per time step (headline)
    long stage_points = 0;      // l on every deim_apply (3x per step under RK3)
    long rhs_calls = 0;
    long full_field_points = 0; // n per RHS call on the exact path
};

/// Reduced tendencies from l sampled nonlinear values; bumps the stage
/// counter by l.
Tensor deim_apply(const DeimOperator& op, const Tensor& sampled_values,
                  EvalCounter* counter = nullptr);

/// Offline-assembled Galerkin pieces for the Burgers ROM.
struct RomOperator {
    PodBasis basis;
    Tensor reduced_linear; // m x m = (1/Re) Psi^T D2 Psi
    Grid1D grid;
    double re = 0.0;
};

RomOperator build_rom_operator(PodBasis basis, const Grid1D& grid, double re);

/// Exact reduced tendency L_r a + Psi^T N_f[Psi a] (reference path).
Tensor galerkin_rhs_full(const RomOperator& rom, const Tensor& a,
                         EvalCounter* counter = nullptr);

/// Hyper-reduced tendency: the state is reconstructed only on the union of
/// stencil footprints of the sampled indices, so the nonlinear cost is O(l).
Tensor galerkin_rhs_deim(const RomOperator& rom, const DeimOperator& op,
                         const Tensor& a, EvalCounter* counter = nullptr);

/// Per-step adaptive selection result.
struct AdaptiveSelection {
    DeimOperator op;
    bool fell_back = false; // provider substituted the static fallback
};

struct FullSampling {};
struct StaticDeim {
    DeimOperator op;
};
struct AdaptiveDeim {
    std::function<AdaptiveSelection(const std::vector<double>& u_reconstructed,
                                    const Tensor& a, std::size_t step)> select;
};
using RomSampler = std::variant<FullSampling, StaticDeim, AdaptiveDeim>;

struct RomResult {
    Tensor coefficients;        // m x (n_steps + 1)
    SnapshotMatrix reconstructed; // n x (n_steps + 1)
    std::vector<double> mse;    // per step vs FOM states
    EvalCounter evals;
    std::vector<std::vector<std::size_t>> index_trajectory; // per step (DEIM paths)
    std::vector<std::size_t> fallback_steps;
};

/// Reduced-space SSP-RK3 rollout from a0 = Psi^T u0. An adaptive sampler is
/// queried once per step; the chosen points serve all three stages.
RomResult run_rom(const RomOperator& rom, const RomSampler& sampler,
                  const std::vector<double>& u0, double dt, std::size_t n_steps,
                  const SnapshotMatrix* fom_states = nullptr);

double time_mean(const std::vector<double>& series);

} // namespace deimlab

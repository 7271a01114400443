#pragma once

#include "deimlab/tensor.hpp"

#include <cstddef>
#include <vector>

namespace deimlab {

/// Column-ordered snapshot storage: column j holds the state at t_j.
using SnapshotMatrix = Tensor;

void set_column(SnapshotMatrix& m, std::size_t col, const std::vector<double>& v);
std::vector<double> get_column(const SnapshotMatrix& m, std::size_t col);

/// Uniform 1-D mesh on [0, length] with endpoints included.
struct Grid1D {
    std::size_t n = 128;
    double length = 1.0;

    double dx() const { return length / static_cast<double>(n - 1); }
    double x(std::size_t i) const { return static_cast<double>(i) * dx(); }
};

Grid1D make_grid1d(std::size_t n, double length);

struct BurgersConfig {
    double re = 1000.0;   // steep but resolvable shock at n = 128
    std::size_t n = 128;
    double length = 1.0;
    double t_final = 2.0;
    std::size_t n_steps = 300;

    double dt() const { return t_final / static_cast<double>(n_steps); }
    Grid1D grid() const { return make_grid1d(n, length); }
    void validate() const;
};

/// Closed-form solution of the viscous problem with homogeneous Dirichlet
/// boundaries:
///   u(x,t) = (x/(t+1)) / (1 + sqrt((t+1)/exp(Re/8)) exp(Re x^2 / (4t+4))).
/// Evaluated as sqrt(t+1) * exp(Re (x^2/(4(t+1)) - 1/16)) so large Re cannot
/// overflow the intermediate exp(Re/8).
double analytic_solution(double x, double t, double re);

std::vector<double> analytic_profile(const Grid1D& grid, double t, double re);

/// Initial condition: the analytic solution at t = 0 with endpoints pinned
/// to exactly zero.
std::vector<double> initial_condition(const Grid1D& grid, double re);

/// Advection piece -1/2 d(u^2)/dx by 2nd-order upwind on the flux form,
/// direction keyed to sign(u). Near-boundary interior points fall back to
/// the inward one-sided 2nd-order stencil; boundary entries are zero.
void nonlinear_term(const std::vector<double>& u, const Grid1D& grid,
                    std::vector<double>& out);

/// Advection at a single interior point; needs u on the stencil footprint
/// only. Used by the hyper-reduced path.
double nonlinear_term_at(const std::vector<double>& u, const Grid1D& grid,
                         std::size_t i);

/// Stencil footprint (grid indices whose u-values the advection stencil at i
/// can touch, for either wind direction).
std::vector<std::size_t> nonlinear_stencil_footprint(std::size_t i, std::size_t n);

/// Dissipation (1/Re) d^2u/dx^2 by 2nd-order central; boundary entries zero.
void linear_term(const std::vector<double>& u, const Grid1D& grid, double re,
                 std::vector<double>& out);

/// Full tendency: nonlinear_term + linear_term, boundary entries zero.
void fom_rhs(const std::vector<double>& u, const Grid1D& grid, double re,
             std::vector<double>& out);

/// Dense second-difference operator with zeroed Dirichlet rows (the linear
/// part of the tendency is (1/Re) D2 u).
Tensor second_difference_matrix(const Grid1D& grid);

/// One SSP-RK3 step of the full-order model; boundaries reimposed after
/// every stage.
void burgers_step(std::vector<double>& u, double dt, const Grid1D& grid, double re);

struct FomResult {
    SnapshotMatrix states;        // n x (n_steps + 1), includes t = 0
    SnapshotMatrix nonlinear;     // matching advection-term snapshots
    SnapshotMatrix squared_error; // pointwise (u - analytic)^2
    double max_squared_error = 0.0;
    double cfl_max = 0.0; // max |u| dt / dx over the run
};

/// Run the full-order model, collecting state and nonlinear-term snapshots.
/// Throws InstabilityError (with the step index) if the state goes
/// non-finite mid-run.
FomResult run_fom(const BurgersConfig& config);

} // namespace deimlab

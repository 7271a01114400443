#pragma once

#include "deimlab/burgers.hpp" // SnapshotMatrix
#include "deimlab/tensor.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace deimlab {

/// Periodic square [0, 2pi]^2. Fields are row-major ny x nx; entry (iy, ix)
/// sits at (x, y) = (ix dx, iy dy).
struct Grid2D {
    std::size_t nx = 128;
    std::size_t ny = 128;

    double dx() const;
    double dy() const;
    double x(std::size_t ix) const { return static_cast<double>(ix) * dx(); }
    double y(std::size_t iy) const { return static_cast<double>(iy) * dy(); }
    std::size_t cells() const { return nx * ny; }
};

Grid2D make_grid2d(std::size_t nx, std::size_t ny);

struct FlowField {
    Tensor omega; // ny x nx vorticity
    Tensor psi;   // ny x nx streamfunction
    double t = 0.0;
};

/// One Gaussian vortex: amplitude * exp(-rho ((x-xc)^2 + (y-yc)^2)).
struct GaussianVortex {
    double xc, yc, amplitude, rho;
};

enum class VortexConfigTag { Horizontal, Vertical, Asymmetric, CloseHorizontal };

VortexConfigTag vortex_tag_from_string(const std::string& name);
std::string to_string(VortexConfigTag tag);

/// The four benchmark layouts. All constants are defaults; callers may build
/// fields from any explicit vortex list via make_initial(vortices, grid).
std::vector<GaussianVortex> vortex_layout(VortexConfigTag tag);

/// Superpose Gaussian vortices and subtract the mean (periodic solvability).
FlowField make_initial(const std::vector<GaussianVortex>& vortices, const Grid2D& grid);
FlowField make_initial(VortexConfigTag tag, const Grid2D& grid);

/// Spectral solve of del^2 psi = -omega on the periodic grid:
/// psi_hat_k = omega_hat_k / |k|^2, zero mean mode. Rejects inputs whose
/// mean exceeds 1e-8 in magnitude.
Tensor poisson_solve(const Tensor& omega, const Grid2D& grid);

/// Spectral Laplacian (diagnostic companion of poisson_solve).
Tensor laplacian_spectral(const Tensor& field, const Grid2D& grid);

/// 2nd-order central periodic Laplacian.
Tensor laplacian_fd(const Tensor& field, const Grid2D& grid);

/// Arakawa 9-point Jacobian J(omega, psi) = w_x p_y - w_y p_x, the average
/// of the J1, J2, J3 component forms; conserves the discrete sums J, w*J,
/// psi*J.
Tensor arakawa_jacobian(const Tensor& omega, const Tensor& psi, const Grid2D& grid);

/// Naive central-difference Jacobian, kept as a cross-check variant.
Tensor central_jacobian(const Tensor& omega, const Tensor& psi, const Grid2D& grid);

enum class LaplacianKind { FiniteDifference, Spectral };

/// Full tendency -J(omega, psi) + (1/Re) del^2 omega; psi from poisson_solve.
Tensor vortex_rhs(const Tensor& omega, const Grid2D& grid, double re,
                  LaplacianKind viscous = LaplacianKind::FiniteDifference);

double enstrophy(const Tensor& omega);
double kinetic_energy(const Tensor& omega, const Tensor& psi);
double mean_value(const Tensor& field);

/// Count strict local maxima above `threshold_fraction * max(omega)`
/// (8-neighbour census on the periodic grid). Reaching 1 signals a
/// completed merger.
std::size_t vortex_census(const Tensor& omega, double threshold_fraction = 0.5);

struct VortexRunResult {
    SnapshotMatrix omega;     // cells x (n_steps + 1)
    SnapshotMatrix rhs;       // cells x n_steps: tendency used for step t -> t+1
    double cfl_max = 0.0;
    double enstrophy_initial = 0.0;
    double enstrophy_final = 0.0;
};

/// SSP-RK3 rollout storing omega at every stored state and the tendency at
/// every step. Throws InstabilityError on non-finite states.
VortexRunResult run_vortex(VortexConfigTag tag, const Grid2D& grid, double re,
                           double dt, std::size_t n_steps,
                           LaplacianKind viscous = LaplacianKind::FiniteDifference);

/// Grayscale portable-pixmap export for quick visual checks.
void write_pgm(const std::string& path, const Tensor& field);

} // namespace deimlab

#include "deimlab/burgers.hpp"

#include "deimlab/errors.hpp"
#include "deimlab/integrate.hpp"

#include <algorithm>
#include <cmath>

namespace deimlab {

void set_column(SnapshotMatrix& m, std::size_t col, const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) m(i, col) = v[i];
}

std::vector<double> get_column(const SnapshotMatrix& m, std::size_t col) {
    std::vector<double> v(m.rows());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = m(i, col);
    return v;
}

Grid1D make_grid1d(std::size_t n, double length) {
    if (n < 4) throw ParameterError("grid1d: need at least 4 points, got " + std::to_string(n));
    if (!(length > 0.0)) throw ParameterError("grid1d: length must be positive");
    return Grid1D{n, length};
}

void BurgersConfig::validate() const {
    if (!(re > 0.0)) throw ParameterError("burgers: Re must be positive");
    if (!(t_final >= 0.0)) throw ParameterError("burgers: t_final must be >= 0");
    if (n_steps > 0 && !(dt() > 0.0)) throw ParameterError("burgers: dt must be positive");
    (void)grid();
}

double analytic_solution(double x, double t, double re) {
    const double tp1 = t + 1.0;
    // sqrt((t+1)/exp(Re/8)) * exp(Re x^2/(4(t+1))) folded into one exponent.
    const double expo = re * (x * x / (4.0 * tp1) - 1.0 / 16.0);
    const double denom = 1.0 + std::sqrt(tp1) * std::exp(expo);
    return (x / tp1) / denom;
}

std::vector<double> analytic_profile(const Grid1D& grid, double t, double re) {
    std::vector<double> u(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) u[i] = analytic_solution(grid.x(i), t, re);
    return u;
}

std::vector<double> initial_condition(const Grid1D& grid, double re) {
    std::vector<double> u = analytic_profile(grid, 0.0, re);
    u.front() = 0.0;
    u.back() = 0.0;
    return u;
}

namespace {

inline double flux(double u) { return 0.5 * u * u; }

// Upwind-biased one-sided 2nd-order difference of the flux at interior i.
// backward: (3f_i - 4f_{i-1} + f_{i-2}) / (2dx)   needs i >= 2
// forward: (-3f_i + 4f_{i+1} - f_{i+2}) / (2dx)   needs i <= n-3
// At i = 1 and i = n-2 only one of the two fits; take that one.
inline double flux_derivative(const std::vector<double>& u, std::size_t i,
                              std::size_t n, double inv_2dx) {
    const bool backward = (i == n - 2) || (u[i] >= 0.0 && i >= 2);
    if (backward) {
        return (3.0 * flux(u[i]) - 4.0 * flux(u[i - 1]) + flux(u[i - 2])) * inv_2dx;
    }
    return (-3.0 * flux(u[i]) + 4.0 * flux(u[i + 1]) - flux(u[i + 2])) * inv_2dx;
}

} // namespace

void nonlinear_term(const std::vector<double>& u, const Grid1D& grid,
                    std::vector<double>& out) {
    const std::size_t n = grid.n;
    if (u.size() != n) {
        throw DimensionError("nonlinear_term: state size " + std::to_string(u.size()) +
                             " vs grid " + std::to_string(n));
    }
    out.assign(n, 0.0);
    const double inv_2dx = 1.0 / (2.0 * grid.dx());
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!std::isfinite(u[i])) throw InputError("nonlinear_term: non-finite state entry");
        out[i] = -flux_derivative(u, i, n, inv_2dx);
    }
}

double nonlinear_term_at(const std::vector<double>& u, const Grid1D& grid,
                         std::size_t i) {
    const std::size_t n = grid.n;
    if (i == 0 || i >= n - 1) return 0.0;
    return -flux_derivative(u, i, n, 1.0 / (2.0 * grid.dx()));
}

std::vector<std::size_t> nonlinear_stencil_footprint(std::size_t i, std::size_t n) {
    std::vector<std::size_t> pts;
    if (i == 0 || i >= n - 1) return pts;
    const std::size_t lo = i >= 2 ? i - 2 : 0;
    const std::size_t hi = std::min(i + 2, n - 1);
    for (std::size_t j = lo; j <= hi; ++j) pts.push_back(j);
    return pts;
}

void linear_term(const std::vector<double>& u, const Grid1D& grid, double re,
                 std::vector<double>& out) {
    const std::size_t n = grid.n;
    out.assign(n, 0.0);
    const double c = 1.0 / (re * grid.dx() * grid.dx());
    for (std::size_t i = 1; i + 1 < n; ++i) {
        out[i] = c * (u[i + 1] - 2.0 * u[i] + u[i - 1]);
    }
}

void fom_rhs(const std::vector<double>& u, const Grid1D& grid, double re,
             std::vector<double>& out) {
    nonlinear_term(u, grid, out);
    std::vector<double> diff;
    linear_term(u, grid, re, diff);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += diff[i];
}

Tensor second_difference_matrix(const Grid1D& grid) {
    const std::size_t n = grid.n;
    Tensor d2({n, n});
    const double c = 1.0 / (grid.dx() * grid.dx());
    for (std::size_t i = 1; i + 1 < n; ++i) {
        d2(i, i - 1) = c;
        d2(i, i) = -2.0 * c;
        d2(i, i + 1) = c;
    }
    return d2;
}

void burgers_step(std::vector<double>& u, double dt, const Grid1D& grid, double re) {
    ssp_rk3_step(
        u, dt,
        [&](const std::vector<double>& s, std::vector<double>& k) { fom_rhs(s, grid, re, k); },
        [](std::vector<double>& s) {
            s.front() = 0.0;
            s.back() = 0.0;
        });
}

FomResult run_fom(const BurgersConfig& config) {
    config.validate();
    const Grid1D grid = config.grid();
    const std::size_t n = grid.n;
    const std::size_t cols = config.n_steps + 1;

    FomResult res;
    res.states = SnapshotMatrix({n, cols});
    res.nonlinear = SnapshotMatrix({n, cols});
    res.squared_error = SnapshotMatrix({n, cols});

    std::vector<double> u = initial_condition(grid, config.re);
    std::vector<double> adv;
    const double dt = config.n_steps > 0 ? config.dt() : 0.0;

    for (std::size_t step = 0; step <= config.n_steps; ++step) {
        double umax = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(u[i])) {
                throw InstabilityError("burgers: non-finite state at step " +
                                           std::to_string(step),
                                       static_cast<long>(step));
            }
            umax = std::max(umax, std::abs(u[i]));
        }
        if (config.n_steps > 0) {
            res.cfl_max = std::max(res.cfl_max, umax * dt / grid.dx());
        }

        set_column(res.states, step, u);
        nonlinear_term(u, grid, adv);
        set_column(res.nonlinear, step, adv);

        const double t = dt * static_cast<double>(step);
        for (std::size_t i = 0; i < n; ++i) {
            const double d = u[i] - analytic_solution(grid.x(i), t, config.re);
            const double sq = d * d;
            res.squared_error(i, step) = sq;
            res.max_squared_error = std::max(res.max_squared_error, sq);
        }

        if (step < config.n_steps) burgers_step(u, dt, grid, config.re);
    }
    return res;
}

} // namespace deimlab

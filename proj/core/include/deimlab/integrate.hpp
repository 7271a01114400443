#pragma once

#include <cstddef>
#include <vector>

namespace deimlab {

/// One Shu-Osher SSP-RK3 step on a flat state vector:
///   u1 = u + dt R(u)
///   u2 = 3/4 u + 1/4 (u1 + dt R(u1))
///   u+ = 1/3 u + 2/3 (u2 + dt R(u2))
/// `rhs(state, tendency)` fills the tendency; `post(state)` runs after every
/// stage (boundary reimposition; pass a no-op for periodic problems).
///
/// All solvers in the toolkit step through this one template, so two rollouts
/// driven by the same tendency function are bit-identical.
template <class Rhs, class Post>
void ssp_rk3_step(std::vector<double>& u, double dt, Rhs&& rhs, Post&& post) {
    const std::size_t n = u.size();
    std::vector<double> k(n), u1(n), u2(n);

    rhs(u, k);
    for (std::size_t i = 0; i < n; ++i) u1[i] = u[i] + dt * k[i];
    post(u1);

    rhs(u1, k);
    for (std::size_t i = 0; i < n; ++i)
        u2[i] = 0.75 * u[i] + 0.25 * (u1[i] + dt * k[i]);
    post(u2);

    rhs(u2, k);
    for (std::size_t i = 0; i < n; ++i)
        u[i] = (1.0 / 3.0) * u[i] + (2.0 / 3.0) * (u2[i] + dt * k[i]);
    post(u);
}

template <class Rhs>
void ssp_rk3_step(std::vector<double>& u, double dt, Rhs&& rhs) {
    ssp_rk3_step(u, dt, rhs, [](std::vector<double>&) {});
}

} // namespace deimlab

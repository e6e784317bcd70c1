#ifndef KGFLOW_QUADRATURE_HPP
#define KGFLOW_QUADRATURE_HPP

#include "kgflow/geometry.hpp"

namespace kgflow {

/// Midpoint rule over the box, `n` points per dimension. fn(pos, weight) with
/// weight = cell volume. Exact for trigonometric polynomials whose wavelengths
/// divide the box, which covers every lattice-mode integrand in this library.
template <class F>
void for_each_midpoint(const Box& box, int n, F&& fn) {
    const int nx = n;
    const int ny = box.dim >= 2 ? n : 1;
    const int nz = box.dim >= 3 ? n : 1;
    const double hx = box.lengths[0] / nx;
    const double hy = box.dim >= 2 ? box.lengths[1] / ny : 1.0;
    const double hz = box.dim >= 3 ? box.lengths[2] / nz : 1.0;
    double w = hx;
    if (box.dim >= 2) w *= hy;
    if (box.dim >= 3) w *= hz;
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j)
            for (int l = 0; l < nz; ++l) {
                Vec3 pos{(i + 0.5) * hx, box.dim >= 2 ? (j + 0.5) * hy : 0.0,
                         box.dim >= 3 ? (l + 0.5) * hz : 0.0};
                fn(pos, w);
            }
}

constexpr int kDefaultQuadraturePoints = 1 << 10;

}  // namespace kgflow

#endif

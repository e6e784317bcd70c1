#include "kgflow/geometry.hpp"

namespace kgflow {

void require_unit_timelike_future(const FourVector& n, double tol, const char* what) {
    const double nn = minkowski_square(n);
    if (std::abs(nn - 1.0) > tol)
        throw std::invalid_argument(std::string(what) + ": not unit timelike");
    if (!(n.t > 0.0))
        throw std::invalid_argument(std::string(what) + ": not future-oriented");
}

Hypersurface Hypersurface::constant_time(double t0) {
    SurfacePatch p;
    p.normal = {1.0, 0.0, 0.0, 0.0};
    p.base = {t0, 0.0, 0.0, 0.0};
    p.tangents = {FourVector{0, 1, 0, 0}, FourVector{0, 0, 1, 0}, FourVector{0, 0, 0, 1}};
    p.extent = {0.0, 0.0, 0.0};  // unbounded: used for crossing queries only
    p.sqrt_g3 = 1.0;
    p.spacelike = true;
    Hypersurface s;
    s.patches_ = {p};
    s.constant_time_plane_ = true;
    return s;
}

Hypersurface Hypersurface::constant_time(double t0, const Box& box) {
    Hypersurface s = constant_time(t0);
    for (int i = 0; i < box.dim; ++i) s.patches_[0].extent[i] = box.lengths[i];
    return s;
}

Hypersurface Hypersurface::boosted_plane(double zeta, const FourVector& base, double width) {
    const double ch = std::cosh(zeta), sh = std::sinh(zeta);
    SurfacePatch p;
    p.normal = {ch, sh, 0.0, 0.0};       // unit timelike for any zeta
    p.base = base;
    p.tangents = {FourVector{sh, ch, 0, 0}, FourVector{0, 0, 1, 0}, FourVector{0, 0, 0, 1}};
    p.extent = {width, 0.0, 0.0};
    p.sqrt_g3 = 1.0;                     // tangent is unit spacelike
    p.spacelike = true;
    Hypersurface s;
    s.patches_ = {p};
    s.constant_time_plane_ = (zeta == 0.0);
    return s;
}

Hypersurface Hypersurface::from_patches(std::vector<SurfacePatch> patches) {
    if (patches.empty()) throw std::invalid_argument("Hypersurface: no patches");
    Hypersurface s;
    s.constant_time_plane_ = true;
    for (const auto& p : patches) {
        if (p.normal.x != 0.0 || p.normal.y != 0.0 || p.normal.z != 0.0 || p.normal.t != 1.0)
            s.constant_time_plane_ = false;
    }
    if (s.constant_time_plane_) {
        const double t0 = patches[0].base.t;
        for (const auto& p : patches)
            if (p.base.t != t0) s.constant_time_plane_ = false;
    }
    s.patches_ = std::move(patches);
    return s;
}

double Hypersurface::time() const {
    if (!constant_time_plane_) throw std::logic_error("Hypersurface: not a constant-time plane");
    return patches_[0].base.t;
}

bool Hypersurface::spacelike() const {
    for (const auto& p : patches_)
        if (!p.spacelike) return false;
    return true;
}

double Hypersurface::signed_coordinate(const FourVector& x) const {
    const auto& p = patches_[0];
    return minkowski_dot(p.normal, x - p.base);
}

FourVector Hypersurface::surface_measure(std::size_t patch_index, double area_element) const {
    const auto& p = patches_.at(patch_index);
    return p.normal * (p.sqrt_g3 * area_element);
}

FoliationField::FoliationField() = default;

FoliationField::FoliationField(const FourVector& n) : n_(n) {
    require_unit_timelike_future(n, 1e-12, "FoliationField");
}

FoliationField::FoliationField(std::function<FourVector(const FourVector&)> n,
                               std::function<double(const FourVector&)> leaf_time)
    : constant_(false), n_fn_(std::move(n)), tau_fn_(std::move(leaf_time)) {
    if (!n_fn_ || !tau_fn_) throw std::invalid_argument("FoliationField: null callable");
}

FourVector FoliationField::normal(const FourVector& x) const {
    return constant_ ? n_ : n_fn_(x);
}

double FoliationField::leaf_time(const FourVector& x) const {
    if (constant_) return minkowski_dot(n_, x);
    return tau_fn_(x);
}

double FoliationField::divergence(const FourVector& x, double h) const {
    if (constant_) return 0.0;
    // d_mu N^mu = d_t N^0 + d_x N^1 + d_y N^2 + d_z N^3 (partial derivatives,
    // flat spacetime), central differences.
    double div = 0.0;
    for (int mu = 0; mu < 4; ++mu) {
        FourVector xp = x, xm = x;
        xp[mu] += h;
        xm[mu] -= h;
        div += (n_fn_(xp)[mu] - n_fn_(xm)[mu]) / (2.0 * h);
    }
    return div;
}

}  // namespace kgflow

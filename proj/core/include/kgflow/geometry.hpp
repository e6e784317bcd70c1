#ifndef KGFLOW_GEOMETRY_HPP
#define KGFLOW_GEOMETRY_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace kgflow {

/// Spacetime point or vector with components (t, x, y, z).
/// Metric signature (+,-,-,-), natural units.
struct FourVector {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr double operator[](int i) const {
        return i == 0 ? t : i == 1 ? x : i == 2 ? y : z;
    }
    double& operator[](int i) {
        return i == 0 ? t : i == 1 ? x : i == 2 ? y : z;
    }

    constexpr FourVector operator+(const FourVector& o) const { return {t + o.t, x + o.x, y + o.y, z + o.z}; }
    constexpr FourVector operator-(const FourVector& o) const { return {t - o.t, x - o.x, y - o.y, z - o.z}; }
    constexpr FourVector operator*(double s) const { return {t * s, x * s, y * s, z * s}; }
    constexpr FourVector operator/(double s) const { return {t / s, x / s, y / s, z / s}; }
    constexpr FourVector operator-() const { return {-t, -x, -y, -z}; }
    FourVector& operator+=(const FourVector& o) {
        t += o.t; x += o.x; y += o.y; z += o.z;
        return *this;
    }

    /// Euclidean norm of all four components; used for step control and
    /// stagnation detection, not a Lorentz-invariant quantity.
    double euclidean_norm() const { return std::sqrt(t * t + x * x + y * y + z * z); }
};

constexpr FourVector operator*(double s, const FourVector& v) { return v * s; }

/// a^0 b^0 - a^1 b^1 - a^2 b^2 - a^3 b^3.
constexpr double minkowski_dot(const FourVector& a, const FourVector& b) {
    return a.t * b.t - a.x * b.x - a.y * b.y - a.z * b.z;
}

constexpr double minkowski_square(const FourVector& a) { return minkowski_dot(a, a); }

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr bool operator==(const Vec3& o) const = default;
};

/// Periodic spatial box; dim in {1,2,3}. Lengths beyond dim are ignored.
struct Box {
    int dim = 1;
    std::array<double, 3> lengths{1.0, 1.0, 1.0};

    Box() = default;
    Box(int d, std::array<double, 3> len) : dim(d), lengths(len) {
        if (d < 1 || d > 3) throw std::invalid_argument("Box: dim must be 1, 2 or 3");
        for (int i = 0; i < d; ++i)
            if (!(lengths[i] > 0.0)) throw std::invalid_argument("Box: lengths must be positive");
    }
    static Box line(double length) { return Box(1, {length, 1.0, 1.0}); }

    double volume() const {
        double v = 1.0;
        for (int i = 0; i < dim; ++i) v *= lengths[i];
        return v;
    }
    /// Wrap a spatial coordinate into the fundamental cell [0, L_i).
    double wrap(double value, int axis) const {
        const double L = lengths[axis];
        double w = std::fmod(value, L);
        if (w < 0.0) w += L;
        return w;
    }
};

/// One planar piece of a hypersurface. `normal` is the unit Minkowski normal
/// (future-oriented when timelike), `tangents` span the surface, `extent`
/// bounds the surface coordinates relative to `base`.
struct SurfacePatch {
    FourVector normal{1.0, 0.0, 0.0, 0.0};
    FourVector base{};
    std::array<FourVector, 3> tangents{FourVector{0, 1, 0, 0}, FourVector{0, 0, 1, 0}, FourVector{0, 0, 0, 1}};
    std::array<double, 3> extent{1.0, 1.0, 1.0};
    double sqrt_g3 = 1.0;      // |g^(3)|^(1/2) on the patch
    bool spacelike = true;     // false marks a non-spacelike piece

    FourVector point(const std::array<double, 3>& u, int dim) const {
        FourVector p = base;
        for (int i = 0; i < dim; ++i) p += tangents[i] * u[i];
        return p;
    }

    /// Whether a point of the patch plane lies inside the bounded extents.
    /// Surface coordinates are recovered with the unit spacelike tangents
    /// (e.e = -1), so u_i = -e_i.(x - base); extent 0 leaves a direction
    /// unbounded.
    bool contains(const FourVector& x, double tol = 1e-9) const {
        const FourVector d = x - base;
        for (int i = 0; i < 3; ++i) {
            if (extent[i] <= 0.0) continue;
            const double u = -minkowski_dot(tangents[i], d);
            if (u < -tol || u > extent[i] + tol) return false;
        }
        return true;
    }
};

/// Piecewise-planar hypersurface. The common case is a single constant-time
/// plane t = t0 spanning the box (or the whole of space for crossing queries).
class Hypersurface {
  public:
    static Hypersurface constant_time(double t0);
    /// Constant-time plane restricted to the cell of `box`.
    static Hypersurface constant_time(double t0, const Box& box);
    /// Plane boosted in the x direction by rapidity zeta, through `base`,
    /// spanning `width` in its own surface coordinate (1+1 dimensional use).
    static Hypersurface boosted_plane(double zeta, const FourVector& base, double width);
    static Hypersurface from_patches(std::vector<SurfacePatch> patches);

    bool is_constant_time() const { return constant_time_plane_; }
    double time() const;
    bool spacelike() const;
    const std::vector<SurfacePatch>& patches() const { return patches_; }

    /// Signed coordinate of x relative to the surface plane, n.(x - base).
    /// Requires all patches to lie in one plane (true for every surface this
    /// library constructs); crossing detection runs on its zero level set.
    double signed_coordinate(const FourVector& x) const;

    /// dS^mu for a surface element of a given patch: n^mu |g3|^(1/2) dA.
    FourVector surface_measure(std::size_t patch_index, double area_element) const;

  private:
    std::vector<SurfacePatch> patches_;
    bool constant_time_plane_ = false;
};

/// Preferred-foliation field: unit timelike future-oriented N^mu(x) together
/// with a leaf time tau(x) whose level sets are the leaves (grad tau = N).
/// Default is the constant lab-frame foliation N = (1,0,0,0), tau = t.
class FoliationField {
  public:
    FoliationField();                                  // constant (1,0,0,0)
    explicit FoliationField(const FourVector& n);      // constant boost of the lab foliation
    FoliationField(std::function<FourVector(const FourVector&)> n,
                   std::function<double(const FourVector&)> leaf_time);

    FourVector normal(const FourVector& x) const;
    double leaf_time(const FourVector& x) const;
    bool constant() const { return constant_; }

    /// Finite-difference divergence at x (exactly zero for constant fields).
    double divergence(const FourVector& x, double h = 1e-5) const;

  private:
    bool constant_ = true;
    FourVector n_{1.0, 0.0, 0.0, 0.0};
    std::function<FourVector(const FourVector&)> n_fn_;
    std::function<double(const FourVector&)> tau_fn_;
};

/// Checks |n.n - 1| <= tol, n^0 > 0. Throws std::invalid_argument on failure.
void require_unit_timelike_future(const FourVector& n, double tol = 1e-12, const char* what = "normal");

}  // namespace kgflow

#endif

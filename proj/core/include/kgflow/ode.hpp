#ifndef KGFLOW_ODE_HPP
#define KGFLOW_ODE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace kgflow {

struct OdeOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = 0.25;       // cap on |h|
    double initial_step = 0.0;    // 0 = choose automatically
    long max_steps = 1000000;
};

enum class OdeStatus {
    reached_end,        // integrated to s_end
    stopped_by_observer,
    step_underflow,
    max_steps_exceeded,
};

/// One accepted step with its continuous extension. Valid only inside the
/// observer callback; copy the coefficient arrays to retain it.
struct DenseSegment {
    double s0 = 0.0;  // step start
    double h = 0.0;   // signed step
    int dim = 0;
    const double* y0 = nullptr;
    const double* y1 = nullptr;
    // Quartic interpolant u(theta) = r1 + th*r2 + th*t1*r3 + th^2*t1*r4 + th^2*t1^2*r5,
    // th = (s - s0)/h, t1 = 1 - th.
    const double* r1 = nullptr;
    const double* r2 = nullptr;
    const double* r3 = nullptr;
    const double* r4 = nullptr;
    const double* r5 = nullptr;

    double s_end() const { return s0 + h; }

    void eval(double s, double* out) const {
        const double th = (s - s0) / h;
        const double t1 = 1.0 - th;
        for (int i = 0; i < dim; ++i)
            out[i] = r1[i] +
                     th * (r2[i] + t1 * (r3[i] + th * (r4[i] + t1 * r5[i])));
    }

    /// du/ds on the segment.
    void eval_derivative(double s, double* out) const {
        const double th = (s - s0) / h;
        const double t1 = 1.0 - th;
        // d/dth of r2*th + r3*th*t1 + r4*th^2*t1 + r5*th^2*t1^2
        for (int i = 0; i < dim; ++i) {
            const double d = r2[i] + r3[i] * (t1 - th) + r4[i] * th * (2.0 * t1 - th) +
                             r5[i] * 2.0 * th * t1 * (t1 - th);
            out[i] = d / h;
        }
    }
};

/// Adaptive Dormand-Prince 5(4) with first-same-as-last reuse and a
/// fourth-order continuous extension. rhs(s, y, dy) fills dy; observer is
/// called once per accepted step and returns false to stop. Works in either
/// direction (s_end < s0 integrates with negative steps).
template <class Rhs, class Observer>
OdeStatus integrate_dp54(int dim, Rhs&& rhs, double s0, const std::vector<double>& y_init,
                         double s_end, const OdeOptions& opt, Observer&& observer) {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                            a75 = -2187.0 / 6784, a76 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    static constexpr double d1 = -12715105075.0 / 11282082432.0,
                            d3 = 87487479700.0 / 32700410799.0,
                            d4 = -10690763975.0 / 1880347072.0,
                            d5 = 701980252875.0 / 199316789632.0,
                            d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

    if (s_end == s0) return OdeStatus::reached_end;
    const double dir = s_end > s0 ? 1.0 : -1.0;

    std::vector<double> y(y_init), y1(dim), ytmp(dim);
    std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim);
    std::vector<double> r1(dim), r2(dim), r3(dim), r4(dim), r5(dim);

    double s = s0;
    rhs(s, y.data(), k1.data());

    // Initial step: balance of state and slope in error-scale units, refined
    // by an Euler probe of the curvature. A too-small first step is not just
    // wasted work: its dense output is dominated by cancellation in y1 - y0.
    double h;
    if (opt.initial_step > 0.0) {
        h = std::min(opt.initial_step, opt.max_step);
    } else {
        double d0 = 0.0, d1 = 0.0;
        for (int i = 0; i < dim; ++i) {
            const double sc = opt.abs_tol + opt.rel_tol * std::abs(y[i]);
            d0 += (y[i] / sc) * (y[i] / sc);
            d1 += (k1[i] / sc) * (k1[i] / sc);
        }
        d0 = std::sqrt(d0 / dim);
        d1 = std::sqrt(d1 / dim);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, opt.max_step);
        for (int i = 0; i < dim; ++i) ytmp[i] = y[i] + dir * h0 * k1[i];
        rhs(s + dir * h0, ytmp.data(), k2.data());
        double d2 = 0.0;
        for (int i = 0; i < dim; ++i) {
            const double sc = opt.abs_tol + opt.rel_tol * std::abs(y[i]);
            const double df = (k2[i] - k1[i]) / sc;
            d2 += df * df;
        }
        d2 = std::sqrt(d2 / dim) / h0;
        const double dm = std::max(d1, d2);
        const double h1 = dm > 1e-15 ? std::pow(0.01 / dm, 0.2) : std::max(1e-6, h0 * 1e-3);
        h = std::min({100.0 * h0, h1, opt.max_step});
    }
    h = std::min(h, std::abs(s_end - s));

    for (long step = 0; step < opt.max_steps; ++step) {
        const double remaining = dir * (s_end - s);
        if (remaining <= 0.0) return OdeStatus::reached_end;
        bool last = false;
        if (h >= remaining * (1.0 - 1e-12)) {
            h = remaining;
            last = true;
        }
        if (h < 1e-14 * std::max(1.0, std::abs(s))) return OdeStatus::step_underflow;
        const double hs = dir * h;

        for (int i = 0; i < dim; ++i) ytmp[i] = y[i] + hs * a21 * k1[i];
        rhs(s + c2 * hs, ytmp.data(), k2.data());
        for (int i = 0; i < dim; ++i) ytmp[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
        rhs(s + c3 * hs, ytmp.data(), k3.data());
        for (int i = 0; i < dim; ++i)
            ytmp[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(s + c4 * hs, ytmp.data(), k4.data());
        for (int i = 0; i < dim; ++i)
            ytmp[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(s + c5 * hs, ytmp.data(), k5.data());
        for (int i = 0; i < dim; ++i)
            ytmp[i] =
                y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        rhs(s + hs, ytmp.data(), k6.data());
        for (int i = 0; i < dim; ++i)
            y1[i] =
                y[i] + hs * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
        rhs(s + hs, y1.data(), k7.data());

        double err = 0.0;
        for (int i = 0; i < dim; ++i) {
            const double e = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                   e6 * k6[i] + e7 * k7[i]);
            const double scale =
                opt.abs_tol + opt.rel_tol * std::max(std::abs(y[i]), std::abs(y1[i]));
            err += (e / scale) * (e / scale);
        }
        err = std::sqrt(err / dim);

        const double factor = std::clamp(0.9 * std::pow(std::max(err, 1e-16), -0.2), 0.2, 5.0);
        if (err > 1.0) {
            h = std::max(h * factor, 1e-16);
            continue;
        }

        for (int i = 0; i < dim; ++i) {
            const double dy = y1[i] - y[i];
            r1[i] = y[i];
            r2[i] = dy;
            r3[i] = hs * k1[i] - dy;
            r4[i] = dy - hs * k7[i] - r3[i];
            r5[i] = hs * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] +
                          d7 * k7[i]);
        }
        DenseSegment seg;
        seg.s0 = s;
        seg.h = hs;
        seg.dim = dim;
        seg.y0 = y.data();
        seg.y1 = y1.data();
        seg.r1 = r1.data();
        seg.r2 = r2.data();
        seg.r3 = r3.data();
        seg.r4 = r4.data();
        seg.r5 = r5.data();

        s += hs;
        std::swap(y, y1);
        std::swap(k1, k7);  // first-same-as-last

        if (!observer(static_cast<const DenseSegment&>(seg)))
            return OdeStatus::stopped_by_observer;
        if (last) return OdeStatus::reached_end;

        h = std::min(h * factor, opt.max_step);
    }
    return OdeStatus::max_steps_exceeded;
}

}  // namespace kgflow

#endif

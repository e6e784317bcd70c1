#include "kgflow/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kgflow {

BatchStats batch_total(std::span<const double> values, int batches) {
    const std::size_t n = values.size();
    BatchStats out;
    for (double v : values) out.total += v;
    if (n == 0 || batches < 2) return out;
    const std::size_t B = std::min<std::size_t>(batches, n);

    // Batch means of the per-sample values; SE of the grand total follows
    // from the spread of the batch means.
    std::vector<double> means(B);
    for (std::size_t b = 0; b < B; ++b) {
        const std::size_t lo = n * b / B, hi = n * (b + 1) / B;
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += values[i];
        means[b] = s / static_cast<double>(hi - lo);
    }
    double mbar = 0.0;
    for (double m : means) mbar += m;
    mbar /= static_cast<double>(B);
    double var = 0.0;
    for (double m : means) var += (m - mbar) * (m - mbar);
    var /= static_cast<double>(B - 1);
    out.se = static_cast<double>(n) * std::sqrt(var / static_cast<double>(B));
    return out;
}

KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf) {
    if (samples.empty()) throw std::invalid_argument("ks_test: no samples");
    std::sort(samples.begin(), samples.end());
    const std::size_t n = samples.size();
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = cdf(samples[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    const double sn = std::sqrt(static_cast<double>(n));
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    double p = 0.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = 2.0 * ((j % 2) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lambda * lambda);
        p += term;
        if (std::abs(term) < 1e-16) break;
    }
    return {d, std::clamp(p, 0.0, 1.0)};
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need >= 2 points");
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
    LineFit f;
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

double golden_section_min(const std::function<double(double)>& f, double a, double b, double tol) {
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - phi * (b - a);
    double d = a + phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace kgflow

#include "handover/signal.hpp"

#include "handover/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace handover::signal {

void FilterSpec::validate() const
{
    if (order < 1) fail(ErrorKind::Parameter, "filter order must be positive");
    if (!(sample_rate_hz > 0.0)) fail(ErrorKind::Parameter, "sample rate must be positive");
    if (!(cutoff_hz > 0.0)) fail(ErrorKind::Parameter, "cutoff must be positive");
    if (!(cutoff_hz < sample_rate_hz / 2.0))
        fail(ErrorKind::Parameter, "cutoff " + std::to_string(cutoff_hz) + " Hz is not below Nyquist " + std::to_string(sample_rate_hz / 2.0) + " Hz");
}

namespace {

using Complex = std::complex<double>;

std::vector<double> real_poly_from_roots(const std::vector<Complex>& roots)
{
    std::vector<Complex> poly{1.0};
    for (const auto& r : roots) {
        std::vector<Complex> next(poly.size() + 1, 0.0);
        for (std::size_t i = 0; i < poly.size(); ++i) {
            next[i] += poly[i];
            next[i + 1] -= r * poly[i];
        }
        poly = std::move(next);
    }
    std::vector<double> out(poly.size());
    std::transform(poly.begin(), poly.end(), out.begin(), [](Complex c) { return c.real(); });
    return out;
}

double sum(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

}  // namespace

IirCoefficients butterworth_coeffs(const FilterSpec& spec)
{
    spec.validate();
    const int n = spec.order;
    const double fs2 = 2.0 * spec.sample_rate_hz;
    const double warped = fs2 * std::tan(std::numbers::pi * spec.cutoff_hz / spec.sample_rate_hz);

    std::vector<Complex> poles;
    poles.reserve(n);
    for (int k = 1; k <= n; ++k) {
        const double theta = std::numbers::pi * (2.0 * k + n - 1.0) / (2.0 * n);
        const Complex s = warped * std::polar(1.0, theta);
        poles.push_back((fs2 + s) / (fs2 - s));
    }
    std::vector<Complex> zeros(n, Complex(-1.0, 0.0));

    IirCoefficients c;
    c.a = real_poly_from_roots(poles);
    c.b = real_poly_from_roots(zeros);
    const double gain = sum(c.a) / sum(c.b);
    for (double& v : c.b) v *= gain;
    return c;
}

std::complex<double> frequency_response(const IirCoefficients& c, double freq_hz, double sample_rate_hz)
{
    const Complex z_inv = std::polar(1.0, -2.0 * std::numbers::pi * freq_hz / sample_rate_hz);
    auto eval = [&](const std::vector<double>& p) {
        Complex acc = 0.0;
        for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * z_inv + *it;
        return acc;
    };
    return eval(c.b) / eval(c.a);
}

std::vector<double> lfilter(const IirCoefficients& c, std::span<const double> x)
{
    const std::size_t order = c.a.size() - 1;
    std::vector<double> y(x.size());
    if (x.empty()) return y;

    // Transposed direct form II, state initialised at the steady state of a
    // constant input x[0].
    const double dc = sum(c.b) / sum(c.a);
    std::vector<double> z(order + 1, 0.0);
    for (std::size_t i = order; i-- > 0;) z[i] = z[i + 1] + (c.b[i + 1] - c.a[i + 1] * dc);
    for (std::size_t i = 0; i < order; ++i) z[i] *= x[0];

    for (std::size_t k = 0; k < x.size(); ++k) {
        const double out = c.b[0] * x[k] + z[0];
        for (std::size_t i = 0; i < order; ++i) z[i] = c.b[i + 1] * x[k] + z[i + 1] - c.a[i + 1] * out;
        y[k] = out;
    }
    return y;
}

namespace {

std::vector<double> reversed(std::vector<double> v)
{
    std::reverse(v.begin(), v.end());
    return v;
}

}  // namespace

std::vector<double> filtfilt(std::span<const double> x, const FilterSpec& spec)
{
    const auto c = butterworth_coeffs(spec);
    const std::size_t n = x.size();
    const std::size_t padlen_nominal = 3 * static_cast<std::size_t>(spec.order);
    if (n < padlen_nominal || n < 2)
        fail(ErrorKind::Length, "filtfilt needs at least " + std::to_string(padlen_nominal) + " samples, got " + std::to_string(n));
    const std::size_t pad = std::min(padlen_nominal, n - 1);

    std::vector<double> padded;
    padded.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i) padded.push_back(2.0 * x[0] - x[i]);
    padded.insert(padded.end(), x.begin(), x.end());
    for (std::size_t i = 1; i <= pad; ++i) padded.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

    const auto forward_backward = reversed(lfilter(c, reversed(lfilter(c, padded))));
    const auto backward_forward = lfilter(c, reversed(lfilter(c, reversed(padded))));

    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = 0.5 * (forward_backward[pad + i] + backward_forward[pad + i]);
    return out;
}

std::vector<Vec3> filtfilt(std::span<const Vec3> x, const FilterSpec& spec)
{
    std::vector<Vec3> out(x.size());
    std::vector<double> axis(x.size());
    for (int d = 0; d < 3; ++d) {
        for (std::size_t i = 0; i < x.size(); ++i) axis[i] = x[i][d];
        const auto f = filtfilt(axis, spec);
        for (std::size_t i = 0; i < x.size(); ++i) out[i][d] = f[i];
    }
    return out;
}

std::vector<double> differentiate(std::span<const double> x, double dt)
{
    const std::size_t n = x.size();
    if (n < 3) fail(ErrorKind::Length, "differentiate needs at least 3 samples, got " + std::to_string(n));
    if (!(dt > 0.0)) fail(ErrorKind::Parameter, "dt must be positive");
    std::vector<double> d(n);
    const double inv = 1.0 / (2.0 * dt);
    // Written as differences from the end sample so a constant gives exactly 0.
    d[0] = (4.0 * (x[1] - x[0]) - (x[2] - x[0])) * inv;
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (x[i + 1] - x[i - 1]) * inv;
    d[n - 1] = (4.0 * (x[n - 1] - x[n - 2]) - (x[n - 1] - x[n - 3])) * inv;
    return d;
}

std::vector<Vec3> differentiate(std::span<const Vec3> x, double dt)
{
    std::vector<Vec3> out(x.size());
    std::vector<double> axis(x.size());
    for (int k = 0; k < 3; ++k) {
        for (std::size_t i = 0; i < x.size(); ++i) axis[i] = x[i][k];
        const auto d = differentiate(axis, dt);
        for (std::size_t i = 0; i < x.size(); ++i) out[i][k] = d[i];
    }
    return out;
}

std::optional<std::size_t> first_crossing(std::span<const double> x, double threshold, Direction direction, std::size_t from)
{
    if (from > x.size()) fail(ErrorKind::Bounds, "first_crossing start index out of range");
    for (std::size_t i = std::max<std::size_t>(from, 1); i < x.size(); ++i) {
        if (direction == Direction::Rising ? (x[i - 1] <= threshold && x[i] > threshold) : (x[i - 1] >= threshold && x[i] < threshold))
            return i;
    }
    return std::nullopt;
}

}  // namespace handover::signal

#pragma once

#include "handover/data.hpp"

#include <complex>
#include <optional>
#include <span>
#include <vector>

namespace handover::signal {

struct FilterSpec {
    int order = 4;
    double cutoff_hz = 5.0;
    double sample_rate_hz = kSampleRateHz;

    // Throws Error(Parameter) unless 0 < cutoff < Nyquist and order >= 1.
    void validate() const;
};

// Direct-form coefficients with a[0] == 1.
struct IirCoefficients {
    std::vector<double> b;
    std::vector<double> a;
};

// Digital Butterworth low-pass via bilinear transform with frequency
// pre-warping. Feedforward taps are scaled so that sum(b) == sum(a).
IirCoefficients butterworth_coeffs(const FilterSpec& spec);

std::complex<double> frequency_response(const IirCoefficients& c, double freq_hz, double sample_rate_hz);

// One causal pass, starting from the steady state of a constant input equal
// to x[0].
std::vector<double> lfilter(const IirCoefficients& c, std::span<const double> x);

// Zero-phase low-pass with odd-reflection padding of 3 x order samples.
// The result is the mean of the forward-backward and backward-forward passes,
// which makes the operator commute exactly with time reversal.
std::vector<double> filtfilt(std::span<const double> x, const FilterSpec& spec = {});
std::vector<Vec3> filtfilt(std::span<const Vec3> x, const FilterSpec& spec = {});

// Central differences inside, second-order one-sided differences at the ends.
std::vector<double> differentiate(std::span<const double> x, double dt);
std::vector<Vec3> differentiate(std::span<const Vec3> x, double dt);

enum class Direction { Rising, Falling };

// Smallest i >= max(from, 1) with x[i-1] <= thr < x[i] (rising) or
// x[i-1] >= thr > x[i] (falling).
std::optional<std::size_t> first_crossing(std::span<const double> x, double threshold, Direction direction, std::size_t from = 0);

}  // namespace handover::signal

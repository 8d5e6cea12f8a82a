#pragma once

// VAE-LSTM grip-release classifier: encoder LSTM -> Gaussian latent ->
// decoder LSTM fed the latent at every step -> logistic output head.
// The decoder predicts the release label; nothing is reconstructed.

#include "handover/gripnet/lstm.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace handover::gripnet {

inline constexpr int kInputs = 3;  // F_y, F_z, w
inline constexpr int kHidden = 10;
inline constexpr int kLatent = 10;
inline constexpr int kSteps = 100;

using Series = Eigen::Matrix<double, kSteps, kInputs, Eigen::RowMajor>;
using Latent = Eigen::Matrix<double, kLatent, 1>;

struct GripWindow {
    Series series = Series::Zero();
    int t_e = 0;  // last step, relative to t = 0
    int label = 0;
};

struct Normalization {
    std::array<double, kInputs> mean{0.0, 0.0, 0.0};
    std::array<double, kInputs> stddev{1.0, 1.0, 1.0};

    bool operator==(const Normalization&) const = default;
};

// Per-channel z-score statistics over every step of the selected windows.
// Channels with std below 1e-12 get std 1.
Normalization compute_normalization(std::span<const GripWindow> windows, std::span<const std::size_t> indices);
Normalization compute_normalization(std::span<const GripWindow> windows);

struct VaeLstmModel {
    LstmCell<kInputs, kHidden> encoder;
    Eigen::Matrix<double, kLatent, kHidden> mu_w;
    Latent mu_b;
    Eigen::Matrix<double, kLatent, kHidden> logvar_w;
    Latent logvar_b;
    LstmCell<kLatent, kHidden> decoder;
    Eigen::Matrix<double, 1, kHidden> out_w;
    Eigen::Matrix<double, 1, 1> out_b;
    Normalization norm;

    static constexpr std::size_t kParameterCount = 4 * kHidden * (kInputs + kHidden + 1) + 2 * kLatent * (kHidden + 1) +
                                                   4 * kHidden * (kLatent + kHidden + 1) + kHidden + 1;

    static VaeLstmModel zeros();
    // Uniform(-1/sqrt(H), 1/sqrt(H)) for every parameter.
    static VaeLstmModel random(std::uint64_t seed);

    // Visits parameter tensors in declaration order: f(name, data, size).
    // Matrices are visited in Eigen's column-major storage order.
    template <class F>
    void visit(F&& f)
    {
        f("encoder.w_ih", encoder.w_ih.data(), encoder.w_ih.size());
        f("encoder.w_hh", encoder.w_hh.data(), encoder.w_hh.size());
        f("encoder.bias", encoder.bias.data(), encoder.bias.size());
        f("mu.w", mu_w.data(), mu_w.size());
        f("mu.b", mu_b.data(), mu_b.size());
        f("logvar.w", logvar_w.data(), logvar_w.size());
        f("logvar.b", logvar_b.data(), logvar_b.size());
        f("decoder.w_ih", decoder.w_ih.data(), decoder.w_ih.size());
        f("decoder.w_hh", decoder.w_hh.data(), decoder.w_hh.size());
        f("decoder.bias", decoder.bias.data(), decoder.bias.size());
        f("out.w", out_w.data(), out_w.size());
        f("out.b", out_b.data(), out_b.size());
    }
    template <class F>
    void visit(F&& f) const
    {
        const_cast<VaeLstmModel*>(this)->visit([&](std::string_view name, double* data, Eigen::Index n) {
            f(name, static_cast<const double*>(data), n);
        });
    }

    std::vector<double> parameters() const;
    void set_parameters(std::span<const double> values);
    bool all_finite() const;
};

struct ParameterGroup {
    std::string_view name;
    std::size_t offset = 0;
    std::size_t size = 0;
};
std::vector<ParameterGroup> parameter_groups();

struct ForwardResult {
    double p = 0.5;
    Latent mu = Latent::Zero();
    Latent logvar = Latent::Zero();
};

// Eval mode: z = mu. Deterministic.
ForwardResult forward_eval(const VaeLstmModel& model, const Series& series);
// Train mode: z = mu + exp(logvar / 2) * eps with caller-supplied eps.
ForwardResult forward_train(const VaeLstmModel& model, const Series& series, const Latent& eps);

inline constexpr double kProbClamp = 1e-7;

struct LossTerms {
    double recon = 0.0;
    double kl = 0.0;
    double total = 0.0;
};

// Single-sample terms (batch of one).
double bce(double p, int label);
double kl_divergence(const Latent& mu, const Latent& logvar);
LossTerms loss(double p, int label, const Latent& mu, const Latent& logvar);

struct LossOptions {
    // Diagnostic switches; training always uses both terms.
    bool recon = true;
    bool kl = true;
};

// Batch-averaged train-mode loss for windows[k] with noise eps[k].
LossTerms batch_loss(const VaeLstmModel& model, std::span<const GripWindow* const> batch, std::span<const Latent> eps,
                     const LossOptions& options = {});

// Same loss, with exact gradients written into `grad` (overwritten, same
// layout as the model; grad.norm is untouched).
LossTerms backward(const VaeLstmModel& model, std::span<const GripWindow* const> batch, std::span<const Latent> eps, VaeLstmModel& grad,
                   const LossOptions& options = {});

std::vector<const GripWindow*> pointers(std::span<const GripWindow> windows);

}  // namespace handover::gripnet

#include "handover/gripnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace handover::gripnet {

Normalization compute_normalization(std::span<const GripWindow> windows, std::span<const std::size_t> indices)
{
    if (indices.empty()) fail(ErrorKind::Parameter, "normalization needs at least one window");
    Normalization n;
    const double count = static_cast<double>(indices.size()) * kSteps;
    for (int ch = 0; ch < kInputs; ++ch) {
        double sum = 0.0;
        for (auto k : indices)
            for (int t = 0; t < kSteps; ++t) sum += windows[k].series(t, ch);
        const double m = sum / count;
        double ss = 0.0;
        for (auto k : indices)
            for (int t = 0; t < kSteps; ++t) {
                const double d = windows[k].series(t, ch) - m;
                ss += d * d;
            }
        const double sd = std::sqrt(ss / count);
        n.mean[ch] = m;
        n.stddev[ch] = sd < 1e-12 ? 1.0 : sd;
    }
    return n;
}

Normalization compute_normalization(std::span<const GripWindow> windows)
{
    std::vector<std::size_t> all(windows.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return compute_normalization(windows, all);
}

VaeLstmModel VaeLstmModel::zeros()
{
    VaeLstmModel m;
    m.visit([](std::string_view, double* data, Eigen::Index n) { std::fill(data, data + n, 0.0); });
    return m;
}

VaeLstmModel VaeLstmModel::random(std::uint64_t seed)
{
    VaeLstmModel m;
    std::mt19937_64 rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(kHidden));
    std::uniform_real_distribution<double> dist(-bound, bound);
    m.visit([&](std::string_view, double* data, Eigen::Index n) {
        for (Eigen::Index i = 0; i < n; ++i) data[i] = dist(rng);
    });
    return m;
}

std::vector<double> VaeLstmModel::parameters() const
{
    std::vector<double> out;
    out.reserve(kParameterCount);
    visit([&](std::string_view, const double* data, Eigen::Index n) { out.insert(out.end(), data, data + n); });
    return out;
}

void VaeLstmModel::set_parameters(std::span<const double> values)
{
    if (values.size() != kParameterCount)
        fail(ErrorKind::Shape, "expected " + std::to_string(kParameterCount) + " parameters, got " + std::to_string(values.size()));
    std::size_t at = 0;
    visit([&](std::string_view, double* data, Eigen::Index n) {
        std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(at), n, data);
        at += static_cast<std::size_t>(n);
    });
}

bool VaeLstmModel::all_finite() const
{
    bool ok = true;
    visit([&](std::string_view, const double* data, Eigen::Index n) {
        for (Eigen::Index i = 0; i < n; ++i) ok = ok && std::isfinite(data[i]);
    });
    return ok;
}

std::vector<ParameterGroup> parameter_groups()
{
    std::vector<ParameterGroup> groups;
    std::size_t at = 0;
    VaeLstmModel::zeros().visit([&](std::string_view name, const double*, Eigen::Index n) {
        groups.push_back({name, at, static_cast<std::size_t>(n)});
        at += static_cast<std::size_t>(n);
    });
    return groups;
}

namespace {

using EncCell = LstmCell<kInputs, kHidden>;
using DecCell = LstmCell<kLatent, kHidden>;
using HiddenVec = Eigen::Matrix<double, kHidden, 1>;
using InputVec = Eigen::Matrix<double, kInputs, 1>;

// Forward pass with optional caches for backpropagation.
struct Pass {
    std::vector<LstmCache<kInputs, kHidden>> enc;
    std::vector<LstmCache<kLatent, kHidden>> dec;
    HiddenVec h_enc;
    Latent z;
    HiddenVec h_dec;
    double logit = 0.0;
    ForwardResult out;
};

InputVec normalized(const VaeLstmModel& m, const Series& s, int t)
{
    InputVec x;
    for (int ch = 0; ch < kInputs; ++ch) x[ch] = (s(t, ch) - m.norm.mean[ch]) / m.norm.stddev[ch];
    return x;
}

void run(const VaeLstmModel& m, const Series& series, const Latent* eps, Pass& pass, bool keep_cache)
{
    if (keep_cache) {
        pass.enc.resize(kSteps);
        pass.dec.resize(kSteps);
    }
    auto s = LstmState<kHidden>::zero(kHidden);
    for (int t = 0; t < kSteps; ++t) s = lstm_step(m.encoder, normalized(m, series, t), s, keep_cache ? &pass.enc[t] : nullptr);
    pass.h_enc = s.h;

    pass.out.mu = m.mu_b;
    pass.out.mu.noalias() += m.mu_w * s.h;
    pass.out.logvar = m.logvar_b;
    pass.out.logvar.noalias() += m.logvar_w * s.h;
    pass.z = pass.out.mu;
    if (eps) pass.z += (0.5 * pass.out.logvar.array()).exp().matrix().cwiseProduct(*eps);

    auto d = LstmState<kHidden>::zero(kHidden);
    for (int t = 0; t < kSteps; ++t) d = lstm_step(m.decoder, pass.z, d, keep_cache ? &pass.dec[t] : nullptr);
    pass.h_dec = d.h;
    pass.logit = (m.out_w * d.h)(0, 0) + m.out_b(0, 0);
    pass.out.p = 1.0 / (1.0 + std::exp(-pass.logit));

    if (!std::isfinite(pass.out.p) || !pass.out.mu.allFinite() || !pass.out.logvar.allFinite()) {
        std::size_t bad = 0;
        std::string first;
        m.visit([&](std::string_view name, const double* data, Eigen::Index n) {
            for (Eigen::Index i = 0; i < n; ++i)
                if (!std::isfinite(data[i])) {
                    if (bad++ == 0) first = std::string(name) + "[" + std::to_string(i) + "]";
                }
        });
        fail(ErrorKind::Numeric, "non-finite forward output (p = " + std::to_string(pass.out.p) + "); " + std::to_string(bad) +
                                     " non-finite parameters" + (bad ? ", first at " + first : std::string()) +
                                     (series.allFinite() ? "" : "; input window contains non-finite values"));
    }
}

}  // namespace

ForwardResult forward_eval(const VaeLstmModel& model, const Series& series)
{
    Pass pass;
    run(model, series, nullptr, pass, false);
    return pass.out;
}

ForwardResult forward_train(const VaeLstmModel& model, const Series& series, const Latent& eps)
{
    Pass pass;
    run(model, series, &eps, pass, false);
    return pass.out;
}

double bce(double p, int label)
{
    const double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
    return label ? -std::log(pc) : -std::log(1.0 - pc);
}

double kl_divergence(const Latent& mu, const Latent& logvar)
{
    double s = 0.0;
    for (int k = 0; k < kLatent; ++k) s += 1.0 + logvar[k] - mu[k] * mu[k] - std::exp(logvar[k]);
    return -0.5 * s;
}

LossTerms loss(double p, int label, const Latent& mu, const Latent& logvar)
{
    LossTerms l;
    l.recon = bce(p, label);
    l.kl = kl_divergence(mu, logvar);
    l.total = l.recon + l.kl;
    return l;
}

namespace {

void check_batch(std::span<const GripWindow* const> batch, std::span<const Latent> eps)
{
    if (batch.empty()) fail(ErrorKind::Parameter, "empty batch");
    if (batch.size() != eps.size())
        fail(ErrorKind::Shape, "batch has " + std::to_string(batch.size()) + " windows but " + std::to_string(eps.size()) + " noise draws");
}

}  // namespace

LossTerms batch_loss(const VaeLstmModel& model, std::span<const GripWindow* const> batch, std::span<const Latent> eps,
                     const LossOptions& options)
{
    check_batch(batch, eps);
    LossTerms l;
    for (std::size_t k = 0; k < batch.size(); ++k) {
        const auto r = forward_train(model, batch[k]->series, eps[k]);
        if (options.recon) l.recon += bce(r.p, batch[k]->label);
        if (options.kl) l.kl += kl_divergence(r.mu, r.logvar);
    }
    const double n = static_cast<double>(batch.size());
    l.recon /= n;
    l.kl /= n;
    l.total = l.recon + l.kl;
    return l;
}

LossTerms backward(const VaeLstmModel& model, std::span<const GripWindow* const> batch, std::span<const Latent> eps, VaeLstmModel& grad,
                   const LossOptions& options)
{
    check_batch(batch, eps);
    grad.visit([](std::string_view, double* data, Eigen::Index n) { std::fill(data, data + n, 0.0); });
    const double n = static_cast<double>(batch.size());
    LossTerms l;
    Pass pass;

    for (std::size_t k = 0; k < batch.size(); ++k) {
        const GripWindow& w = *batch[k];
        run(model, w.series, &eps[k], pass, true);
        const auto& mu = pass.out.mu;
        const auto& lv = pass.out.logvar;
        const double p = pass.out.p;

        double dlogit = 0.0;
        if (options.recon) {
            l.recon += bce(p, w.label);
            // The clamp has zero slope outside (eps, 1 - eps).
            if (p > kProbClamp && p < 1.0 - kProbClamp) dlogit = (p - w.label) / n;
        }
        if (options.kl) l.kl += kl_divergence(mu, lv);

        grad.out_w.noalias() += dlogit * pass.h_dec.transpose();
        grad.out_b(0, 0) += dlogit;

        HiddenVec dh = dlogit * model.out_w.transpose();
        HiddenVec dc = HiddenVec::Zero();
        Latent dz = Latent::Zero();
        Latent dx;
        for (int t = kSteps - 1; t >= 0; --t) {
            lstm_step_backward(model.decoder, pass.dec[t], grad.decoder, dh, dc, dx);
            dz += dx;
        }

        const Latent sigma = (0.5 * lv.array()).exp().matrix();
        Latent dmu = dz;
        Latent dlv = 0.5 * dz.cwiseProduct(eps[k]).cwiseProduct(sigma);
        if (options.kl) {
            dmu += mu / n;
            dlv += ((lv.array().exp() - 1.0) / (2.0 * n)).matrix();
        }

        grad.mu_w.noalias() += dmu * pass.h_enc.transpose();
        grad.mu_b += dmu;
        grad.logvar_w.noalias() += dlv * pass.h_enc.transpose();
        grad.logvar_b += dlv;

        dh.noalias() = model.mu_w.transpose() * dmu;
        dh.noalias() += model.logvar_w.transpose() * dlv;
        dc.setZero();
        InputVec dxin;
        for (int t = kSteps - 1; t >= 0; --t) lstm_step_backward(model.encoder, pass.enc[t], grad.encoder, dh, dc, dxin);
    }
    l.recon /= n;
    l.kl /= n;
    l.total = l.recon + l.kl;
    return l;
}

std::vector<const GripWindow*> pointers(std::span<const GripWindow> windows)
{
    std::vector<const GripWindow*> out;
    out.reserve(windows.size());
    for (const auto& w : windows) out.push_back(&w);
    return out;
}

}  // namespace handover::gripnet

#include "handover/gripnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace handover::gripnet {

std::string_view to_string(Stage s)
{
    return s == Stage::Pretrain ? "pretrain" : "finetune";
}

Stage parse_stage(std::string_view text)
{
    if (text == "pretrain") return Stage::Pretrain;
    if (text == "finetune") return Stage::Finetune;
    fail(ErrorKind::Usage, "unknown training stage '" + std::string(text) + "'");
}

void TrainConfig::validate() const
{
    if (batch_size == 0) fail(ErrorKind::Parameter, "batch size must be positive");
    if (!(learning_rate > 0.0)) fail(ErrorKind::Parameter, "learning rate must be positive");
    if (max_epochs == 0) fail(ErrorKind::Parameter, "max_epochs must be positive");
    if (!(test_fraction >= 0.0 && test_fraction < 1.0)) fail(ErrorKind::Parameter, "test fraction must lie in [0, 1)");
    if (!(min_delta >= 0.0)) fail(ErrorKind::Parameter, "min_delta must be non-negative");
}

void split_indices(std::size_t n, const TrainConfig& config, std::vector<std::size_t>& train, std::vector<std::size_t>& test)
{
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(config.seed);
    std::shuffle(order.begin(), order.end(), rng);
    auto n_test = static_cast<std::size_t>(std::llround(config.test_fraction * static_cast<double>(n)));
    if (n >= 2 && config.test_fraction > 0.0) n_test = std::clamp<std::size_t>(n_test, 1, n - 1);
    test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
    std::sort(test.begin(), test.end());
    std::sort(train.begin(), train.end());
}

Evaluation evaluate(const VaeLstmModel& model, std::span<const GripWindow> windows, std::span<const std::size_t> indices)
{
    Evaluation e;
    if (indices.empty()) return e;
    for (auto k : indices) {
        const auto r = forward_eval(model, windows[k].series);
        e.loss += loss(r.p, windows[k].label, r.mu, r.logvar).total;
        const bool predicted = r.p >= 0.5;
        const bool actual = windows[k].label == 1;
        if (predicted && actual) ++e.true_pos;
        if (predicted && !actual) ++e.false_pos;
        if (!predicted && !actual) ++e.true_neg;
        if (!predicted && actual) ++e.false_neg;
    }
    const double n = static_cast<double>(indices.size());
    e.loss /= n;
    e.accuracy = static_cast<double>(e.true_pos + e.true_neg) / n;
    return e;
}

Evaluation evaluate(const VaeLstmModel& model, std::span<const GripWindow> windows)
{
    std::vector<std::size_t> all(windows.size());
    std::iota(all.begin(), all.end(), 0);
    return evaluate(model, windows, all);
}

namespace {

struct Adam {
    std::vector<double> m, v;
    std::size_t t = 0;

    explicit Adam(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

    void step(std::vector<double>& params, const std::vector<double>& grad, const TrainConfig& c)
    {
        ++t;
        const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * grad[i];
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
            params[i] -= c.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + c.adam_eps);
        }
    }
};

}  // namespace

TrainResult train(std::span<const GripWindow> dataset, const TrainConfig& config, const VaeLstmModel* initial, const EpochCallback& on_epoch)
{
    config.validate();
    if (dataset.empty()) fail(ErrorKind::Parameter, "training dataset is empty");
    if (config.stage == Stage::Finetune && !initial) fail(ErrorKind::Parameter, "finetune needs a pretrained model to start from");

    TrainResult result;
    split_indices(dataset.size(), config, result.train_indices, result.test_indices);
    if (result.train_indices.empty()) fail(ErrorKind::Parameter, "training split is empty");

    VaeLstmModel model = initial ? *initial : VaeLstmModel::random(config.seed);
    if (!initial) model.norm = compute_normalization(dataset, result.train_indices);

    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    Adam adam(VaeLstmModel::kParameterCount);
    std::vector<double> params = model.parameters();
    VaeLstmModel grad = VaeLstmModel::zeros();

    const bool use_test = !result.test_indices.empty();
    double best = std::numeric_limits<double>::infinity();
    VaeLstmModel best_model = model;
    std::size_t since_best = 0;
    std::vector<std::size_t> order = result.train_indices;
    std::vector<const GripWindow*> batch;
    std::vector<Latent> eps;

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        // One noise draw per window per epoch, in shuffled order.
        std::vector<Latent> draws(order.size());
        for (auto& d : draws)
            for (int k = 0; k < kLatent; ++k) d[k] = normal(rng);

        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            batch.clear();
            eps.clear();
            for (std::size_t j = start; j < stop; ++j) {
                batch.push_back(&dataset[order[j]]);
                eps.push_back(draws[j]);
            }
            // Training accuracy is measured on the pre-update parameters.
            for (std::size_t j = 0; j < batch.size(); ++j) {
                const double p = forward_train(model, batch[j]->series, eps[j]).p;
                correct += (p >= 0.5) == (batch[j]->label == 1);
            }
            const auto l = backward(model, batch, eps, grad);
            loss_sum += l.total * static_cast<double>(batch.size());
            adam.step(params, grad.parameters(), config);
            model.set_parameters(params);
            if (!model.all_finite()) fail(ErrorKind::Numeric, "parameters diverged at epoch " + std::to_string(epoch));
        }

        EpochStats s;
        s.epoch = epoch;
        s.train_loss = loss_sum / static_cast<double>(order.size());
        s.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
        if (use_test) {
            const auto e = evaluate(model, dataset, result.test_indices);
            s.test_loss = e.loss;
            s.test_accuracy = e.accuracy;
        }
        result.curves.push_back(s);
        if (on_epoch) on_epoch(s);

        const double monitored = use_test ? s.test_loss : s.train_loss;
        if (monitored < best - config.min_delta) {
            best = monitored;
            best_model = model;
            result.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= config.patience) {
            result.stopped_early = true;
            break;
        }
    }
    result.model = best_model;
    return result;
}

}  // namespace handover::gripnet

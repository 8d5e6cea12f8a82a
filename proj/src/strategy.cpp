#include "handover/strategy.hpp"

#include "handover/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

namespace handover::strategy {

std::string_view to_string(Decision d)
{
    return d == Decision::Release ? "release" : "hold";
}

std::string_view to_string(StrategyTag tag)
{
    switch (tag) {
    case StrategyTag::GR2: return "gr2";
    case StrategyTag::LoadShare: return "loadshare";
    case StrategyTag::PullForce: return "pull";
    }
    return "pull";
}

StrategyTag parse_strategy(std::string_view text)
{
    if (text == "gr2") return StrategyTag::GR2;
    if (text == "loadshare") return StrategyTag::LoadShare;
    if (text == "pull") return StrategyTag::PullForce;
    fail(ErrorKind::Usage, "unknown strategy '" + std::string(text) + "' (expected gr2, loadshare or pull)");
}

StrategyTag tag_of(const StrategyKind& kind)
{
    return static_cast<StrategyTag>(kind.index());
}

StrategyKind default_strategy(StrategyTag tag, std::shared_ptr<const gripnet::VaeLstmModel> model)
{
    switch (tag) {
    case StrategyTag::GR2: return Gr2Params{std::move(model)};
    case StrategyTag::LoadShare: return LoadShareParams{};
    case StrategyTag::PullForce: return PullForceParams{};
    }
    return PullForceParams{};
}

void validate(const StrategyKind& kind)
{
    if (const auto* g = std::get_if<Gr2Params>(&kind)) {
        if (!(g->light_threshold_n > 0.0)) fail(ErrorKind::Parameter, "GR2 pull threshold must be positive");
        if (!(g->weight_cutover_kg > 0.0)) fail(ErrorKind::Parameter, "GR2 weight cutover must be positive");
        if (!(g->release_probability > 0.0 && g->release_probability < 1.0))
            fail(ErrorKind::Parameter, "GR2 release probability must lie in (0, 1)");
    } else if (const auto* l = std::get_if<LoadShareParams>(&kind)) {
        if (!(l->fraction > 0.0 && l->fraction < 1.0)) fail(ErrorKind::Parameter, "load-share fraction must lie in (0, 1)");
    } else if (!(std::get<PullForceParams>(kind).threshold_n > 0.0)) {
        fail(ErrorKind::Parameter, "pull threshold must be positive");
    }
}

std::string_view to_string(PullAxis axis)
{
    return axis == PullAxis::Y ? "y" : "z";
}

PullAxis parse_axis(std::string_view text)
{
    if (text == "y" || text == "Y") return PullAxis::Y;
    if (text == "z" || text == "Z") return PullAxis::Z;
    fail(ErrorKind::Usage, "unknown pull axis '" + std::string(text) + "' (expected y or z)");
}

Engine::Engine(StrategyKind kind, double weight_kg, EngineOptions options) : kind_(std::move(kind)), weight_kg_(weight_kg), options_(options)
{
    validate(kind_);
    if (!(weight_kg > 0.0) || !std::isfinite(weight_kg)) fail(ErrorKind::Parameter, "object weight must be positive");
    if (options_.loadshare_sign != 1.0 && options_.loadshare_sign != -1.0) fail(ErrorKind::Parameter, "load-share sign must be +1 or -1");
    if (const auto* g = std::get_if<Gr2Params>(&kind_)) {
        heavy_ = weight_kg >= g->weight_cutover_kg;
        if (heavy_ && !g->model) fail(ErrorKind::Capability, "GR2 needs a trained model for objects of at least " + std::to_string(g->weight_cutover_kg) + " kg");
    }
}

void Engine::reset()
{
    baseline_.reset();
    buffer_.clear();
    ticks_ = 0;
    release_tick_.reset();
    last_ = {};
}

bool Engine::pull_exceeds(double fy, double fz, double threshold)
{
    const double axis = options_.pull_axis == PullAxis::Z ? fz : fy;
    if (!baseline_) baseline_ = axis;
    return std::abs(axis - *baseline_) > threshold;
}

const TickOutput& Engine::step(double fy, double fz)
{
    const std::size_t tick = ticks_++;
    const double weight_force = weight_kg_ * options_.gravity;
    // Each party carries half the weight at F_y = 0; positive (signed) F_y
    // moves load to the taker.
    const double giver_load = 0.5 * weight_force - options_.loadshare_sign * fy;
    last_.load_share_fraction = giver_load / weight_force;
    last_.model_p.reset();

    bool trigger = false;
    if (const auto* g = std::get_if<Gr2Params>(&kind_)) {
        if (!heavy_) {
            trigger = pull_exceeds(fy, fz, g->light_threshold_n);
        } else {
            buffer_.push_back({fy, fz});
            if (buffer_.size() > static_cast<std::size_t>(gripnet::kSteps)) buffer_.pop_front();
            if (buffer_.size() == static_cast<std::size_t>(gripnet::kSteps)) {
                for (int k = 0; k < gripnet::kSteps; ++k) {
                    series_(k, 0) = buffer_[static_cast<std::size_t>(k)][0];
                    series_(k, 1) = buffer_[static_cast<std::size_t>(k)][1];
                    series_(k, 2) = weight_kg_;
                }
                const double p = gripnet::forward_eval(*g->model, series_).p;
                last_.model_p = p;
                trigger = p >= g->release_probability;
            }
        }
    } else if (const auto* l = std::get_if<LoadShareParams>(&kind_)) {
        trigger = last_.load_share_fraction < l->fraction;
    } else {
        trigger = pull_exceeds(fy, fz, std::get<PullForceParams>(kind_).threshold_n);
    }

    if (trigger && !release_tick_) release_tick_ = tick;
    last_.decision = release_tick_ ? Decision::Release : Decision::Hold;
    return last_;
}

namespace {

void require_forces(const HandoverRecord& record)
{
    if (!record.meta.has_forces) fail(ErrorKind::Capability, "record carries no force data");
}

}  // namespace

std::optional<std::size_t> release_tick(const StrategyKind& kind, const HandoverRecord& record, const EngineOptions& options)
{
    require_forces(record);
    Engine engine(kind, record.meta.weight_kg, options);
    for (const auto& s : record.interaction) {
        engine.step(s.force.y(), s.force.z());
        if (engine.released()) break;
    }
    return engine.release_tick();
}

DecisionTrace run_trace(const StrategyKind& kind, const HandoverRecord& record, const EngineOptions& options,
                        std::shared_ptr<const gripnet::VaeLstmModel> model)
{
    require_forces(record);
    DecisionTrace trace;
    trace.strategy = tag_of(kind);
    trace.ticks.reserve(record.interaction.size());
    Engine engine(kind, record.meta.weight_kg, options);
    for (const auto& s : record.interaction) {
        const double fy = s.force.y();
        const double fz = s.force.z();
        const auto t0 = std::chrono::steady_clock::now();
        const TickOutput out = engine.step(fy, fz);
        const auto t1 = std::chrono::steady_clock::now();
        TickRecord r;
        r.tick = engine.ticks() - 1;
        r.fy = fy;
        r.fz = fz;
        r.load_share_fraction = out.load_share_fraction;
        r.model_p = out.model_p;
        r.decision = out.decision;
        r.compute_time_us = std::chrono::duration<double, std::micro>(t1 - t0).count();
        trace.ticks.push_back(r);
    }
    trace.release_tick = engine.release_tick();

    if (const auto* g = std::get_if<Gr2Params>(&kind); g && g->model) model = g->model;
    for (auto tag : kAllStrategies) {
        if (tag == trace.strategy) {
            trace.counterfactual[tag] = trace.release_tick;
            continue;
        }
        if (tag == StrategyTag::GR2 && !model && record.meta.weight_kg >= Gr2Params{}.weight_cutover_kg) continue;
        trace.counterfactual[tag] = release_tick(default_strategy(tag, model), record, options);
    }
    return trace;
}

LatencyReport latency_audit(std::span<const double> us, double budget_ms)
{
    LatencyReport r;
    r.budget_ms = budget_ms;
    r.ticks = us.size();
    if (us.empty()) return r;
    std::vector<double> ms(us.size());
    for (std::size_t i = 0; i < us.size(); ++i) ms[i] = us[i] / 1000.0;
    double sum = 0.0;
    for (double v : ms) sum += v;
    r.mean_ms = sum / static_cast<double>(ms.size());
    std::sort(ms.begin(), ms.end());
    r.max_ms = ms.back();
    // Nearest-rank percentile.
    const auto rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(ms.size())));
    r.p99_ms = ms[std::max<std::size_t>(rank, 1) - 1];
    r.pass = r.max_ms < budget_ms;
    return r;
}

LatencyReport latency_audit(const DecisionTrace& trace, double budget_ms)
{
    std::vector<double> us;
    us.reserve(trace.ticks.size());
    for (const auto& t : trace.ticks) us.push_back(t.compute_time_us);
    return latency_audit(us, budget_ms);
}

void write_trace_csv(const DecisionTrace& trace, const std::filesystem::path& file)
{
    std::ofstream out(file);
    if (!out) fail(ErrorKind::Io, "cannot write " + file.string());
    out.precision(17);
    out << "tick,fy,fz,load_share_fraction,model_p,decision,compute_time_us\n";
    for (const auto& t : trace.ticks) {
        out << t.tick << ',' << t.fy << ',' << t.fz << ',' << t.load_share_fraction << ',';
        if (t.model_p) out << *t.model_p;
        out << ',' << to_string(t.decision) << ',' << t.compute_time_us << '\n';
    }
    if (!out) fail(ErrorKind::Io, "failed writing " + file.string());
}

}  // namespace handover::strategy

#pragma once

// Grip-release decision engines fed one 120 Hz interaction sample per tick.

#include "handover/data.hpp"
#include "handover/gripnet/model.hpp"

#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

namespace handover::strategy {

enum class Decision { Hold, Release };
std::string_view to_string(Decision d);

struct Gr2Params {
    std::shared_ptr<const gripnet::VaeLstmModel> model;
    double light_threshold_n = 4.0;
    double weight_cutover_kg = 0.8;
    double release_probability = 0.5;
};

struct LoadShareParams {
    double fraction = 0.5;
};

struct PullForceParams {
    double threshold_n = 4.0;
};

using StrategyKind = std::variant<Gr2Params, LoadShareParams, PullForceParams>;

enum class StrategyTag { GR2, LoadShare, PullForce };
inline constexpr StrategyTag kAllStrategies[] = {StrategyTag::GR2, StrategyTag::LoadShare, StrategyTag::PullForce};

std::string_view to_string(StrategyTag tag);
StrategyTag parse_strategy(std::string_view text);  // gr2 | loadshare | pull
StrategyTag tag_of(const StrategyKind& kind);
StrategyKind default_strategy(StrategyTag tag, std::shared_ptr<const gripnet::VaeLstmModel> model = nullptr);
void validate(const StrategyKind& kind);

enum class PullAxis { Y, Z };
std::string_view to_string(PullAxis axis);
PullAxis parse_axis(std::string_view text);

struct EngineOptions {
    // Pull thresholds act on this interaction force component.
    PullAxis pull_axis = PullAxis::Z;
    // +1: positive F_y means the taker carries more than half of the weight.
    double loadshare_sign = 1.0;
    double gravity = kGravity;
};

struct TickOutput {
    Decision decision = Decision::Hold;
    double load_share_fraction = 0.0;  // giver-supported share of w * g
    std::optional<double> model_p;
};

class Engine {
public:
    Engine(StrategyKind kind, double weight_kg, EngineOptions options = {});

    const TickOutput& step(double fy, double fz);

    bool released() const { return release_tick_.has_value(); }
    std::optional<std::size_t> release_tick() const { return release_tick_; }
    std::size_t ticks() const { return ticks_; }
    StrategyTag tag() const { return tag_of(kind_); }
    // True when a GR2 engine routes through the classifier.
    bool heavy_path() const { return heavy_; }
    void reset();

private:
    bool pull_exceeds(double fy, double fz, double threshold);

    StrategyKind kind_;
    double weight_kg_;
    EngineOptions options_;
    bool heavy_ = false;
    std::optional<double> baseline_;
    std::deque<std::array<double, 2>> buffer_;
    gripnet::Series series_;
    std::size_t ticks_ = 0;
    std::optional<std::size_t> release_tick_;
    TickOutput last_;
};

struct TickRecord {
    std::size_t tick = 0;
    double fy = 0.0;
    double fz = 0.0;
    double load_share_fraction = 0.0;
    std::optional<double> model_p;
    Decision decision = Decision::Hold;
    double compute_time_us = 0.0;
};

struct DecisionTrace {
    StrategyTag strategy = StrategyTag::PullForce;
    std::vector<TickRecord> ticks;
    std::optional<std::size_t> release_tick;
    // Release ticks every strategy would have produced on the same record.
    // GR2 is present only when it can run (light object, or a model is known).
    std::map<StrategyTag, std::optional<std::size_t>> counterfactual;
};

// Release tick of `kind` on the record, without timing.
std::optional<std::size_t> release_tick(const StrategyKind& kind, const HandoverRecord& record, const EngineOptions& options = {});

// `model` serves the GR2 counterfactual when the traced strategy is not GR2.
DecisionTrace run_trace(const StrategyKind& kind, const HandoverRecord& record, const EngineOptions& options = {},
                        std::shared_ptr<const gripnet::VaeLstmModel> model = nullptr);

struct LatencyReport {
    std::size_t ticks = 0;
    double max_ms = 0.0;
    double mean_ms = 0.0;
    double p99_ms = 0.0;
    double budget_ms = 0.0;
    bool pass = true;
};

inline constexpr double kTickBudgetMs = 1000.0 / kSampleRateHz;

LatencyReport latency_audit(const DecisionTrace& trace, double budget_ms = kTickBudgetMs);
LatencyReport latency_audit(std::span<const double> compute_times_us, double budget_ms = kTickBudgetMs);

void write_trace_csv(const DecisionTrace& trace, const std::filesystem::path& file);

}  // namespace handover::strategy

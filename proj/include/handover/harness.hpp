#pragma once

// Synthetic handovers with planted ground truth, multi-handover sessions,
// and the strategy benchmark.

#include "handover/data.hpp"
#include "handover/features.hpp"
#include "handover/gripnet/model.hpp"
#include "handover/strategy.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace handover::harness {

struct GeneratorSpec {
    double weight_kg = 1.0;
    double contact_time_ms = -300.0;
    double release_start_ms = -150.0;
    double release_duration_ms = 400.0;
    double pull_peak_n = 6.0;
    double loadshare_crossing_ms = 60.0;
    double sensor_noise_sigma_n = 0.0;
    std::uint64_t seed = 1;

    // Shape parameters with working defaults.
    std::optional<double> grip_hold_n{};  // default 3 + 3 w
    double release_steepness = 4.0;
    double taker_peak_ratio = 1.25;     // taker plateau relative to the giver hold
    double loadshare_tau_ms = 40.0;
    std::size_t pull_decay_samples = 30;
    bool with_motion = true;
    std::string object_label = "synthetic";

    double hold_force() const { return grip_hold_n.value_or(3.0 + 3.0 * weight_kg); }
    // Throws Error(Parameter) naming the violated constraint.
    void validate() const;
};

struct GroundTruth {
    double t_tak_con_ms = 0.0;
    double t_rel_start_ms = 0.0;
    double t_giv_rel_ms = 0.0;
    double t_tf_ms = 0.0;
    double t_gr_ms = 0.0;
    double t_ld_shift_ms = 0.0;
    double max_pull_n = 0.0;
    double transfer_height_norm = 0.0;
    // Sample indices of the planted events as realised on the 120 Hz grid:
    // first sample above / below the 0.4 N threshold, and the pull ramp.
    std::size_t contact_index = 0;
    std::size_t giv_rel_index = 0;
    std::size_t pull_peak_index = 0;
    int rel_start_step = 0;  // release onset, steps relative to t = 0
    double reach_start_s = 0.0;
    double reach_duration_s = 0.0;
    double reach_distance_m = 0.0;
    features::WeightCategory category = features::WeightCategory::Moderate;
};

nlohmann::json to_json(const GroundTruth& truth);

struct Generated {
    HandoverRecord record;
    GroundTruth truth;
};

Generated generate(const GeneratorSpec& spec);

// Ranges in a JSON spec: every numeric field may be a number or
// {"min": a, "max": b}; record i draws from a generator seeded with seed + i.
struct SpecTemplate {
    nlohmann::json fields;
    std::uint64_t seed = 1;
};

SpecTemplate load_spec_template(const std::filesystem::path& file);
SpecTemplate parse_spec_template(const nlohmann::json& doc);
GeneratorSpec draw_spec(const SpecTemplate& tmpl, std::size_t index);
nlohmann::json to_json(const GeneratorSpec& spec);

struct SessionOptions {
    std::size_t gap_samples = 120;  // linear blend between consecutive records
};

struct Session {
    HandoverRecord record;
    std::vector<std::size_t> planted_centers;
    std::vector<GroundTruth> truths;
};

Session generate_session(std::span<const GeneratorSpec> specs, const SessionOptions& options = {});

// Corpus on disk: <dir>/<id>/{signals.csv, meta.json, ground_truth.json} and
// <dir>/manifest.json.
struct NamedRecord {
    std::string id;
    HandoverRecord record;
};

void write_corpus(const std::filesystem::path& dir, std::span<const Generated> items, std::span<const std::string> ids);
std::vector<NamedRecord> load_corpus(const std::filesystem::path& manifest_or_dir);

// Balanced classifier windows: positives carry an F_y sign flip from a
// negative baseline, negatives stay negative. Weight is drawn from
// [0.8, 2.0] kg.
std::vector<gripnet::GripWindow> separable_windows(std::size_t count, std::uint64_t seed);

struct DeltaSummary {
    std::size_t n = 0;
    double mean_ticks = 0.0;
    double sd_ticks = 0.0;
    double min_ticks = 0.0;
    double max_ticks = 0.0;
    double mean_ms = 0.0;
};

struct BenchmarkRow {
    std::string id;
    double weight_kg = 0.0;
    std::map<strategy::StrategyTag, std::optional<std::size_t>> release;
    std::optional<strategy::StrategyTag> fastest;
    bool tie = false;
};

struct BenchmarkReport {
    std::vector<strategy::StrategyTag> strategies;
    std::vector<BenchmarkRow> rows;  // sorted by id
    std::map<strategy::StrategyTag, std::size_t> fastest_counts;
    std::map<strategy::StrategyTag, std::size_t> not_triggered;
    std::size_t never_triggered = 0;
    std::size_t ties = 0;
    // Keyed "a-b": release(a) - release(b) over records where both fired.
    std::map<std::string, DeltaSummary> deltas;
    std::map<strategy::StrategyTag, strategy::LatencyReport> latency;
};

// Fastest-strategy ties are credited in the order GR2, LoadShare, PullForce
// and counted in `ties`.
// At most one kind per strategy tag; GR2 needs its model for heavy records.
BenchmarkReport benchmark(std::span<const strategy::StrategyKind> strategies, std::span<const NamedRecord> corpus,
                          const strategy::EngineOptions& options = {});

nlohmann::json to_json(const BenchmarkReport& report);

}  // namespace handover::harness

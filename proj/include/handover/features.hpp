#pragma once

// Per-handover metrics and dataset-level summaries.
//
// Times are reported in milliseconds relative to t = 0, the grip-force
// intersection at sample `center_index` of a segmented record.

#include "handover/data.hpp"
#include "handover/signal.hpp"
#include "handover/stats.hpp"

#include <json.hpp>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace handover::features {

struct FeatureConfig {
    double contact_threshold_n = 0.4;
    // Release onset is the change point of a plateau-then-linear-decline fit
    // over [contact, first sample below plateau - fit_fraction * (plateau -
    // threshold)]. The plateau is the median of the first release_plateau_samples
    // after contact and must exceed the threshold by release_min_drop_n.
    std::size_t release_plateau_samples = 5;
    double release_fit_fraction = 0.5;
    double release_min_drop_n = 0.2;
    // Forces are analysed raw unless this is set; motion is always filtered.
    bool smooth_forces = false;
    signal::FilterSpec filter{};
    double gravity = kGravity;
    // +1: positive interaction F_y means the taker carries the larger share.
    double loadshare_sign = 1.0;
    double onset_speed_mps = 0.05;
    std::size_t onset_sustain = 5;
    std::size_t center_index = kCenterIndex;
    double sample_rate_hz = kSampleRateHz;
};

double index_to_ms(std::ptrdiff_t index, const FeatureConfig& config = {});
std::ptrdiff_t ms_to_index(double ms, const FeatureConfig& config = {});

struct TransferTimes {
    std::size_t tak_con_index = 0;
    std::size_t giv_rel_index = 0;
    double t_tak_con_ms = 0.0;
    double t_giv_rel_ms = 0.0;
    double t_tf_ms = 0.0;
};

// t_tak_con: last rising threshold crossing of the taker grip at or before
// t = 0. t_giv_rel: first falling crossing of the giver grip after its release
// onset (or after contact when no onset is detectable).
TransferTimes transfer_time(std::span<const double> giver_grip, std::span<const double> taker_grip, const FeatureConfig& config = {});

std::optional<std::size_t> release_start_index(std::span<const double> giver_grip, std::size_t from, const FeatureConfig& config = {});

struct ReleaseTiming {
    std::size_t rel_start_index = 0;
    std::size_t giv_rel_index = 0;
    double t_rel_start_ms = 0.0;
    double t_giv_rel_ms = 0.0;
    double t_gr_ms = 0.0;
};

ReleaseTiming grip_release_time(std::span<const double> giver_grip, double t_tak_con_ms, const FeatureConfig& config = {});

// max |F_z(t) - F_z(t_tak_con)| over [t_tak_con, t_giv_rel].
double max_pull(std::span<const double> interaction_fz, double t_tak_con_ms, double t_giv_rel_ms, const FeatureConfig& config = {});

// Pull divided by the object's weight force m * g.
double pull_over_weight(double max_pull_n, double weight_kg, double gravity = kGravity);

// First t in [t_tak_con, t_giv_rel] with F_y(t) > 0.
double loadshare_shift(std::span<const double> interaction_fy, double t_tak_con_ms, double t_giv_rel_ms, const FeatureConfig& config = {});

double transfer_height(double object_z, double giver_chest_z, double taker_chest_z);

struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;  // exclusive

    std::size_t size() const { return end - begin; }
};

struct MotionMetrics {
    double avg_velocity = 0.0;
    double max_velocity = 0.0;
    double avg_acceleration = 0.0;
    double max_acceleration = 0.0;
};

// Positions are expected to be low-pass filtered already. Derivatives are
// taken over the whole sequence and summarised over `window`.
MotionMetrics motion_metrics(std::span<const Vec3> positions, IndexRange window, double dt = 1.0 / kSampleRateHz);

// From the first sustained hand-speed onset up to and including `end_index`.
std::optional<IndexRange> reach_window(std::span<const Vec3> positions, std::size_t end_index, const FeatureConfig& config = {});

enum class WeightCategory { Low, Moderate, High };

std::string_view to_string(WeightCategory c);
WeightCategory parse_category(std::string_view text);

struct Categorized {
    WeightCategory category = WeightCategory::Moderate;
    bool out_of_range = false;
};

// Low [0.008, 0.1), Moderate [0.1, 0.95), High [0.95, 2.06] kg. Weights
// outside the range map to the nearest category with out_of_range set.
Categorized categorize(double weight_kg);

struct FeatureSet {
    double weight_kg = 0.0;
    std::optional<double> t_tak_con_ms;
    std::optional<double> t_giv_rel_ms;
    std::optional<double> t_tf_ms;
    std::optional<double> t_rel_start_ms;
    std::optional<double> t_gr_ms;
    std::optional<double> max_pull_n;
    std::optional<double> max_pull_over_weight;
    std::optional<double> t_ld_shift_ms;
    std::optional<double> transfer_height_norm;
    std::optional<double> avg_velocity;
    std::optional<double> max_velocity;
    std::optional<double> avg_acceleration;
    std::optional<double> max_acceleration;
    // Names of metrics that could not be computed, with the reason.
    std::vector<std::string> undefined;
};

Body carrying_hand(const Participant& giver);

FeatureSet compute_features(const HandoverRecord& record, const FeatureConfig& config = {});

// Column layout of features.csv.
std::vector<std::string> feature_columns();
std::vector<std::optional<double>> feature_values(const FeatureSet& f);

struct NamedFeatures {
    std::string id;
    FeatureSet features;
};

// Group summaries by weight category, correlations with weight, ANOVA across
// weight classes and Welch t-tests between consecutive classes.
nlohmann::json dataset_statistics(std::span<const NamedFeatures> rows);

}  // namespace handover::features

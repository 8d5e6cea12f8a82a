#include "handover/harness.hpp"

#include "handover/error.hpp"
#include "handover/motion.hpp"
#include "handover/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace handover::harness {

namespace {

constexpr double kThreshold = 0.4;
constexpr double kSampleMs = 1000.0 / kSampleRateHz;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

double time_ms(std::size_t i) { return (static_cast<double>(i) - static_cast<double>(kCenterIndex)) * kSampleMs; }

// Giver grip: hold, then a logistic decay started at its inflection point and
// normalised to reach 0 after release_duration.
struct GripModel {
    double hold = 0.0;
    double t_rel = 0.0;
    double duration = 0.0;
    double k = 4.0;

    double giver(double t) const
    {
        if (t <= t_rel) return hold;
        const double u = std::min((t - t_rel) / duration, 1.0);
        const double s = (logistic(k * u) - 0.5) / (logistic(k) - 0.5);
        return hold * (1.0 - s);
    }

    // Time at which the giver grip equals `level` (0 < level < hold).
    double giver_time_at(double level) const
    {
        const double s = 1.0 - level / hold;
        const double u = logit(0.5 + s * (logistic(k) - 0.5)) / k;
        return t_rel + u * duration;
    }
};

struct TakerModel {
    double peak = 0.0;
    double mid = 0.0;
    double tau = 1.0;

    double operator()(double t) const { return peak * logistic((t - mid) / tau); }
};

TakerModel fit_taker(double peak, double contact_ms, double level_at_zero)
{
    const double a = kThreshold / peak;
    const double b = level_at_zero / peak;
    TakerModel m;
    m.peak = peak;
    m.tau = -contact_ms / (logit(b) - logit(a));
    m.mid = contact_ms - m.tau * logit(a);
    return m;
}

struct Scene {
    Vec3 giver_start{0.25, -0.25, 0.95};
    Vec3 handover_point{0.60, 0.0, 1.10};
    Vec3 giver_retract{0.30, -0.20, 0.95};
    Vec3 taker_start{0.95, 0.25, 0.95};
    Vec3 taker_offset{0.03, 0.0, 0.0};
    Vec3 taker_retract{1.00, 0.20, 1.00};
    double giver_chest_z = 1.35;
    double taker_chest_z = 1.40;
    double taker_reach_s = 0.7;
    double giver_retract_s = 0.6;
    double taker_retract_s = 0.8;
    double reach_lead_s = 0.1;  // giver reach ends this long before contact
};

const Scene kScene{};

double reach_duration(const GeneratorSpec& spec)
{
    const auto cat = features::categorize(spec.weight_kg).category;
    return motion::min_segment_duration((kScene.handover_point - kScene.giver_start).norm(), motion::profile(cat).max_accel_cap);
}

SkeletonFrame static_skeleton(bool taker)
{
    // Giver at the origin facing +x; the taker is mirrored at x = 1.2 m and
    // stands slightly taller.
    const std::array<Vec3, kBodyCount> giver{
        Vec3(0.0, 0.0, 1.00),   Vec3(0.0, 0.0, 1.15),   Vec3(0.0, 0.0, 1.35),  Vec3(0.0, 0.0, 1.50),   Vec3(0.0, 0.0, 1.62),
        Vec3(0.0, 0.18, 1.45),  Vec3(0.0, -0.18, 1.45), Vec3(0.0, 0.20, 1.30), Vec3(0.05, -0.20, 1.30), Vec3(0.05, 0.22, 1.10),
        Vec3(0.10, -0.20, 1.10), Vec3(0.10, 0.22, 0.95), Vec3(0.25, -0.25, 0.95),
    };
    SkeletonFrame f;
    for (std::size_t b = 0; b < kBodyCount; ++b) {
        Pose p;
        p.position = taker ? Vec3(1.2 - giver[b].x(), -giver[b].y(), giver[b].z() + 0.05) : giver[b];
        f.bodies[b] = p;
    }
    return f;
}

}  // namespace

void GeneratorSpec::validate() const
{
    auto bad = [](const std::string& what) { fail(ErrorKind::Parameter, "generator spec: " + what); };
    if (!(weight_kg > 0.0)) bad("weight_kg must be positive");
    if (!(release_duration_ms > 0.0)) bad("release_duration_ms must be positive");
    if (!(contact_time_ms < 0.0)) bad("contact_time_ms must precede t = 0");
    if (!(contact_time_ms < release_start_ms)) bad("contact_time_ms must precede release_start_ms");
    if (release_start_ms - contact_time_ms < 5.0 * kSampleMs - 1e-9)
        bad("release_start_ms must follow contact by at least 5 samples (41.7 ms)");
    if (!(pull_peak_n >= 0.0)) bad("pull_peak_n must be non-negative");
    if (!(sensor_noise_sigma_n >= 0.0)) bad("sensor_noise_sigma_n must be non-negative");
    if (!(release_steepness > 0.0)) bad("release_steepness must be positive");
    if (!(taker_peak_ratio > 1.0)) bad("taker_peak_ratio must exceed 1");
    if (!(loadshare_tau_ms > 0.0)) bad("loadshare_tau_ms must be positive");
    const double hold = hold_force();
    if (!(hold > kThreshold + 0.2)) bad("grip hold force must exceed 0.6 N");

    const GripModel grip{hold, release_start_ms, release_duration_ms, release_steepness};
    if (!(grip.giver(0.0) > kThreshold)) bad("giver grip must still exceed 0.4 N at t = 0 (release ends too early)");
    const double giv_rel = grip.giver_time_at(kThreshold);
    if (!(loadshare_crossing_ms > contact_time_ms && loadshare_crossing_ms < giv_rel))
        bad("loadshare_crossing_ms must lie between contact and giver release (" + std::to_string(giv_rel) + " ms)");
    const double last_ms = time_ms(kSegmentLength - 1);
    if (release_start_ms + release_duration_ms + static_cast<double>(pull_decay_samples) * kSampleMs > last_ms)
        bad("release and pull decay must finish inside the record");
    if (with_motion) {
        const double reach_start_s = contact_time_ms / 1000.0 - kScene.reach_lead_s - reach_duration(*this);
        if (reach_start_s < time_ms(0) / 1000.0 + 0.3) bad("contact is too early to fit the reach inside the record");
        if (contact_time_ms / 1000.0 - kScene.taker_reach_s < time_ms(0) / 1000.0) bad("contact is too early to fit the taker reach");
    }
}

Generated generate(const GeneratorSpec& spec)
{
    spec.validate();
    const std::size_t n = kSegmentLength;
    const double hold = spec.hold_force();
    const GripModel grip{hold, spec.release_start_ms, spec.release_duration_ms, spec.release_steepness};
    const TakerModel taker = fit_taker(spec.taker_peak_ratio * hold, spec.contact_time_ms, grip.giver(0.0));
    const double weight_force = spec.weight_kg * kGravity;

    std::vector<double> g(n), tk(n), fy(n), fz(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = time_ms(i);
        g[i] = grip.giver(t);
        tk[i] = taker(t);
        fy[i] = 0.5 * weight_force * std::tanh((t - spec.loadshare_crossing_ms) / spec.loadshare_tau_ms);
    }
    // Intersection sample is exact by construction; pin it against rounding.
    tk[kCenterIndex] = g[kCenterIndex];

    GroundTruth truth;
    truth.contact_index = static_cast<std::size_t>(std::find_if(tk.begin(), tk.end(), [](double v) { return v > kThreshold; }) - tk.begin());
    truth.giv_rel_index = kCenterIndex;
    while (truth.giv_rel_index < n && g[truth.giv_rel_index] >= kThreshold) ++truth.giv_rel_index;
    const std::size_t ic = truth.contact_index;
    const std::size_t ig = truth.giv_rel_index;
    const std::size_t im = ic + (ig - ic) / 2;
    truth.pull_peak_index = im;
    for (std::size_t i = ic + 1; i < n; ++i) {
        if (i < im)
            fz[i] = spec.pull_peak_n * static_cast<double>(i - ic) / static_cast<double>(im - ic);
        else if (i <= ig)
            fz[i] = spec.pull_peak_n;
        else
            fz[i] = spec.pull_peak_n *
                    std::max(0.0, 1.0 - static_cast<double>(i - ig) / static_cast<double>(std::max<std::size_t>(spec.pull_decay_samples, 1)));
    }

    truth.t_tak_con_ms = spec.contact_time_ms;
    truth.t_rel_start_ms = spec.release_start_ms;
    truth.t_giv_rel_ms = grip.giver_time_at(kThreshold);
    truth.t_tf_ms = truth.t_giv_rel_ms - truth.t_tak_con_ms;
    truth.t_gr_ms = truth.t_giv_rel_ms - truth.t_rel_start_ms;
    truth.t_ld_shift_ms = spec.loadshare_crossing_ms;
    truth.max_pull_n = spec.pull_peak_n;
    truth.rel_start_step = static_cast<int>(std::lround(spec.release_start_ms / kSampleMs));
    truth.category = features::categorize(spec.weight_kg).category;

    Generated out;
    HandoverRecord& r = out.record;
    r.meta.weight_kg = spec.weight_kg;
    r.meta.dataset_tag = DatasetTag::RPL2;
    r.meta.object_label = spec.object_label;
    r.meta.has_forces = true;
    r.interaction.resize(n);
    r.giver_grip.resize(n);
    r.taker_grip.resize(n);

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    const double sigma = spec.sensor_noise_sigma_n;
    auto draw = [&] { return sigma > 0.0 ? sigma * noise(rng) : 0.0; };
    for (std::size_t i = 0; i < n; ++i) {
        const auto t = static_cast<std::int64_t>(i);
        r.interaction[i].t = t;
        r.interaction[i].force = Vec3(draw(), fy[i] + draw(), fz[i] + draw());
        r.giver_grip[i].t = t;
        r.giver_grip[i].force = Vec3(0.0, 0.0, -(g[i] + draw()));
        r.taker_grip[i].t = t;
        r.taker_grip[i].force = Vec3(0.0, 0.0, -(tk[i] + draw()));
    }

    // Motion: giver reach timed by the weight category's acceleration cap.
    const double t_contact = spec.contact_time_ms / 1000.0;
    const double t_release = truth.t_giv_rel_ms / 1000.0;
    const Scene& sc = kScene;
    truth.reach_duration_s = reach_duration(spec);
    truth.reach_start_s = t_contact - sc.reach_lead_s - truth.reach_duration_s;
    truth.reach_distance_m = (sc.handover_point - sc.giver_start).norm();
    truth.transfer_height_norm = sc.handover_point.z() / ((sc.giver_chest_z + sc.taker_chest_z) / 2.0);

    const SkeletonFrame giver_frame = static_skeleton(false);
    const SkeletonFrame taker_frame = static_skeleton(true);
    const Vec3 taker_hold = sc.handover_point + sc.taker_offset;
    r.object_pose.resize(n);
    r.giver_skeleton.assign(n, giver_frame);
    r.taker_skeleton.assign(n, taker_frame);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = time_ms(i) / 1000.0;
        Vec3 gh = sc.handover_point;
        Vec3 th = taker_hold;
        if (spec.with_motion) {
            if (t < t_release)
                gh = motion::min_jerk_state(sc.giver_start, sc.handover_point, truth.reach_duration_s, t - truth.reach_start_s).position;
            else
                gh = motion::min_jerk_state(sc.handover_point, sc.giver_retract, sc.giver_retract_s, t - t_release).position;
            if (t < t_release)
                th = motion::min_jerk_state(sc.taker_start, taker_hold, sc.taker_reach_s, t - (t_contact - sc.taker_reach_s)).position;
            else
                th = motion::min_jerk_state(taker_hold, sc.taker_retract, sc.taker_retract_s, t - t_release).position;
        }
        r.giver_skeleton[i][Body::RightHand].position = gh;
        r.taker_skeleton[i][Body::RightHand].position = th;
        r.object_pose[i].position = t < t_release ? gh : Vec3(th - sc.taker_offset);
    }
    r.giver_skeleton[0][Body::Chest].position.z() = sc.giver_chest_z;
    for (auto& f : r.giver_skeleton) f[Body::Chest].position.z() = sc.giver_chest_z;
    for (auto& f : r.taker_skeleton) f[Body::Chest].position.z() = sc.taker_chest_z;

    out.truth = truth;
    return out;
}

nlohmann::json to_json(const GroundTruth& t)
{
    return {
        {"t_tak_con_ms", t.t_tak_con_ms},
        {"t_rel_start_ms", t.t_rel_start_ms},
        {"t_giv_rel_ms", t.t_giv_rel_ms},
        {"t_tf_ms", t.t_tf_ms},
        {"t_gr_ms", t.t_gr_ms},
        {"t_ld_shift_ms", t.t_ld_shift_ms},
        {"max_pull_n", t.max_pull_n},
        {"transfer_height_norm", t.transfer_height_norm},
        {"contact_index", t.contact_index},
        {"giv_rel_index", t.giv_rel_index},
        {"pull_peak_index", t.pull_peak_index},
        {"rel_start_step", t.rel_start_step},
        {"reach_start_s", t.reach_start_s},
        {"reach_duration_s", t.reach_duration_s},
        {"reach_distance_m", t.reach_distance_m},
        {"category", std::string(features::to_string(t.category))},
    };
}

nlohmann::json to_json(const GeneratorSpec& s)
{
    nlohmann::json j{
        {"weight_kg", s.weight_kg},
        {"contact_time_ms", s.contact_time_ms},
        {"release_start_ms", s.release_start_ms},
        {"release_duration_ms", s.release_duration_ms},
        {"pull_peak_n", s.pull_peak_n},
        {"loadshare_crossing_ms", s.loadshare_crossing_ms},
        {"sensor_noise_sigma_n", s.sensor_noise_sigma_n},
        {"seed", s.seed},
        {"release_steepness", s.release_steepness},
        {"taker_peak_ratio", s.taker_peak_ratio},
        {"loadshare_tau_ms", s.loadshare_tau_ms},
        {"with_motion", s.with_motion},
        {"object_label", s.object_label},
    };
    if (s.grip_hold_n) j["grip_hold_n"] = *s.grip_hold_n;
    return j;
}

namespace {

// Numeric template fields in draw order. The two *_delay_ms fields are
// relative alternatives to release_start_ms and loadshare_crossing_ms.
const std::vector<std::string> kNumericFields{
    "weight_kg",         "contact_time_ms",       "release_start_ms",  "release_delay_ms", "release_duration_ms",
    "pull_peak_n",       "loadshare_crossing_ms", "loadshare_delay_ms", "sensor_noise_sigma_n", "grip_hold_n",
    "release_steepness", "taker_peak_ratio",      "loadshare_tau_ms",
};

}  // namespace

SpecTemplate parse_spec_template(const nlohmann::json& doc)
{
    if (!doc.is_object()) fail(ErrorKind::Format, "generator spec must be a JSON object");
    SpecTemplate t;
    for (const auto& [key, value] : doc.items()) {
        if (key == "seed") {
            if (!value.is_number_unsigned() && !value.is_number_integer()) fail(ErrorKind::Format, "generator spec: seed must be an integer");
            t.seed = value.get<std::uint64_t>();
            continue;
        }
        if (key == "object_label" || key == "with_motion" || key == "snap_to_grid" || key == "n") {
            t.fields[key] = value;
            continue;
        }
        if (std::find(kNumericFields.begin(), kNumericFields.end(), key) == kNumericFields.end())
            fail(ErrorKind::Format, "generator spec: unknown field '" + key + "'");
        const bool range = value.is_object() && value.contains("min") && value.contains("max") && value["min"].is_number() &&
                           value["max"].is_number() && value.size() == 2;
        if (!value.is_number() && !range) fail(ErrorKind::Format, "generator spec: '" + key + "' must be a number or {\"min\", \"max\"}");
        if (range && value["min"].get<double>() > value["max"].get<double>())
            fail(ErrorKind::Format, "generator spec: '" + key + "' has min > max");
        t.fields[key] = value;
    }
    if (t.fields.contains("release_start_ms") && t.fields.contains("release_delay_ms"))
        fail(ErrorKind::Format, "generator spec: give release_start_ms or release_delay_ms, not both");
    if (t.fields.contains("loadshare_crossing_ms") && t.fields.contains("loadshare_delay_ms"))
        fail(ErrorKind::Format, "generator spec: give loadshare_crossing_ms or loadshare_delay_ms, not both");
    return t;
}

SpecTemplate load_spec_template(const std::filesystem::path& file)
{
    std::ifstream in(file);
    if (!in) fail(ErrorKind::Io, "cannot open generator spec " + file.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Format, file.string() + ": " + e.what());
    }
    return parse_spec_template(doc);
}

GeneratorSpec draw_spec(const SpecTemplate& tmpl, std::size_t index)
{
    GeneratorSpec s;
    s.seed = tmpl.seed + index;
    std::mt19937_64 rng(s.seed);
    std::map<std::string, double> v;
    for (const auto& key : kNumericFields) {
        // Always consume one draw per field so fields do not shift each other.
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        if (!tmpl.fields.contains(key)) continue;
        const auto& f = tmpl.fields[key];
        v[key] = f.is_number() ? f.get<double>() : f["min"].get<double>() + u * (f["max"].get<double>() - f["min"].get<double>());
    }
    auto get = [&](const char* key, double& target) {
        if (auto it = v.find(key); it != v.end()) target = it->second;
    };
    get("weight_kg", s.weight_kg);
    get("contact_time_ms", s.contact_time_ms);
    get("release_start_ms", s.release_start_ms);
    if (v.count("release_delay_ms")) s.release_start_ms = s.contact_time_ms + v["release_delay_ms"];
    get("release_duration_ms", s.release_duration_ms);
    get("pull_peak_n", s.pull_peak_n);
    get("loadshare_crossing_ms", s.loadshare_crossing_ms);
    if (v.count("loadshare_delay_ms")) s.loadshare_crossing_ms = s.contact_time_ms + v["loadshare_delay_ms"];
    get("sensor_noise_sigma_n", s.sensor_noise_sigma_n);
    if (v.count("grip_hold_n")) s.grip_hold_n = v["grip_hold_n"];
    get("release_steepness", s.release_steepness);
    get("taker_peak_ratio", s.taker_peak_ratio);
    get("loadshare_tau_ms", s.loadshare_tau_ms);
    if (tmpl.fields.contains("object_label")) s.object_label = tmpl.fields["object_label"].get<std::string>();
    if (tmpl.fields.contains("with_motion")) s.with_motion = tmpl.fields["with_motion"].get<bool>();
    if (tmpl.fields.value("snap_to_grid", false)) {
        auto snap = [](double ms) { return std::round(ms / kSampleMs) * kSampleMs; };
        s.contact_time_ms = snap(s.contact_time_ms);
        s.release_start_ms = snap(s.release_start_ms);
        s.loadshare_crossing_ms = snap(s.loadshare_crossing_ms);
    }
    return s;
}

Session generate_session(std::span<const GeneratorSpec> specs, const SessionOptions& options)
{
    if (specs.empty()) fail(ErrorKind::Parameter, "a session needs at least one handover");
    Session session;
    HandoverRecord& s = session.record;
    auto append = [&](const HandoverRecord& r, std::size_t from, std::size_t to) {
        s.interaction.insert(s.interaction.end(), r.interaction.begin() + static_cast<std::ptrdiff_t>(from),
                             r.interaction.begin() + static_cast<std::ptrdiff_t>(to));
        s.giver_grip.insert(s.giver_grip.end(), r.giver_grip.begin() + static_cast<std::ptrdiff_t>(from),
                            r.giver_grip.begin() + static_cast<std::ptrdiff_t>(to));
        s.taker_grip.insert(s.taker_grip.end(), r.taker_grip.begin() + static_cast<std::ptrdiff_t>(from),
                            r.taker_grip.begin() + static_cast<std::ptrdiff_t>(to));
        s.object_pose.insert(s.object_pose.end(), r.object_pose.begin() + static_cast<std::ptrdiff_t>(from),
                             r.object_pose.begin() + static_cast<std::ptrdiff_t>(to));
        s.giver_skeleton.insert(s.giver_skeleton.end(), r.giver_skeleton.begin() + static_cast<std::ptrdiff_t>(from),
                                r.giver_skeleton.begin() + static_cast<std::ptrdiff_t>(to));
        s.taker_skeleton.insert(s.taker_skeleton.end(), r.taker_skeleton.begin() + static_cast<std::ptrdiff_t>(from),
                                r.taker_skeleton.begin() + static_cast<std::ptrdiff_t>(to));
    };
    auto lerp_pose = [](const Pose& a, const Pose& b, double u) {
        Pose p;
        p.position = (1.0 - u) * a.position + u * b.position;
        return p;
    };

    std::optional<HandoverRecord> previous;
    for (const auto& spec : specs) {
        auto g = generate(spec);
        if (previous) {
            const std::size_t last = previous->length() - 1;
            const std::size_t gap = options.gap_samples;
            for (std::size_t k = 1; k <= gap; ++k) {
                const double u = static_cast<double>(k) / static_cast<double>(gap + 1);
                auto mix = [&](const WrenchSample& a, const WrenchSample& b) {
                    WrenchSample w;
                    w.force = (1.0 - u) * a.force + u * b.force;
                    w.torque = (1.0 - u) * a.torque + u * b.torque;
                    return w;
                };
                s.interaction.push_back(mix(previous->interaction[last], g.record.interaction[0]));
                s.giver_grip.push_back(mix(previous->giver_grip[last], g.record.giver_grip[0]));
                s.taker_grip.push_back(mix(previous->taker_grip[last], g.record.taker_grip[0]));
                s.object_pose.push_back(lerp_pose(previous->object_pose[last], g.record.object_pose[0], u));
                SkeletonFrame gf, tf;
                for (std::size_t b = 0; b < kBodyCount; ++b) {
                    gf.bodies[b] = lerp_pose(previous->giver_skeleton[last].bodies[b], g.record.giver_skeleton[0].bodies[b], u);
                    tf.bodies[b] = lerp_pose(previous->taker_skeleton[last].bodies[b], g.record.taker_skeleton[0].bodies[b], u);
                }
                s.giver_skeleton.push_back(gf);
                s.taker_skeleton.push_back(tf);
            }
        } else {
            s.meta = g.record.meta;
        }
        session.planted_centers.push_back(s.object_pose.size() + kCenterIndex);
        session.truths.push_back(g.truth);
        append(g.record, 0, g.record.length());
        previous = std::move(g.record);
    }
    for (auto* seq : {&s.interaction, &s.giver_grip, &s.taker_grip})
        for (std::size_t i = 0; i < seq->size(); ++i) (*seq)[i].t = static_cast<std::int64_t>(i);
    return session;
}

void write_corpus(const std::filesystem::path& dir, std::span<const Generated> items, std::span<const std::string> ids)
{
    if (items.size() != ids.size()) fail(ErrorKind::Parameter, "corpus ids and records differ in count");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
    DatasetManifest manifest;
    for (std::size_t i = 0; i < items.size(); ++i) {
        const auto sub = dir / ids[i];
        save_record(items[i].record, sub);
        std::ofstream gt(sub / "ground_truth.json");
        if (!gt) fail(ErrorKind::Io, "cannot write " + (sub / "ground_truth.json").string());
        gt << to_json(items[i].truth).dump(2) << '\n';
        ManifestEntry e;
        e.path = sub;
        e.weight_kg = items[i].record.meta.weight_kg;
        e.object_label = items[i].record.meta.object_label;
        e.dataset_tag = items[i].record.meta.dataset_tag;
        e.has_forces = items[i].record.meta.has_forces;
        manifest.entries.push_back(e);
    }
    save_manifest(manifest, dir / "manifest.json");
}

std::vector<NamedRecord> load_corpus(const std::filesystem::path& path)
{
    const auto file = std::filesystem::is_directory(path) ? path / "manifest.json" : path;
    const auto manifest = load_manifest(file);
    validate(manifest);
    std::vector<NamedRecord> out;
    out.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries) out.push_back({e.path.filename().string(), load_record(e.path)});
    return out;
}

std::vector<gripnet::GripWindow> separable_windows(std::size_t count, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<gripnet::GripWindow> out(count);
    for (std::size_t k = 0; k < count; ++k) {
        auto& w = out[k];
        w.label = static_cast<int>(k % 2);
        w.t_e = 0;
        const double weight = 0.8 + 1.2 * unit(rng);
        const double level = 0.5 * weight * kGravity * (0.5 + 0.5 * unit(rng));
        const double fz_offset = 2.0 * unit(rng) - 1.0;
        const int flip = 20 + static_cast<int>(unit(rng) * 76.0);  // 20..95
        for (int t = 0; t < gripnet::kSteps; ++t) {
            const bool flipped = w.label == 1 && t >= flip;
            w.series(t, 0) = (flipped ? level : -level) + 0.3 * noise(rng);
            w.series(t, 1) = fz_offset + 0.3 * noise(rng);
            w.series(t, 2) = weight;
        }
    }
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

BenchmarkReport benchmark(std::span<const strategy::StrategyKind> strategies, std::span<const NamedRecord> corpus,
                          const strategy::EngineOptions& options)
{
    using strategy::StrategyTag;
    if (strategies.empty()) fail(ErrorKind::Parameter, "benchmark needs at least one strategy");
    if (corpus.empty()) fail(ErrorKind::Parameter, "benchmark corpus is empty");

    BenchmarkReport report;
    std::map<StrategyTag, const strategy::StrategyKind*> kinds;
    for (const auto& k : strategies) {
        strategy::validate(k);
        if (!kinds.emplace(strategy::tag_of(k), &k).second)
            fail(ErrorKind::Parameter, "strategy '" + std::string(strategy::to_string(strategy::tag_of(k))) + "' listed twice");
    }
    for (auto tag : strategy::kAllStrategies)
        if (kinds.count(tag)) report.strategies.push_back(tag);

    // Aggregate in id order so the report does not depend on corpus order.
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return corpus[a].id < corpus[b].id; });

    std::map<StrategyTag, std::vector<double>> times;
    for (auto idx : order) {
        const auto& item = corpus[idx];
        BenchmarkRow row;
        row.id = item.id;
        row.weight_kg = item.record.meta.weight_kg;
        for (auto tag : report.strategies) {
            const auto trace = strategy::run_trace(*kinds.at(tag), item.record, options);
            row.release[tag] = trace.release_tick;
            auto& bucket = times[tag];
            for (const auto& t : trace.ticks) bucket.push_back(t.compute_time_us);
        }
        std::optional<std::size_t> best;
        std::size_t at_best = 0;
        for (auto tag : report.strategies) {
            const auto rt = row.release[tag];
            if (!rt) {
                ++report.not_triggered[tag];
                continue;
            }
            if (!best || *rt < *best) {
                best = rt;
                row.fastest = tag;
                at_best = 1;
            } else if (*rt == *best) {
                ++at_best;
            }
        }
        row.tie = at_best > 1;
        if (row.fastest) {
            ++report.fastest_counts[*row.fastest];
            if (row.tie) ++report.ties;
        } else {
            ++report.never_triggered;
        }
        report.rows.push_back(std::move(row));
    }
    for (auto tag : report.strategies) {
        report.fastest_counts.try_emplace(tag, 0);
        report.not_triggered.try_emplace(tag, 0);
        report.latency[tag] = strategy::latency_audit(times[tag]);
    }

    for (std::size_t a = 0; a < report.strategies.size(); ++a)
        for (std::size_t b = a + 1; b < report.strategies.size(); ++b) {
            const auto ta = report.strategies[a], tb = report.strategies[b];
            std::vector<double> d;
            for (const auto& row : report.rows) {
                const auto ra = row.release.at(ta), rb = row.release.at(tb);
                if (ra && rb) d.push_back(static_cast<double>(*ra) - static_cast<double>(*rb));
            }
            DeltaSummary s;
            if (!d.empty()) {
                const auto sum = stats::summarize(d);
                s.n = sum.n;
                s.mean_ticks = sum.mean;
                s.sd_ticks = sum.sd;
                s.min_ticks = sum.min;
                s.max_ticks = sum.max;
                s.mean_ms = sum.mean * kSampleMs;
            }
            report.deltas[std::string(strategy::to_string(ta)) + "-" + std::string(strategy::to_string(tb))] = s;
        }
    return report;
}

nlohmann::json to_json(const BenchmarkReport& r)
{
    using nlohmann::json;
    json out;
    json names = json::array();
    for (auto tag : r.strategies) names.push_back(std::string(strategy::to_string(tag)));
    out["strategies"] = names;
    out["records"] = r.rows.size();

    json rows = json::array();
    for (const auto& row : r.rows) {
        json rel = json::object();
        for (const auto& [tag, tick] : row.release) rel[std::string(strategy::to_string(tag))] = tick ? json(*tick) : json(nullptr);
        rows.push_back({{"id", row.id},
                        {"weight_kg", row.weight_kg},
                        {"release_tick", rel},
                        {"fastest", row.fastest ? json(std::string(strategy::to_string(*row.fastest))) : json(nullptr)},
                        {"tie", row.tie}});
    }
    out["per_record"] = rows;

    json fastest = json::object(), not_triggered = json::object(), latency = json::object();
    for (const auto& [tag, n] : r.fastest_counts) fastest[std::string(strategy::to_string(tag))] = n;
    for (const auto& [tag, n] : r.not_triggered) not_triggered[std::string(strategy::to_string(tag))] = n;
    for (const auto& [tag, l] : r.latency)
        latency[std::string(strategy::to_string(tag))] = {{"ticks", l.ticks}, {"max_ms", l.max_ms}, {"mean_ms", l.mean_ms},
                                                           {"p99_ms", l.p99_ms}, {"budget_ms", l.budget_ms}, {"pass", l.pass}};
    json fractions = json::object();
    for (const auto& [tag, n] : r.fastest_counts)
        fractions[std::string(strategy::to_string(tag))] = r.rows.empty() ? 0.0 : static_cast<double>(n) / static_cast<double>(r.rows.size());
    out["fastest_counts"] = fastest;
    out["fastest_fraction"] = fractions;
    out["ties"] = r.ties;
    out["never_triggered"] = r.never_triggered;
    out["not_triggered"] = not_triggered;

    json deltas = json::object();
    for (const auto& [key, d] : r.deltas)
        deltas[key] = {{"n", d.n}, {"mean_ticks", d.mean_ticks}, {"sd_ticks", d.sd_ticks}, {"min_ticks", d.min_ticks},
                       {"max_ticks", d.max_ticks}, {"mean_ms", d.mean_ms}};
    out["deltas"] = deltas;
    out["latency"] = latency;
    return out;
}

}  // namespace handover::harness

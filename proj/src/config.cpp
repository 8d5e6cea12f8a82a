#include "handover/config.hpp"

#include "handover/error.hpp"

#include <cmath>
#include <fstream>

namespace handover {

namespace {

using nlohmann::json;

json category_bounds()
{
    return {{"low_min_kg", 0.008}, {"low_max_kg", 0.1}, {"moderate_max_kg", 0.95}, {"high_max_kg", 2.06}};
}

bool same_kind(const json& a, const json& b)
{
    if (a.is_number() && b.is_number()) return true;
    return a.type() == b.type();
}

void check_keys(const json& reference, const json& patch, const std::string& path)
{
    if (!patch.is_object()) fail(ErrorKind::Format, "config" + (path.empty() ? "" : " '" + path + "'") + " must be an object");
    for (const auto& [key, value] : patch.items()) {
        const std::string where = path.empty() ? key : path + "." + key;
        if (!reference.contains(key)) fail(ErrorKind::Format, "unknown config key '" + where + "'");
        const auto& ref = reference[key];
        if (ref.is_object()) {
            check_keys(ref, value, where);
            continue;
        }
        if (!same_kind(ref, value)) fail(ErrorKind::Format, "config key '" + where + "' expects " + std::string(ref.type_name()));
        if (ref.is_number_unsigned() && !(value.is_number_unsigned() || (value.is_number_integer() && value.get<std::int64_t>() >= 0)))
            fail(ErrorKind::Format, "config key '" + where + "' expects a non-negative integer");
    }
}

seg::Method parse_method(const std::string& s)
{
    if (s == "grip_intersection") return seg::Method::GripIntersection;
    if (s == "motion_coholding") return seg::Method::MotionCoholding;
    fail(ErrorKind::Format, "unknown segmentation method '" + s + "' (grip_intersection or motion_coholding)");
}

Config from_json(const json& j)
{
    Config c;
    const auto& f = j["filter"];
    c.features.filter.order = f["order"].get<int>();
    c.features.filter.cutoff_hz = f["cutoff_hz"].get<double>();
    c.features.filter.sample_rate_hz = f["sample_rate_hz"].get<double>();

    const auto& fe = j["features"];
    c.features.contact_threshold_n = fe["contact_threshold_n"].get<double>();
    c.features.release_plateau_samples = fe["release_plateau_samples"].get<std::size_t>();
    c.features.release_fit_fraction = fe["release_fit_fraction"].get<double>();
    c.features.release_min_drop_n = fe["release_min_drop_n"].get<double>();
    c.features.smooth_forces = fe["smooth_forces"].get<bool>();
    c.features.onset_speed_mps = fe["onset_speed_mps"].get<double>();
    c.features.onset_sustain = fe["onset_sustain"].get<std::size_t>();

    const auto& s = j["segmentation"];
    c.segmentation.contact_threshold_n = s["contact_threshold_n"].get<double>();
    c.segmentation.persistence = s["persistence"].get<std::size_t>();
    c.segmentation.grasp_radius_m = s["grasp_radius_m"].get<double>();
    c.segmentation_method = parse_method(s["method"].get<std::string>());

    const auto& st = j["strategy"];
    c.gr2.light_threshold_n = st["gr2"]["light_threshold_n"].get<double>();
    c.gr2.weight_cutover_kg = st["gr2"]["weight_cutover_kg"].get<double>();
    c.gr2.release_probability = st["gr2"]["release_probability"].get<double>();
    c.loadshare.fraction = st["loadshare"]["fraction"].get<double>();
    c.pull.threshold_n = st["pull"]["threshold_n"].get<double>();
    try {
        c.engine.pull_axis = strategy::parse_axis(st["pull_axis"].get<std::string>());
    } catch (const Error& e) {
        fail(ErrorKind::Format, e.what());
    }

    const auto& t = j["train"];
    c.train.batch_size = t["batch_size"].get<std::size_t>();
    c.train.learning_rate = t["learning_rate"].get<double>();
    c.train.max_epochs = t["max_epochs"].get<std::size_t>();
    c.train.test_fraction = t["test_fraction"].get<double>();
    c.train.patience = t["patience"].get<std::size_t>();
    c.train.min_delta = t["min_delta"].get<double>();
    c.train.beta1 = t["beta1"].get<double>();
    c.train.beta2 = t["beta2"].get<double>();
    c.train.adam_eps = t["adam_eps"].get<double>();

    const double sign = j["loadshare_sign"].get<double>();
    c.features.loadshare_sign = sign;
    c.engine.loadshare_sign = sign;
    c.features.gravity = c.engine.gravity = j["gravity"].get<double>();
    c.seed = j["seed"].get<std::uint64_t>();
    c.train.seed = c.seed;

    if (j["categories"] != category_bounds()) fail(ErrorKind::Format, "weight category bounds are fixed and cannot be overridden");
    return c;
}

}  // namespace

void Config::validate() const
{
    auto bad = [](const std::string& what) { fail(ErrorKind::Parameter, "config: " + what); };
    if (features.filter.order < 1) bad("filter.order must be >= 1");
    if (!(features.filter.cutoff_hz > 0.0 && features.filter.cutoff_hz < features.filter.sample_rate_hz / 2.0))
        bad("filter.cutoff_hz must lie in (0, Nyquist)");
    if (!(features.contact_threshold_n > 0.0)) bad("features.contact_threshold_n must be positive");
    if (features.release_plateau_samples == 0) bad("features.release_plateau_samples must be positive");
    if (!(features.release_fit_fraction > 0.0 && features.release_fit_fraction < 1.0)) bad("features.release_fit_fraction must lie in (0, 1)");
    if (!(segmentation.contact_threshold_n > 0.0)) bad("segmentation.contact_threshold_n must be positive");
    if (!(segmentation.grasp_radius_m > 0.0)) bad("segmentation.grasp_radius_m must be positive");
    if (std::abs(engine.loadshare_sign) != 1.0) bad("loadshare_sign must be +1 or -1");
    if (!(engine.gravity > 0.0)) bad("gravity must be positive");
    strategy::validate(strategy::StrategyKind{gr2});
    strategy::validate(strategy::StrategyKind{loadshare});
    strategy::validate(strategy::StrategyKind{pull});
    train.validate();
}

json to_json(const Config& c)
{
    return {
        {"filter", {{"order", c.features.filter.order}, {"cutoff_hz", c.features.filter.cutoff_hz}, {"sample_rate_hz", c.features.filter.sample_rate_hz}}},
        {"features",
         {{"contact_threshold_n", c.features.contact_threshold_n},
          {"release_plateau_samples", c.features.release_plateau_samples},
          {"release_fit_fraction", c.features.release_fit_fraction},
          {"release_min_drop_n", c.features.release_min_drop_n},
          {"smooth_forces", c.features.smooth_forces},
          {"onset_speed_mps", c.features.onset_speed_mps},
          {"onset_sustain", c.features.onset_sustain}}},
        {"segmentation",
         {{"contact_threshold_n", c.segmentation.contact_threshold_n},
          {"persistence", c.segmentation.persistence},
          {"grasp_radius_m", c.segmentation.grasp_radius_m},
          {"method", std::string(seg::to_string(c.segmentation_method))}}},
        {"strategy",
         {{"gr2",
           {{"light_threshold_n", c.gr2.light_threshold_n},
            {"weight_cutover_kg", c.gr2.weight_cutover_kg},
            {"release_probability", c.gr2.release_probability}}},
          {"loadshare", {{"fraction", c.loadshare.fraction}}},
          {"pull", {{"threshold_n", c.pull.threshold_n}}},
          {"pull_axis", std::string(strategy::to_string(c.engine.pull_axis))}}},
        {"train",
         {{"batch_size", c.train.batch_size},
          {"learning_rate", c.train.learning_rate},
          {"max_epochs", c.train.max_epochs},
          {"test_fraction", c.train.test_fraction},
          {"patience", c.train.patience},
          {"min_delta", c.train.min_delta},
          {"beta1", c.train.beta1},
          {"beta2", c.train.beta2},
          {"adam_eps", c.train.adam_eps}}},
        {"categories", category_bounds()},
        {"loadshare_sign", c.engine.loadshare_sign},
        {"gravity", c.engine.gravity},
        {"seed", c.seed},
    };
}

Config apply_patch(const Config& base, const json& patch)
{
    json doc = to_json(base);
    check_keys(doc, patch, "");
    doc.merge_patch(patch);
    Config c = from_json(doc);
    c.validate();
    return c;
}

Config load_config(const std::filesystem::path& file, const Config& base)
{
    std::ifstream in(file);
    if (!in) fail(ErrorKind::Io, "cannot open config " + file.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        fail(ErrorKind::Format, file.string() + ": " + e.what());
    }
    return apply_patch(base, doc);
}

Config apply_override(const Config& base, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) fail(ErrorKind::Usage, "override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    json patch = value;
    std::string rest = key;
    std::vector<std::string> parts;
    for (std::size_t at = 0;;) {
        const auto dot = rest.find('.', at);
        parts.push_back(rest.substr(at, dot == std::string::npos ? std::string::npos : dot - at));
        if (dot == std::string::npos) break;
        at = dot + 1;
    }
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
    try {
        return apply_patch(base, patch);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Format) fail(ErrorKind::Usage, std::string("--set ") + assignment + ": " + e.what());
        throw;
    }
}

void write_config(const Config& config, const std::filesystem::path& dir)
{
    std::ofstream out(dir / "config.json");
    if (!out) fail(ErrorKind::Io, "cannot write " + (dir / "config.json").string());
    out << to_json(config).dump(2) << '\n';
}

strategy::StrategyKind make_strategy(strategy::StrategyTag tag, const Config& config, std::shared_ptr<const gripnet::VaeLstmModel> model)
{
    switch (tag) {
    case strategy::StrategyTag::GR2: {
        auto p = config.gr2;
        p.model = std::move(model);
        return p;
    }
    case strategy::StrategyTag::LoadShare: return config.loadshare;
    case strategy::StrategyTag::PullForce: return config.pull;
    }
    return config.pull;
}

}  // namespace handover

#include "handover/data.hpp"

#include "handover/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace handover {

namespace fs = std::filesystem;
using nlohmann::json;

Pose Pose::missing()
{
    const double nan = std::numeric_limits<double>::quiet_NaN();
    Pose p;
    p.position = Vec3::Constant(nan);
    p.rotation = {nan, nan, nan, nan};
    return p;
}

bool Pose::present() const
{
    return position.allFinite() && std::all_of(rotation.begin(), rotation.end(), [](double v) { return std::isfinite(v); });
}

std::string_view to_string(DatasetTag tag)
{
    switch (tag) {
    case DatasetTag::RPL: return "RPL";
    case DatasetTag::RPL2: return "RPL-2.0";
    case DatasetTag::YCB: return "YCB";
    }
    return "RPL-2.0";
}

DatasetTag parse_dataset_tag(std::string_view text)
{
    if (text == "RPL") return DatasetTag::RPL;
    if (text == "RPL-2.0") return DatasetTag::RPL2;
    if (text == "YCB") return DatasetTag::YCB;
    fail(ErrorKind::Format, "unknown dataset_tag '" + std::string(text) + "'");
}

namespace {

constexpr std::array<std::string_view, 6> kWrenchSuffix{"fx", "fy", "fz", "tx", "ty", "tz"};
constexpr std::array<std::string_view, 7> kPoseSuffix{"px", "py", "pz", "q0", "q1", "q2", "q3"};
constexpr std::size_t kPoseCols = 7;

bool is_baton(DatasetTag tag) { return tag == DatasetTag::RPL || tag == DatasetTag::RPL2; }

void append_number(std::string& out, double v)
{
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, end);
}

void append_pose(std::string& out, const Pose& p)
{
    if (!p.present()) {
        out.append(",,,,,,,");
        return;
    }
    for (int i = 0; i < 3; ++i) {
        out.push_back(',');
        append_number(out, p.position[i]);
    }
    for (double q : p.rotation) {
        out.push_back(',');
        append_number(out, q);
    }
}

void append_wrench(std::string& out, const WrenchSample& w)
{
    for (int i = 0; i < 3; ++i) {
        out.push_back(',');
        append_number(out, w.force[i]);
    }
    for (int i = 0; i < 3; ++i) {
        out.push_back(',');
        append_number(out, w.torque[i]);
    }
}

[[noreturn]] void format_error(std::size_t line, std::string_view column, const std::string& what)
{
    fail(ErrorKind::Format, "signals.csv line " + std::to_string(line) + ", field '" + std::string(column) + "': " + what);
}

double parse_cell(std::string_view cell, std::size_t line, std::string_view column, bool allow_empty)
{
    if (cell.empty()) {
        if (allow_empty) return std::numeric_limits<double>::quiet_NaN();
        format_error(line, column, "empty value");
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) format_error(line, column, "not a number: '" + std::string(cell) + "'");
    return v;
}

void split_line(std::string_view line, std::vector<std::string_view>& cells)
{
    cells.clear();
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.push_back(line.substr(start));
            return;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

json participant_to_json(const Participant& p)
{
    return json{{"height_m", p.height_m}, {"arm_length_m", p.arm_length_m}, {"age", p.age}, {"handedness", p.handedness}};
}

Participant participant_from_json(const json& j)
{
    Participant p;
    p.height_m = j.at("height_m").get<double>();
    p.arm_length_m = j.at("arm_length_m").get<double>();
    p.age = j.at("age").get<int>();
    p.handedness = j.at("handedness").get<std::string>();
    return p;
}

json meta_to_json(const RecordMeta& m)
{
    return json{
        {"weight_kg", m.weight_kg},
        {"dataset_tag", std::string(to_string(m.dataset_tag))},
        {"object_label", m.object_label},
        {"sample_rate_hz", m.sample_rate_hz},
        {"participants", {{"giver", participant_to_json(m.giver)}, {"taker", participant_to_json(m.taker)}}},
        {"has_forces", m.has_forces},
    };
}

RecordMeta meta_from_json(const json& j)
{
    RecordMeta m;
    try {
        m.weight_kg = j.at("weight_kg").get<double>();
        m.dataset_tag = parse_dataset_tag(j.at("dataset_tag").get<std::string>());
        m.object_label = j.at("object_label").get<std::string>();
        m.sample_rate_hz = j.at("sample_rate_hz").get<double>();
        const auto& parts = j.at("participants");
        m.giver = participant_from_json(parts.at("giver"));
        m.taker = participant_from_json(parts.at("taker"));
        m.has_forces = j.value("has_forces", m.dataset_tag != DatasetTag::YCB);
    } catch (const json::exception& e) {
        fail(ErrorKind::Format, std::string("meta.json: ") + e.what());
    }
    return m;
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void check_wrenches(const std::vector<WrenchSample>& seq, std::string_view name)
{
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const auto& w = seq[i];
        if (!w.force.allFinite() || !w.torque.allFinite())
            fail(ErrorKind::Validation, "invariant 'finite-wrench' violated: " + std::string(name) + " frame " + std::to_string(i));
        if (w.t != seq.front().t + static_cast<std::int64_t>(i))
            fail(ErrorKind::Validation, "invariant 'sample-index' violated: " + std::string(name) + " frame " + std::to_string(i));
    }
}

void check_pose(const Pose& p, std::string_view name, std::size_t frame)
{
    if (!p.present()) return;
    const auto& q = p.rotation;
    double norm = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
    if (std::abs(norm - 1.0) > 1e-6)
        fail(ErrorKind::Validation, "invariant 'quaternion-norm' violated: " + std::string(name) + " frame " + std::to_string(frame));
}

Pose lerp_pose(const Pose& a, const Pose& b, double s)
{
    Pose p;
    p.position = a.position + s * (b.position - a.position);
    // Shortest-arc nlerp.
    double dot = 0.0;
    for (int i = 0; i < 4; ++i) dot += a.rotation[i] * b.rotation[i];
    double sign = dot < 0.0 ? -1.0 : 1.0;
    double norm = 0.0;
    for (int i = 0; i < 4; ++i) {
        p.rotation[i] = a.rotation[i] + s * (sign * b.rotation[i] - a.rotation[i]);
        norm += p.rotation[i] * p.rotation[i];
    }
    norm = std::sqrt(norm);
    for (auto& q : p.rotation) q /= norm;
    return p;
}

}  // namespace

std::vector<std::string> signal_columns(bool has_forces)
{
    std::vector<std::string> cols{"frame"};
    if (has_forces) {
        for (std::string_view prefix : {"int", "giv", "tak"})
            for (auto s : kWrenchSuffix) cols.push_back(std::string(prefix) + "_" + std::string(s));
    }
    for (auto s : kPoseSuffix) cols.push_back("obj_" + std::string(s));
    for (std::string_view who : {"giver", "taker"})
        for (auto body : kBodyNames)
            for (auto s : kPoseSuffix) cols.push_back(std::string(who) + "_" + std::string(body) + "_" + std::string(s));
    return cols;
}

bool interpolate_pose_gaps(std::vector<Pose>& poses, std::size_t max_gap)
{
    bool complete = true;
    std::size_t i = 0;
    const std::size_t n = poses.size();
    while (i < n) {
        if (poses[i].present()) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && !poses[j].present()) ++j;
        const std::size_t gap = j - i;
        if (i == 0 || j == n || gap > max_gap) {
            complete = false;
        } else {
            const Pose& a = poses[i - 1];
            const Pose& b = poses[j];
            for (std::size_t k = i; k < j; ++k)
                poses[k] = lerp_pose(a, b, static_cast<double>(k - i + 1) / static_cast<double>(gap + 1));
        }
        i = j;
    }
    return complete;
}

void validate(const HandoverRecord& r, const LoadOptions& options)
{
    const std::size_t n = r.object_pose.size();
    auto aligned = [n](std::size_t m) { return m == n; };
    if (!aligned(r.giver_skeleton.size()) || !aligned(r.taker_skeleton.size()))
        fail(ErrorKind::Alignment, "invariant 'alignment' violated: skeleton lengths differ from object pose length " + std::to_string(n));
    if (r.meta.has_forces) {
        if (!aligned(r.interaction.size()) || !aligned(r.giver_grip.size()) || !aligned(r.taker_grip.size()))
            fail(ErrorKind::Alignment, "invariant 'alignment' violated: wrench lengths (" + std::to_string(r.interaction.size()) + ", " +
                                           std::to_string(r.giver_grip.size()) + ", " + std::to_string(r.taker_grip.size()) +
                                           ") differ from pose length " + std::to_string(n));
    } else if (!r.interaction.empty() || !r.giver_grip.empty() || !r.taker_grip.empty()) {
        fail(ErrorKind::Validation, "invariant 'forces-flag' violated: record without forces carries wrench samples");
    }
    if (r.meta.dataset_tag == DatasetTag::YCB && r.meta.has_forces)
        fail(ErrorKind::Validation, "invariant 'forces-flag' violated: YCB records carry no force data");
    if (!(r.meta.weight_kg > 0.0) || !std::isfinite(r.meta.weight_kg))
        fail(ErrorKind::Validation, "invariant 'weight-positive' violated: object_weight_kg = " + std::to_string(r.meta.weight_kg));
    if (r.meta.sample_rate_hz != kSampleRateHz)
        fail(ErrorKind::Validation, "invariant 'sample-rate' violated: expected 120 Hz");
    if (options.require_segment_length && is_baton(r.meta.dataset_tag) && n != kSegmentLength)
        fail(ErrorKind::Validation, "invariant 'segment-length' violated: baton records hold 800 frames, got " + std::to_string(n));
    if (r.meta.has_forces) {
        check_wrenches(r.interaction, "interaction");
        check_wrenches(r.giver_grip, "giver_grip");
        check_wrenches(r.taker_grip, "taker_grip");
    }
    for (std::size_t f = 0; f < n; ++f) {
        check_pose(r.object_pose[f], "object", f);
        for (std::size_t b = 0; b < kBodyCount; ++b) {
            check_pose(r.giver_skeleton[f].bodies[b], kBodyNames[b], f);
            check_pose(r.taker_skeleton[f].bodies[b], kBodyNames[b], f);
        }
    }
}

void save_record(const HandoverRecord& r, const fs::path& dir)
{
    validate(r, LoadOptions{.require_segment_length = false});

    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());

    std::string out;
    const auto cols = signal_columns(r.meta.has_forces);
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (i) out.push_back(',');
        out.append(cols[i]);
    }
    out.push_back('\n');
    const std::size_t n = r.length();
    for (std::size_t f = 0; f < n; ++f) {
        std::int64_t frame = r.meta.has_forces ? r.interaction[f].t : static_cast<std::int64_t>(f);
        out.append(std::to_string(frame));
        if (r.meta.has_forces) {
            append_wrench(out, r.interaction[f]);
            append_wrench(out, r.giver_grip[f]);
            append_wrench(out, r.taker_grip[f]);
        }
        append_pose(out, r.object_pose[f]);
        for (const auto& p : r.giver_skeleton[f].bodies) append_pose(out, p);
        for (const auto& p : r.taker_skeleton[f].bodies) append_pose(out, p);
        out.push_back('\n');
    }

    std::ofstream csv(dir / "signals.csv", std::ios::binary);
    if (!csv) fail(ErrorKind::Io, "cannot write " + (dir / "signals.csv").string());
    csv << out;
    std::ofstream meta(dir / "meta.json");
    if (!meta) fail(ErrorKind::Io, "cannot write " + (dir / "meta.json").string());
    meta << meta_to_json(r.meta).dump(2) << '\n';
    if (!csv || !meta) fail(ErrorKind::Io, "write failed in " + dir.string());
}

HandoverRecord load_record(const fs::path& dir, const LoadOptions& options)
{
    if (!fs::is_directory(dir)) fail(ErrorKind::Io, "record directory not found: " + dir.string());
    HandoverRecord r;
    {
        json j;
        try {
            j = json::parse(read_file(dir / "meta.json"));
        } catch (const json::parse_error& e) {
            fail(ErrorKind::Format, std::string("meta.json: ") + e.what());
        }
        r.meta = meta_from_json(j);
    }

    const std::string text = read_file(dir / "signals.csv");
    const auto expected = signal_columns(r.meta.has_forces);
    std::vector<std::string_view> cells;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool header_seen = false;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string_view line(text.data() + pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        split_line(line, cells);
        if (!header_seen) {
            header_seen = true;
            if (cells.size() != expected.size())
                fail(ErrorKind::Format, "signals.csv line 1: expected " + std::to_string(expected.size()) + " columns, got " +
                                            std::to_string(cells.size()));
            for (std::size_t c = 0; c < cells.size(); ++c)
                if (cells[c] != expected[c])
                    format_error(1, cells[c], "expected column '" + expected[c] + "'");
            continue;
        }
        if (cells.size() != expected.size())
            format_error(line_no, "*", "expected " + std::to_string(expected.size()) + " fields, got " + std::to_string(cells.size()));

        std::size_t c = 0;
        auto next = [&](bool allow_empty) {
            double v = parse_cell(cells[c], line_no, expected[c], allow_empty);
            ++c;
            return v;
        };
        const double frame_value = next(false);
        if (frame_value != std::floor(frame_value)) format_error(line_no, "frame", "not an integer");
        const auto frame = static_cast<std::int64_t>(frame_value);

        auto read_wrench = [&]() {
            WrenchSample w;
            w.t = frame;
            for (int i = 0; i < 3; ++i) w.force[i] = next(false);
            for (int i = 0; i < 3; ++i) w.torque[i] = next(false);
            return w;
        };
        auto read_pose = [&]() {
            Pose p;
            std::size_t first = c;
            int empty = 0;
            for (std::size_t k = 0; k < kPoseCols; ++k) empty += cells[first + k].empty() ? 1 : 0;
            if (empty != 0 && empty != static_cast<int>(kPoseCols))
                format_error(line_no, expected[first], "partially missing pose");
            for (int i = 0; i < 3; ++i) p.position[i] = next(true);
            for (int i = 0; i < 4; ++i) p.rotation[i] = next(true);
            return p;
        };
        if (r.meta.has_forces) {
            r.interaction.push_back(read_wrench());
            r.giver_grip.push_back(read_wrench());
            r.taker_grip.push_back(read_wrench());
        }
        r.object_pose.push_back(read_pose());
        SkeletonFrame g, t;
        for (auto& p : g.bodies) p = read_pose();
        for (auto& p : t.bodies) p = read_pose();
        r.giver_skeleton.push_back(g);
        r.taker_skeleton.push_back(t);
    }
    if (!header_seen) fail(ErrorKind::Format, "signals.csv is empty");

    bool usable = interpolate_pose_gaps(r.object_pose);
    for (std::size_t b = 0; b < kBodyCount; ++b) {
        for (auto* skel : {&r.giver_skeleton, &r.taker_skeleton}) {
            std::vector<Pose> track(skel->size());
            for (std::size_t f = 0; f < skel->size(); ++f) track[f] = (*skel)[f].bodies[b];
            usable = interpolate_pose_gaps(track) && usable;
            for (std::size_t f = 0; f < skel->size(); ++f) (*skel)[f].bodies[b] = track[f];
        }
    }
    r.meta.motion_usable = usable;

    validate(r, options);
    return r;
}

HandoverRecord load_session(const fs::path& dir)
{
    return load_record(dir, LoadOptions{.require_segment_length = false});
}

namespace {

template <typename T>
bool same_bits(const T& a, const T& b)
{
    return std::memcmp(&a, &b, sizeof(T)) == 0;
}

bool same_vec(const Vec3& a, const Vec3& b)
{
    for (int i = 0; i < 3; ++i)
        if (!same_bits(a[i], b[i])) return false;
    return true;
}

bool same_pose(const Pose& a, const Pose& b)
{
    if (!same_vec(a.position, b.position)) return false;
    for (int i = 0; i < 4; ++i)
        if (!same_bits(a.rotation[i], b.rotation[i])) return false;
    return true;
}

bool same_wrenches(const std::vector<WrenchSample>& a, const std::vector<WrenchSample>& b)
{
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].t != b[i].t || !same_vec(a[i].force, b[i].force) || !same_vec(a[i].torque, b[i].torque)) return false;
    return true;
}

bool same_skeletons(const std::vector<SkeletonFrame>& a, const std::vector<SkeletonFrame>& b)
{
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < kBodyCount; ++k)
            if (!same_pose(a[i].bodies[k], b[i].bodies[k])) return false;
    return true;
}

bool same_participant(const Participant& a, const Participant& b)
{
    return same_bits(a.height_m, b.height_m) && same_bits(a.arm_length_m, b.arm_length_m) && a.age == b.age &&
           a.handedness == b.handedness;
}

}  // namespace

bool identical(const HandoverRecord& a, const HandoverRecord& b)
{
    const auto& ma = a.meta;
    const auto& mb = b.meta;
    if (!same_bits(ma.weight_kg, mb.weight_kg) || ma.dataset_tag != mb.dataset_tag || ma.object_label != mb.object_label ||
        !same_bits(ma.sample_rate_hz, mb.sample_rate_hz) || !same_participant(ma.giver, mb.giver) ||
        !same_participant(ma.taker, mb.taker) || ma.has_forces != mb.has_forces || ma.motion_usable != mb.motion_usable)
        return false;
    if (a.object_pose.size() != b.object_pose.size()) return false;
    for (std::size_t i = 0; i < a.object_pose.size(); ++i)
        if (!same_pose(a.object_pose[i], b.object_pose[i])) return false;
    return same_wrenches(a.interaction, b.interaction) && same_wrenches(a.giver_grip, b.giver_grip) &&
           same_wrenches(a.taker_grip, b.taker_grip) && same_skeletons(a.giver_skeleton, b.giver_skeleton) &&
           same_skeletons(a.taker_skeleton, b.taker_skeleton);
}

std::vector<double> grip_force(std::span<const WrenchSample> seq)
{
    if (seq.empty()) fail(ErrorKind::Length, "empty-signal: grip force of an empty wrench sequence");
    std::vector<double> out(seq.size());
    std::transform(seq.begin(), seq.end(), out.begin(), [](const WrenchSample& w) { return -w.force.z(); });
    return out;
}

void validate(const DatasetManifest& manifest)
{
    std::set<std::string> seen;
    for (const auto& e : manifest.entries) {
        if (!seen.insert(e.path.lexically_normal().string()).second)
            fail(ErrorKind::Validation, "invariant 'unique-paths' violated: duplicate manifest path " + e.path.string());
        if (e.dataset_tag == DatasetTag::YCB && e.has_forces)
            fail(ErrorKind::Validation, "invariant 'forces-flag' violated: YCB entry " + e.path.string() + " claims force data");
    }
}

DatasetManifest load_manifest(const fs::path& file)
{
    json j;
    try {
        j = json::parse(read_file(file));
    } catch (const json::parse_error& e) {
        fail(ErrorKind::Format, file.string() + ": " + e.what());
    }
    if (!j.is_array()) fail(ErrorKind::Format, file.string() + ": manifest must be a JSON array");
    DatasetManifest m;
    const fs::path base = file.parent_path();
    for (const auto& item : j) {
        ManifestEntry e;
        try {
            fs::path p = item.at("path").get<std::string>();
            e.path = p.is_absolute() ? p : base / p;
            e.weight_kg = item.at("weight_kg").get<double>();
            e.object_label = item.value("object_label", std::string{});
            e.dataset_tag = parse_dataset_tag(item.at("dataset_tag").get<std::string>());
            e.has_forces = item.at("has_forces").get<bool>();
        } catch (const json::exception& ex) {
            fail(ErrorKind::Format, file.string() + ": " + ex.what());
        }
        m.entries.push_back(std::move(e));
    }
    validate(m);
    return m;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& file)
{
    validate(manifest);
    json j = json::array();
    const fs::path base = file.parent_path();
    for (const auto& e : manifest.entries) {
        fs::path p = fs::relative(fs::absolute(e.path), fs::absolute(base.empty() ? fs::path(".") : base));
        if (p.empty()) p = e.path;
        j.push_back({{"path", p.generic_string()},
                     {"weight_kg", e.weight_kg},
                     {"object_label", e.object_label},
                     {"dataset_tag", std::string(to_string(e.dataset_tag))},
                     {"has_forces", e.has_forces}});
    }
    std::ofstream out(file);
    if (!out) fail(ErrorKind::Io, "cannot write " + file.string());
    out << j.dump(2) << '\n';
}

}  // namespace handover

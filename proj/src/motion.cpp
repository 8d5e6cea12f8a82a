#include "handover/motion.hpp"

#include "handover/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace handover::motion {

TrajectoryProfile profile(WeightCategory category)
{
    switch (category) {
    case WeightCategory::Low: return {category, 38.676, 5.270};
    case WeightCategory::Moderate: return {category, 27.575, 4.920};
    case WeightCategory::High: return {category, 20.575, 4.580};
    }
    return {category, 27.575, 4.920};
}

double min_segment_duration(double distance_m, double accel_cap)
{
    if (!(accel_cap > 0.0)) fail(ErrorKind::Parameter, "acceleration cap must be positive");
    if (!(distance_m >= 0.0)) fail(ErrorKind::Parameter, "distance must be non-negative");
    return std::sqrt(kPeakAccelFactor * distance_m / accel_cap);
}

namespace {

struct Segment {
    Vec3 start, end;
    double t0 = 0.0, duration = 0.0;
};

void evaluate(const Segment& s, double t, Vec3& p, Vec3& v, Vec3& a)
{
    const auto k = min_jerk_state(s.start, s.end, s.duration, t - s.t0);
    p = k.position;
    v = k.velocity;
    a = k.acceleration;
}

}  // namespace

KinematicState min_jerk_state(const Vec3& start, const Vec3& end, double T, double t)
{
    if (!(T > 0.0)) fail(ErrorKind::Parameter, "segment duration must be positive");
    const double tau = std::clamp(t / T, 0.0, 1.0);
    const double tau2 = tau * tau, tau3 = tau2 * tau;
    const Vec3 d = end - start;
    KinematicState k;
    k.position = start + d * (10.0 * tau3 - 15.0 * tau3 * tau + 6.0 * tau3 * tau2);
    k.velocity = d * ((30.0 * tau2 - 60.0 * tau3 + 30.0 * tau3 * tau) / T);
    k.acceleration = d * ((60.0 * tau - 180.0 * tau2 + 120.0 * tau3) / (T * T));
    return k;
}

namespace {

Trajectory sample(const std::vector<Segment>& segments, double fs)
{
    Trajectory out;
    const double total = segments.back().t0 + segments.back().duration;
    std::size_t seg = 0;
    auto push = [&](double t) {
        while (seg + 1 < segments.size() && t >= segments[seg].t0 + segments[seg].duration) ++seg;
        Vec3 p, v, a;
        evaluate(segments[seg], t, p, v, a);
        out.t.push_back(t);
        out.position.push_back(p);
        out.velocity.push_back(v);
        out.acceleration.push_back(a);
    };
    for (std::size_t k = 0;; ++k) {
        const double t = static_cast<double>(k) / fs;
        if (t >= total) break;
        push(t);
    }
    push(total);
    out.knots.push_back({segments.front().start, 0.0});
    for (const auto& s : segments) out.knots.push_back({s.end, s.t0 + s.duration});
    return out;
}

}  // namespace

Trajectory min_jerk_segment(const Vec3& start, const Vec3& end, double duration_s, double sample_rate_hz)
{
    if (!(duration_s > 0.0)) fail(ErrorKind::Parameter, "segment duration must be positive");
    if (!(sample_rate_hz > 0.0)) fail(ErrorKind::Parameter, "sample rate must be positive");
    return sample({Segment{start, end, 0.0, duration_s}}, sample_rate_hz);
}

Trajectory plan_reach(std::span<const Vec3> waypoints, WeightCategory category, double sample_rate_hz)
{
    if (waypoints.size() < 2) fail(ErrorKind::Parameter, "a reach needs at least 2 waypoints");
    if (!(sample_rate_hz > 0.0)) fail(ErrorKind::Parameter, "sample rate must be positive");
    const double cap = profile(category).max_accel_cap;

    std::vector<std::string> warnings;
    std::vector<Vec3> points{waypoints.front()};
    for (std::size_t i = 1; i < waypoints.size(); ++i) {
        if ((waypoints[i] - points.back()).norm() < 1e-9) {
            warnings.push_back("waypoint " + std::to_string(i) + " duplicates its predecessor and was dropped");
            continue;
        }
        points.push_back(waypoints[i]);
    }
    if (points.size() < 2) {
        warnings.push_back("all waypoints coincide; trajectory is stationary");
        Trajectory t;
        t.t = {0.0};
        t.position = {points.front()};
        t.velocity = {Vec3::Zero()};
        t.acceleration = {Vec3::Zero()};
        t.knots = {{points.front(), 0.0}};
        t.warnings = warnings;
        return t;
    }

    std::vector<Segment> segments;
    double t0 = 0.0;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        const double T = min_segment_duration((points[i + 1] - points[i]).norm(), cap);
        segments.push_back({points[i], points[i + 1], t0, T});
        t0 += T;
    }
    auto out = sample(segments, sample_rate_hz);
    out.warnings = warnings;
    return out;
}

std::vector<Vec3> load_waypoints(const std::filesystem::path& file)
{
    std::ifstream in(file);
    if (!in) fail(ErrorKind::Io, "cannot open waypoint file " + file.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Format, file.string() + ": " + e.what());
    }
    const nlohmann::json& list = doc.is_object() && doc.contains("waypoints") ? doc["waypoints"] : doc;
    if (!list.is_array()) fail(ErrorKind::Format, file.string() + ": expected an array of waypoints");
    std::vector<Vec3> out;
    for (std::size_t i = 0; i < list.size(); ++i) {
        const auto& item = list[i].is_object() ? list[i].value("position", nlohmann::json()) : list[i];
        if (!item.is_array() || item.size() != 3 || !item[0].is_number() || !item[1].is_number() || !item[2].is_number())
            fail(ErrorKind::Format, file.string() + ": waypoint " + std::to_string(i) + " is not a 3-vector");
        out.emplace_back(item[0].get<double>(), item[1].get<double>(), item[2].get<double>());
    }
    return out;
}

void write_trajectory_csv(const Trajectory& tr, const std::filesystem::path& file)
{
    std::ofstream out(file);
    if (!out) fail(ErrorKind::Io, "cannot write " + file.string());
    out.precision(17);
    out << "t,x,y,z,vx,vy,vz,ax,ay,az\n";
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const auto& p = tr.position[i];
        const auto& v = tr.velocity[i];
        const auto& a = tr.acceleration[i];
        out << tr.t[i] << ',' << p.x() << ',' << p.y() << ',' << p.z() << ',' << v.x() << ',' << v.y() << ',' << v.z() << ',' << a.x() << ','
            << a.y() << ',' << a.z() << '\n';
    }
    if (!out) fail(ErrorKind::Io, "failed writing " + file.string());
}

}  // namespace handover::motion

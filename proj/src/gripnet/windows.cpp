#include "handover/gripnet/windows.hpp"

#include <cmath>
#include <string>

namespace handover::gripnet {

int ms_to_step(double ms)
{
    return static_cast<int>(std::lround(ms * kSampleRateHz / 1000.0));
}

Series window_series(const HandoverRecord& record, int t_e)
{
    if (!record.meta.has_forces) fail(ErrorKind::Capability, "record carries no force data");
    const auto first = static_cast<std::ptrdiff_t>(kCenterIndex) + t_e - (kSteps - 1);
    const auto last = static_cast<std::ptrdiff_t>(kCenterIndex) + t_e;
    if (first < 0 || last >= static_cast<std::ptrdiff_t>(record.interaction.size()))
        fail(ErrorKind::Bounds, "window ending at step " + std::to_string(t_e) + " does not fit a record of " +
                                    std::to_string(record.interaction.size()) + " samples");
    Series s;
    for (int k = 0; k < kSteps; ++k) {
        const auto& f = record.interaction[static_cast<std::size_t>(first + k)].force;
        s(k, 0) = f.y();
        s(k, 1) = f.z();
        s(k, 2) = record.meta.weight_kg;
    }
    return s;
}

std::vector<GripWindow> make_windows(const HandoverRecord& record, int t_rel_start_step)
{
    if (!record.meta.has_forces) fail(ErrorKind::Capability, "record carries no force data");
    std::vector<GripWindow> out;
    out.reserve(kLastWindowEnd - kFirstWindowEnd + 1);
    for (int t_e = kFirstWindowEnd; t_e <= kLastWindowEnd; ++t_e) {
        GripWindow w;
        w.series = window_series(record, t_e);
        w.t_e = t_e;
        w.label = t_e >= t_rel_start_step ? 1 : 0;
        out.push_back(w);
    }
    return out;
}

}  // namespace handover::gripnet

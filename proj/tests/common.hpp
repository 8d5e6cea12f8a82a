#pragma once

#include "handover/data.hpp"
#include "handover/error.hpp"
#include "handover/harness.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <string>

namespace testutil {

// Scratch directory removed on destruction.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag = "t")
    {
        std::random_device rd;
        path = std::filesystem::temp_directory_path() / ("handover_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

template <class F>
handover::ErrorKind error_kind(F&& f)
{
    try {
        f();
    } catch (const handover::Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected handover::Error";
    return handover::ErrorKind::Usage;
}

inline constexpr double kSampleMs = 1000.0 / 120.0;

inline double snap(double ms) { return std::round(ms / kSampleMs) * kSampleMs; }

// A valid spec with all planted instants on the sample grid.
inline handover::harness::GeneratorSpec grid_spec(std::mt19937_64& rng, double weight_lo = 0.05, double weight_hi = 2.0)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    handover::harness::GeneratorSpec s;
    s.weight_kg = weight_lo + (weight_hi - weight_lo) * u(rng);
    s.contact_time_ms = snap(-450.0 + 200.0 * u(rng));
    s.release_start_ms = snap(s.contact_time_ms + 60.0 + 150.0 * u(rng));
    s.release_duration_ms = 650.0 + 250.0 * u(rng);
    s.loadshare_crossing_ms = snap(s.contact_time_ms + 60.0 + 120.0 * u(rng));
    s.pull_peak_n = 2.0 + 8.0 * u(rng);
    s.seed = rng();
    return s;
}

}  // namespace testutil

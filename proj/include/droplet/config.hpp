#pragma once

#include "droplet/potential.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace droplet {

enum class DumpFormat { none, csv, bin };

DumpFormat parse_dump_format(const std::string& name);
std::string dump_format_name(DumpFormat f);

struct RateWindow {
    double predicted = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double min_r2 = 0.9; // a slope only counts when the points follow a power law
};

struct RunConfig {
    PotentialSpec potential;
    int dim = 2;
    int n = 256;
    std::optional<double> half_width; // empty: resolved by auto_half_width
    std::vector<double> betas{100, 200, 400, 800, 1600};
    double tol_kkt = 1e-7;
    double tol_fix = 1e-9;
    std::optional<int> max_iter;
    int expansion_K = 2;
    std::optional<double> expansion_margin; // empty: default_bulk_margin(R)
    double layer_K = 8.0;
    std::filesystem::path output = "out";
    DumpFormat dump = DumpFormat::none;
    int jobs = 1;
    std::map<std::string, RateWindow> windows;
    std::uint64_t hash = 0; // FNV-1a of the canonical input document

    double resolved_half_width() const; // after resolve()
    Grid grid() const;
    void resolve();                     // fills half_width when "auto"
    nlohmann::json to_json() const;     // every resolved value
};

std::map<std::string, RateWindow> default_rate_windows();

// Throws Error(invalid_argument) on schema violations, Error(io) on read failures.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

std::uint64_t fnv1a(const std::string& bytes);

} // namespace droplet

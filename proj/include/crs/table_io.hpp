#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "crs/noise_schedule.hpp"
#include "crs/rate_table.hpp"

namespace crs::io {

// Rate tables: CSV "alpha,value" rows; JSON {"alphas": [...], "values": [...]}.
// Schedules:   CSV "t,alpha" rows;     JSON {"t": [...], "alphas": [...]}.
// Numbers are written with 17 significant digits so reads are bit-exact.

std::string format_double(double v);

/// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_field(std::string_view text);

std::string to_csv(const RateTable& table);
std::string to_csv(const NoiseSchedule& schedule);
nlohmann::json to_json(const RateTable& table);
nlohmann::json to_json(const NoiseSchedule& schedule);

RateTable rate_from_csv(std::string_view text);
NoiseSchedule schedule_from_csv(std::string_view text);
RateTable rate_from_json(const nlohmann::json& j);
NoiseSchedule schedule_from_json(const nlohmann::json& j);

/// Format is chosen by extension: ".json" or anything else as CSV.
void save(const RateTable& table, const std::filesystem::path& path);
void save(const NoiseSchedule& schedule, const std::filesystem::path& path);
RateTable load_rate(const std::filesystem::path& path);
NoiseSchedule load_schedule(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view text);

}  // namespace crs::io

#include "crs/table_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <utility>
#include <vector>

#include "crs/error.hpp"

namespace crs::io {
namespace {

using Columns = std::pair<std::vector<double>, std::vector<double>>;

Columns parse_two_columns(std::string_view text) {
  Columns cols;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_skipped = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw ValidationError("csv line " + std::to_string(line_no) + ": expected two columns");
    }
    const std::string first = line.substr(0, comma);
    const std::string second = line.substr(comma + 1);
    char* e1 = nullptr;
    char* e2 = nullptr;
    const double a = std::strtod(first.c_str(), &e1);
    const double b = std::strtod(second.c_str(), &e2);
    const bool numeric = e1 != first.c_str() && e2 != second.c_str();
    if (!numeric) {
      if (cols.first.empty() && !header_skipped) {
        header_skipped = true;
        continue;
      }
      throw ValidationError("csv line " + std::to_string(line_no) + ": not numeric");
    }
    cols.first.push_back(a);
    cols.second.push_back(b);
  }
  return cols;
}

bool is_json_path(const std::filesystem::path& path) { return path.extension() == ".json"; }

std::vector<double> number_array(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_array()) {
    throw ValidationError(std::string("json: missing array '") + key + "'");
  }
  return j.at(key).get<std::vector<double>>();
}

}  // namespace

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string to_csv(const RateTable& table) {
  std::string out = "alpha,value\n";
  for (std::size_t i = 0; i < table.size(); ++i) {
    out += format_double(table.alphas()[i]) + ',' + format_double(table.values()[i]) + '\n';
  }
  return out;
}

std::string to_csv(const NoiseSchedule& schedule) {
  std::string out = "t,alpha\n";
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    out += format_double(schedule.knots_t()[i]) + ',' +
           format_double(schedule.knots_alpha()[i]) + '\n';
  }
  return out;
}

nlohmann::json to_json(const RateTable& table) {
  return {{"alphas", std::vector<double>(table.alphas().begin(), table.alphas().end())},
          {"values", std::vector<double>(table.values().begin(), table.values().end())}};
}

nlohmann::json to_json(const NoiseSchedule& schedule) {
  return {{"t", std::vector<double>(schedule.knots_t().begin(), schedule.knots_t().end())},
          {"alphas",
           std::vector<double>(schedule.knots_alpha().begin(), schedule.knots_alpha().end())}};
}

RateTable rate_from_csv(std::string_view text) {
  auto [a, v] = parse_two_columns(text);
  return RateTable(std::move(a), std::move(v));
}

NoiseSchedule schedule_from_csv(std::string_view text) {
  auto [t, a] = parse_two_columns(text);
  return NoiseSchedule(std::move(t), std::move(a));
}

RateTable rate_from_json(const nlohmann::json& j) {
  return RateTable(number_array(j, "alphas"), number_array(j, "values"));
}

NoiseSchedule schedule_from_json(const nlohmann::json& j) {
  return NoiseSchedule(number_array(j, "t"), number_array(j, "alphas"));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void save(const RateTable& table, const std::filesystem::path& path) {
  write_file(path, is_json_path(path) ? to_json(table).dump(2) + "\n" : to_csv(table));
}

void save(const NoiseSchedule& schedule, const std::filesystem::path& path) {
  write_file(path, is_json_path(path) ? to_json(schedule).dump(2) + "\n" : to_csv(schedule));
}

RateTable load_rate(const std::filesystem::path& path) {
  const auto text = read_file(path);
  if (is_json_path(path)) {
    try {
      return rate_from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path.string() + ": " + e.what());
    }
  }
  return rate_from_csv(text);
}

NoiseSchedule load_schedule(const std::filesystem::path& path) {
  const auto text = read_file(path);
  if (is_json_path(path)) {
    try {
      return schedule_from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path.string() + ": " + e.what());
    }
  }
  return schedule_from_csv(text);
}

}  // namespace crs::io

#include "prmcal/record_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "prmcal/error.hpp"

namespace prmcal {

using nlohmann::json;

namespace {

constexpr const char* kFields[] = {"question_id",   "trajectory_index", "step_index",
                                   "total_steps",   "raw_score",        "raw_logit",
                                   "success_count", "mc_samples",       "difficulty_level"};

std::string mapped(const ColumnMap& map, const std::string& canonical) {
  auto it = map.find(canonical);
  return it == map.end() ? canonical : it->second;
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void check_duplicates(const std::vector<CalibrationRecord>& records) {
  std::set<std::tuple<std::string, int, int>> seen;
  long row = 0;
  for (const auto& rec : records) {
    ++row;
    auto key = std::make_tuple(rec.question_id, rec.trajectory_index, rec.step_index);
    if (!seen.insert(key).second)
      fail(Errc::invariant_violation,
           "row " + std::to_string(row) + ": duplicate (question_id, trajectory_index, " +
               "step_index) = (" + rec.question_id + ", " +
               std::to_string(rec.trajectory_index) + ", " + std::to_string(rec.step_index) +
               ")");
  }
}

CalibrationRecord record_from_json(const json& j, long row, const ColumnMap& map) {
  CalibrationRecord rec;
  auto require = [&](const std::string& name) -> const json& {
    const std::string key = mapped(map, name);
    auto it = j.find(key);
    if (it == j.end() || it->is_null())
      fail(Errc::missing_field, "row " + std::to_string(row) + ": missing field '" + key + "'");
    return *it;
  };
  auto optional_field = [&](const std::string& name) -> const json* {
    const std::string key = mapped(map, name);
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return nullptr;
    return &*it;
  };
  try {
    rec.question_id = require("question_id").get<std::string>();
    rec.trajectory_index = require("trajectory_index").get<int>();
    rec.step_index = require("step_index").get<int>();
    rec.total_steps = require("total_steps").get<int>();
    rec.success_count = require("success_count").get<int>();
    rec.mc_samples = require("mc_samples").get<int>();
    if (const json* v = optional_field("raw_score")) rec.raw_score = v->get<double>();
    if (const json* v = optional_field("raw_logit")) rec.raw_logit = v->get<double>();
    if (const json* v = optional_field("difficulty_level")) rec.difficulty_level = v->get<int>();
    if (auto it = j.find("features"); it != j.end() && !it->is_null()) {
      for (const auto& [k, v] : it->items()) rec.features[k] = v.get<double>();
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    fail(Errc::malformed_row, "row " + std::to_string(row) + ": " + e.what());
  }
  return rec;
}

std::vector<CalibrationRecord> parse_jsonl(std::istream& in, const ColumnMap& map) {
  std::vector<CalibrationRecord> records;
  std::string line;
  long row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      fail(Errc::malformed_row, "row " + std::to_string(row) + ": not a JSON object");
    CalibrationRecord rec = record_from_json(j, row, map);
    validate_record(rec, row);
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  // Schema values never contain commas or quotes; plain splitting suffices.
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<CalibrationRecord> parse_csv(std::istream& in, const ColumnMap& map) {
  std::string header_line;
  if (!std::getline(in, header_line)) fail(Errc::malformed_row, "empty CSV file");
  const std::vector<std::string> header = split_csv_line(header_line);

  auto column = [&](const std::string& canonical) -> long {
    const std::string key = mapped(map, canonical);
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == key) return static_cast<long>(i);
    return -1;
  };
  long cols[9];
  for (int i = 0; i < 9; ++i) {
    cols[i] = column(kFields[i]);
    const bool required = i != 4 && i != 5 && i != 8;  // raw_score/raw_logit/difficulty optional
    if (required && cols[i] < 0)
      fail(Errc::missing_field, std::string("CSV header missing column '") +
                                    mapped(map, kFields[i]) + "'");
  }
  std::vector<std::pair<std::size_t, std::string>> feature_cols;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i].rfind("feature.", 0) == 0) feature_cols.emplace_back(i, header[i].substr(8));

  std::vector<CalibrationRecord> records;
  std::string line;
  long row = 1;  // header is row 1
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    auto cell = [&](long idx) -> std::string {
      if (idx < 0 || static_cast<std::size_t>(idx) >= cells.size()) return {};
      return cells[static_cast<std::size_t>(idx)];
    };
    auto to_int = [&](const std::string& s, const char* field) {
      try {
        std::size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
      } catch (const std::exception&) {
        fail(Errc::malformed_row,
             "row " + std::to_string(row) + ": bad integer for '" + field + "': '" + s + "'");
      }
    };
    auto to_double = [&](const std::string& s, const char* field) {
      try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
      } catch (const std::exception&) {
        fail(Errc::malformed_row,
             "row " + std::to_string(row) + ": bad number for '" + field + "': '" + s + "'");
      }
    };

    CalibrationRecord rec;
    const std::string qid = cell(cols[0]);
    if (qid.empty())
      fail(Errc::missing_field, "row " + std::to_string(row) + ": missing question_id");
    rec.question_id = qid;
    rec.trajectory_index = to_int(cell(cols[1]), "trajectory_index");
    rec.step_index = to_int(cell(cols[2]), "step_index");
    rec.total_steps = to_int(cell(cols[3]), "total_steps");
    if (std::string s = cell(cols[4]); !s.empty()) rec.raw_score = to_double(s, "raw_score");
    if (std::string s = cell(cols[5]); !s.empty()) rec.raw_logit = to_double(s, "raw_logit");
    rec.success_count = to_int(cell(cols[6]), "success_count");
    rec.mc_samples = to_int(cell(cols[7]), "mc_samples");
    if (std::string s = cell(cols[8]); !s.empty())
      rec.difficulty_level = to_int(s, "difficulty_level");
    for (const auto& [idx, name] : feature_cols) {
      if (std::string s = cell(static_cast<long>(idx)); !s.empty())
        rec.features[name] = to_double(s, ("feature." + name).c_str());
    }
    validate_record(rec, row);
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace

std::vector<CalibrationRecord> parse_records(std::istream& in, RecordFormat format,
                                             const ColumnMap& column_map) {
  std::vector<CalibrationRecord> records = format == RecordFormat::jsonl
                                               ? parse_jsonl(in, column_map)
                                               : parse_csv(in, column_map);
  check_duplicates(records);
  return records;
}

std::vector<CalibrationRecord> load_records(const std::string& path, RecordFormat format,
                                            const ColumnMap& column_map) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open '" + path + "'");
  return parse_records(in, format, column_map);
}

std::string record_to_json_line(const CalibrationRecord& rec) {
  json j;
  j["question_id"] = rec.question_id;
  j["trajectory_index"] = rec.trajectory_index;
  j["step_index"] = rec.step_index;
  j["total_steps"] = rec.total_steps;
  if (rec.raw_score) j["raw_score"] = *rec.raw_score;
  if (rec.raw_logit) j["raw_logit"] = *rec.raw_logit;
  j["success_count"] = rec.success_count;
  j["mc_samples"] = rec.mc_samples;
  if (rec.difficulty_level) j["difficulty_level"] = *rec.difficulty_level;
  if (!rec.features.empty()) j["features"] = rec.features;
  return j.dump();
}

void write_records(const std::vector<CalibrationRecord>& records, std::ostream& out,
                   RecordFormat format) {
  if (format == RecordFormat::jsonl) {
    for (const auto& rec : records) out << record_to_json_line(rec) << '\n';
    return;
  }
  std::set<std::string> feature_names;
  for (const auto& rec : records)
    for (const auto& [name, _] : rec.features) feature_names.insert(name);

  out << "question_id,trajectory_index,step_index,total_steps,raw_score,raw_logit,"
         "success_count,mc_samples,difficulty_level";
  for (const auto& name : feature_names) out << ",feature." << name;
  out << '\n';
  for (const auto& rec : records) {
    out << rec.question_id << ',' << rec.trajectory_index << ',' << rec.step_index << ','
        << rec.total_steps << ',';
    if (rec.raw_score) out << fmt_double(*rec.raw_score);
    out << ',';
    if (rec.raw_logit) out << fmt_double(*rec.raw_logit);
    out << ',' << rec.success_count << ',' << rec.mc_samples << ',';
    if (rec.difficulty_level) out << *rec.difficulty_level;
    for (const auto& name : feature_names) {
      out << ',';
      if (auto it = rec.features.find(name); it != rec.features.end())
        out << fmt_double(it->second);
    }
    out << '\n';
  }
}

void save_records(const std::vector<CalibrationRecord>& records, const std::string& path,
                  RecordFormat format) {
  std::ofstream out(path);
  if (!out) fail(Errc::io_error, "cannot write '" + path + "'");
  write_records(records, out, format);
}

}  // namespace prmcal

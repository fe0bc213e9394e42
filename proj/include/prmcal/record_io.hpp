#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "prmcal/record.hpp"

namespace prmcal {

enum class RecordFormat { jsonl, csv };

/// Optional remapping from the on-disk column/field names to the canonical
/// schema names (question_id, trajectory_index, step_index, total_steps,
/// raw_score, raw_logit, success_count, mc_samples, difficulty_level).
/// Keys are canonical names, values the names found in the file.
using ColumnMap = std::map<std::string, std::string>;

/// Loads and validates a record file. The whole file is rejected on the
/// first invariant violation, with the offending row number in the message.
std::vector<CalibrationRecord> load_records(const std::string& path, RecordFormat format,
                                            const ColumnMap& column_map = {});

std::vector<CalibrationRecord> parse_records(std::istream& in, RecordFormat format,
                                             const ColumnMap& column_map = {});

void save_records(const std::vector<CalibrationRecord>& records, const std::string& path,
                  RecordFormat format);

void write_records(const std::vector<CalibrationRecord>& records, std::ostream& out,
                   RecordFormat format);

std::string record_to_json_line(const CalibrationRecord& rec);

}  // namespace prmcal

#pragma once

#include <string>
#include <vector>

#include "difopt/strategies.hpp"

namespace difopt {

// Minimal CSV document: leading '#' comment lines (the first always carries
// the config hash), one header row, then string-typed cells. Values written
// with format_double re-read to the identical double (round-trip).
struct CsvDocument {
  std::vector<std::string> comments;  // stored without the leading "# "
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

// Shortest exact decimal form (max_digits10); "nan"/"inf"/"-inf" pass through.
std::string format_double(double v);
double parse_double(const std::string& cell);

std::string to_csv_text(const CsvDocument& doc);
CsvDocument parse_csv_text(const std::string& text);

void write_csv(const std::string& path, const CsvDocument& doc);
CsvDocument read_csv(const std::string& path);

// Learning-curve document: iteration, network MSE (linear), network MSE (dB),
// then one per-node MSE column.
CsvDocument learning_curve_csv(const std::string& config_hash,
                               const LearningCurve& curve);

// One sweep measurement: a (step-size, strategy) cell of the comparison
// table. Failed cells carry the failure text in `error` and NaN values.
struct SweepRow {
  double mu = 0.0;
  std::string strategy;
  double simulated_mse_db = 0.0;
  double predicted_mse_db = 0.0;
  double bias_power_db = 0.0;
  std::string error;  // empty = ok
};

struct PerformanceReport {
  std::string config_hash;
  std::vector<SweepRow> rows;
};

// Columns: mu, strategy, simulated_mse_db, predicted_mse_db, bias_power_db,
// error.
CsvDocument sweep_csv(const PerformanceReport& report);

// Human-oriented structured text with one block per step-size.
std::string report_text(const PerformanceReport& report);

}  // namespace difopt

#include "difopt/csv.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "difopt/block_vector.hpp"

namespace difopt {

namespace {

// std::stod throws out_of_range whenever the C library flags underflow, which
// rejects perfectly representable values near the subnormal range; strtod
// returns the correctly rounded result instead.
double to_double(const std::string& text, std::size_t* used) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (used) *used = static_cast<std::size_t>(end - begin);
  return v;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream out;
  // Shortest representation that parses back to the identical bits.
  for (int prec = 1; prec <= std::numeric_limits<double>::max_digits10; ++prec) {
    out.str("");
    out << std::setprecision(prec) << v;
    if (to_double(out.str(), nullptr) == v) break;
  }
  return out.str();
}

double parse_double(const std::string& cell) {
  if (cell == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (cell == "inf") return std::numeric_limits<double>::infinity();
  if (cell == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double v = to_double(cell, &used);
  if (cell.empty() || used != cell.size())
    throw std::invalid_argument("csv: not a number: '" + cell + "'");
  return v;
}

std::string to_csv_text(const CsvDocument& doc) {
  std::ostringstream out;
  for (const std::string& c : doc.comments) out << "# " << c << "\n";
  for (std::size_t i = 0; i < doc.columns.size(); ++i)
    out << (i ? "," : "") << doc.columns[i];
  out << "\n";
  for (const auto& row : doc.rows) {
    if (row.size() != doc.columns.size())
      throw std::invalid_argument("csv: row width does not match header");
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
  return out.str();
}

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (ch != '\r') {
      cell.push_back(ch);
    }
  }
  cells.push_back(cell);
  return cells;
}

}  // namespace

CsvDocument parse_csv_text(const std::string& text) {
  CsvDocument doc;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::size_t start = 1;
      if (start < line.size() && line[start] == ' ') ++start;
      doc.comments.push_back(line.substr(start));
      continue;
    }
    if (!have_header) {
      doc.columns = split_row(line);
      have_header = true;
      continue;
    }
    std::vector<std::string> row = split_row(line);
    if (row.size() != doc.columns.size())
      throw std::invalid_argument("csv: row width does not match header");
    doc.rows.push_back(std::move(row));
  }
  if (!have_header) throw std::invalid_argument("csv: missing header row");
  return doc;
}

void write_csv(const std::string& path, const CsvDocument& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("csv: cannot open '" + path + "' for writing");
  out << to_csv_text(doc);
  if (!out) throw std::runtime_error("csv: write to '" + path + "' failed");
}

CsvDocument read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("csv: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv_text(buf.str());
}

CsvDocument learning_curve_csv(const std::string& config_hash,
                               const LearningCurve& curve) {
  CsvDocument doc;
  doc.comments.push_back("config_hash=" + config_hash);
  const Eigen::Index n = curve.per_node_mse.cols();
  doc.columns = {"iteration", "network_mse", "network_mse_db"};
  for (Eigen::Index k = 0; k < n; ++k)
    doc.columns.push_back("node_" + std::to_string(k));
  for (Eigen::Index i = 0; i < curve.per_node_mse.rows(); ++i) {
    std::vector<std::string> row;
    row.push_back(std::to_string(i));
    row.push_back(format_double(curve.network_mse[i]));
    row.push_back(format_double(to_db(curve.network_mse[i])));
    for (Eigen::Index k = 0; k < n; ++k)
      row.push_back(format_double(curve.per_node_mse(i, k)));
    doc.rows.push_back(std::move(row));
  }
  return doc;
}

CsvDocument sweep_csv(const PerformanceReport& report) {
  CsvDocument doc;
  doc.comments.push_back("config_hash=" + report.config_hash);
  doc.columns = {"mu",
                 "strategy",
                 "simulated_mse_db",
                 "predicted_mse_db",
                 "bias_power_db",
                 "error"};
  for (const SweepRow& r : report.rows) {
    doc.rows.push_back({format_double(r.mu), r.strategy,
                        format_double(r.simulated_mse_db),
                        format_double(r.predicted_mse_db),
                        format_double(r.bias_power_db), r.error});
  }
  return doc;
}

std::string report_text(const PerformanceReport& report) {
  std::ostringstream out;
  out << "performance report\n";
  out << "config_hash: " << report.config_hash << "\n";
  double current_mu = std::numeric_limits<double>::quiet_NaN();
  for (const SweepRow& r : report.rows) {
    if (!(r.mu == current_mu)) {
      current_mu = r.mu;
      out << "\nstep-size mu = " << format_double(r.mu) << "\n";
    }
    out << "  " << r.strategy << ":";
    if (!r.error.empty()) {
      out << " error: " << r.error << "\n";
      continue;
    }
    out << " simulated " << format_double(r.simulated_mse_db) << " dB"
        << ", predicted " << format_double(r.predicted_mse_db) << " dB"
        << ", bias power " << format_double(r.bias_power_db) << " dB\n";
  }
  return out.str();
}

std::string serialize_block_vector(const BlockVector& x) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (int k = 0; k < x.n_blocks(); ++k) {
    for (int m = 0; m < x.block_dim(); ++m) out << (m ? " " : "") << x.data(m, k);
    out << "\n";
  }
  return out.str();
}

}  // namespace difopt

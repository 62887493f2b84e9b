#ifndef DGPR_DATASET_HPP
#define DGPR_DATASET_HPP

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dgpr/common.hpp"

namespace dgpr {

/// Regression data: input locations as rows of x, one output per row.
struct Dataset {
  Matrix x;
  Vector y;
  double noise_variance = 0.0;

  Index size() const { return y.size(); }
  int dim() const { return static_cast<int>(x.cols()); }

  Vector input(Index m) const { return x.row(m).transpose(); }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim surrounding whitespace
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    fields.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back("");
  return fields;
}

}  // namespace detail

/// Reads a dataset from CSV with a mandatory header. Every column named
/// other than "y" is taken as an input coordinate, in file order; exactly one
/// "y" column must be present. `y_column` renames the output column for
/// files using a different layout (e.g. lon,lat,value).
inline Dataset read_dataset_csv(const std::string& path, const std::string& y_column = "y") {
  std::ifstream in(path);
  require(in.good(), "parse-error", "cannot open CSV file: " + path);

  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "parse-error", "empty CSV file: " + path);
  const auto header = detail::split_csv_line(line);
  int y_index = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    for (std::size_t j = i + 1; j < header.size(); ++j) {
      require(header[i] != header[j], "parse-error",
              "duplicate header column '" + header[i] + "' in " + path);
    }
    if (header[i] == y_column) y_index = static_cast<int>(i);
  }
  require(y_index >= 0, "parse-error", "missing '" + y_column + "' column in " + path);
  const int d = static_cast<int>(header.size()) - 1;
  require(d >= 1, "parse-error", "no input columns in " + path);

  std::vector<Vector> rows;
  std::vector<double> outputs;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = detail::split_csv_line(line);
    require(fields.size() == header.size(), "parse-error",
            "row " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                " fields, expected " + std::to_string(header.size()));
    Vector xr(d);
    int k = 0;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      double value;
      try {
        std::size_t used = 0;
        value = std::stod(fields[i], &used);
        require(used == fields[i].size(), "parse-error", "");
      } catch (const std::exception&) {
        fail("parse-error",
             "row " + std::to_string(line_no) + ": cannot parse '" + fields[i] + "' as a number");
      }
      if (static_cast<int>(i) == y_index) {
        outputs.push_back(value);
      } else {
        xr[k++] = value;
      }
    }
    rows.push_back(xr);
  }
  require(!rows.empty(), "insufficient-data", "CSV has no data rows: " + path);

  Dataset data;
  data.x.resize(static_cast<Index>(rows.size()), d);
  data.y.resize(static_cast<Index>(rows.size()));
  for (std::size_t m = 0; m < rows.size(); ++m) {
    data.x.row(static_cast<Index>(m)) = rows[m].transpose();
    data.y[static_cast<Index>(m)] = outputs[m];
  }
  return data;
}

inline void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  require(out.good(), "parse-error", "cannot open CSV for writing: " + path);
  for (int i = 0; i < data.dim(); ++i) out << "x_" << (i + 1) << ",";
  out << "y\n";
  out.precision(17);
  for (Index m = 0; m < data.size(); ++m) {
    for (int i = 0; i < data.dim(); ++i) out << data.x(m, i) << ",";
    out << data.y[m] << "\n";
  }
}

}  // namespace dgpr

#endif

#include <charconv>
#include <fstream>
#include <sstream>

#include "sdkn/model_io.hpp"
#include "sdkn/training.hpp"

namespace sdkn {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

void Dataset::validate() const {
  if (inputs.rows() < 1) throw DataError("dataset: no rows");
  if (inputs.rows() != targets.rows()) throw DataError("dataset: input/target row counts differ");
  if (!inputs.allFinite() || !targets.allFinite()) throw DataError("dataset: non-finite entry");
}

Dataset load_dataset(const std::filesystem::path& path, Index d_in, Index d_out) {
  if (d_in < 1 || d_out < 1) throw InvalidArgument("load_dataset: column counts must be positive");
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset " + path.string());
  const Index cols = d_in + d_out;
  std::string line;
  std::size_t line_no = 0;
  bool header = true;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (static_cast<Index>(fields.size()) != cols)
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                      " columns, found " + std::to_string(fields.size()));
    if (header) {
      header = false;
      continue;
    }
    for (const auto& f : fields) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v))
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": non-numeric field '" + f + "'");
      values.push_back(v);
    }
  }
  if (header) throw DataError(path.string() + ": missing header row");
  const Index n = static_cast<Index>(values.size()) / cols;
  if (n < 1) throw DataError(path.string() + ": no data rows");
  Dataset data;
  data.inputs.resize(n, d_in);
  data.targets.resize(n, d_out);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < cols; ++j) {
      const double v = values[static_cast<std::size_t>(i * cols + j)];
      if (j < d_in)
        data.inputs(i, j) = v;
      else
        data.targets(i, j - d_in) = v;
    }
  return data;
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  data.validate();
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  for (Index j = 0; j < data.inputs.cols(); ++j) out << (j ? "," : "") << "x" << j;
  for (Index j = 0; j < data.targets.cols(); ++j) out << ",y" << j;
  out << '\n';
  for (Index i = 0; i < data.size(); ++i) {
    for (Index j = 0; j < data.inputs.cols(); ++j) out << (j ? "," : "") << format_number(data.inputs(i, j));
    for (Index j = 0; j < data.targets.cols(); ++j) out << ',' << format_number(data.targets(i, j));
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace sdkn

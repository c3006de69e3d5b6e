#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "intel_latent/errors.hpp"
#include "intel_latent/synthdata.hpp"

namespace intel_latent::synth {

void write_csv(std::ostream& out, const LabeledBatch& batch) {
  const auto& s = batch.samples;
  const std::size_t n = s.rows(), d = s.cols();
  if (batch.labels && batch.labels->size() != n) throw ShapeError("write_csv: label count differs from rows");
  for (std::size_t j = 0; j < d; ++j) out << (j ? "," : "") << 'x' << j + 1;
  if (batch.labels) out << ",label";
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", s[i * d + j]);
      out << (j ? "," : "") << buf;
    }
    if (batch.labels) out << ',' << (*batch.labels)[i];
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const LabeledBatch& batch) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_csv(out, batch);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

LabeledBatch read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("csv: empty input");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  const bool labelled = !header.empty() && header.back() == "label";
  const std::size_t d = header.size() - (labelled ? 1 : 0);
  if (d == 0) throw FormatError("csv: no data columns in header");

  std::vector<double> data;
  std::vector<int> labels;
  std::size_t rows = 0;
  for (std::size_t lineno = 2; std::getline(in, line); ++lineno) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      if (col >= header.size()) throw FormatError("csv line " + std::to_string(lineno) + ": too many columns");
      if (col < d) {
        double v = 0.0;
        const auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc() || p != cell.data() + cell.size()) {
          throw FormatError("csv line " + std::to_string(lineno) + ": bad number '" + cell + "'");
        }
        data.push_back(v);
      } else {
        int v = 0;
        const auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc() || p != cell.data() + cell.size()) {
          throw FormatError("csv line " + std::to_string(lineno) + ": bad label '" + cell + "'");
        }
        labels.push_back(v);
      }
      ++col;
    }
    if (col != header.size()) throw FormatError("csv line " + std::to_string(lineno) + ": too few columns");
    ++rows;
  }
  if (rows == 0) throw FormatError("csv: no data rows");
  LabeledBatch out{Tensor({rows, d}, std::move(data)), std::nullopt};
  if (labelled) out.labels = std::move(labels);
  return out;
}

LabeledBatch read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return read_csv(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace intel_latent::synth

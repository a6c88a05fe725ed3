/*
 * Copyright 2026 The rsde Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "rsde/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rsde/error.h"

namespace rsde {
namespace {

std::vector<std::string> SplitLine(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> NumberedHeader(const char* prefix, int d) {
  std::vector<std::string> h;
  for (int j = 1; j <= d; ++j) h.push_back(prefix + std::to_string(j));
  return h;
}

}  // namespace

Dataset::Dataset(Tensor x, Tensor r) : x_(std::move(x)), r_(std::move(r)) {
  if (x_.rank() != 2 || r_.shape() != x_.shape()) {
    throw InvalidArgument("dataset samples and risks must be matching N x D matrices");
  }
  for (double v : r_.values()) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InvalidArgument("risk entries must be finite and nonnegative");
    }
  }
}

Dataset Dataset::FromSamples(const std::vector<RiskSample>& samples) {
  if (samples.empty()) return Dataset();
  const std::size_t d = samples[0].x0.size();
  Tensor x = Tensor::Matrix(samples.size(), d);
  Tensor r = Tensor::Matrix(samples.size(), d);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].x0.size() != d || samples[i].r.size() != d) {
      throw InvalidArgument("sample dimensions differ");
    }
    std::copy(samples[i].x0.values().begin(), samples[i].x0.values().end(), x.row(i).begin());
    std::copy(samples[i].r.values().begin(), samples[i].r.values().end(), r.row(i).begin());
  }
  return Dataset(std::move(x), std::move(r));
}

std::vector<RiskSample> Dataset::ToSamples() const {
  std::vector<RiskSample> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) {
    const auto xr = x_row(i);
    const auto rr = r_row(i);
    out.push_back({Tensor::FromVector({xr.begin(), xr.end()}),
                   Tensor::FromVector({rr.begin(), rr.end()}), clean(i)});
  }
  return out;
}

bool Dataset::clean(std::size_t i) const {
  const auto rr = r_row(i);
  return std::all_of(rr.begin(), rr.end(), [](double v) { return v == 0.0; });
}

std::size_t Dataset::clean_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < size(); ++i) n += clean(i) ? 1 : 0;
  return n;
}

Dataset Dataset::WithoutRisk() const {
  return Dataset(x_, Tensor(x_.shape(), 0.0));
}

Dataset Dataset::Concatenated() const {
  const std::size_t n = size();
  const std::size_t d = x_.cols();
  Tensor z = Tensor::Matrix(n, 2 * d);
  for (std::size_t i = 0; i < n; ++i) {
    auto zr = z.row(i);
    std::copy(x_row(i).begin(), x_row(i).end(), zr.begin());
    std::copy(r_row(i).begin(), r_row(i).end(), zr.begin() + d);
  }
  return Dataset(z, Tensor(z.shape(), 0.0));
}

bool CsvTable::any_missing() const {
  return std::any_of(missing.begin(), missing.end(), [](char c) { return c != 0; });
}

CsvTable ReadCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("'" + path + "' is empty");
  for (const auto& f : SplitLine(line)) table.header.push_back(Trim(f));
  const std::size_t cols = table.header.size();
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    const auto fields = SplitLine(line);
    if (fields.size() != cols) {
      throw InvalidArgument(path + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(cols) + " fields, found " +
                            std::to_string(fields.size()));
    }
    for (const auto& raw : fields) {
      const std::string f = Trim(raw);
      if (f.empty() || f == "NA" || f == "nan") {
        values.push_back(0.0);
        table.missing.push_back(1);
        continue;
      }
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size()) {
        throw InvalidArgument(path + ":" + std::to_string(line_no) + ": cannot parse '" + f +
                              "'");
      }
      values.push_back(v);
      table.missing.push_back(0);
    }
    ++rows;
  }
  table.values = Tensor::Matrix(rows, cols, std::move(values));
  return table;
}

void WriteCsv(const std::string& path, const std::vector<std::string>& header,
              const Tensor& values, const std::vector<char>& missing) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  const std::size_t cols = header.size();
  if (values.size() != 0 && values.cols() != cols) {
    throw InvalidArgument("CSV header width differs from the data");
  }
  for (std::size_t j = 0; j < cols; ++j) out << (j ? "," : "") << header[j];
  out << "\n";
  const std::size_t rows = values.size() == 0 ? 0 : values.rows();
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      if (j) out << ",";
      const std::size_t idx = i * cols + j;
      if (!missing.empty() && missing[idx]) continue;
      out << FormatDouble(values[idx]);
    }
    out << "\n";
  }
  if (!out) throw InvalidArgument("failed writing '" + path + "'");
}

void WriteDatasetCsv(const std::string& path, const Dataset& data) {
  const int d = data.dim();
  auto header = NumberedHeader("x_", d);
  const auto rh = NumberedHeader("r_", d);
  header.insert(header.end(), rh.begin(), rh.end());
  WriteCsv(path, header, data.Concatenated().x());
}

Dataset ReadDatasetCsv(const std::string& path) {
  const CsvTable t = ReadCsv(path);
  if (t.any_missing()) throw InvalidArgument("'" + path + "' has missing cells; run impute first");
  const std::size_t cols = t.header.size();
  std::size_t d = 0;
  for (const auto& h : t.header) d += h.rfind("x_", 0) == 0 ? 1 : 0;
  if (d == 0 || (cols != d && cols != 2 * d)) {
    throw InvalidArgument("'" + path + "' must have columns x_1..x_D and optionally r_1..r_D");
  }
  const std::size_t n = t.values.rows();
  Tensor x = Tensor::Matrix(n, d);
  Tensor r = Tensor::Matrix(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      x.at(i, j) = t.values.at(i, j);
      if (cols == 2 * d) r.at(i, j) = t.values.at(i, d + j);
    }
  }
  return Dataset(std::move(x), std::move(r));
}

void WriteSamplesCsv(const std::string& path, const Tensor& samples) {
  WriteCsv(path, NumberedHeader("x_", static_cast<int>(samples.cols())), samples);
}

Tensor ReadSamplesCsv(const std::string& path) {
  const CsvTable t = ReadCsv(path);
  if (t.any_missing()) throw InvalidArgument("'" + path + "' has missing cells");
  std::size_t d = 0;
  for (const auto& h : t.header) d += h.rfind("x_", 0) == 0 ? 1 : 0;
  if (d == 0) throw InvalidArgument("'" + path + "' has no x_ columns");
  const std::size_t n = t.values.rows();
  Tensor x = Tensor::Matrix(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) x.at(i, j) = t.values.at(i, j);
  }
  return x;
}

}  // namespace rsde

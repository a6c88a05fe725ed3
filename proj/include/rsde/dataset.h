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

#ifndef RSDE_DATASET_H_
#define RSDE_DATASET_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rsde/tensor.h"

namespace rsde {

struct RiskSample {
  Tensor x0;
  Tensor r;
  bool clean = true;
};

// Two row-major N x D matrices: the (possibly corrupted) samples and their
// entrywise risks.
class Dataset {
 public:
  Dataset() = default;
  // Throws InvalidArgument on shape mismatch or negative / non-finite risk.
  Dataset(Tensor x, Tensor r);

  static Dataset FromSamples(const std::vector<RiskSample>& samples);
  std::vector<RiskSample> ToSamples() const;

  std::size_t size() const { return x_.rows(); }
  int dim() const { return static_cast<int>(x_.cols()); }
  bool empty() const { return x_.empty(); }

  const Tensor& x() const { return x_; }
  const Tensor& r() const { return r_; }
  std::span<const double> x_row(std::size_t i) const { return x_.row(i); }
  std::span<const double> r_row(std::size_t i) const { return r_.row(i); }
  bool clean(std::size_t i) const;
  std::size_t clean_count() const;

  // Same samples with every risk set to zero.
  Dataset WithoutRisk() const;
  // Rows [x | r] as a 2D-dimensional dataset with zero risk.
  Dataset Concatenated() const;

 private:
  Tensor x_;
  Tensor r_;
};

// Plain numeric CSV with a header row. Empty fields are read as missing.
struct CsvTable {
  std::vector<std::string> header;
  Tensor values;
  std::vector<char> missing;  // rows x cols, 1 = missing

  bool any_missing() const;
};

CsvTable ReadCsv(const std::string& path);
void WriteCsv(const std::string& path, const std::vector<std::string>& header,
              const Tensor& values, const std::vector<char>& missing = {});

// x_1..x_D, r_1..r_D
void WriteDatasetCsv(const std::string& path, const Dataset& data);
Dataset ReadDatasetCsv(const std::string& path);

// x_1..x_D
void WriteSamplesCsv(const std::string& path, const Tensor& samples);
Tensor ReadSamplesCsv(const std::string& path);

}  // namespace rsde

#endif  // RSDE_DATASET_H_

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace page {

/// Row-compressed feature matrix with +-1 labels.
struct Dataset {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::uint32_t> col_idx;
  std::vector<double> values;
  std::vector<double> labels;

  /// Appends one sample; `indices` must be strictly increasing and < cols.
  void add_row(const std::vector<std::uint32_t>& indices, const std::vector<double>& vals,
               double label);
};

enum class DatasetFormat { kDenseCsv, kSparseText };

/// Parses a dense CSV document (see docs/dataset_format.md).
Dataset parse_dense_csv(std::string_view text);
/// Parses "label idx:val idx:val ..." lines with 1-based indices.
/// `num_features` of 0 infers the width from the largest index.
Dataset parse_sparse_text(std::string_view text, std::size_t num_features = 0);

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                     std::size_t num_features = 0);

DatasetFormat parse_dataset_format(std::string_view name);

/// Sparse binary classification data: each entry is present with probability
/// `density` and standard normal; labels are the sign of a hidden linear score
/// with 10% of them flipped.
Dataset make_synthetic_classification(std::size_t rows, std::size_t cols, double density,
                                      std::uint64_t seed);

}  // namespace page

#include "page/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "page/errors.hpp"
#include "page/rng.hpp"

namespace page {
namespace {

bool is_blank(char c) { return c == ' ' || c == '\t'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_blank(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_blank(s.back())) s.remove_suffix(1);
  return s;
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw DataError("line " + std::to_string(line) + ": " + what);
}

double parse_number(std::string_view s, std::size_t line) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    fail(line, "not a number: '" + std::string(s) + "'");
  return v;
}

double parse_label(std::string_view s, std::size_t line) {
  const double y = parse_number(s, line);
  if (y != 1.0 && y != -1.0) fail(line, "label must be +1 or -1, got '" + std::string(trim(s)) + "'");
  return y;
}

// Calls fn(line_number, content) for every non-empty, non-comment line.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    fn(line_no, line);
  }
}

}  // namespace

void Dataset::add_row(const std::vector<std::uint32_t>& indices, const std::vector<double>& vals,
                      double label) {
  for (std::size_t k = 0; k < indices.size(); ++k) {
    col_idx.push_back(indices[k]);
    values.push_back(vals[k]);
  }
  row_ptr.push_back(col_idx.size());
  labels.push_back(label);
  ++rows;
}

Dataset parse_dense_csv(std::string_view text) {
  Dataset ds;
  std::vector<std::uint32_t> idx;
  std::vector<double> vals;
  std::size_t width = 0;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() < 2) fail(line_no, "expected at least one feature and a label");
    if (width == 0) {
      width = fields.size();
    } else if (fields.size() != width) {
      fail(line_no, "expected " + std::to_string(width) + " fields, got " + std::to_string(fields.size()));
    }
    idx.clear();
    vals.clear();
    for (std::size_t j = 0; j + 1 < fields.size(); ++j) {
      const double v = parse_number(fields[j], line_no);
      if (v != 0.0) {
        idx.push_back(static_cast<std::uint32_t>(j));
        vals.push_back(v);
      }
    }
    ds.add_row(idx, vals, parse_label(fields.back(), line_no));
  });
  if (ds.rows == 0) throw DataError("dense csv: no samples");
  ds.cols = width - 1;
  return ds;
}

Dataset parse_sparse_text(std::string_view text, std::size_t num_features) {
  Dataset ds;
  std::vector<std::uint32_t> idx;
  std::vector<double> vals;
  std::size_t max_index = 0;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = trim(line.substr(0, hash));
    std::vector<std::string_view> tokens;
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && is_blank(line[pos])) ++pos;
      const std::size_t begin = pos;
      while (pos < line.size() && !is_blank(line[pos])) ++pos;
      if (pos > begin) tokens.push_back(line.substr(begin, pos - begin));
    }
    if (tokens.empty()) return;
    const double label = parse_label(tokens[0], line_no);
    idx.clear();
    vals.clear();
    std::size_t previous = 0;
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const auto colon = tokens[t].find(':');
      if (colon == std::string_view::npos) fail(line_no, "expected idx:val, got '" + std::string(tokens[t]) + "'");
      const std::string_view key = tokens[t].substr(0, colon);
      std::size_t index = 0;
      const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), index);
      if (key.empty() || ec != std::errc() || ptr != key.data() + key.size() || index == 0)
        fail(line_no, "feature index must be a positive integer: '" + std::string(key) + "'");
      if (index <= previous) fail(line_no, "feature indices must be strictly increasing");
      if (num_features != 0 && index > num_features)
        fail(line_no, "feature index " + std::to_string(index) + " exceeds " + std::to_string(num_features));
      previous = index;
      max_index = std::max(max_index, index);
      idx.push_back(static_cast<std::uint32_t>(index - 1));
      vals.push_back(parse_number(tokens[t].substr(colon + 1), line_no));
    }
    ds.add_row(idx, vals, label);
  });
  if (ds.rows == 0) throw DataError("sparse text: no samples");
  ds.cols = num_features != 0 ? num_features : max_index;
  if (ds.cols == 0) throw DataError("sparse text: no features");
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format, std::size_t num_features) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  return format == DatasetFormat::kDenseCsv ? parse_dense_csv(text) : parse_sparse_text(text, num_features);
}

DatasetFormat parse_dataset_format(std::string_view name) {
  if (name == "csv") return DatasetFormat::kDenseCsv;
  if (name == "sparse" || name == "svmlight" || name == "libsvm") return DatasetFormat::kSparseText;
  throw ConfigError("unknown dataset format '" + std::string(name) + "' (expected csv or sparse)");
}

Dataset make_synthetic_classification(std::size_t rows, std::size_t cols, double density,
                                      std::uint64_t seed) {
  if (rows == 0 || cols == 0) throw ConfigError("synthetic dataset needs rows, cols >= 1");
  if (!(density > 0.0 && density <= 1.0)) throw ConfigError("density must lie in (0, 1]");
  CounterRng rng(seed, Stream::kProblem);
  std::vector<double> w(cols);
  for (double& v : w) v = rng.next_normal();
  Dataset ds;
  ds.cols = cols;
  std::vector<std::uint32_t> idx;
  std::vector<double> vals;
  for (std::size_t r = 0; r < rows; ++r) {
    idx.clear();
    vals.clear();
    double score = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      if (rng.next_unit() >= density) continue;
      const double v = rng.next_normal();
      idx.push_back(static_cast<std::uint32_t>(j));
      vals.push_back(v);
      score += w[j] * v;
    }
    double label = score >= 0.0 ? 1.0 : -1.0;
    if (rng.next_unit() < 0.1) label = -label;
    ds.add_row(idx, vals, label);
  }
  return ds;
}

}  // namespace page

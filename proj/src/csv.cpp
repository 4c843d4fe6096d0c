#include "ebst/csv.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "ebst/text.hpp"

namespace ebst {

CsvSchema CsvSchema::generated(std::size_t d, std::size_t k, bool labeled) {
  CsvSchema s;
  for (std::size_t i = 0; i < d; ++i)
    s.feature_columns.push_back("x" + std::to_string(i));
  if (labeled) {
    s.label_column = "label";
    for (std::size_t c = 0; c < k; ++c) s.classes.push_back(std::to_string(c));
  }
  return s;
}

namespace {

struct ParsedCsv {
  Matrix features;
  std::vector<std::size_t> labels;  // empty when schema has no label column
};

[[noreturn]] void fail(const std::string& path, std::size_t line,
                       const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

std::size_t find_column(const std::vector<std::string>& header,
                        const std::string& name, const std::string& path) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw std::runtime_error(path + ": missing column '" + name + "'");
}

ParsedCsv parse_csv(const std::string& path, const CsvSchema& schema,
                    bool want_labels) {
  if (want_labels && schema.label_column.empty())
    throw std::invalid_argument("csv schema has no label column");
  if (schema.feature_columns.empty())
    throw std::invalid_argument("csv schema has no feature columns");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open csv: " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  std::vector<std::string> header = split(trim(line), ',');
  for (auto& h : header) h = std::string(trim(h));

  std::vector<std::size_t> feat_idx;
  for (const std::string& name : schema.feature_columns)
    feat_idx.push_back(find_column(header, name, path));
  std::size_t label_idx = 0;
  if (want_labels) label_idx = find_column(header, schema.label_column, path);

  ParsedCsv out;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view trimmed = trim(line);
    if (trimmed.empty()) continue;
    std::vector<std::string> cells = split(trimmed, ',');
    if (cells.size() != header.size())
      fail(path, line_no,
           "expected " + std::to_string(header.size()) + " cells, got " +
               std::to_string(cells.size()));
    std::vector<double> feats(feat_idx.size());
    for (std::size_t i = 0; i < feat_idx.size(); ++i) {
      std::string_view cell = trim(cells[feat_idx[i]]);
      double v;
      if (!parse_double(cell, v))
        fail(path, line_no,
             "unparseable value '" + std::string(cell) + "' in column '" +
                 schema.feature_columns[i] + "'");
      if (!std::isfinite(v))
        fail(path, line_no,
             "non-finite value in column '" + schema.feature_columns[i] + "'");
      feats[i] = v;
    }
    rows.push_back(std::move(feats));
    if (want_labels) {
      std::string cell(trim(cells[label_idx]));
      std::size_t cls = schema.classes.size();
      for (std::size_t c = 0; c < schema.classes.size(); ++c)
        if (schema.classes[c] == cell) {
          cls = c;
          break;
        }
      if (cls == schema.classes.size())
        fail(path, line_no, "unknown label '" + cell + "'");
      out.labels.push_back(cls);
    }
  }
  if (rows.empty()) throw std::runtime_error(path + ": no data rows");
  out.features = Matrix::from_rows(rows);
  return out;
}

}  // namespace

LabeledSet load_labeled_csv(const std::string& path, const CsvSchema& schema,
                            DomainTag tag) {
  ParsedCsv parsed = parse_csv(path, schema, true);
  LabeledSet set;
  set.features = std::move(parsed.features);
  set.labels = std::move(parsed.labels);
  set.n_classes = schema.classes.size();
  set.domain = tag;
  set.validate();
  return set;
}

UnlabeledSet load_unlabeled_csv(const std::string& path, const CsvSchema& schema) {
  ParsedCsv parsed = parse_csv(path, schema, false);
  UnlabeledSet set;
  set.features = std::move(parsed.features);
  set.validate();
  return set;
}

void save_csv(const std::string& path, const Matrix& features,
              const std::vector<std::size_t>* labels, const CsvSchema& schema) {
  if (schema.feature_columns.size() != features.cols())
    throw std::invalid_argument("save_csv: schema column count != feature dim");
  if (labels != nullptr && labels->size() != features.rows())
    throw std::invalid_argument("save_csv: label count != row count");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open csv for writing: " + path);
  for (std::size_t i = 0; i < schema.feature_columns.size(); ++i)
    out << (i == 0 ? "" : ",") << schema.feature_columns[i];
  if (labels != nullptr) out << ',' << schema.label_column;
  out << '\n';
  for (std::size_t r = 0; r < features.rows(); ++r) {
    for (std::size_t c = 0; c < features.cols(); ++c)
      out << (c == 0 ? "" : ",") << format_double(features(r, c));
    if (labels != nullptr) {
      std::size_t y = (*labels)[r];
      if (y >= schema.classes.size())
        throw std::invalid_argument("save_csv: label out of schema range");
      out << ',' << schema.classes[y];
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("csv write failed: " + path);
}

}  // namespace ebst

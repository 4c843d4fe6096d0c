#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ebst/data.hpp"

namespace ebst {

// Column layout of a dataset CSV: header row, comma-separated, decimal float
// feature columns, optional class-name label column. No quoting; names must
// not contain commas.
struct CsvSchema {
  std::vector<std::string> feature_columns;
  std::string label_column;          // empty means unlabeled
  std::vector<std::string> classes;  // class index == position in this list

  // x0..x{d-1}, label column "label", classes "0".."k-1".
  static CsvSchema generated(std::size_t d, std::size_t k, bool labeled);
};

LabeledSet load_labeled_csv(const std::string& path, const CsvSchema& schema,
                            DomainTag tag);
UnlabeledSet load_unlabeled_csv(const std::string& path, const CsvSchema& schema);

// Writes features (and labels when non-null) under the schema's column
// names. Floats are shortest-round-trip decimals, so a save/load cycle
// reproduces the matrix bit for bit.
void save_csv(const std::string& path, const Matrix& features,
              const std::vector<std::size_t>* labels, const CsvSchema& schema);

}  // namespace ebst

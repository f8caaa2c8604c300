#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cmvn/error.hpp"
#include "cmvn/matrix.hpp"

namespace cmvn {

// A three-way array: N units (layers), each an r×p matrix of variables (rows)
// by occasions (columns), plus optional ground truth.
struct Dataset {
  std::size_t r = 0;
  std::size_t p = 0;
  std::vector<Matrix> samples;
  std::optional<std::vector<int>> labels;  // 1-based true cluster labels
  std::optional<std::vector<bool>> good_flags;
  std::optional<std::vector<std::string>> names;

  std::size_t n() const noexcept { return samples.size(); }

  void validate() const {
    if (r == 0 || p == 0) throw ShapeError("Dataset: r and p must be positive");
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (samples[i].rows() != r || samples[i].cols() != p)
        throw ShapeError("Dataset: unit " + std::to_string(i + 1) + " is not " + std::to_string(r) + "x" +
                         std::to_string(p));
    }
    if (labels) {
      if (labels->size() != n()) throw ShapeError("Dataset: labels length differs from n");
      for (int l : *labels)
        if (l < 1) throw ShapeError("Dataset: labels must be >= 1");
    }
    if (good_flags && good_flags->size() != n()) throw ShapeError("Dataset: good_flags length differs from n");
    if (names && names->size() != n()) throw ShapeError("Dataset: names length differs from n");
  }

  bool operator==(const Dataset&) const = default;
};

}  // namespace cmvn

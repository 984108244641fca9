#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fcb/model.hpp"

namespace fcb {

struct BifNetwork {
  std::string name;
  // Roles are unset (-1); call sites pick them.
  CausalModel model;
  std::vector<std::string> warnings;

  int edge_count() const;
};

/// Parses a discrete BIF document. Throws ParseError (with line and column),
/// Error(Normalization) for a row off by more than 1e-6 from summing to 1,
/// and Error(UnsupportedConstruct) for continuous variables. Rows within
/// tolerance are rescaled to sum to 1.
BifNetwork parse_bif(std::string_view text);
BifNetwork load_bif(const std::string& path);

/// Writes the model as BIF, one explicit row per parent assignment.
std::string write_bif(const CausalModel& model, const std::string& name = "unknown");

}  // namespace fcb

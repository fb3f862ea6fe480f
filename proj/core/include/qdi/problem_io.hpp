#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "qdi/model.hpp"

namespace qdi {

/// Parses a YAML problem document (schema in README.md). Throws ModelError.
ProblemSpec parse_problem(std::string_view text, std::string_view origin = "<string>");

ProblemSpec load_problem(const std::filesystem::path& path);

struct BuiltinExample {
  std::string name;
  std::string description;
  std::string_view source;  // the YAML document
};

const std::vector<BuiltinExample>& builtin_catalog();

std::vector<ProblemSpec> builtin_examples();

bool is_builtin_example(std::string_view name);

/// Throws ModelError if the name is unknown.
ProblemSpec builtin_example(std::string_view name);

/// A built-in name or a path to a problem file.
ProblemSpec resolve_problem(std::string_view name_or_path);

}  // namespace qdi

#pragma once

#include <optional>
#include <string_view>

#include "soaview/ast.hpp"

namespace soaview {

struct ParseResult {
  std::optional<Module> module; // present iff no errors
  std::vector<Diagnostic> diags;
  bool ok() const { return module.has_value(); }
};

// Parses and resolves a whole translation unit: grammar, name resolution,
// type checking, annotation legality, frame slot assignment. On any error
// the module is absent and `diags` explains why.
ParseResult parse(std::string_view source);

// Re-runs name resolution, type checking and slot assignment over a module
// whose statements were rebuilt programmatically. Layout and signature
// information is recomputed in place.
void run_sema(Module &m, std::vector<Diagnostic> &diags);

} // namespace soaview

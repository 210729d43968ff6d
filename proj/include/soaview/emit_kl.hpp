#pragma once

#include <string>

#include "soaview/ast.hpp"

namespace soaview {

// Canonical pretty-printer for kernel-language modules. The output reparses
// to a structurally identical module and printing is a fixed point:
// emit(parse(emit(m))) == emit(m).
std::string emit_kl(const Module &m);

std::string emit_kl_expr(const Expr &e);

} // namespace soaview

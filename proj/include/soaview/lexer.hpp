#pragma once

#include <string_view>
#include <vector>

#include "soaview/token.hpp"

namespace soaview {

// Tokenizes a whole source buffer. Lexical errors are appended to `diags`
// and the offending character is skipped, so the token stream is always
// terminated by Tok::End.
std::vector<Token> lex(std::string_view source, std::vector<Diagnostic> &diags);

} // namespace soaview

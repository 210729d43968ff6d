#pragma once

#include <cstdio>
#include <string>
#include <vector>

namespace soaview {

struct SourceLoc {
  int line = 0;
  int col = 0;
  bool valid() const { return line > 0; }
};

enum class Severity { Error, Warning, Note };

struct Diagnostic {
  Severity severity = Severity::Error;
  SourceLoc loc;
  std::string message;
};

inline std::string format_diagnostic(const std::string &file, const Diagnostic &d) {
  const char *sev = d.severity == Severity::Error     ? "error"
                    : d.severity == Severity::Warning ? "warning"
                                                      : "note";
  std::string out = file;
  if (d.loc.valid()) {
    out += ":" + std::to_string(d.loc.line) + ":" + std::to_string(d.loc.col);
  }
  out += ": ";
  out += sev;
  out += ": ";
  out += d.message;
  return out;
}

inline bool has_errors(const std::vector<Diagnostic> &diags) {
  for (const auto &d : diags)
    if (d.severity == Severity::Error) return true;
  return false;
}

} // namespace soaview

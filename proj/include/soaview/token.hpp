#pragma once

#include <cstdint>
#include <string>

#include "soaview/diagnostics.hpp"

namespace soaview {

enum class Tok {
  End,
  Ident,
  IntLit,
  FloatLit,
  // keywords
  KwStruct,
  KwFn,
  KwExtern,
  KwLet,
  KwIf,
  KwElse,
  KwFor,
  KwIn,
  KwReturn,
  KwTrue,
  KwFalse,
  KwF64,
  KwI64,
  KwBool,
  KwSlice,
  KwPtrList,
  // annotations (at-keywords)
  AtConvert,
  AtConvertHoist,
  AtOffload,
  AtTarget,
  AtAssumeDisjoint,
  // punctuation
  LBrace,
  RBrace,
  LParen,
  RParen,
  LBracket,
  RBracket,
  Comma,
  Semi,
  Colon,
  Dot,
  DotDot,
  Arrow,
  Lt,
  Gt,
  Le,
  Ge,
  EqEq,
  NotEq,
  Assign,
  PlusAssign,
  MinusAssign,
  StarAssign,
  SlashAssign,
  Plus,
  Minus,
  Star,
  Slash,
  Percent,
  AndAnd,
  OrOr,
  Not,
  Amp,
};

struct Token {
  Tok kind = Tok::End;
  SourceLoc loc;
  std::string text;   // identifier spelling
  double fval = 0.0;  // FloatLit
  int64_t ival = 0;   // IntLit
};

const char *token_name(Tok t);

} // namespace soaview

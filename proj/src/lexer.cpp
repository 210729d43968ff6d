#include "soaview/lexer.hpp"

#include <cctype>
#include <charconv>
#include <unordered_map>

namespace soaview {

const char *token_name(Tok t) {
  switch (t) {
  case Tok::End: return "end of input";
  case Tok::Ident: return "identifier";
  case Tok::IntLit: return "integer literal";
  case Tok::FloatLit: return "float literal";
  case Tok::KwStruct: return "'struct'";
  case Tok::KwFn: return "'fn'";
  case Tok::KwExtern: return "'extern'";
  case Tok::KwLet: return "'let'";
  case Tok::KwIf: return "'if'";
  case Tok::KwElse: return "'else'";
  case Tok::KwFor: return "'for'";
  case Tok::KwIn: return "'in'";
  case Tok::KwReturn: return "'return'";
  case Tok::KwTrue: return "'true'";
  case Tok::KwFalse: return "'false'";
  case Tok::KwF64: return "'f64'";
  case Tok::KwI64: return "'i64'";
  case Tok::KwBool: return "'bool'";
  case Tok::KwSlice: return "'slice'";
  case Tok::KwPtrList: return "'ptrlist'";
  case Tok::AtConvert: return "'@soa_convert'";
  case Tok::AtConvertHoist: return "'@soa_convert_hoist'";
  case Tok::AtOffload: return "'@soa_offload'";
  case Tok::AtTarget: return "'@soa_target'";
  case Tok::AtAssumeDisjoint: return "'@assume_disjoint'";
  case Tok::LBrace: return "'{'";
  case Tok::RBrace: return "'}'";
  case Tok::LParen: return "'('";
  case Tok::RParen: return "')'";
  case Tok::LBracket: return "'['";
  case Tok::RBracket: return "']'";
  case Tok::Comma: return "','";
  case Tok::Semi: return "';'";
  case Tok::Colon: return "':'";
  case Tok::Dot: return "'.'";
  case Tok::DotDot: return "'..'";
  case Tok::Arrow: return "'->'";
  case Tok::Lt: return "'<'";
  case Tok::Gt: return "'>'";
  case Tok::Le: return "'<='";
  case Tok::Ge: return "'>='";
  case Tok::EqEq: return "'=='";
  case Tok::NotEq: return "'!='";
  case Tok::Assign: return "'='";
  case Tok::PlusAssign: return "'+='";
  case Tok::MinusAssign: return "'-='";
  case Tok::StarAssign: return "'*='";
  case Tok::SlashAssign: return "'/='";
  case Tok::Plus: return "'+'";
  case Tok::Minus: return "'-'";
  case Tok::Star: return "'*'";
  case Tok::Slash: return "'/'";
  case Tok::Percent: return "'%'";
  case Tok::AndAnd: return "'&&'";
  case Tok::OrOr: return "'||'";
  case Tok::Not: return "'!'";
  case Tok::Amp: return "'&'";
  }
  return "?";
}

namespace {

const std::unordered_map<std::string_view, Tok> kKeywords = {
    {"struct", Tok::KwStruct}, {"fn", Tok::KwFn},         {"extern", Tok::KwExtern},
    {"let", Tok::KwLet},       {"if", Tok::KwIf},
    {"else", Tok::KwElse},     {"for", Tok::KwFor},       {"in", Tok::KwIn},
    {"return", Tok::KwReturn}, {"true", Tok::KwTrue},     {"false", Tok::KwFalse},
    {"f64", Tok::KwF64},       {"i64", Tok::KwI64},       {"bool", Tok::KwBool},
    {"slice", Tok::KwSlice},   {"ptrlist", Tok::KwPtrList},
};

const std::unordered_map<std::string_view, Tok> kAnnotations = {
    {"@soa_convert", Tok::AtConvert},
    {"@soa_convert_hoist", Tok::AtConvertHoist},
    {"@soa_offload", Tok::AtOffload},
    {"@soa_target", Tok::AtTarget},
    {"@assume_disjoint", Tok::AtAssumeDisjoint},
};

struct Cursor {
  std::string_view s;
  size_t pos = 0;
  int line = 1;
  int col = 1;

  bool eof() const { return pos >= s.size(); }
  char peek(size_t ahead = 0) const { return pos + ahead < s.size() ? s[pos + ahead] : '\0'; }
  char take() {
    char c = s[pos++];
    if (c == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    return c;
  }
  SourceLoc loc() const { return {line, col}; }
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return ident_start(c) || std::isdigit(static_cast<unsigned char>(c)); }

} // namespace

std::vector<Token> lex(std::string_view source, std::vector<Diagnostic> &diags) {
  std::vector<Token> out;
  Cursor c{source};

  auto push = [&](Tok k, SourceLoc loc) {
    Token t;
    t.kind = k;
    t.loc = loc;
    out.push_back(std::move(t));
  };

  while (!c.eof()) {
    char ch = c.peek();
    if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n') {
      c.take();
      continue;
    }
    if (ch == '/' && c.peek(1) == '/') {
      while (!c.eof() && c.peek() != '\n') c.take();
      continue;
    }
    if (ch == '/' && c.peek(1) == '*') {
      SourceLoc start = c.loc();
      c.take();
      c.take();
      bool closed = false;
      while (!c.eof()) {
        if (c.peek() == '*' && c.peek(1) == '/') {
          c.take();
          c.take();
          closed = true;
          break;
        }
        c.take();
      }
      if (!closed) diags.push_back({Severity::Error, start, "unterminated block comment"});
      continue;
    }

    SourceLoc loc = c.loc();

    if (ident_start(ch)) {
      size_t begin = c.pos;
      while (!c.eof() && ident_char(c.peek())) c.take();
      std::string_view word = source.substr(begin, c.pos - begin);
      auto kw = kKeywords.find(word);
      if (kw != kKeywords.end()) {
        push(kw->second, loc);
      } else {
        Token t;
        t.kind = Tok::Ident;
        t.loc = loc;
        t.text = std::string(word);
        out.push_back(std::move(t));
      }
      continue;
    }

    if (ch == '@') {
      size_t begin = c.pos;
      c.take();
      while (!c.eof() && ident_char(c.peek())) c.take();
      std::string_view word = source.substr(begin, c.pos - begin);
      auto ann = kAnnotations.find(word);
      if (ann == kAnnotations.end()) {
        diags.push_back({Severity::Error, loc, "unknown annotation '" + std::string(word) + "'"});
      } else {
        push(ann->second, loc);
      }
      continue;
    }

    if (std::isdigit(static_cast<unsigned char>(ch))) {
      size_t begin = c.pos;
      while (!c.eof() && std::isdigit(static_cast<unsigned char>(c.peek()))) c.take();
      bool is_float = false;
      // A '..' after digits is a range, not a fraction.
      if (c.peek() == '.' && c.peek(1) != '.') {
        is_float = true;
        c.take();
        while (!c.eof() && std::isdigit(static_cast<unsigned char>(c.peek()))) c.take();
      }
      if (c.peek() == 'e' || c.peek() == 'E') {
        size_t mark = c.pos;
        c.take();
        if (c.peek() == '+' || c.peek() == '-') c.take();
        if (std::isdigit(static_cast<unsigned char>(c.peek()))) {
          is_float = true;
          while (!c.eof() && std::isdigit(static_cast<unsigned char>(c.peek()))) c.take();
        } else {
          // not an exponent after all; rewind is not needed because the
          // following ident char will be lexed separately and rejected
          c.pos = mark;
        }
      }
      std::string_view text = source.substr(begin, c.pos - begin);
      Token t;
      t.loc = loc;
      if (is_float) {
        t.kind = Tok::FloatLit;
        auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), t.fval);
        if (ec != std::errc()) {
          diags.push_back({Severity::Error, loc, "invalid float literal"});
          t.fval = 0.0;
        }
        (void)p;
      } else {
        t.kind = Tok::IntLit;
        auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), t.ival);
        if (ec != std::errc()) {
          diags.push_back({Severity::Error, loc, "integer literal out of range"});
          t.ival = 0;
        }
        (void)p;
      }
      out.push_back(std::move(t));
      continue;
    }

    c.take();
    char ch1 = c.peek();
    switch (ch) {
    case '{': push(Tok::LBrace, loc); break;
    case '}': push(Tok::RBrace, loc); break;
    case '(': push(Tok::LParen, loc); break;
    case ')': push(Tok::RParen, loc); break;
    case '[': push(Tok::LBracket, loc); break;
    case ']': push(Tok::RBracket, loc); break;
    case ',': push(Tok::Comma, loc); break;
    case ';': push(Tok::Semi, loc); break;
    case ':': push(Tok::Colon, loc); break;
    case '.':
      if (ch1 == '.') {
        c.take();
        push(Tok::DotDot, loc);
      } else {
        push(Tok::Dot, loc);
      }
      break;
    case '+':
      if (ch1 == '=') {
        c.take();
        push(Tok::PlusAssign, loc);
      } else {
        push(Tok::Plus, loc);
      }
      break;
    case '-':
      if (ch1 == '=') {
        c.take();
        push(Tok::MinusAssign, loc);
      } else if (ch1 == '>') {
        c.take();
        push(Tok::Arrow, loc);
      } else {
        push(Tok::Minus, loc);
      }
      break;
    case '*':
      if (ch1 == '=') {
        c.take();
        push(Tok::StarAssign, loc);
      } else {
        push(Tok::Star, loc);
      }
      break;
    case '/':
      if (ch1 == '=') {
        c.take();
        push(Tok::SlashAssign, loc);
      } else {
        push(Tok::Slash, loc);
      }
      break;
    case '%': push(Tok::Percent, loc); break;
    case '<':
      if (ch1 == '=') {
        c.take();
        push(Tok::Le, loc);
      } else {
        push(Tok::Lt, loc);
      }
      break;
    case '>':
      if (ch1 == '=') {
        c.take();
        push(Tok::Ge, loc);
      } else {
        push(Tok::Gt, loc);
      }
      break;
    case '=':
      if (ch1 == '=') {
        c.take();
        push(Tok::EqEq, loc);
      } else {
        push(Tok::Assign, loc);
      }
      break;
    case '!':
      if (ch1 == '=') {
        c.take();
        push(Tok::NotEq, loc);
      } else {
        push(Tok::Not, loc);
      }
      break;
    case '&':
      if (ch1 == '&') {
        c.take();
        push(Tok::AndAnd, loc);
      } else {
        push(Tok::Amp, loc);
      }
      break;
    case '|':
      if (ch1 == '|') {
        c.take();
        push(Tok::OrOr, loc);
      } else {
        diags.push_back({Severity::Error, loc, "stray '|'"});
      }
      break;
    default:
      diags.push_back({Severity::Error, loc, std::string("stray character '") + ch + "'"});
      break;
    }
  }

  Token end;
  end.kind = Tok::End;
  end.loc = c.loc();
  out.push_back(std::move(end));
  return out;
}

} // namespace soaview

#ifndef UR_STACK_SCRIPT_LEXER_HPP
#define UR_STACK_SCRIPT_LEXER_HPP

#include <cctype>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace urstack::script {

class ScriptError : public std::runtime_error {
 public:
  ScriptError(const std::string& msg, int line)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

enum class TokenKind { Ident, Keyword, Number, String, Op, Newline, Eof };

struct Token {
  TokenKind kind;
  std::string text;
  int line = 1;    // 1-based, token start
  int column = 1;
};

inline const std::unordered_set<std::string>& keywords() {
  static const std::unordered_set<std::string> kw = {
      "def", "end", "if", "elif", "else", "while", "return",
      "and", "or", "not", "True", "False"};
  return kw;
}

// Statements are separated by NEWLINE tokens; '#' comments run to end of
// line; blocks are ':' ... 'end' (indentation is not significant).
inline std::vector<Token> tokenize(const std::string& source) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto push = [&](TokenKind k, std::string text, int l, int c) {
    out.push_back({k, std::move(text), l, c});
  };

  while (i < source.size()) {
    char c = source[i];
    if (c == '\n') {
      if (!out.empty() && out.back().kind != TokenKind::Newline)
        push(TokenKind::Newline, "\n", line, col);
      ++i;
      ++line;
      col = 1;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
      ++col;
      continue;
    }
    if (c == '#') {
      while (i < source.size() && source[i] != '\n') ++i;
      continue;
    }
    int tl = line, tc = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < source.size() &&
             (std::isalnum(static_cast<unsigned char>(source[j])) || source[j] == '_'))
        ++j;
      std::string word = source.substr(i, j - i);
      push(keywords().count(word) ? TokenKind::Keyword : TokenKind::Ident, word, tl, tc);
      col += static_cast<int>(j - i);
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < source.size() &&
         std::isdigit(static_cast<unsigned char>(source[i + 1])))) {
      std::size_t j = i;
      while (j < source.size() &&
             (std::isdigit(static_cast<unsigned char>(source[j])) || source[j] == '.' ||
              source[j] == 'e' || source[j] == 'E' ||
              ((source[j] == '+' || source[j] == '-') && j > i &&
               (source[j - 1] == 'e' || source[j - 1] == 'E'))))
        ++j;
      push(TokenKind::Number, source.substr(i, j - i), tl, tc);
      col += static_cast<int>(j - i);
      i = j;
      continue;
    }
    if (c == '"') {
      std::size_t j = i + 1;
      std::string text;
      while (j < source.size() && source[j] != '"' && source[j] != '\n') {
        text += source[j];
        ++j;
      }
      if (j >= source.size() || source[j] != '"')
        throw ScriptError("unterminated string", tl);
      push(TokenKind::String, text, tl, tc);
      col += static_cast<int>(j + 1 - i);
      i = j + 1;
      continue;
    }
    // operators and punctuation
    static const char* two_char[] = {"==", "!=", "<=", ">="};
    bool matched = false;
    if (i + 1 < source.size()) {
      std::string pair = source.substr(i, 2);
      for (const char* op : two_char) {
        if (pair == op) {
          push(TokenKind::Op, pair, tl, tc);
          i += 2;
          col += 2;
          matched = true;
          break;
        }
      }
    }
    if (matched) continue;
    if (std::string("+-*/<>=():,").find(c) != std::string::npos) {
      push(TokenKind::Op, std::string(1, c), tl, tc);
      ++i;
      ++col;
      continue;
    }
    throw ScriptError(std::string("illegal character '") + c + "'", tl);
  }
  if (!out.empty() && out.back().kind != TokenKind::Newline)
    out.push_back({TokenKind::Newline, "\n", line, col});
  out.push_back({TokenKind::Eof, "", line, col});
  return out;
}

}  // namespace urstack::script

#endif  // UR_STACK_SCRIPT_LEXER_HPP

#include "hypo/expr_parser.hpp"

#include <cctype>

namespace hypo {

Rational parse_rational(const std::string& text) {
  Rational q;
  if (text.empty() || q.set_str(text, 10) != 0) throw Error("invalid rational literal '" + text + "'");
  q.canonicalize();
  if (q.get_den() == 0) throw Error("zero denominator in '" + text + "'");
  return q;
}

std::vector<std::string> default_variable_names(int p, int q) {
  std::vector<std::string> names;
  for (int i = 1; i <= p; ++i) names.push_back("x" + std::to_string(i));
  for (int i = 1; i <= q; ++i) names.push_back("y" + std::to_string(i));
  return names;
}

namespace {

class Parser {
 public:
  Parser(std::string_view text, const std::vector<std::string>& vars, int line, int column_offset)
      : text_(text), vars_(vars), line_(line), offset_(column_offset) {}

  RationalPolynomial parse() {
    skip_space();
    if (pos_ >= text_.size()) fail("empty expression");
    RationalPolynomial p = expr();
    skip_space();
    if (pos_ < text_.size()) fail(std::string("unexpected character '") + text_[pos_] + "'");
    return p;
  }

 private:
  int nvars() const { return static_cast<int>(vars_.size()); }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, line_, offset_ + static_cast<int>(pos_) + 1);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  RationalPolynomial expr() {
    RationalPolynomial acc = term();
    while (true) {
      if (accept('+'))
        acc += term();
      else if (accept('-'))
        acc -= term();
      else
        return acc;
    }
  }

  RationalPolynomial term() {
    RationalPolynomial acc = unary();
    while (true) {
      if (accept('*')) {
        acc = acc * unary();
      } else if (accept('/')) {
        std::size_t at = pos_;
        RationalPolynomial d = unary();
        if (!d.is_constant()) {
          pos_ = at;
          fail("division by a non-constant expression");
        }
        Rational c = d.constant_term();
        if (c == 0) {
          pos_ = at;
          fail("division by zero");
        }
        acc *= Rational(1 / c);
      } else {
        return acc;
      }
    }
  }

  RationalPolynomial unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  RationalPolynomial power() {
    RationalPolynomial base = primary();
    if (accept('^')) {
      skip_space();
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (start == pos_) fail("expected a non-negative integer exponent");
      int n = std::stoi(std::string(text_.substr(start, pos_ - start)));
      if (n > 64) fail("exponent too large");
      return base.pow(n);
    }
    return base;
  }

  RationalPolynomial primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      RationalPolynomial inner = expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (pos_ < text_.size() && text_[pos_] == '.') fail("decimal literals are not supported; use a/b");
      return RationalPolynomial::constant(nvars(), Rational(std::string(text_.substr(start, pos_ - start))));
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      std::string name(text_.substr(start, pos_ - start));
      for (int i = 0; i < nvars(); ++i)
        if (vars_[i] == name) return RationalPolynomial::variable(nvars(), i);
      pos_ = start;
      fail("unknown variable '" + name + "'");
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  std::string_view text_;
  const std::vector<std::string>& vars_;
  int line_;
  int offset_;
  std::size_t pos_ = 0;
};

}  // namespace

RationalPolynomial parse_polynomial(std::string_view text, const std::vector<std::string>& variables,
                                    int line, int column_offset) {
  return Parser(text, variables, line, column_offset).parse();
}

}  // namespace hypo

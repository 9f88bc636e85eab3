#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "evagg/milp.hpp"

namespace evagg::milp {
namespace {

using lp::kInf;
using lp::LinearModel;
using lp::Sense;

constexpr int kTermsPerLine = 8;

std::string number(double v) {
  char buf[64];
  auto [end, ec] =
      std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 15);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, end);
}

bool valid_name(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) {
    return false;
  }
  // "e1" or "ee" prefixes read as exponents in some LP readers.
  if ((s[0] == 'e' || s[0] == 'E') && s.size() > 1 &&
      (std::isdigit(static_cast<unsigned char>(s[1])) || s[1] == 'e' ||
       s[1] == 'E')) {
    return false;
  }
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  }
  return true;
}

std::string sanitize(const std::string& s) {
  if (valid_name(s)) return s;
  std::string out;
  for (char c : s) {
    out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  }
  if (!valid_name(out)) out = "x_" + out;
  return out;
}

std::vector<std::string> sanitized_names(const std::vector<std::string>& raw,
                                         const char* kind) {
  std::vector<std::string> out;
  out.reserve(raw.size());
  std::unordered_set<std::string> seen;
  for (const auto& name : raw) {
    std::string s = sanitize(name);
    if (!seen.insert(s).second) {
      throw std::invalid_argument(std::string(kind) + " name collision on '" +
                                  s + "'");
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_terms(std::ostringstream& os,
                 const std::vector<std::pair<double, const std::string*>>& t) {
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (k > 0 && k % kTermsPerLine == 0) os << "\n   ";
    const double c = t[k].first;
    os << (c < 0 ? " - " : " + ") << number(std::abs(c)) << ' '
       << *t[k].second;
  }
}

}  // namespace

std::string write_lp(const LinearModel& model) {
  std::vector<std::string> raw_vars;
  for (const auto& v : model.variables()) raw_vars.push_back(v.name);
  std::vector<std::string> raw_rows;
  for (const auto& c : model.constraints()) raw_rows.push_back(c.name);
  const auto vars = sanitized_names(raw_vars, "variable");
  const auto rows = sanitized_names(raw_rows, "constraint");

  std::ostringstream os;
  os << "Minimize\n obj:";
  std::vector<std::pair<double, const std::string*>> terms;
  for (int j = 0; j < model.num_variables(); ++j) {
    if (model.objective()[j] != 0.0) {
      terms.push_back({model.objective()[j], &vars[j]});
    }
  }
  write_terms(os, terms);
  const double k = model.objective_constant();
  if (k != 0.0 || terms.empty()) {
    if (terms.empty()) {
      os << ' ' << number(k);
    } else {
      os << (k < 0 ? " - " : " + ") << number(std::abs(k));
    }
  }
  os << "\nSubject To\n";
  for (int i = 0; i < model.num_constraints(); ++i) {
    const auto& c = model.constraint(i);
    os << ' ' << rows[i] << ':';
    terms.clear();
    for (const auto& t : c.terms) terms.push_back({t.coef, &vars[t.var]});
    if (terms.empty()) {
      os << " 0 " << vars.at(0);
    } else {
      write_terms(os, terms);
    }
    const char* op = c.sense == Sense::kLessEqual      ? "<="
                     : c.sense == Sense::kGreaterEqual ? ">="
                                                       : "=";
    os << ' ' << op << ' ' << number(c.rhs) << '\n';
  }

  // Every column is listed so the reader recovers the declaration order.
  os << "Bounds\n";
  bool generals = false;
  for (int j = 0; j < model.num_variables(); ++j) {
    const auto& v = model.variable(j);
    const bool lo = std::isfinite(v.lower);
    const bool up = std::isfinite(v.upper);
    os << ' ';
    if (lo && up && v.lower == v.upper) {
      os << vars[j] << " = " << number(v.lower);
    } else if (!lo && !up) {
      os << vars[j] << " free";
    } else if (lo && !up) {
      os << vars[j] << " >= " << number(v.lower);
    } else {
      os << (lo ? number(v.lower) : std::string("-inf")) << " <= " << vars[j]
         << " <= " << number(v.upper);
    }
    os << '\n';
    if (v.is_integer && !(v.lower == 0.0 && v.upper == 1.0)) generals = true;
  }
  if (generals) {
    os << "Generals\n";
    for (int j = 0; j < model.num_variables(); ++j) {
      const auto& v = model.variable(j);
      if (v.is_integer && !(v.lower == 0.0 && v.upper == 1.0)) {
        os << ' ' << vars[j] << '\n';
      }
    }
  }
  os << "Binaries\n";
  for (int j = 0; j < model.num_variables(); ++j) {
    const auto& v = model.variable(j);
    if (v.is_integer && v.lower == 0.0 && v.upper == 1.0) {
      os << ' ' << vars[j] << '\n';
    }
  }
  os << "End\n";
  return os.str();
}

void export_lp_file(const LinearModel& model, const std::string& path) {
  const std::string text = write_lp(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

namespace {

enum class Section { kNone, kObjective, kConstraints, kBounds, kGenerals,
                     kBinaries, kEnd };

struct Token {
  std::string text;
  int line;
};

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(c));
  return out;
}

std::optional<Section> section_keyword(std::string_view raw) {
  std::string s = lower(raw);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.pop_back();
  }
  std::size_t b = 0;
  while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  s = s.substr(b);
  if (s == "minimize" || s == "minimise" || s == "minimum" || s == "min") {
    return Section::kObjective;
  }
  if (s == "subject to" || s == "such that" || s == "st" || s == "s.t.") {
    return Section::kConstraints;
  }
  if (s == "bounds" || s == "bound") return Section::kBounds;
  if (s == "generals" || s == "general" || s == "gen") {
    return Section::kGenerals;
  }
  if (s == "binaries" || s == "binary" || s == "bin") {
    return Section::kBinaries;
  }
  if (s == "end") return Section::kEnd;
  return std::nullopt;
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw std::runtime_error("LP parse error at line " + std::to_string(line) +
                           ": " + what);
}

bool is_op_char(char c) {
  return c == '+' || c == '-' || c == '<' || c == '>' || c == '=' || c == ':';
}

void tokenize(std::string_view line, int line_no, std::vector<Token>& out) {
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '<' || c == '>' || c == '=') {
      std::string op(1, c);
      ++i;
      if (i < line.size() && line[i] == '=') {
        if (c != '=') op += '=';
        ++i;
      } else if (c == '=' && i < line.size() &&
                 (line[i] == '<' || line[i] == '>')) {
        op = std::string(1, line[i]) + "=";
        ++i;
      }
      out.push_back({op, line_no});
    } else if (is_op_char(c)) {
      out.push_back({std::string(1, c), line_no});
      ++i;
    } else {
      std::size_t j = i;
      const bool numeric =
          std::isdigit(static_cast<unsigned char>(c)) || c == '.';
      while (j < line.size() &&
             !std::isspace(static_cast<unsigned char>(line[j]))) {
        if (is_op_char(line[j])) {
          const bool exponent_sign =
              numeric && (line[j] == '+' || line[j] == '-') &&
              (line[j - 1] == 'e' || line[j - 1] == 'E');
          if (!exponent_sign) break;
        }
        ++j;
      }
      out.push_back({std::string(line.substr(i, j - i)), line_no});
      i = j;
    }
  }
}

std::optional<double> parse_number(std::string_view s) {
  const std::string l = lower(s);
  if (l == "inf" || l == "infinity") return kInf;
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) return std::nullopt;
  return v;
}

struct LinearExpr {
  std::vector<std::pair<std::string, double>> terms;
  double constant = 0.0;
};

// Reads [sign] [coef] name | [sign] number sequences starting at `pos` and
// stops at a relational operator or the end of the tokens.
LinearExpr read_expr(const std::vector<Token>& toks, std::size_t& pos) {
  LinearExpr e;
  while (pos < toks.size()) {
    const std::string& t = toks[pos].text;
    if (t == "<=" || t == ">=" || t == "=") break;
    double sign = 1.0;
    while (pos < toks.size() &&
           (toks[pos].text == "+" || toks[pos].text == "-")) {
      if (toks[pos].text == "-") sign = -sign;
      ++pos;
    }
    if (pos >= toks.size()) fail(toks.back().line, "dangling sign");
    const Token& a = toks[pos];
    if (auto num = parse_number(a.text)) {
      ++pos;
      const bool named = pos < toks.size() &&
                         !parse_number(toks[pos].text) &&
                         !is_op_char(toks[pos].text[0]);
      if (named) {
        e.terms.push_back({toks[pos].text, sign * *num});
        ++pos;
      } else {
        e.constant += sign * *num;
      }
    } else if (is_op_char(a.text[0])) {
      fail(a.line, "unexpected '" + a.text + "'");
    } else {
      e.terms.push_back({a.text, sign});
      ++pos;
    }
  }
  return e;
}

}  // namespace

LinearModel parse_lp(std::string_view text) {
  struct RawRow {
    std::string name;
    LinearExpr expr;
    Sense sense;
    double rhs;
  };
  struct RawBound {
    std::string name;
    double lower = 0.0;
    double upper = kInf;
  };

  Section section = Section::kNone;
  std::vector<Token> objective_tokens;
  std::vector<Token> constraint_tokens;
  std::vector<RawBound> bounds;
  std::unordered_map<std::string, std::size_t> bound_index;
  std::vector<std::pair<std::string, int>> integer_names;
  std::vector<std::string> binary_names;

  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::size_t comment = line.find('\\');
    if (comment != std::string_view::npos) line = line.substr(0, comment);
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }
    if (auto s = section_keyword(line)) {
      section = *s;
      if (section == Section::kEnd) break;
      continue;
    }
    switch (section) {
      case Section::kNone:
      case Section::kEnd:
        fail(line_no, "content outside of a section");
      case Section::kObjective:
        tokenize(line, line_no, objective_tokens);
        break;
      case Section::kConstraints:
        tokenize(line, line_no, constraint_tokens);
        break;
      case Section::kBounds: {
        std::vector<Token> t;
        tokenize(line, line_no, t);
        std::vector<std::string> w;
        for (std::size_t k = 0; k < t.size(); ++k) {
          if (t[k].text == "-" && k + 1 < t.size()) {
            w.push_back("-" + t[++k].text);
          } else if (t[k].text == "+" && k + 1 < t.size()) {
            w.push_back(t[++k].text);
          } else {
            w.push_back(t[k].text);
          }
        }
        RawBound b;
        if (w.size() == 2 && lower(w[1]) == "free") {
          b = {w[0], -kInf, kInf};
        } else if (w.size() == 3) {
          auto v = parse_number(w[2]);
          auto u = parse_number(w[0]);
          if (v && !u) {
            b.name = w[0];
            if (w[1] == ">=") {
              b.lower = *v;
            } else if (w[1] == "<=") {
              b.upper = *v;
            } else if (w[1] == "=") {
              b.lower = b.upper = *v;
            } else {
              fail(line_no, "bad bound operator");
            }
          } else if (u && !v) {
            b.name = w[2];
            if (w[1] == "<=") {
              b.lower = *u;
            } else if (w[1] == ">=") {
              b.upper = *u;
            } else if (w[1] == "=") {
              b.lower = b.upper = *u;
            } else {
              fail(line_no, "bad bound operator");
            }
          } else {
            fail(line_no, "unreadable bound");
          }
        } else if (w.size() == 5 && w[1] == "<=" && w[3] == "<=") {
          auto l = parse_number(w[0]);
          auto u = parse_number(w[4]);
          if (!l || !u) fail(line_no, "unreadable bound");
          b = {w[2], *l, *u};
        } else {
          fail(line_no, "unreadable bound");
        }
        auto [it, fresh] = bound_index.emplace(b.name, bounds.size());
        if (fresh) {
          bounds.push_back(b);
        } else {
          RawBound& old = bounds[it->second];
          if (b.lower != 0.0 || std::isinf(b.lower)) old.lower = b.lower;
          if (!std::isinf(b.upper)) old.upper = b.upper;
        }
        break;
      }
      case Section::kGenerals:
      case Section::kBinaries: {
        std::vector<Token> t;
        tokenize(line, line_no, t);
        for (const Token& tok : t) {
          if (section == Section::kGenerals) {
            integer_names.push_back({tok.text, line_no});
          } else {
            binary_names.push_back(tok.text);
          }
        }
        break;
      }
    }
    if (end == text.size()) break;
  }
  if (section != Section::kEnd) fail(line_no, "missing End");

  // Objective: optional "name:" label.
  std::size_t pos = 0;
  if (objective_tokens.size() >= 2 && objective_tokens[1].text == ":") pos = 2;
  const LinearExpr objective = read_expr(objective_tokens, pos);
  if (pos != objective_tokens.size()) {
    fail(objective_tokens[pos].line, "relational operator in objective");
  }

  std::vector<RawRow> rows;
  pos = 0;
  while (pos < constraint_tokens.size()) {
    RawRow r;
    if (pos + 1 < constraint_tokens.size() &&
        constraint_tokens[pos + 1].text == ":") {
      r.name = constraint_tokens[pos].text;
      pos += 2;
    } else {
      r.name = "R" + std::to_string(rows.size() + 1);
    }
    const int line = constraint_tokens[pos < constraint_tokens.size()
                                           ? pos
                                           : constraint_tokens.size() - 1]
                         .line;
    r.expr = read_expr(constraint_tokens, pos);
    if (pos >= constraint_tokens.size()) fail(line, "constraint without sense");
    const std::string& op = constraint_tokens[pos++].text;
    r.sense = op == "<=" ? Sense::kLessEqual
              : op == ">=" ? Sense::kGreaterEqual
                           : Sense::kEqual;
    double sign = 1.0;
    while (pos < constraint_tokens.size() &&
           (constraint_tokens[pos].text == "-" ||
            constraint_tokens[pos].text == "+")) {
      if (constraint_tokens[pos].text == "-") sign = -sign;
      ++pos;
    }
    if (pos >= constraint_tokens.size()) fail(line, "missing right-hand side");
    auto rhs = parse_number(constraint_tokens[pos].text);
    if (!rhs) fail(constraint_tokens[pos].line, "right-hand side not numeric");
    ++pos;
    r.rhs = sign * *rhs - r.expr.constant;
    rows.push_back(std::move(r));
  }

  // Column order: Bounds section first, then first appearance elsewhere.
  LinearModel model;
  std::unordered_map<std::string, int> index;
  for (const RawBound& b : bounds) {
    index[b.name] = model.add_variable(b.name, b.lower, b.upper);
  }
  auto column = [&](const std::string& name) {
    auto it = index.find(name);
    if (it != index.end()) return it->second;
    const int j = model.add_variable(name, 0.0, kInf);
    index[name] = j;
    return j;
  };
  for (const auto& [name, coef] : objective.terms) {
    model.add_objective(column(name), coef);
  }
  model.set_objective_constant(objective.constant);
  for (RawRow& r : rows) {
    std::vector<lp::Term> terms;
    for (const auto& [name, coef] : r.expr.terms) {
      terms.push_back({column(name), coef});
    }
    model.add_constraint(r.name, std::move(terms), r.sense, r.rhs);
  }
  // Integrality flags are not settable after registration, so rebuild.
  if (!integer_names.empty() || !binary_names.empty()) {
    std::unordered_set<std::string> generals;
    for (const auto& [name, line] : integer_names) {
      column(name);
      generals.insert(name);
    }
    std::unordered_set<std::string> binaries(binary_names.begin(),
                                             binary_names.end());
    for (const auto& name : binaries) column(name);
    LinearModel typed;
    for (const auto& v : model.variables()) {
      const bool bin = binaries.contains(v.name);
      const bool gen = generals.contains(v.name);
      typed.add_variable(v.name, bin ? std::max(v.lower, 0.0) : v.lower,
                         bin ? std::min(v.upper, 1.0) : v.upper, bin || gen);
    }
    for (int j = 0; j < model.num_variables(); ++j) {
      typed.set_objective(j, model.objective()[j]);
    }
    typed.set_objective_constant(model.objective_constant());
    for (const auto& c : model.constraints()) {
      typed.add_constraint(c.name, c.terms, c.sense, c.rhs);
    }
    return typed;
  }
  return model;
}

LinearModel import_lp_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_lp(ss.str());
}

}  // namespace evagg::milp

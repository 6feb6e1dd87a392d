// Copyright 2026 The termforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cctype>
#include <cstddef>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "termforge/error.hpp"
#include "termforge/model.hpp"
#include "termforge/store.hpp"
#include "termforge/text.hpp"

// Predicate grammar
//
//   expr    := or
//   or      := and ('|' and)*
//   and     := not ('&' not)*
//   not     := '!'? primary
//   primary := '(' expr ')'
//            | field ('==' | '!=') string
//            | field 'like' string
//            | field 'in' '[' string (',' string)* ']'
//
// Strings are double-quoted; \" \\ \n \t are the recognised escapes.
// Field names are checked against the dictionary's columns.

namespace termforge {

enum class CompareOp { Eq, Ne };

class Predicate;
using PredicatePtr = std::shared_ptr<const Predicate>;

class Predicate {
 public:
  struct Compare {
    FieldSpec field;
    CompareOp op;
    std::string value;
  };
  struct Like {
    FieldSpec field;
    std::string pattern;
  };
  struct In {
    FieldSpec field;
    std::vector<std::string> values;
  };
  struct And {
    PredicatePtr left, right;
  };
  struct Or {
    PredicatePtr left, right;
  };
  struct Not {
    PredicatePtr child;
  };
  using Node = std::variant<Compare, Like, In, And, Or, Not>;

  explicit Predicate(Node node) : node_(std::move(node)) {}

  static Predicate compare(FieldSpec field, CompareOp op, std::string value) {
    return Predicate(Compare{std::move(field), op, std::move(value)});
  }
  static Predicate like(FieldSpec field, std::string pattern) {
    return Predicate(Like{std::move(field), std::move(pattern)});
  }
  static Predicate in(FieldSpec field, std::vector<std::string> values) {
    return Predicate(In{std::move(field), std::move(values)});
  }
  static Predicate both(Predicate l, Predicate r) {
    return Predicate(And{std::make_shared<const Predicate>(std::move(l)), std::make_shared<const Predicate>(std::move(r))});
  }
  static Predicate either(Predicate l, Predicate r) {
    return Predicate(Or{std::make_shared<const Predicate>(std::move(l)), std::make_shared<const Predicate>(std::move(r))});
  }
  static Predicate negate(Predicate p) { return Predicate(Not{std::make_shared<const Predicate>(std::move(p))}); }

  const Node& node() const noexcept { return node_; }

  friend bool operator==(const Predicate& a, const Predicate& b) {
    if (a.node_.index() != b.node_.index()) return false;
    return std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          const auto& y = std::get<T>(b.node_);
          if constexpr (std::is_same_v<T, Compare>) return x.field == y.field && x.op == y.op && x.value == y.value;
          else if constexpr (std::is_same_v<T, Like>) return x.field == y.field && x.pattern == y.pattern;
          else if constexpr (std::is_same_v<T, In>) return x.field == y.field && x.values == y.values;
          else if constexpr (std::is_same_v<T, Not>) return *x.child == *y.child;
          else return *x.left == *y.left && *x.right == *y.right;
        },
        a.node_);
  }

 private:
  Node node_;
};

inline std::string quote_string(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

/// Renders back into the DSL, fully parenthesised. Parses to an equal tree.
inline std::string to_string(const Predicate& p) {
  return std::visit(
      [](const auto& n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Predicate::Compare>)
          return n.field.name + (n.op == CompareOp::Eq ? " == " : " != ") + quote_string(n.value);
        else if constexpr (std::is_same_v<T, Predicate::Like>)
          return n.field.name + " like " + quote_string(n.pattern);
        else if constexpr (std::is_same_v<T, Predicate::In>) {
          std::string s = n.field.name + " in [";
          for (std::size_t i = 0; i < n.values.size(); ++i) s += (i ? ", " : "") + quote_string(n.values[i]);
          return s + "]";
        } else if constexpr (std::is_same_v<T, Predicate::And>)
          return "(" + to_string(*n.left) + " & " + to_string(*n.right) + ")";
        else if constexpr (std::is_same_v<T, Predicate::Or>)
          return "(" + to_string(*n.left) + " | " + to_string(*n.right) + ")";
        else
          return "!(" + to_string(*n.child) + ")";
      },
      p.node());
}

// ---------------------------------------------------------------------------
// Lexer / parser

namespace detail {

enum class Tok { Ident, String, EqEq, NotEq, Bang, Amp, Pipe, LParen, RParen, LBracket, RBracket, Comma, Like, In, End };

struct Token {
  Tok type;
  std::string text;
  std::size_t pos;
};

inline std::string describe(const Token& t) {
  switch (t.type) {
    case Tok::End: return "end of input";
    case Tok::String: return "string " + quote_string(t.text);
    default: return "'" + t.text + "'";
  }
}

inline std::vector<Token> tokenize(std::string_view in) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < in.size()) {
    const char c = in[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    auto single = [&](Tok t) {
      out.push_back({t, std::string(1, c), start});
      ++i;
    };
    switch (c) {
      case '(': single(Tok::LParen); continue;
      case ')': single(Tok::RParen); continue;
      case '[': single(Tok::LBracket); continue;
      case ']': single(Tok::RBracket); continue;
      case ',': single(Tok::Comma); continue;
      case '&': single(Tok::Amp); continue;
      case '|': single(Tok::Pipe); continue;
      case '=':
        if (i + 1 < in.size() && in[i + 1] == '=') {
          out.push_back({Tok::EqEq, "==", start});
          i += 2;
          continue;
        }
        throw SyntaxError(start, {"'=='"}, "'='");
      case '!':
        if (i + 1 < in.size() && in[i + 1] == '=') {
          out.push_back({Tok::NotEq, "!=", start});
          i += 2;
        } else {
          single(Tok::Bang);
        }
        continue;
      case '"': {
        std::string value;
        ++i;
        bool closed = false;
        while (i < in.size()) {
          char d = in[i++];
          if (d == '"') {
            closed = true;
            break;
          }
          if (d != '\\') {
            value += d;
            continue;
          }
          if (i >= in.size()) break;
          char e = in[i++];
          switch (e) {
            case '"': value += '"'; break;
            case '\\': value += '\\'; break;
            case 'n': value += '\n'; break;
            case 't': value += '\t'; break;
            default: throw SyntaxError(i - 2, {"escape \\\" \\\\ \\n or \\t"}, "'\\" + std::string(1, e) + "'");
          }
        }
        if (!closed) throw SyntaxError(start, {"closing '\"'"}, "end of input");
        out.push_back({Tok::String, std::move(value), start});
        continue;
      }
      default: break;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < in.size() && (std::isalnum(static_cast<unsigned char>(in[i])) || in[i] == '_')) ++i;
      std::string word(in.substr(start, i - start));
      Tok t = word == "like" ? Tok::Like : word == "in" ? Tok::In : Tok::Ident;
      out.push_back({t, std::move(word), start});
      continue;
    }
    throw SyntaxError(start, {"field name", "'('", "'!'"}, "'" + std::string(1, c) + "'");
  }
  out.push_back({Tok::End, "", in.size()});
  return out;
}

class Parser {
 public:
  Parser(std::vector<Token> tokens, const SchemaInfo& schema) : tokens_(std::move(tokens)), schema_(schema) {}

  Predicate parse() {
    Predicate p = parse_or();
    if (peek().type != Tok::End) throw SyntaxError(peek().pos, {"'&'", "'|'", "end of input"}, describe(peek()));
    return p;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& next() { return tokens_[pos_++]; }

  const Token& expect(Tok t, const std::vector<std::string>& what) {
    if (peek().type != t) throw SyntaxError(peek().pos, what, describe(peek()));
    return next();
  }

  Predicate parse_or() {
    Predicate left = parse_and();
    while (peek().type == Tok::Pipe) {
      next();
      left = Predicate::either(std::move(left), parse_and());
    }
    return left;
  }

  Predicate parse_and() {
    Predicate left = parse_not();
    while (peek().type == Tok::Amp) {
      next();
      left = Predicate::both(std::move(left), parse_not());
    }
    return left;
  }

  Predicate parse_not() {
    if (peek().type == Tok::Bang) {
      next();
      return Predicate::negate(parse_primary());
    }
    return parse_primary();
  }

  Predicate parse_primary() {
    if (peek().type == Tok::LParen) {
      next();
      Predicate inner = parse_or();
      expect(Tok::RParen, {"')'"});
      return inner;
    }
    const Token& name = expect(Tok::Ident, {"field name", "'('"});
    auto index = schema_.index_of(name.text);
    if (!index) throw UnknownFieldError(name.text, name.pos, schema_.names());
    const FieldSpec& field = schema_.columns[*index];

    const Token& op = next();
    switch (op.type) {
      case Tok::EqEq:
      case Tok::NotEq: {
        auto value = expect(Tok::String, {"string"}).text;
        return Predicate::compare(field, op.type == Tok::EqEq ? CompareOp::Eq : CompareOp::Ne, std::move(value));
      }
      case Tok::Like: return Predicate::like(field, expect(Tok::String, {"string"}).text);
      case Tok::In: {
        expect(Tok::LBracket, {"'['"});
        std::vector<std::string> values{expect(Tok::String, {"string"}).text};
        while (peek().type == Tok::Comma) {
          next();
          values.push_back(expect(Tok::String, {"string"}).text);
        }
        expect(Tok::RBracket, {"','", "']'"});
        return Predicate::in(field, std::move(values));
      }
      default: throw SyntaxError(op.pos, {"'=='", "'!='", "'like'", "'in'"}, describe(op));
    }
  }

  std::vector<Token> tokens_;
  const SchemaInfo& schema_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Predicate parse_predicate(std::string_view input, const DictionaryAdapter& adapter) {
  const auto schema = adapter_schema(adapter);
  return detail::Parser(detail::tokenize(input), schema).parse();
}

/// Throws UnknownField if `p` names a column the adapter does not have.
inline void validate_predicate(const Predicate& p, const DictionaryAdapter& adapter) {
  const auto schema = adapter_schema(adapter);
  auto check = [&](const FieldSpec& f) {
    auto i = schema.index_of(f.name);
    if (!i || schema.columns[*i].role != f.role) throw UnknownFieldError(f.name, 0, schema.names());
  };
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Predicate::And> || std::is_same_v<T, Predicate::Or>) {
          validate_predicate(*n.left, adapter);
          validate_predicate(*n.right, adapter);
        } else if constexpr (std::is_same_v<T, Predicate::Not>) {
          validate_predicate(*n.child, adapter);
        } else {
          check(n.field);
        }
      },
      p.node());
}

// ---------------------------------------------------------------------------
// Evaluation

inline bool eval_predicate(const Predicate& p, const ConceptRecord& rec, bool case_sensitive) {
  return std::visit(
      [&](const auto& n) -> bool {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Predicate::Compare>) {
          bool eq = text::equals(field_text(rec, n.field), n.value, case_sensitive);
          return n.op == CompareOp::Eq ? eq : !eq;
        } else if constexpr (std::is_same_v<T, Predicate::Like>) {
          return text::like_match(field_text(rec, n.field), n.pattern, case_sensitive);
        } else if constexpr (std::is_same_v<T, Predicate::In>) {
          const auto value = field_text(rec, n.field);
          for (const auto& v : n.values)
            if (text::equals(value, v, case_sensitive)) return true;
          return false;
        } else if constexpr (std::is_same_v<T, Predicate::And>) {
          return eval_predicate(*n.left, rec, case_sensitive) && eval_predicate(*n.right, rec, case_sensitive);
        } else if constexpr (std::is_same_v<T, Predicate::Or>) {
          return eval_predicate(*n.left, rec, case_sensitive) || eval_predicate(*n.right, rec, case_sensitive);
        } else {
          return !eval_predicate(*n.child, rec, case_sensitive);
        }
      },
      p.node());
}

// ---------------------------------------------------------------------------
// SQL translation

struct SqlFilter {
  std::string where;
  std::vector<std::string> params;
};

namespace detail {

/// LIKE pattern to an equivalent GLOB pattern (GLOB is always case-sensitive).
inline std::string like_to_glob(std::string_view pattern) {
  std::string out;
  for (char c : pattern) {
    switch (c) {
      case '%': out += '*'; break;
      case '_': out += '?'; break;
      case '*': out += "[*]"; break;
      case '?': out += "[?]"; break;
      case '[': out += "[[]"; break;
      default: out += c;
    }
  }
  return out;
}

inline void to_sql(const Predicate& p, bool case_sensitive, SqlFilter& out) {
  const std::string collate = case_sensitive ? " COLLATE BINARY" : " COLLATE NOCASE";
  auto param = [&](std::string v) {
    out.params.push_back(std::move(v));
    return "?" + std::to_string(out.params.size());
  };
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Predicate::Compare>) {
          out.where += "(" + sql::quote_ident(n.field.name) + collate + (n.op == CompareOp::Eq ? " = " : " <> ") +
                       param(n.value) + ")";
        } else if constexpr (std::is_same_v<T, Predicate::Like>) {
          if (case_sensitive)
            out.where += "(" + sql::quote_ident(n.field.name) + " GLOB " + param(like_to_glob(n.pattern)) + ")";
          else
            out.where += "(" + sql::quote_ident(n.field.name) + " LIKE " + param(n.pattern) + ")";
        } else if constexpr (std::is_same_v<T, Predicate::In>) {
          out.where += "(" + sql::quote_ident(n.field.name) + collate + " IN (";
          for (std::size_t i = 0; i < n.values.size(); ++i) out.where += (i ? ", " : "") + param(n.values[i]);
          out.where += "))";
        } else if constexpr (std::is_same_v<T, Predicate::And> || std::is_same_v<T, Predicate::Or>) {
          out.where += "(";
          to_sql(*n.left, case_sensitive, out);
          out.where += std::is_same_v<T, Predicate::And> ? " AND " : " OR ";
          to_sql(*n.right, case_sensitive, out);
          out.where += ")";
        } else {
          out.where += "(NOT ";
          to_sql(*n.child, case_sensitive, out);
          out.where += ")";
        }
      },
      p.node());
}

}  // namespace detail

inline SqlFilter to_sql(const Predicate& p, bool case_sensitive) {
  SqlFilter f;
  detail::to_sql(p, case_sensitive, f);
  return f;
}

// ---------------------------------------------------------------------------
// Search

enum class OutputMode { Rows, Terms, Codes };

inline std::optional<OutputMode> parse_output_mode(std::string_view s) {
  if (s == "rows") return OutputMode::Rows;
  if (s == "terms") return OutputMode::Terms;
  if (s == "codes") return OutputMode::Codes;
  return std::nullopt;
}

struct SearchResult {
  OutputMode mode = OutputMode::Rows;
  std::vector<ConceptRecord> rows;  // Rows mode
  std::vector<std::string> values;  // Terms / Codes mode
};

/// Matching records ordered by (code, term_id, term). Synonym records are
/// dropped unless `include_synonyms`. The filter runs inside the store
/// using the handle's case-sensitivity setting.
inline std::vector<ConceptRecord> search_rows(StoreHandle& handle, const DictionaryAdapter& adapter,
                                              const Predicate& p, bool include_synonyms = false) {
  require_schema(handle, adapter);
  validate_predicate(p, adapter);
  const auto schema = adapter_schema(adapter);
  auto filter = to_sql(p, handle.case_sensitive());
  std::string text = "SELECT " + detail::select_columns(schema) + " FROM " + sql::quote_ident(adapter.concept_table) +
                     " WHERE " + filter.where;
  if (!include_synonyms) {
    if (const auto* syn = schema.find_role(FieldRole::Synonym)) text += " AND " + sql::quote_ident(syn->name) + " = '0'";
  }
  text += " ORDER BY " + detail::order_clause(adapter);
  auto st = handle.prepare(text);
  for (std::size_t i = 0; i < filter.params.size(); ++i) st.bind(static_cast<int>(i + 1), filter.params[i]);
  std::vector<ConceptRecord> out;
  while (st.step()) out.push_back(detail::read_record(st, schema));
  return out;
}

inline std::vector<std::string> project_terms(const std::vector<ConceptRecord>& rows) {
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.term);
  return out;
}

/// Codes in first-occurrence order with duplicates removed.
inline std::vector<std::string> project_codes(const std::vector<ConceptRecord>& rows) {
  std::vector<std::string> out;
  std::set<std::string_view> seen;
  for (const auto& r : rows)
    if (seen.insert(r.code).second) out.push_back(r.code);
  return out;
}

inline SearchResult search_concepts(StoreHandle& handle, const DictionaryAdapter& adapter, const Predicate& p,
                                    bool include_synonyms = false, OutputMode output = OutputMode::Rows) {
  SearchResult result;
  result.mode = output;
  auto rows = search_rows(handle, adapter, p, include_synonyms);
  switch (output) {
    case OutputMode::Rows: result.rows = std::move(rows); break;
    case OutputMode::Terms: result.values = project_terms(rows); break;
    case OutputMode::Codes: result.values = project_codes(rows); break;
  }
  return result;
}

}  // namespace termforge

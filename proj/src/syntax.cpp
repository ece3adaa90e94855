#include "cvl/syntax.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <unordered_map>

namespace cvl {

SyntaxError::SyntaxError(const std::string& msg, int l, int c)
    : std::runtime_error(std::to_string(l) + ":" + std::to_string(c) + ": " + msg), line(l), col(c) {}

namespace {

struct Datum {
  enum Tag { Atom, List, EmptyQuote } tag = Atom;
  std::string text;
  std::vector<Datum> items;
  int line = 0, col = 0;
};

class Reader {
 public:
  explicit Reader(const std::string& s) : src_(s) {}

  std::vector<Datum> read_all() {
    std::vector<Datum> out;
    for (;;) {
      skip_space();
      if (pos_ >= src_.size()) return out;
      out.push_back(read());
    }
  }

 private:
  const std::string& src_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;

  char peek() const { return pos_ < src_.size() ? src_[pos_] : '\0'; }
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == ';') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        return;
      }
    }
  }

  static bool delimiter(char c) {
    return c == '\0' || c == '(' || c == ')' || c == ';' || c == '\'' ||
           std::isspace(static_cast<unsigned char>(c));
  }

  Datum read() {
    skip_space();
    Datum d;
    d.line = line_;
    d.col = col_;
    char c = peek();
    if (c == '\0') throw SyntaxError("unexpected end of input", line_, col_);
    if (c == ')') throw SyntaxError("unbalanced ')'", line_, col_);
    if (c == '(' || c == '[') {
      char close = c == '(' ? ')' : ']';
      advance();
      d.tag = Datum::List;
      for (;;) {
        skip_space();
        if (pos_ >= src_.size()) throw SyntaxError("unbalanced '(': missing ')'", d.line, d.col);
        if (peek() == close) {
          advance();
          return d;
        }
        if (peek() == ')' || peek() == ']') throw SyntaxError("mismatched bracket", line_, col_);
        d.items.push_back(read());
      }
    }
    if (c == '\'') {
      advance();
      skip_space();
      if (peek() == '(') {
        advance();
        skip_space();
        if (peek() == ')') {
          advance();
          d.tag = Datum::EmptyQuote;
          return d;
        }
      }
      throw SyntaxError("only '() may be quoted", d.line, d.col);
    }
    std::string tok;
    while (!delimiter(peek())) {
      unsigned char u = static_cast<unsigned char>(peek());
      if (u < 0x20 || u == 0x7f) throw SyntaxError("invalid character", line_, col_);
      tok += peek();
      advance();
    }
    if (tok.empty()) throw SyntaxError("invalid character", line_, col_);
    d.text = tok;
    return d;
  }
};

bool parse_number(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  if (b != e && *b == '+') ++b;
  if (b == e) return false;
  auto res = std::from_chars(b, e, out);
  return res.ec == std::errc() && res.ptr == e && std::isfinite(out);
}

const std::unordered_map<std::string, Prim>& builtins() {
  static const std::unordered_map<std::string, Prim> m = {
      {"sqrt", Prim::Sqrt}, {"sin", Prim::Sin},     {"cos", Prim::Cos},       {"exp", Prim::Exp},
      {"log", Prim::Log},   {"atan", Prim::Atan},   {"floor", Prim::Floor},   {"zero?", Prim::IsZero},
      {"null?", Prim::IsNull}, {"car", Prim::Car},  {"cdr", Prim::Cdr},       {"+", Prim::Add},
      {"-", Prim::Sub},     {"*", Prim::Mul},       {"/", Prim::Div},         {"<", Prim::Lt},
      {"<=", Prim::Le},     {"=", Prim::Eq},        {"cons", Prim::Cons},
  };
  return m;
}

bool is_keyword(const std::string& s) {
  return s == "lambda" || s == "if" || s == "let" || s == "let*" || s == "define" || s == "j*" ||
         s == "*j" || s == "checkpoint-*j" || builtins().count(s) > 0;
}

[[noreturn]] void fail(const Datum& d, const std::string& msg) { throw SyntaxError(msg, d.line, d.col); }

const std::string& symbol(const Datum& d, const char* what) {
  if (d.tag != Datum::Atom) fail(d, std::string("expected ") + what);
  double ignored;
  if (parse_number(d.text, ignored) || d.text[0] == '#') fail(d, std::string("expected ") + what);
  if (is_keyword(d.text)) fail(d, "reserved word '" + d.text + "' cannot be bound");
  if (d.text.find('%') != std::string::npos) fail(d, "'%' is reserved for generated names");
  return d.text;
}

ExprPtr convert(const Datum& d);

ExprPtr curried_lambda(const std::vector<std::string>& params, size_t i, ExprPtr body, const Datum& at) {
  if (i == params.size()) return body;
  return make_lambda(params[i], curried_lambda(params, i + 1, std::move(body), at), at.line, at.col);
}

ExprPtr convert_let(const Datum& d, bool sequential) {
  const char* form = sequential ? "let*" : "let";
  if (d.items.size() != 3) fail(d, std::string(form) + ": expected bindings and one body");
  const Datum& bs = d.items[1];
  if (bs.tag != Datum::List) fail(bs, std::string(form) + ": bindings must be a list");
  std::vector<std::string> names;
  std::vector<ExprPtr> vals;
  for (auto& b : bs.items) {
    if (b.tag != Datum::List || b.items.size() != 2) fail(b, std::string(form) + ": binding must be (name expr)");
    names.push_back(symbol(b.items[0], "a variable name"));
    vals.push_back(convert(b.items[1]));
  }
  ExprPtr body = convert(d.items[2]);
  if (names.empty()) return body;
  if (sequential) {
    for (size_t i = names.size(); i-- > 0;)
      body = make_app(make_lambda(names[i], body, d.line, d.col), vals[i], d.line, d.col);
    return body;
  }
  ExprPtr f = curried_lambda(names, 0, body, d);
  for (auto& v : vals) f = make_app(f, v, d.line, d.col);
  return f;
}

ExprPtr convert_list(const Datum& d) {
  if (d.items.empty()) fail(d, "empty application");
  const Datum& head = d.items[0];
  size_t nargs = d.items.size() - 1;
  if (head.tag == Datum::Atom) {
    const std::string& h = head.text;
    if (h == "lambda") {
      if (nargs != 2) fail(d, "lambda: expected parameter list and one body");
      const Datum& ps = d.items[1];
      if (ps.tag != Datum::List) fail(ps, "lambda: parameters must be a list");
      if (ps.items.empty()) fail(ps, "lambda: at least one parameter is required");
      std::vector<std::string> params;
      for (auto& p : ps.items) params.push_back(symbol(p, "a parameter name"));
      return curried_lambda(params, 0, convert(d.items[2]), d);
    }
    if (h == "if") {
      if (nargs != 3) fail(d, "if: expected condition, consequent and alternative");
      return make_if(convert(d.items[1]), convert(d.items[2]), convert(d.items[3]), d.line, d.col);
    }
    if (h == "let") return convert_let(d, false);
    if (h == "let*") return convert_let(d, true);
    if (h == "define") fail(d, "define is only allowed at top level");
    if (h == "j*" || h == "*j" || h == "checkpoint-*j") {
      if (nargs != 3) fail(d, h + ": expected 3 arguments");
      ExprKind k = h == "j*" ? ExprKind::ForwardJ : h == "*j" ? ExprKind::ReverseJ : ExprKind::CheckpointReverseJ;
      return make_ternary(k, convert(d.items[1]), convert(d.items[2]), convert(d.items[3]), d.line, d.col);
    }
    auto b = builtins().find(h);
    if (b != builtins().end()) {
      Prim op = b->second;
      if (prim_is_unary(op)) {
        if (nargs != 1) fail(d, h + ": expected 1 argument");
        return make_unary(op, convert(d.items[1]), d.line, d.col);
      }
      if (op == Prim::Sub && nargs == 1)
        return make_binary(op, make_const(make_real(0.0), d.line, d.col), convert(d.items[1]), d.line, d.col);
      if ((op == Prim::Add || op == Prim::Mul) && nargs >= 2) {
        ExprPtr acc = make_binary(op, convert(d.items[1]), convert(d.items[2]), d.line, d.col);
        for (size_t i = 3; i <= nargs; ++i) acc = make_binary(op, acc, convert(d.items[i]), d.line, d.col);
        return acc;
      }
      if (nargs != 2) fail(d, h + ": expected 2 arguments");
      return make_binary(op, convert(d.items[1]), convert(d.items[2]), d.line, d.col);
    }
  }
  if (nargs == 0) fail(d, "application needs at least one argument");
  ExprPtr f = convert(head);
  for (size_t i = 1; i <= nargs; ++i) f = make_app(f, convert(d.items[i]), d.line, d.col);
  return f;
}

ExprPtr convert(const Datum& d) {
  switch (d.tag) {
    case Datum::EmptyQuote: return make_const(empty_value(), d.line, d.col);
    case Datum::List: return convert_list(d);
    case Datum::Atom: break;
  }
  double x;
  if (parse_number(d.text, x)) return make_const(make_real(x), d.line, d.col);
  if (d.text == "#t") return make_const(true_value(), d.line, d.col);
  if (d.text == "#f") return make_const(false_value(), d.line, d.col);
  if (d.text[0] == '#') fail(d, "unknown literal '" + d.text + "'");
  if (is_keyword(d.text)) fail(d, "unknown form: '" + d.text + "' used as a value");
  if (d.text.find('%') != std::string::npos) fail(d, "'%' is reserved for generated names");
  return make_var(d.text, d.line, d.col);
}

void pretty_into(const Expr& e, std::string& out) {
  auto kids = [&](const char* head) {
    out += "(";
    out += head;
    for (auto& k : e.kids) {
      out += " ";
      pretty_into(*k, out);
    }
    out += ")";
  };
  switch (e.kind) {
    case ExprKind::Const:
      if (e.constant.is(Kind::Empty)) out += "'()";
      else out += show(e.constant);
      return;
    case ExprKind::Var: out += e.name; return;
    case ExprKind::Lambda:
    case ExprKind::Lambda3:
    case ExprKind::Lambda4: {
      out += e.kind == ExprKind::Lambda ? "(lambda (" : e.kind == ExprKind::Lambda3 ? "(lambda3 (" : "(lambda4 (";
      for (size_t i = 0; i < e.params.size(); ++i) {
        if (i) out += " ";
        out += e.params[i];
      }
      out += ") ";
      pretty_into(*e.kids[0], out);
      out += ")";
      return;
    }
    case ExprKind::App:
    case ExprKind::App3:
    case ExprKind::App4: {
      out += "(";
      for (size_t i = 0; i < e.kids.size(); ++i) {
        if (i) out += " ";
        pretty_into(*e.kids[i], out);
      }
      out += ")";
      return;
    }
    case ExprKind::If: kids("if"); return;
    case ExprKind::Unary:
    case ExprKind::Binary: kids(prim_name(e.op)); return;
    case ExprKind::ForwardJ: kids("j*"); return;
    case ExprKind::ReverseJ: kids("*j"); return;
    case ExprKind::CheckpointReverseJ: kids("checkpoint-*j"); return;
    case ExprKind::Interrupt: kids("interrupt"); return;
    case ExprKind::Resume: kids("resume"); return;
    case ExprKind::LimitCheck: kids("limit-check"); return;
    case ExprKind::StepSucc: kids("1+"); return;
  }
}

// Lexical resolution.
struct Scope {
  const std::vector<std::string>* params;
  std::vector<std::string> captured;  // free names fetched from outside
};

class Resolver {
 public:
  explicit Resolver(const std::vector<std::string>& globals) {
    for (size_t i = 0; i < globals.size(); ++i) globals_[globals[i]] = static_cast<int>(i);
  }

  ExprPtr run(const ExprPtr& e) { return walk(*e); }

 private:
  std::unordered_map<std::string, int> globals_;
  std::vector<Scope> scopes_;

  bool bound_locally(const std::string& n) const {
    for (auto& s : scopes_)
      if (std::find(s.params->begin(), s.params->end(), n) != s.params->end()) return true;
    return false;
  }

  VarRef lookup(const std::string& n, int line, int col) const {
    VarRef r;
    if (!scopes_.empty()) {
      const Scope& s = scopes_.back();
      auto p = std::find(s.params->rbegin(), s.params->rend(), n);
      if (p != s.params->rend()) {
        r.where = VarRef::Param;
        r.index = static_cast<int>(s.params->rend() - p - 1);
        return r;
      }
      auto c = std::find(s.captured.begin(), s.captured.end(), n);
      if (c != s.captured.end()) {
        r.where = VarRef::Captured;
        r.index = static_cast<int>(c - s.captured.begin());
        return r;
      }
    }
    auto g = globals_.find(n);
    if (g != globals_.end()) {
      r.where = VarRef::Global;
      r.index = g->second;
      return r;
    }
    throw SyntaxError("unbound variable '" + n + "'", line, col);
  }

  ExprPtr walk(const Expr& e) {
    auto out = std::make_shared<Expr>(e);
    switch (e.kind) {
      case ExprKind::Var:
        out->ref = lookup(e.name, e.line, e.col);
        return out;
      case ExprKind::Lambda:
      case ExprKind::Lambda3:
      case ExprKind::Lambda4: {
        out->free.clear();
        out->captures.clear();
        for (auto& n : free_variables(e)) {
          if (!bound_locally(n)) continue;  // global (or unbound: reported inside)
          out->free.push_back(n);
          out->captures.push_back(lookup(n, e.line, e.col));
        }
        scopes_.push_back(Scope{&e.params, out->free});
        out->kids[0] = walk(*e.kids[0]);
        scopes_.pop_back();
        return out;
      }
      case ExprKind::Interrupt:
      case ExprKind::Resume:
        if (e.reads_kl) {
          out->k_ref = lookup(kContName, e.line, e.col);
          out->l_ref = lookup(kLimitName, e.line, e.col);
        }
        break;
      default:
        break;
    }
    for (auto& k : out->kids) k = walk(*k);
    return out;
  }
};

}  // namespace

Program parse_program(const std::string& text) {
  Reader r(text);
  auto data = r.read_all();
  Program p;
  for (size_t i = 0; i < data.size(); ++i) {
    const Datum& d = data[i];
    bool is_def = d.tag == Datum::List && !d.items.empty() && d.items[0].tag == Datum::Atom &&
                  d.items[0].text == "define";
    if (is_def) {
      if (p.main) fail(d, "define after the main expression");
      if (d.items.size() != 3) fail(d, "define: expected a name and one expression");
      const Datum& target = d.items[1];
      Definition def;
      if (target.tag == Datum::List) {
        if (target.items.size() < 2) fail(target, "define: function needs at least one parameter");
        def.name = symbol(target.items[0], "a function name");
        std::vector<std::string> params;
        for (size_t j = 1; j < target.items.size(); ++j) params.push_back(symbol(target.items[j], "a parameter name"));
        def.rhs = curried_lambda(params, 0, convert(d.items[2]), d);
      } else {
        def.name = symbol(target, "a variable name");
        def.rhs = convert(d.items[2]);
      }
      for (auto& other : p.defs)
        if (other.name == def.name) fail(d, "duplicate definition of '" + def.name + "'");
      p.defs.push_back(std::move(def));
    } else {
      if (p.main) fail(d, "more than one main expression");
      p.main = convert(d);
    }
  }
  return p;
}

ExprPtr parse_expr(const std::string& text) {
  Program p = parse_program(text);
  if (!p.defs.empty() || !p.main) throw SyntaxError("expected a single expression", 1, 1);
  return p.main;
}

std::string pretty(const Expr& e) {
  std::string s;
  pretty_into(e, s);
  return s;
}

std::string pretty(const Program& p) {
  std::string s;
  for (auto& d : p.defs) s += "(define " + d.name + " " + pretty(*d.rhs) + ")\n";
  if (p.main) s += pretty(*p.main) + "\n";
  return s;
}

ExprPtr resolve(const ExprPtr& e, const std::vector<std::string>& globals) { return Resolver(globals).run(e); }

}  // namespace cvl

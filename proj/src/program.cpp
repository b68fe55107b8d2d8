#include "evdpor/program.hpp"

#include <cassert>
#include <cctype>
#include <sstream>

namespace evdpor {

bool Expr::operator==(const Expr &o) const {
  if (kind != o.kind) return false;
  switch (kind) {
  case Kind::Lit:
    return lit == o.lit;
  case Kind::Reg:
    return reg_name == o.reg_name;
  case Kind::Bin:
    return op == o.op && kids == o.kids;
  }
  return false;
}

bool Stmt::operator==(const Stmt &o) const {
  if (kind != o.kind) return false;
  switch (kind) {
  case Kind::Store:
    return var_name == o.var_name && e1 == o.e1;
  case Kind::Load:
    return reg_name == o.reg_name && var_name == o.var_name;
  case Kind::Cas:
    return var_name == o.var_name && e1 == o.e1 && e2 == o.e2 &&
           reg_name == o.reg_name;
  case Kind::Post:
    return msg_name == o.msg_name && handler_name == o.handler_name;
  case Kind::Let:
    return reg_name == o.reg_name && e1 == o.e1;
  case Kind::If:
    return e1 == o.e1 && body == o.body && else_body == o.else_body;
  case Kind::Repeat:
    return count == o.count && body == o.body;
  case Kind::Assert:
    return e1 == o.e1;
  }
  return false;
}

bool Program::operator==(const Program &o) const {
  return shared_vars == o.shared_vars && handlers == o.handlers &&
         threads == o.threads && messages == o.messages;
}

namespace {

enum class Tok {
  Ident,
  Int,
  LBrace,
  RBrace,
  LParen,
  RParen,
  Arrow,
  Assign,
  EqEq,
  Ne,
  Le,
  Ge,
  Lt,
  Gt,
  Plus,
  Minus,
  Star,
  End,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int64_t value = 0;
  SrcLoc loc;
};

bool is_keyword(const std::string &s) {
  static const char *kws[] = {"shared", "handler", "thread", "message",
                              "store",  "load",    "cas",    "post",
                              "let",    "if",      "else",   "repeat",
                              "assert"};
  for (const char *k : kws)
    if (s == k) return true;
  return false;
}

std::vector<Token> tokenize(const std::string &text) {
  std::vector<Token> out;
  int line = 1, col = 1;
  size_t i = 0;
  auto loc = [&]() { return SrcLoc{line, col}; };
  auto advance = [&](size_t n) {
    for (size_t k = 0; k < n; ++k) {
      if (text[i + k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    i += n;
  };
  while (i < text.size()) {
    char c = text[i];
    if (c == '#') {
      size_t j = i;
      while (j < text.size() && text[j] != '\n') ++j;
      advance(j - i);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    Token t;
    t.loc = loc();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) ||
                                 text[j] == '_'))
        ++j;
      t.kind = Tok::Ident;
      t.text = text.substr(i, j - i);
      advance(j - i);
      out.push_back(t);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j])))
        ++j;
      t.kind = Tok::Int;
      t.text = text.substr(i, j - i);
      try {
        t.value = std::stoll(t.text);
      } catch (const std::out_of_range &) {
        throw ParseError(t.loc, "integer literal out of 64-bit range");
      }
      advance(j - i);
      out.push_back(t);
      continue;
    }
    auto two = [&](char a, char b) {
      return c == a && i + 1 < text.size() && text[i + 1] == b;
    };
    if (two('-', '>')) {
      t.kind = Tok::Arrow;
      advance(2);
    } else if (two('=', '=')) {
      t.kind = Tok::EqEq;
      advance(2);
    } else if (two('!', '=')) {
      t.kind = Tok::Ne;
      advance(2);
    } else if (two('<', '=')) {
      t.kind = Tok::Le;
      advance(2);
    } else if (two('>', '=')) {
      t.kind = Tok::Ge;
      advance(2);
    } else {
      switch (c) {
      case '{': t.kind = Tok::LBrace; break;
      case '}': t.kind = Tok::RBrace; break;
      case '(': t.kind = Tok::LParen; break;
      case ')': t.kind = Tok::RParen; break;
      case '=': t.kind = Tok::Assign; break;
      case '<': t.kind = Tok::Lt; break;
      case '>': t.kind = Tok::Gt; break;
      case '+': t.kind = Tok::Plus; break;
      case '-': t.kind = Tok::Minus; break;
      case '*': t.kind = Tok::Star; break;
      default:
        throw ParseError(t.loc, std::string("unexpected character '") + c + "'");
      }
      advance(1);
    }
    out.push_back(t);
  }
  Token end;
  end.kind = Tok::End;
  end.loc = loc();
  out.push_back(end);
  return out;
}

class Parser {
public:
  explicit Parser(const std::string &text) : toks_(tokenize(text)) {}

  Program parse() {
    Program p;
    while (cur().kind != Tok::End) {
      Token t = expect_ident("declaration");
      if (t.text == "shared") {
        while (cur().kind == Tok::Ident && !is_keyword(cur().text)) {
          Token n = next();
          declare(p.var_ids, &p.shared_vars, n, "shared variable");
        }
      } else if (t.text == "handler") {
        while (cur().kind == Tok::Ident && !is_keyword(cur().text)) {
          Token n = next();
          declare(p.handler_ids, &p.handlers, n, "handler");
        }
      } else if (t.text == "thread") {
        Token n = name_token("thread name");
        declare(p.thread_ids, nullptr, n, "thread");
        ThreadDecl d;
        d.name = n.text;
        d.body = block();
        p.threads.push_back(std::move(d));
      } else if (t.text == "message") {
        Token n = name_token("message name");
        declare(p.message_ids, nullptr, n, "message");
        MessageDecl d;
        d.name = n.text;
        d.body = block();
        p.messages.push_back(std::move(d));
      } else {
        throw ParseError(t.loc, "expected 'shared', 'handler', 'thread' or "
                                "'message', got '" + t.text + "'");
      }
    }
    resolve(p);
    return p;
  }

private:
  std::vector<Token> toks_;
  size_t pos_ = 0;

  const Token &cur() const { return toks_[pos_]; }
  Token next() { return toks_[pos_++]; }

  Token expect(Tok k, const char *what) {
    if (cur().kind != k)
      throw ParseError(cur().loc, std::string("expected ") + what);
    return next();
  }

  Token expect_ident(const char *what) { return expect(Tok::Ident, what); }

  Token name_token(const char *what) {
    Token t = expect_ident(what);
    if (is_keyword(t.text))
      throw ParseError(t.loc, "'" + t.text + "' is a keyword and cannot name " +
                                  std::string(what));
    return t;
  }

  static void declare(std::unordered_map<std::string, int> &ids,
                      std::vector<std::string> *names, const Token &t,
                      const char *what) {
    if (is_keyword(t.text))
      throw ParseError(t.loc, "'" + t.text + "' is a keyword");
    if (ids.count(t.text))
      throw ParseError(t.loc, std::string(what) + " '" + t.text +
                                  "' declared twice");
    int id = static_cast<int>(ids.size());
    ids.emplace(t.text, id);
    if (names) names->push_back(t.text);
  }

  Block block() {
    expect(Tok::LBrace, "'{'");
    Block b;
    while (cur().kind != Tok::RBrace) {
      if (cur().kind == Tok::End)
        throw ParseError(cur().loc, "unterminated block, expected '}'");
      b.push_back(statement());
    }
    next();
    return b;
  }

  Stmt statement() {
    Token t = expect_ident("statement");
    Stmt s;
    s.loc = t.loc;
    if (t.text == "store") {
      s.kind = Stmt::Kind::Store;
      s.var_name = name_token("shared variable").text;
      s.e1 = expr();
    } else if (t.text == "load") {
      s.kind = Stmt::Kind::Load;
      s.reg_name = name_token("register").text;
      s.var_name = name_token("shared variable").text;
    } else if (t.text == "cas") {
      s.kind = Stmt::Kind::Cas;
      s.var_name = name_token("shared variable").text;
      s.e1 = expr();
      s.e2 = expr();
      s.reg_name = name_token("result register").text;
    } else if (t.text == "post") {
      s.kind = Stmt::Kind::Post;
      s.msg_name = name_token("message name").text;
      expect(Tok::Arrow, "'->'");
      s.handler_name = name_token("handler name").text;
    } else if (t.text == "let") {
      s.kind = Stmt::Kind::Let;
      s.reg_name = name_token("register").text;
      expect(Tok::Assign, "'='");
      s.e1 = expr();
    } else if (t.text == "if") {
      s.kind = Stmt::Kind::If;
      s.e1 = expr();
      s.body = block();
      if (cur().kind == Tok::Ident && cur().text == "else") {
        next();
        s.else_body = block();
      }
    } else if (t.text == "repeat") {
      s.kind = Stmt::Kind::Repeat;
      Token n = expect(Tok::Int, "literal repeat count");
      s.count = n.value;
      s.body = block();
    } else if (t.text == "assert") {
      s.kind = Stmt::Kind::Assert;
      s.e1 = expr();
    } else {
      throw ParseError(t.loc, "unknown statement '" + t.text + "'");
    }
    return s;
  }

  // cmp > additive > multiplicative > unary > primary
  Expr expr() { return cmp(); }

  Expr cmp() {
    Expr lhs = additive();
    for (;;) {
      BinOp op;
      switch (cur().kind) {
      case Tok::EqEq: op = BinOp::Eq; break;
      case Tok::Ne: op = BinOp::Ne; break;
      case Tok::Lt: op = BinOp::Lt; break;
      case Tok::Le: op = BinOp::Le; break;
      case Tok::Gt: op = BinOp::Gt; break;
      case Tok::Ge: op = BinOp::Ge; break;
      default: return lhs;
      }
      SrcLoc l = next().loc;
      Expr rhs = additive();
      lhs = make_bin(op, std::move(lhs), std::move(rhs), l);
    }
  }

  Expr additive() {
    Expr lhs = multiplicative();
    for (;;) {
      BinOp op;
      if (cur().kind == Tok::Plus) op = BinOp::Add;
      else if (cur().kind == Tok::Minus) op = BinOp::Sub;
      else return lhs;
      SrcLoc l = next().loc;
      Expr rhs = multiplicative();
      lhs = make_bin(op, std::move(lhs), std::move(rhs), l);
    }
  }

  Expr multiplicative() {
    Expr lhs = unary();
    while (cur().kind == Tok::Star) {
      SrcLoc l = next().loc;
      Expr rhs = unary();
      lhs = make_bin(BinOp::Mul, std::move(lhs), std::move(rhs), l);
    }
    return lhs;
  }

  Expr unary() {
    if (cur().kind == Tok::Minus) {
      SrcLoc l = next().loc;
      Expr zero;
      zero.kind = Expr::Kind::Lit;
      zero.lit = 0;
      zero.loc = l;
      return make_bin(BinOp::Sub, std::move(zero), unary(), l);
    }
    return primary();
  }

  Expr primary() {
    Expr e;
    e.loc = cur().loc;
    if (cur().kind == Tok::Int) {
      e.kind = Expr::Kind::Lit;
      e.lit = next().value;
      return e;
    }
    if (cur().kind == Tok::Ident && !is_keyword(cur().text)) {
      e.kind = Expr::Kind::Reg;
      e.reg_name = next().text;
      return e;
    }
    if (cur().kind == Tok::LParen) {
      next();
      Expr inner = expr();
      expect(Tok::RParen, "')'");
      return inner;
    }
    throw ParseError(cur().loc, "expected expression");
  }

  static Expr make_bin(BinOp op, Expr lhs, Expr rhs, SrcLoc loc) {
    Expr e;
    e.kind = Expr::Kind::Bin;
    e.op = op;
    e.loc = loc;
    e.kids.push_back(std::move(lhs));
    e.kids.push_back(std::move(rhs));
    return e;
  }

  // Second pass: bind names to ids. Message and handler references may
  // appear before their declarations; registers are interned on first use.
  static void resolve(Program &p) {
    for (auto &t : p.threads) resolve_block(p, t.body);
    for (auto &m : p.messages) resolve_block(p, m.body);
  }

  static void resolve_block(Program &p, Block &b) {
    for (auto &s : b) resolve_stmt(p, s);
  }

  static int reg_id(Program &p, const std::string &name) {
    auto it = p.register_ids.find(name);
    if (it != p.register_ids.end()) return it->second;
    int id = static_cast<int>(p.registers.size());
    p.registers.push_back(name);
    p.register_ids.emplace(name, id);
    return id;
  }

  static void resolve_expr(Program &p, Expr &e) {
    switch (e.kind) {
    case Expr::Kind::Lit:
      break;
    case Expr::Kind::Reg:
      e.reg = reg_id(p, e.reg_name);
      break;
    case Expr::Kind::Bin:
      for (auto &k : e.kids) resolve_expr(p, k);
      break;
    }
  }

  static void resolve_stmt(Program &p, Stmt &s) {
    auto lookup = [](const std::unordered_map<std::string, int> &ids,
                     const std::string &name, SrcLoc loc,
                     const char *what) -> int {
      auto it = ids.find(name);
      if (it == ids.end())
        throw ParseError(loc, std::string("undeclared ") + what + " '" + name +
                                  "'");
      return it->second;
    };
    switch (s.kind) {
    case Stmt::Kind::Store:
      s.var = lookup(p.var_ids, s.var_name, s.loc, "shared variable");
      resolve_expr(p, s.e1);
      break;
    case Stmt::Kind::Load:
      s.reg = reg_id(p, s.reg_name);
      s.var = lookup(p.var_ids, s.var_name, s.loc, "shared variable");
      break;
    case Stmt::Kind::Cas:
      s.var = lookup(p.var_ids, s.var_name, s.loc, "shared variable");
      resolve_expr(p, s.e1);
      resolve_expr(p, s.e2);
      s.reg = reg_id(p, s.reg_name);
      break;
    case Stmt::Kind::Post:
      s.msg = lookup(p.message_ids, s.msg_name, s.loc, "message");
      s.handler = lookup(p.handler_ids, s.handler_name, s.loc, "handler");
      break;
    case Stmt::Kind::Let:
      s.reg = reg_id(p, s.reg_name);
      resolve_expr(p, s.e1);
      break;
    case Stmt::Kind::If:
      resolve_expr(p, s.e1);
      resolve_block(p, s.body);
      resolve_block(p, s.else_body);
      break;
    case Stmt::Kind::Repeat:
      if (s.count < 0)
        throw ParseError(s.loc, "repeat count must be non-negative");
      resolve_block(p, s.body);
      break;
    case Stmt::Kind::Assert:
      resolve_expr(p, s.e1);
      break;
    }
  }
};

const char *op_text(BinOp op) {
  switch (op) {
  case BinOp::Add: return "+";
  case BinOp::Sub: return "-";
  case BinOp::Mul: return "*";
  case BinOp::Eq: return "==";
  case BinOp::Ne: return "!=";
  case BinOp::Lt: return "<";
  case BinOp::Le: return "<=";
  case BinOp::Gt: return ">";
  case BinOp::Ge: return ">=";
  }
  return "?";
}

int op_level(BinOp op) {
  switch (op) {
  case BinOp::Mul: return 3;
  case BinOp::Add:
  case BinOp::Sub: return 2;
  default: return 1;
  }
}

void emit_expr(std::ostream &os, const Expr &e, int parent_level) {
  switch (e.kind) {
  case Expr::Kind::Lit:
    if (e.lit < 0) {
      os << "(0 - " << -(e.lit + 1) << " - 1)";  // INT64_MIN safe
    } else {
      os << e.lit;
    }
    return;
  case Expr::Kind::Reg:
    os << e.reg_name;
    return;
  case Expr::Kind::Bin: {
    int level = op_level(e.op);
    bool paren = level < parent_level;
    if (paren) os << "(";
    emit_expr(os, e.kids[0], level);
    os << " " << op_text(e.op) << " ";
    emit_expr(os, e.kids[1], level + 1);  // left-associative
    if (paren) os << ")";
    return;
  }
  }
}

void emit_block(std::ostream &os, const Block &b, int indent) {
  std::string pad(static_cast<size_t>(indent) * 2, ' ');
  for (const auto &s : b) {
    os << pad;
    switch (s.kind) {
    case Stmt::Kind::Store:
      os << "store " << s.var_name << " ";
      emit_expr(os, s.e1, 0);
      break;
    case Stmt::Kind::Load:
      os << "load " << s.reg_name << " " << s.var_name;
      break;
    case Stmt::Kind::Cas:
      os << "cas " << s.var_name << " ";
      emit_expr(os, s.e1, 4);
      os << " ";
      emit_expr(os, s.e2, 4);
      os << " " << s.reg_name;
      break;
    case Stmt::Kind::Post:
      os << "post " << s.msg_name << " -> " << s.handler_name;
      break;
    case Stmt::Kind::Let:
      os << "let " << s.reg_name << " = ";
      emit_expr(os, s.e1, 0);
      break;
    case Stmt::Kind::If:
      os << "if ";
      emit_expr(os, s.e1, 0);
      os << " {\n";
      emit_block(os, s.body, indent + 1);
      os << pad << "}";
      if (!s.else_body.empty()) {
        os << " else {\n";
        emit_block(os, s.else_body, indent + 1);
        os << pad << "}";
      }
      break;
    case Stmt::Kind::Repeat:
      os << "repeat " << s.count << " {\n";
      emit_block(os, s.body, indent + 1);
      os << pad << "}";
      break;
    case Stmt::Kind::Assert:
      os << "assert ";
      emit_expr(os, s.e1, 0);
      break;
    }
    os << "\n";
  }
}

}  // namespace

Program parse_program(const std::string &text) {
  return Parser(text).parse();
}

std::string emit_text(const Program &p) {
  std::ostringstream os;
  if (!p.shared_vars.empty()) {
    os << "shared";
    for (const auto &v : p.shared_vars) os << " " << v;
    os << "\n";
  }
  if (!p.handlers.empty()) {
    os << "handler";
    for (const auto &h : p.handlers) os << " " << h;
    os << "\n";
  }
  for (const auto &t : p.threads) {
    os << "thread " << t.name << " {\n";
    emit_block(os, t.body, 1);
    os << "}\n";
  }
  for (const auto &m : p.messages) {
    os << "message " << m.name << " {\n";
    emit_block(os, m.body, 1);
    os << "}\n";
  }
  return os.str();
}

}  // namespace evdpor

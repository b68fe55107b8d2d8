#ifndef EVDPOR_PROGRAM_HPP
#define EVDPOR_PROGRAM_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace evdpor {

struct SrcLoc {
  int line = 0;
  int col = 0;
};

struct ParseError : std::runtime_error {
  SrcLoc loc;
  ParseError(SrcLoc l, const std::string &msg)
      : std::runtime_error(std::to_string(l.line) + ":" + std::to_string(l.col) +
                           ": " + msg),
        loc(l) {}
};

// Raised when expression evaluation leaves the 64-bit range.
struct EvalError : std::runtime_error {
  SrcLoc loc;
  EvalError(SrcLoc l, const std::string &msg)
      : std::runtime_error(std::to_string(l.line) + ":" + std::to_string(l.col) +
                           ": " + msg),
        loc(l) {}
};

enum class BinOp { Add, Sub, Mul, Eq, Ne, Lt, Le, Gt, Ge };

// Expressions read registers and literals only; shared variables are touched
// exclusively through store/load/cas statements.
struct Expr {
  enum class Kind { Lit, Reg, Bin };
  Kind kind = Kind::Lit;
  int64_t lit = 0;
  int reg = -1;
  std::string reg_name;
  BinOp op = BinOp::Add;
  std::vector<Expr> kids;  // two entries when kind == Bin
  SrcLoc loc;

  bool operator==(const Expr &o) const;
};

struct Stmt;
using Block = std::vector<Stmt>;

struct Stmt {
  enum class Kind { Store, Load, Cas, Post, Let, If, Repeat, Assert };
  Kind kind = Kind::Store;
  SrcLoc loc;

  int var = -1;  // Store/Load/Cas: shared variable
  int reg = -1;  // Load/Cas/Let: destination register
  std::string var_name;
  std::string reg_name;

  Expr e1;  // Store: value; Cas: expected; Let: value; If/Assert: condition
  Expr e2;  // Cas: new value

  int msg = -1;  // Post: message decl index
  int handler = -1;
  std::string msg_name;
  std::string handler_name;

  int64_t count = 0;  // Repeat: literal bound
  Block body;         // If: then-block; Repeat: body
  Block else_body;

  bool operator==(const Stmt &o) const;
};

struct ThreadDecl {
  std::string name;
  Block body;
  bool operator==(const ThreadDecl &o) const = default;
};

struct MessageDecl {
  std::string name;
  Block body;
  bool operator==(const MessageDecl &o) const = default;
};

struct Program {
  std::vector<std::string> shared_vars;
  std::vector<std::string> handlers;
  std::vector<std::string> registers;  // interned program-wide; valuations are per instance
  std::vector<ThreadDecl> threads;
  std::vector<MessageDecl> messages;

  std::unordered_map<std::string, int> var_ids;
  std::unordered_map<std::string, int> handler_ids;
  std::unordered_map<std::string, int> register_ids;
  std::unordered_map<std::string, int> thread_ids;
  std::unordered_map<std::string, int> message_ids;

  bool operator==(const Program &o) const;
};

// Parses program text. Grammar (statements are keyword-led, '#' starts a
// line comment):
//   shared NAME...
//   handler NAME...
//   thread NAME { STMT... }
//   message NAME { STMT... }
//   STMT := store VAR EXPR | load REG VAR | cas VAR EXPR EXPR REG
//         | post MSG -> HANDLER | let REG = EXPR | assert EXPR
//         | if EXPR { STMT... } [else { STMT... }] | repeat INT { STMT... }
// Throws ParseError with line:col on syntax errors and undeclared
// shared/handler/message names. Registers are declared implicitly.
Program parse_program(const std::string &text);

// Canonical source text; parse_program(emit_text(p)) == p.
std::string emit_text(const Program &p);

}  // namespace evdpor

#endif

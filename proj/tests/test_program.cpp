#include "doctest.h"
#include "evdpor/program.hpp"

using namespace evdpor;

namespace {

const char *kPostPair = R"(
shared x y
handler h

thread s {
  post p1 -> h
  post p2 -> h
}

message p1 { store x 1 }
message p2 { store y 2 }
)";

}  // namespace

TEST_CASE("parse basic declarations") {
  Program p = parse_program(kPostPair);
  CHECK(p.shared_vars == std::vector<std::string>{"x", "y"});
  CHECK(p.handlers == std::vector<std::string>{"h"});
  REQUIRE(p.threads.size() == 1);
  CHECK(p.threads[0].name == "s");
  REQUIRE(p.threads[0].body.size() == 2);
  CHECK(p.threads[0].body[0].kind == Stmt::Kind::Post);
  CHECK(p.threads[0].body[0].msg == 0);
  CHECK(p.threads[0].body[0].handler == 0);
  REQUIRE(p.messages.size() == 2);
  CHECK(p.messages[1].name == "p2");
  REQUIRE(p.messages[1].body.size() == 1);
  CHECK(p.messages[1].body[0].kind == Stmt::Kind::Store);
  CHECK(p.messages[1].body[0].var == p.var_ids.at("y"));
}

TEST_CASE("round trip covers every statement and precedence") {
  const char *src = R"(
shared x flag
handler h worker

thread main {
  let r = 1 + 2 * 3
  let q = (1 + 2) * 3
  let neg = 0 - 9223372036854775807 - 1
  store x r + q
  load a x
  cas flag a - 1 (a + 1) * 2 old
  if a == 0 {
    assert old <= a
  } else {
    repeat 3 {
      post job -> worker
    }
  }
  assert 1
}

message job {
  load t x
  if t != 5 { store x t + 1 }
}
)";
  Program p = parse_program(src);
  std::string text = emit_text(p);
  Program q = parse_program(text);
  CHECK(p == q);
  CHECK(emit_text(q) == text);
}

TEST_CASE("round trip of the post pair program") {
  Program p = parse_program(kPostPair);
  CHECK(parse_program(emit_text(p)) == p);
}

TEST_CASE("registers are interned implicitly") {
  Program p = parse_program("shared x\nthread t { load a x\nload b x\nlet a = a + b }");
  CHECK(p.registers == std::vector<std::string>{"a", "b"});
}

TEST_CASE("parse errors carry line and column") {
  auto expects = [](const char *src, const char *fragment) {
    try {
      parse_program(src);
      FAIL_CHECK("no error for: ", src);
    } catch (const ParseError &e) {
      CHECK(std::string(e.what()).find(fragment) != std::string::npos);
      CHECK(e.loc.line > 0);
      CHECK(e.loc.col > 0);
    }
  };
  expects("thread t { store x 1 }", "undeclared shared variable");
  expects("message m { }\nthread t { post m -> h }", "undeclared handler");
  expects("handler h\nthread t { post m -> h }", "undeclared message");
  expects("shared x x\nthread t { }", "declared twice");
  expects("shared x\nthread t { frobnicate }", "unknown statement");
  expects("shared x\nthread t { store x 1 + }", "expected expression");
  expects("shared x\nthread t { repeat -2 { store x 1 } }", "repeat count");
  expects("thread t { let if = 3 }", "keyword");
}

TEST_CASE("reported location points at the offending statement") {
  try {
    parse_program("shared x\nthread t {\n  store y 1\n}\n");
    FAIL_CHECK("no error");
  } catch (const ParseError &e) {
    CHECK(e.loc.line == 3);
    CHECK(e.loc.col == 3);
  }
}

TEST_CASE("comments and whitespace are insignificant") {
  Program a = parse_program("shared x # the variable\nthread t {\n# nothing\n store x 1 }");
  Program b = parse_program("shared x\nthread t { store x 1 }");
  CHECK(a == b);
}

TEST_CASE("empty bodies parse") {
  Program p = parse_program("handler h\nthread t { }\nmessage m { }\nthread u { post m -> h }");
  CHECK(p.threads[0].body.empty());
  CHECK(p.messages[0].body.empty());
  CHECK(parse_program(emit_text(p)) == p);
}

TEST_CASE("message bodies may post, including to their own message") {
  Program p = parse_program(
      "handler h\nmessage m { post m -> h }\nthread t { post m -> h }");
  CHECK(p.messages[0].body[0].msg == 0);
  CHECK(parse_program(emit_text(p)) == p);
}

#include "evdpor/bench.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace evdpor::bench {

namespace {

std::string fig1_wrr() {
  return R"(shared x y z
thread s {
  store x 1
}
thread t {
  load a y
  load b x
}
thread u {
  load c z
  load d x
}
)";
}

std::string fig2_nc() {
  return R"(shared x y
handler h
thread s {
  post p1 -> h
}
thread t {
  post p2 -> h
}
message p1 {
  store x 1
}
message p2 {
  store y 2
}
)";
}

std::string fig2_conf() {
  return R"(shared u v x y
handler h
thread s {
  post p1 -> h
}
thread t {
  post p2 -> h
}
message p1 {
  store u 1
  store x 1
  store y 1
}
message p2 {
  store v 2
  load a x
  load b y
}
)";
}

std::string fig3_branch() {
  return R"(shared x y
handler h
thread s {
  post p1 -> h
  store x 1
}
thread t {
  post p2 -> h
}
message p1 {
  store y 2
}
message p2 {
  load a x
  if a == 0 {
    load b y
  }
}
)";
}

std::string fig4_two_handlers() {
  return R"(shared d x y z
handler h k
thread t {
  post p1 -> h
  post p2 -> h
  post q1 -> k
  post q2 -> k
}
message p1 {
  store d 1
  load a y
}
message p2 {
  store z 1
}
message q1 {
  store y 1
  store x 1
}
message q2 {
  load b z
  load c x
}
)";
}

std::string fig5_wi() {
  return R"(shared x y z
handler h
thread s {
  post p1 -> h
}
thread t {
  post p2 -> h
}
message p1 {
  store x 1
}
message p2 {
  store y 2
  store z 2
}
)";
}

std::string writers(int n) {
  std::ostringstream os;
  os << "shared x\n";
  for (int i = 1; i <= n; ++i)
    os << "thread w" << i << " {\n  store x " << i << "\n}\n";
  return os.str();
}

std::string posters(int n) {
  std::ostringstream os;
  os << "shared x\nhandler h\n";
  for (int i = 1; i <= n; ++i) {
    os << "thread t" << i << " {\n"
       << "  post a" << i << " -> h\n"
       << "  post b" << i << " -> h\n"
       << "  load r x\n"
       << "  assert r >= 0\n"
       << "}\n";
  }
  for (int i = 1; i <= n; ++i) {
    os << "message a" << i << " {\n  store x " << 2 * i - 1 << "\n}\n";
    os << "message b" << i << " {\n  store x " << 2 * i << "\n}\n";
  }
  return os.str();
}

std::string prolific_cycle(int n) {
  std::ostringstream os;
  os << "shared";
  for (int i = 1; i <= n; ++i) os << " v" << i;
  os << "\nhandler h\n";
  for (int i = 1; i <= n; ++i)
    os << "thread t" << i << " {\n  post m" << i << " -> h\n}\n";
  for (int i = 1; i <= n; ++i) {
    os << "message m" << i << " {\n  store v" << i << " 1\n  store v"
       << i % n + 1 << " 1\n}\n";
  }
  return os.str();
}

std::string plb(int n) {
  std::ostringstream os;
  os << "shared";
  for (int i = 1; i <= n; ++i) os << " v" << i;
  os << "\nhandler h\nthread main {\n";
  for (int i = 1; i <= n; ++i) os << "  post b" << i << " -> h\n";
  os << "}\n";
  for (int i = 1; i <= n; ++i)
    os << "message b" << i << " {\n  store v" << i << " 1\n}\n";
  return os.str();
}

std::string ping_pong(int n) {
  std::ostringstream os;
  os << "shared";
  for (int i = 1; i <= n; ++i) os << " pv" << i;
  for (int i = 1; i < n; ++i) os << " qv" << i;
  os << "\nhandler hping hpong\n";
  os << "thread main {\n  post pong1 -> hpong\n}\n";
  for (int i = 1; i <= n; ++i) {
    os << "message pong" << i << " {\n  store pv" << i << " 1\n";
    if (i < n) os << "  post ping" << i << " -> hping\n";
    os << "}\n";
  }
  for (int i = 1; i < n; ++i) {
    os << "message ping" << i << " {\n  store qv" << i << " 1\n  post pong"
       << i + 1 << " -> hpong\n}\n";
  }
  return os.str();
}

std::string consensus_lite(int n) {
  std::ostringstream os;
  os << "shared";
  for (int j = 1; j <= n; ++j) os << " d" << j;
  os << "\nhandler";
  for (int j = 1; j <= n; ++j) os << " c" << j;
  os << "\n";
  for (int i = 1; i <= n; ++i) {
    os << "thread b" << i << " {\n";
    for (int j = 1; j <= n; ++j)
      os << "  post m" << i << "_" << j << " -> c" << j << "\n";
    os << "}\n";
  }
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) {
      os << "message m" << i << "_" << j << " {\n"
         << "  load r d" << j << "\n"
         << "  if " << i << " > r {\n"
         << "    store d" << j << " " << i << "\n"
         << "  }\n"
         << "}\n";
    }
  return os.str();
}

uint64_t factorial(int n) {
  uint64_t f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace

const std::vector<BenchInfo> &builtins() {
  static const std::vector<BenchInfo> list = {
      {"fig1_wrr", false, 0, 0},
      {"fig2_nc", false, 0, 0},
      {"fig2_conf", false, 0, 0},
      {"fig3_branch", false, 0, 0},
      {"fig4_two_handlers", false, 0, 0},
      {"fig5_wi", false, 0, 0},
      {"writers", true, 1, 20},
      {"posters", true, 1, 16},
      {"prolific_cycle", true, 2, 60},
      {"plb", true, 1, 200},
      {"ping_pong", true, 1, 100},
      {"consensus_lite", true, 1, 8},
  };
  return list;
}

bool is_builtin(const std::string &name) {
  for (const auto &b : builtins())
    if (b.name == name) return true;
  return false;
}

std::string source_text(const std::string &name, int n) {
  const BenchInfo *info = nullptr;
  for (const auto &b : builtins())
    if (b.name == name) info = &b;
  if (!info) throw std::invalid_argument("unknown builtin '" + name + "'");
  if (info->takes_n && (n < info->min_n || n > info->max_n))
    throw std::invalid_argument("parameter n=" + std::to_string(n) +
                                " out of range for '" + name + "'");
  if (name == "fig1_wrr") return fig1_wrr();
  if (name == "fig2_nc") return fig2_nc();
  if (name == "fig2_conf") return fig2_conf();
  if (name == "fig3_branch") return fig3_branch();
  if (name == "fig4_two_handlers") return fig4_two_handlers();
  if (name == "fig5_wi") return fig5_wi();
  if (name == "writers") return writers(n);
  if (name == "posters") return posters(n);
  if (name == "prolific_cycle") return prolific_cycle(n);
  if (name == "plb") return plb(n);
  if (name == "ping_pong") return ping_pong(n);
  return consensus_lite(n);
}

Program generate(const std::string &name, int n) {
  return parse_program(source_text(name, n));
}

std::optional<uint64_t> expected_traces(const std::string &name, int n) {
  if (name == "fig1_wrr") return 4;
  if (name == "fig2_nc") return 1;
  if (name == "fig2_conf") return 2;
  if (name == "fig3_branch") return 3;
  if (name == "fig4_two_handlers") return 8;
  if (name == "fig5_wi") return 1;
  if (name == "writers") return factorial(n);
  if (name == "prolific_cycle") return (uint64_t{1} << n) - 2;
  if (name == "plb") return 1;
  if (name == "ping_pong") return 1;
  return std::nullopt;
}

namespace {

bool block_has_if(const Block &blk) {
  for (const Stmt &s : blk) {
    if (s.kind == Stmt::Kind::If) return true;
    if (block_has_if(s.body) || block_has_if(s.else_body)) return true;
  }
  return false;
}

}  // namespace

bool has_branch_stmts(const Program &p) {
  for (const auto &m : p.messages)
    if (block_has_if(m.body)) return true;
  for (const auto &t : p.threads)
    if (block_has_if(t.body)) return true;
  return false;
}

std::vector<std::string> write_corpus(const std::string &dir) {
  static const std::vector<std::pair<std::string, std::vector<int>>> sweep = {
      {"fig1_wrr", {}},        {"fig2_nc", {}},
      {"fig2_conf", {}},       {"fig3_branch", {}},
      {"fig4_two_handlers", {}}, {"fig5_wi", {}},
      {"writers", {2, 3, 4}},  {"posters", {1, 2, 3}},
      {"prolific_cycle", {2, 3, 4, 5}},
      {"plb", {3, 7, 9}},      {"ping_pong", {2, 5}},
      {"consensus_lite", {2, 3}},
  };
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  for (const auto &[name, ns] : sweep) {
    if (ns.empty()) {
      std::string fname = name + ".evp";
      std::ofstream(std::filesystem::path(dir) / fname) << source_text(name);
      written.push_back(fname);
      continue;
    }
    for (int n : ns) {
      std::string fname = name + "_" + std::to_string(n) + ".evp";
      std::ofstream(std::filesystem::path(dir) / fname)
          << source_text(name, n);
      written.push_back(fname);
    }
  }
  return written;
}

}  // namespace evdpor::bench

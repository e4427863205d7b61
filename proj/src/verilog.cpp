// Structural Verilog subset reader. Enough of the language to recover
// gate-level connectivity: module headers, input/output/wire declarations
// (with ranges), gate primitives, cell instances with positional or named
// ports, `assign a = b;` aliases, and one level of user-module instantiation.

#include <algorithm>
#include <cctype>
#include <map>
#include <memory>
#include <set>

#include "shieldroute/error.hpp"
#include "shieldroute/netlist.hpp"

namespace shieldroute {

namespace {

enum class Tok { Ident, Number, Sym, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::size_t line = 1;
  std::size_t column = 1;
};

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0, line = 1, line_start = 0;
  auto col = [&](std::size_t p) { return p - line_start + 1; };
  while (i < src.size()) {
    const char c = src[i];
    if (c == '\n') {
      ++line;
      line_start = ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
      const std::size_t start_line = line, start_col = col(i);
      i += 2;
      while (i + 1 < src.size() && !(src[i] == '*' && src[i + 1] == '/')) {
        if (src[i] == '\n') {
          ++line;
          line_start = i + 1;
        }
        ++i;
      }
      if (i + 1 >= src.size()) throw ParseError("unterminated block comment", start_line, start_col);
      i += 2;
      continue;
    }
    Token t;
    t.line = line;
    t.column = col(i);
    if (c == '\\') {
      std::size_t j = i + 1;
      while (j < src.size() && !std::isspace(static_cast<unsigned char>(src[j]))) ++j;
      if (j == i + 1) throw ParseError("empty escaped identifier", line, col(i));
      t.kind = Tok::Ident;
      t.text = std::string(src.substr(i + 1, j - i - 1));
      i = j;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_' ||
                                src[j] == '$'))
        ++j;
      t.kind = Tok::Ident;
      t.text = std::string(src.substr(i, j - i));
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '\'' ||
                                src[j] == '_'))
        ++j;
      t.kind = Tok::Number;
      t.text = std::string(src.substr(i, j - i));
      i = j;
    } else if (std::string_view("()[],;.:=#").find(c) != std::string_view::npos) {
      t.kind = Tok::Sym;
      t.text = std::string(1, c);
      ++i;
    } else {
      throw ParseError(std::string("unexpected character '") + c + "'", line, col(i));
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.line = line;
  end.column = col(i);
  out.push_back(end);
  return out;
}

enum class PortDir { Input, Output, Wire };

struct Decl {
  PortDir dir = PortDir::Wire;
  bool ranged = false;
  int msb = 0, lsb = 0;
};

/// Connection expression: a scalar net, one bit of a bus, a whole bus, or a constant.
struct Expr {
  std::string name;
  std::optional<int> bit;
  bool constant = false;
  std::size_t line = 1, column = 1;
};

struct Connection {
  std::string pin;  // empty for positional
  std::optional<Expr> expr;  // empty for .PIN()
};

struct Instance {
  std::string type;
  std::string name;
  std::vector<Connection> conns;
  std::size_t line = 1, column = 1;
};

struct Assign {
  Expr lhs, rhs;
};

struct Module {
  std::string name;
  std::vector<std::string> ports;
  std::map<std::string, Decl> decls;
  std::vector<std::string> decl_order;
  std::vector<Instance> instances;
  std::vector<Assign> assigns;
  std::size_t line = 1;
};

const std::set<std::string, std::less<>> kPrimitives = {"and", "or",  "nand", "nor",
                                                        "xor", "xnor", "buf", "not"};

const std::set<std::string, std::less<>> kOutputPins = {"Y", "Z",  "ZN", "Q",   "QN",
                                                        "QB", "O", "OUT", "CO", "SO"};

const std::set<std::string, std::less<>> kUnsupported = {
    "always", "initial", "generate", "reg", "inout", "function", "task", "parameter", "supply0",
    "supply1", "tri", "integer"};

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  std::vector<Module> parse_file() {
    std::vector<Module> mods;
    while (peek().kind != Tok::End) {
      if (peek().kind == Tok::Ident && peek().text == "module") {
        mods.push_back(parse_module());
      } else {
        fail("expected 'module'");
      }
    }
    if (mods.empty()) fail("no module found");
    return mods;
  }

 private:
  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  const Token& take() {
    const Token& t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(what + (peek().kind == Tok::End ? " at end of input" : " near '" + peek().text + "'"),
                     peek().line, peek().column);
  }
  bool is_sym(const char* s) const { return peek().kind == Tok::Sym && peek().text == s; }
  void expect_sym(const char* s) {
    if (!is_sym(s)) fail(std::string("expected '") + s + "'");
    take();
  }
  std::string ident() {
    if (peek().kind != Tok::Ident) fail("expected identifier");
    return take().text;
  }
  int number() {
    if (peek().kind != Tok::Number) fail("expected number");
    const std::string t = take().text;
    try {
      std::size_t used = 0;
      const int v = std::stoi(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      return v;
    } catch (const std::exception&) {
      throw ParseError("malformed integer '" + t + "'", toks_[pos_ - 1].line, toks_[pos_ - 1].column);
    }
  }

  Module parse_module() {
    Module m;
    m.line = peek().line;
    take();  // module
    m.name = ident();
    if (is_sym("(")) {
      take();
      if (!is_sym(")")) {
        for (;;) {
          // ANSI-style headers ("input a") are accepted too.
          if (peek().kind == Tok::Ident && (peek().text == "input" || peek().text == "output" ||
                                            peek().text == "wire")) {
            parse_decl(m, /*in_header=*/true);
          } else {
            m.ports.push_back(ident());
          }
          if (is_sym(",")) {
            take();
            continue;
          }
          break;
        }
      }
      expect_sym(")");
    }
    expect_sym(";");
    for (;;) {
      if (peek().kind == Tok::End) fail("missing 'endmodule'");
      if (peek().kind != Tok::Ident) fail("expected a declaration or instance");
      const std::string& kw = peek().text;
      if (kw == "endmodule") {
        take();
        break;
      }
      if (kw == "input" || kw == "output" || kw == "wire") {
        parse_decl(m, false);
        expect_sym(";");
      } else if (kw == "assign") {
        take();
        for (;;) {
          Assign a;
          a.lhs = parse_expr();
          expect_sym("=");
          a.rhs = parse_expr();
          m.assigns.push_back(a);
          if (is_sym(",")) {
            take();
            continue;
          }
          break;
        }
        expect_sym(";");
      } else if (kUnsupported.count(kw)) {
        fail("unsupported construct '" + kw + "' (structural netlists only)");
      } else {
        parse_instances(m);
      }
    }
    return m;
  }

  void parse_decl(Module& m, bool in_header) {
    const std::string kw = take().text;
    Decl d;
    d.dir = kw == "input" ? PortDir::Input : kw == "output" ? PortDir::Output : PortDir::Wire;
    if (peek().kind == Tok::Ident && peek().text == "wire") take();  // "output wire x"
    if (is_sym("[")) {
      take();
      d.ranged = true;
      d.msb = number();
      expect_sym(":");
      d.lsb = number();
      expect_sym("]");
    }
    for (;;) {
      const Token& at = peek();
      const std::string name = ident();
      auto it = m.decls.find(name);
      if (it != m.decls.end()) {
        // "output y; wire y;" is legal; conflicting ranges are not.
        if (it->second.ranged != d.ranged || it->second.msb != d.msb || it->second.lsb != d.lsb)
          throw ParseError("conflicting declaration of '" + name + "'", at.line, at.column);
        if (d.dir != PortDir::Wire) it->second.dir = d.dir;
      } else {
        m.decls.emplace(name, d);
        m.decl_order.push_back(name);
      }
      if (in_header) m.ports.push_back(name);
      if (is_sym(",") && !in_header) {
        take();
        continue;
      }
      break;
    }
  }

  Expr parse_expr() {
    Expr e;
    e.line = peek().line;
    e.column = peek().column;
    if (peek().kind == Tok::Number) {
      const std::string t = take().text;
      if (t == "1'b0" || t == "1'b1" || t == "0" || t == "1") {
        e.constant = true;
        e.name = (t == "1'b1" || t == "1") ? "1'b1" : "1'b0";
        return e;
      }
      throw ParseError("unsupported constant '" + t + "'", e.line, e.column);
    }
    e.name = ident();
    if (is_sym("[")) {
      take();
      e.bit = number();
      if (is_sym(":")) fail("part-selects are not supported");
      expect_sym("]");
    }
    return e;
  }

  void parse_instances(Module& m) {
    const Token& type_tok = peek();
    const std::string type = ident();
    if (is_sym("#")) fail("parameterized instances are not supported");
    for (;;) {
      Instance inst;
      inst.type = type;
      inst.line = type_tok.line;
      inst.column = type_tok.column;
      if (peek().kind == Tok::Ident) inst.name = ident();
      expect_sym("(");
      if (!is_sym(")")) {
        for (;;) {
          Connection c;
          if (is_sym(".")) {
            take();
            c.pin = ident();
            expect_sym("(");
            if (!is_sym(")")) c.expr = parse_expr();
            expect_sym(")");
          } else {
            c.expr = parse_expr();
          }
          inst.conns.push_back(std::move(c));
          if (is_sym(",")) {
            take();
            continue;
          }
          break;
        }
      }
      expect_sym(")");
      m.instances.push_back(std::move(inst));
      if (is_sym(",")) {
        take();
        continue;
      }
      break;
    }
    expect_sym(";");
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

std::string bit_name(const std::string& base, int bit) {
  return base + "[" + std::to_string(bit) + "]";
}

std::vector<int> bits_of(const Decl& d) {
  std::vector<int> out;
  if (!d.ranged) return out;
  const int step = d.msb >= d.lsb ? -1 : 1;
  for (int b = d.msb;; b += step) {
    out.push_back(b);
    if (b == d.lsb) break;
  }
  return out;
}

bool bit_in_range(const Decl& d, int bit) {
  return bit >= std::min(d.msb, d.lsb) && bit <= std::max(d.msb, d.lsb);
}

class Elaborator {
 public:
  Elaborator(const std::vector<Module>& mods) : mods_(mods) {
    for (const auto& m : mods_) {
      if (!by_name_.emplace(m.name, &m).second)
        throw ParseError("duplicate module '" + m.name + "'", m.line);
    }
  }

  Netlist run() {
    std::set<std::string> instantiated;
    for (const auto& m : mods_)
      for (const auto& i : m.instances)
        if (by_name_.count(i.type)) instantiated.insert(i.type);
    const Module* top = nullptr;
    for (const auto& m : mods_) {
      if (instantiated.count(m.name)) continue;
      if (top) throw ParseError("more than one top-level module ('" + top->name + "', '" + m.name + "')", m.line);
      top = &m;
    }
    if (!top) throw ParseError("no top-level module (instantiation cycle)", mods_.front().line);

    // Primary inputs first so that their drivers exist before cells claim nets.
    for (const auto& name : top->decl_order) {
      const Decl& d = top->decls.at(name);
      for (const auto& n : scalar_names(name, d)) {
        const NetId id = b_.net(n);
        if (d.dir == PortDir::Input) b_.mark_input(id);
        if (d.dir == PortDir::Output) b_.mark_output(id);
      }
    }
    emit_module(*top, "", nullptr, true);
    return finish_with_context();
  }

 private:
  using NetMap = std::map<std::string, std::string>;  // local scalar name -> global net

  static std::vector<std::string> scalar_names(const std::string& name, const Decl& d) {
    if (!d.ranged) return {name};
    std::vector<std::string> out;
    for (int b : bits_of(d)) out.push_back(bit_name(name, b));
    return out;
  }

  Netlist finish_with_context() {
    try {
      return b_.finish();
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(e.what(), 1);
    }
  }

  /// Resolves an expression to a list of global net names (one per bit).
  std::vector<std::string> resolve(const Module& m, const std::string& prefix, const NetMap* ports,
                                   const Expr& e) {
    if (e.constant) {
      if (!b_.has_net(e.name)) b_.mark_input(b_.net(e.name));
      return {e.name};
    }
    auto it = m.decls.find(e.name);
    if (it == m.decls.end())
      throw ParseError("undeclared wire '" + e.name + "'", e.line, e.column);
    const Decl& d = it->second;
    std::vector<std::string> locals;
    if (e.bit) {
      if (!d.ranged || !bit_in_range(d, *e.bit))
        throw ParseError("bit select out of range on '" + e.name + "'", e.line, e.column);
      locals.push_back(bit_name(e.name, *e.bit));
    } else {
      locals = scalar_names(e.name, d);
    }
    std::vector<std::string> out;
    for (const auto& l : locals) {
      if (ports) {
        auto p = ports->find(l);
        if (p != ports->end()) {
          out.push_back(p->second);
          continue;
        }
        if (d.dir != PortDir::Wire)
          throw ParseError("port '" + l + "' of '" + m.name + "' is not connected", e.line, e.column);
      }
      out.push_back(prefix + l);
    }
    return out;
  }

  std::string resolve_scalar(const Module& m, const std::string& prefix, const NetMap* ports,
                             const Expr& e) {
    auto v = resolve(m, prefix, ports, e);
    if (v.size() != 1)
      throw ParseError("bus '" + e.name + "' connected to a single-bit pin", e.line, e.column);
    return v.front();
  }

  void emit_module(const Module& m, const std::string& prefix, const NetMap* ports, bool is_top) {
    for (const auto& a : m.assigns) {
      const std::string lhs = resolve_scalar(m, prefix, ports, a.lhs);
      const std::string rhs = resolve_scalar(m, prefix, ports, a.rhs);
      add_cell(prefix + "assign_" + std::to_string(assign_counter_++), "assign",
               {{"A", rhs}}, {{"Y", lhs}}, a.lhs.line, a.lhs.column);
    }
    std::size_t anon = 0;
    for (const auto& inst : m.instances) {
      auto sub = by_name_.find(inst.type);
      if (sub != by_name_.end()) {
        if (!is_top)
          throw ParseError("nested module instantiation of '" + inst.type +
                               "' (only one level is flattened)",
                           inst.line, inst.column);
        if (inst.name.empty()) throw ParseError("module instance needs a name", inst.line, inst.column);
        emit_submodule(m, prefix, ports, inst, *sub->second);
        continue;
      }
      const std::string name =
          prefix + (inst.name.empty() ? inst.type + "_" + std::to_string(anon++) : inst.name);
      std::vector<std::pair<std::string, std::string>> ins, outs;
      const bool primitive = kPrimitives.count(inst.type) > 0;
      const bool named = !inst.conns.empty() && !inst.conns.front().pin.empty();
      if (primitive && named)
        throw ParseError("gate primitives take positional ports", inst.line, inst.column);
      for (std::size_t k = 0; k < inst.conns.size(); ++k) {
        const auto& c = inst.conns[k];
        if (c.pin.empty() == named)
          throw ParseError("mixed positional and named ports", inst.line, inst.column);
        if (!c.expr) continue;  // .PIN() left open
        const std::string net = resolve_scalar(m, prefix, ports, *c.expr);
        if (named) {
          (kOutputPins.count(c.pin) ? outs : ins).emplace_back(c.pin, net);
        } else if (k == 0) {
          outs.emplace_back(primitive ? "Y" : "P0", net);
        } else {
          ins.emplace_back((primitive ? "A" : "P") + std::to_string(k - (primitive ? 1 : 0)), net);
        }
      }
      if (outs.empty())
        throw ParseError("instance '" + name + "' has no output connection", inst.line, inst.column);
      add_cell(name, inst.type, ins, outs, inst.line, inst.column);
    }
  }

  void emit_submodule(const Module& parent, const std::string& prefix, const NetMap* ports,
                      const Instance& inst, const Module& sub) {
    NetMap map;
    const bool named = !inst.conns.empty() && !inst.conns.front().pin.empty();
    if (!named && inst.conns.size() > sub.ports.size())
      throw ParseError("too many ports for module '" + sub.name + "'", inst.line, inst.column);
    for (std::size_t k = 0; k < inst.conns.size(); ++k) {
      const auto& c = inst.conns[k];
      const std::string port = named ? c.pin : sub.ports[k];
      auto d = sub.decls.find(port);
      if (d == sub.decls.end() || d->second.dir == PortDir::Wire)
        throw ParseError("'" + port + "' is not a port of '" + sub.name + "'", inst.line, inst.column);
      if (!c.expr) continue;
      const auto globals = resolve(parent, prefix, ports, *c.expr);
      const auto locals = scalar_names(port, d->second);
      if (globals.size() != locals.size())
        throw ParseError("width mismatch on port '" + port + "'", c.expr->line, c.expr->column);
      for (std::size_t i = 0; i < locals.size(); ++i) map[locals[i]] = globals[i];
    }
    for (const auto& name : sub.decl_order) {
      const Decl& d = sub.decls.at(name);
      if (d.dir == PortDir::Wire) continue;
      for (const auto& l : scalar_names(name, d)) {
        if (!map.count(l) && d.dir == PortDir::Output) map[l] = prefix + inst.name + "/" + l;
      }
    }
    emit_module(sub, prefix + inst.name + "/", &map, false);
  }

  void add_cell(const std::string& name, const std::string& type,
                const std::vector<std::pair<std::string, std::string>>& ins,
                const std::vector<std::pair<std::string, std::string>>& outs, std::size_t line,
                std::size_t column) {
    std::vector<PinBinding> bi, bo;
    for (const auto& [pin, net] : ins) bi.push_back({pin, b_.net(net)});
    for (const auto& [pin, net] : outs) bo.push_back({pin, b_.net(net)});
    try {
      b_.add_cell(name, type, bi, bo);
    } catch (const Error& e) {
      throw ParseError(e.what(), line, column);
    }
  }

  const std::vector<Module>& mods_;
  std::map<std::string, const Module*> by_name_;
  NetlistBuilder b_;
  std::size_t assign_counter_ = 0;
};

}  // namespace

Netlist parse_verilog(std::string_view text) {
  Parser p(lex(text));
  const auto mods = p.parse_file();
  return Elaborator(mods).run();
}

}  // namespace shieldroute

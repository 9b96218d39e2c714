#pragma once

// Behavioural Verilog-2001 backend.
//
// Each module becomes one file in two-process style: an `always @(*)` block
// computing every next-state value (`x_WIRE`, `state_L_WIRE`) from the
// current registers, and an `always @(posedge CLK)` block committing them.
// The control part of the combinational block is a rendering of the
// module's ControlPlan, so emitted hardware and interpreter share one
// definition of timing.

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "shdl/module.hpp"
#include "shdl/rtl_sources.hpp"
#include "shdl/schedule.hpp"

namespace shdl {

struct EmittedModule {
  std::string name;
  std::string header;
  std::string declarations;
  std::string combinational;
  std::string sequential;
  std::string instances;

  std::string text() const {
    return header + declarations + instances + combinational + sequential + "endmodule\n";
  }
};

namespace verilog {

inline std::string range(unsigned width) {
  return width == 1 ? std::string() : "[" + std::to_string(width - 1) + ":0] ";
}

inline std::string literal(unsigned width, std::uint64_t value) {
  return std::to_string(width) + "'d" + std::to_string(value);
}

// Verilog sizes most operators by context: `a + b` assigned to a wider
// target is evaluated at the target width and keeps the carry. Expressions
// here wrap at their own width, so any overflow-prone node narrower than its
// context is wrapped in a concatenation, which is self-determined.
inline std::string expr(const Expr& e, unsigned context);

inline bool overflow_prone(const Expr& e) {
  return e.visit([](const auto& n) -> bool {
    using T = std::decay_t<decltype(n)>;
    if constexpr (std::is_same_v<T, Expr::Binary>) {
      return n.op == BinOp::Add || n.op == BinOp::Sub || n.op == BinOp::Mul || n.op == BinOp::Shl;
    } else if constexpr (std::is_same_v<T, Expr::Unary>) {
      return true;
    } else {
      return false;
    }
  });
}

inline std::string expr(const Expr& e, unsigned context) {
  const unsigned w = e.width();
  const bool wrap = w < context && overflow_prone(e);
  const unsigned inner = wrap ? w : std::max(context, w);
  std::string s = e.visit([&](const auto& n) -> std::string {
    using T = std::decay_t<decltype(n)>;
    if constexpr (std::is_same_v<T, Expr::Ref>) {
      return n.signal.name();
    } else if constexpr (std::is_same_v<T, Expr::Const>) {
      return literal(n.width, n.value);
    } else if constexpr (std::is_same_v<T, Expr::Binary>) {
      std::string l, r;
      if (is_comparison(n.op)) {
        unsigned c = std::max(n.lhs.width(), n.rhs.width());
        l = expr(n.lhs, c);
        r = expr(n.rhs, c);
      } else if (n.op == BinOp::Shl || n.op == BinOp::Shr) {
        l = expr(n.lhs, inner);
        r = expr(n.rhs, n.rhs.width());
      } else {
        l = expr(n.lhs, inner);
        r = expr(n.rhs, inner);
      }
      return "(" + l + " " + symbol(n.op) + " " + r + ")";
    } else if constexpr (std::is_same_v<T, Expr::Unary>) {
      return "(" + std::string(symbol(n.op)) + expr(n.operand, inner) + ")";
    } else if constexpr (std::is_same_v<T, Expr::Index>) {
      return n.base.name() + "[" + expr(n.index, n.index.width()) + "]";
    } else if constexpr (std::is_same_v<T, Expr::Slice>) {
      return n.base.name() + "[" + std::to_string(n.hi) + ":" + std::to_string(n.lo) + "]";
    } else {
      return "(" + expr(n.cond, 1) + " ? " + expr(n.then_value, inner) + " : " + expr(n.else_value, inner) + ")";
    }
  });
  return wrap ? "{" + s + "}" : s;
}

// %d -> %0d, %x -> %h, with string escapes.
inline std::string display_format(const std::string& format) {
  std::string out;
  for (std::size_t i = 0; i < format.size(); ++i) {
    char c = format[i];
    if (c == '%' && i + 1 < format.size()) {
      char k = format[++i];
      out += k == 'd' ? "%0d" : k == 'x' ? "%h" : std::string("%") + k;
    } else if (c == '\\') {
      out += "\\\\";
    } else if (c == '"') {
      out += "\\\"";
    } else if (c == '\n') {
      out += "\\n";
    } else if (c == '\t') {
      out += "\\t";
    } else {
      out += c;
    }
  }
  return out;
}

class ModuleWriter {
 public:
  explicit ModuleWriter(const Module& m) : m_(m), plan_(m) {}

  EmittedModule emit() {
    EmittedModule out;
    out.name = m_.name;
    out.header = header();
    out.declarations = declarations();
    out.instances = instances();
    out.combinational = combinational();
    out.sequential = sequential();
    return out;
  }

 private:
  std::string header() const {
    std::string s = "module " + m_.name + " (\n  CLK, RST,\n  START, Done, get_done, Ready";
    std::vector<std::string> user;
    for (const auto& p : m_.ports) user.push_back(p.name);
    for (const auto& e : m_.external_ports()) user.push_back(e.name());
    if (!user.empty()) {
      s += ",\n  ";
      for (std::size_t i = 0; i < user.size(); ++i) s += (i ? ", " : "") + user[i];
    }
    return s + "\n  );\n";
  }

  std::string declarations() const {
    std::ostringstream os;
    os << "  input CLK;\n  input RST;\n  input START;\n  output Done;\n  input get_done;\n  output Ready;\n";
    for (const auto& p : m_.ports) {
      os << "  " << (p.dir == PortDir::In ? "input " : "output ") << range(p.width) << p.name << ";\n";
    }
    for (const auto& e : m_.external_ports()) {
      os << "  " << (external_port_dir(e) == PortDir::In ? "input " : "output ") << range(e.width()) << e.name()
         << ";\n";
    }
    os << "\n  reg Done = 1'b0;\n  reg Ready = 1'b1;\n";

    bool first = true;
    auto gap = [&] {
      if (first) os << "\n";
      first = false;
    };
    for (const auto& p : m_.ports) {
      const Signal& s = p.shadow;
      gap();
      os << "  reg " << range(s.width()) << s.name() << " = " << literal(s.width(), 0) << ";\n";
      if (p.dir == PortDir::Out) {
        os << "  reg " << range(s.width()) << wire_name(s) << ";\n";
        os << "  assign " << p.name << " = " << s.name() << ";\n";
      }
    }

    first = true;
    bool any_array = false;
    for (const auto& s : m_.signals) {
      if (s.kind() == SignalKind::Reg && !s.is_array()) {
        gap();
        os << "  reg " << range(s.width()) << s.name() << " = " << literal(s.width(), s.info().initial) << ";\n";
        os << "  reg " << range(s.width()) << wire_name(s) << ";\n";
      } else if (s.kind() == SignalKind::LoopVar) {
        gap();
        os << "  reg " << range(s.width()) << s.name() << " = " << literal(s.width(), 0) << ";\n";
        os << "  reg " << range(s.width()) << wire_name(s) << ";\n";
      } else if (s.kind() == SignalKind::Var) {
        gap();
        os << "  reg " << range(s.width()) << s.name() << ";\n";
      } else if (s.is_array()) {
        gap();
        any_array = true;
        os << "  reg " << range(s.width()) << s.name() << " [0:" << s.depth() - 1 << "];\n";
      }
    }
    if (any_array) os << "  integer " << kResetLoopIndex << ";\n";
    if (any_array) {
      os << "  initial begin\n";
      for (const auto& s : m_.signals) {
        if (!s.is_array()) continue;
        os << "    for (" << kResetLoopIndex << " = 0; " << kResetLoopIndex << " < " << s.depth() << "; "
           << kResetLoopIndex << " = " << kResetLoopIndex << " + 1) " << s.name() << "[" << kResetLoopIndex
           << "] = " << literal(s.width(), 0) << ";\n";
      }
      os << "  end\n";
    }
    for_each_array_write(m_, [&](const Signal& a, std::size_t n, const AssignStmt& st) {
      os << "  reg " << array_port_name(a, "we", n) << ";\n";
      os << "  reg " << range(st.target.index->width()) << array_port_name(a, "waddr", n) << ";\n";
      os << "  reg " << range(a.width()) << array_port_name(a, "wdata", n) << ";\n";
    });

    os << "\n";
    for (const auto& sec : m_.sections) {
      os << "  reg [1:0] " << state_name(sec) << " = 2'd0;\n";
      os << "  reg [1:0] " << state_wire_name(sec) << ";\n";
    }
    for (const auto& sec : m_.sections) os << "  reg " << fin_name(sec) << ";\n";

    bool any_display = false;
    for_each_display(m_, [&](const Section& leaf, std::size_t n, const DisplayStmt& d) {
      if (!any_display) os << "\n";
      any_display = true;
      os << "  reg " << display_flag_name(leaf, n) << ";\n";
      for (std::size_t k = 0; k < d.args.size(); ++k) {
        os << "  reg " << range(d.args[k].width()) << display_arg_name(leaf, n, k) << ";\n";
      }
    });

    for (const auto& inst : m_.instances) {
      bool any = false;
      for (const auto& w : inst.wires) {
        if (w.info().role == WireRole::External) continue;
        if (!any) os << "\n";
        any = true;
        os << "  " << (w.info().role == WireRole::Drivable ? "reg " : "wire ") << range(w.width()) << w.name()
           << ";\n";
      }
    }
    os << "\n";
    return os.str();
  }

  std::string instances() const {
    std::ostringstream os;
    for (const auto& inst : m_.instances) {
      std::vector<std::pair<std::string, std::string>> conns = {{"CLK", "CLK"}, {"RST", "RST"}};
      if (inst.kind == InstanceKind::Bram) conns.pop_back();
      for (const auto& w : inst.wires) conns.emplace_back(w.info().port, w.name());
      switch (inst.kind) {
        case InstanceKind::Module:
          os << "  " << inst.module->name << " " << inst.name << " (\n";
          break;
        case InstanceKind::Fifo:
          os << "  simple_fifo #(\n    .WIDTH(" << inst.width << "),\n    .DEPTH(" << inst.depth
             << "),\n    .ADDR_WIDTH(" << bits_for(inst.depth - 1) << "),\n    .COUNT_WIDTH(" << bits_for(inst.depth)
             << ")\n  ) " << inst.name << " (\n";
          break;
        case InstanceKind::Bram:
          os << "  simple_bram #(\n    .WIDTH(" << inst.width << "),\n    .DEPTH(" << inst.depth
             << "),\n    .ADDR_WIDTH(" << bits_for(inst.depth) << ")\n  ) " << inst.name << " (\n";
          break;
      }
      for (std::size_t i = 0; i < conns.size(); ++i) {
        os << "    ." << conns[i].first << "(" << conns[i].second << ")" << (i + 1 < conns.size() ? "," : "") << "\n";
      }
      os << "  );\n\n";
    }
    return os.str();
  }

  std::string pred(const Pred& p) const {
    switch (p.kind) {
      case Pred::Kind::True: return "1'b1";
      case Pred::Kind::Fin: return fin_name(m_.sections[p.section]);
      case Pred::Kind::StateIs: return state_name(m_.sections[p.section]) + " == " + std::to_string(p.value);
      case Pred::Kind::LoopLast: {
        const Section& s = m_.sections[p.section];
        return s.loop_var.name() + " == " + literal(s.loop_var.width(), s.loop_end - 1);
      }
      case Pred::Kind::WhileCond: return expr(*m_.sections[p.section].condition, 1);
      case Pred::Kind::And:
      case Pred::Kind::Or: {
        std::string s = "(";
        for (std::size_t i = 0; i < p.operands.size(); ++i) {
          if (i) s += p.kind == Pred::Kind::And ? " && " : " || ";
          s += pred(p.operands[i]);
        }
        return s + ")";
      }
      case Pred::Kind::Not: return "!(" + pred(p.operands.front()) + ")";
    }
    return "1'b0";
  }

  // Top-level rendering drops the outermost parentheses of a conjunction.
  std::string condition(const Pred& p) const {
    std::string s = pred(p);
    if ((p.kind == Pred::Kind::And || p.kind == Pred::Kind::Or) && s.size() > 2) return s.substr(1, s.size() - 2);
    return s;
  }

  void actions(std::ostringstream& os, const std::vector<Action>& acts, const std::string& pad) const {
    for (const Action& a : acts) {
      const Section& s = m_.sections[a.section];
      switch (a.kind) {
        case Action::Kind::SetState: os << pad << state_wire_name(s) << " = " << int(a.value) << ";\n"; break;
        case Action::Kind::SetFin: os << pad << fin_name(s) << " = 1'b1;\n"; break;
        case Action::Kind::InitLoopVar:
          os << pad << wire_name(s.loop_var) << " = " << literal(s.loop_var.width(), s.loop_begin) << ";\n";
          break;
        case Action::Kind::StepLoopVar:
          os << pad << wire_name(s.loop_var) << " = (" << s.loop_var.name() << " + "
             << literal(s.loop_var.width(), 1) << ");\n";
          break;
      }
    }
  }

  std::string combinational() const {
    std::ostringstream os;
    os << "  always @(*) begin\n";
    for (const auto& p : m_.ports) {
      if (p.dir == PortDir::Out) os << "    " << wire_name(p.shadow) << " = " << p.shadow.name() << ";\n";
    }
    for (const auto& s : m_.signals) {
      if ((s.kind() == SignalKind::Reg && !s.is_array()) || s.kind() == SignalKind::LoopVar) {
        os << "    " << wire_name(s) << " = " << s.name() << ";\n";
      }
    }
    for (const auto& sec : m_.sections) os << "    " << state_wire_name(sec) << " = " << state_name(sec) << ";\n";
    for (const auto& sec : m_.sections) os << "    " << fin_name(sec) << " = 1'b0;\n";
    for (const auto& s : m_.signals) {
      if (s.kind() == SignalKind::Var) os << "    " << s.name() << " = " << literal(s.width(), 0) << ";\n";
    }
    for (const auto& inst : m_.instances) {
      for (const auto& w : inst.wires) {
        if (w.info().role == WireRole::Drivable) os << "    " << w.name() << " = " << literal(w.width(), 0) << ";\n";
      }
    }
    for_each_array_write(m_, [&](const Signal& a, std::size_t n, const AssignStmt& st) {
      os << "    " << array_port_name(a, "we", n) << " = 1'b0;\n";
      os << "    " << array_port_name(a, "waddr", n) << " = " << literal(st.target.index->width(), 0) << ";\n";
      os << "    " << array_port_name(a, "wdata", n) << " = " << literal(a.width(), 0) << ";\n";
    });
    for_each_display(m_, [&](const Section& leaf, std::size_t n, const DisplayStmt& d) {
      os << "    " << display_flag_name(leaf, n) << " = 1'b0;\n";
      for (std::size_t k = 0; k < d.args.size(); ++k) {
        os << "    " << display_arg_name(leaf, n, k) << " = " << literal(d.args[k].width(), 0) << ";\n";
      }
    });

    std::map<std::string, std::size_t> array_port;
    for (SectionId id : plan_.leaves()) {
      const Section& leaf = m_.sections[id];
      os << "\n    if (" << state_name(leaf) << " == 1) begin\n";
      std::vector<std::string> terms;
      const Pred& gate = plan_.gate(id);
      if (gate.kind == Pred::Kind::And) {
        for (std::size_t i = 1; i < gate.operands.size(); ++i) terms.push_back(pred(gate.operands[i]));
      }
      for (const auto& g : leaf.guards) terms.push_back(expr(g, 1));
      std::string pad = "      ";
      if (!terms.empty()) {
        os << pad << "if (";
        for (std::size_t i = 0; i < terms.size(); ++i) os << (i ? " && " : "") << terms[i];
        os << ") begin\n";
        pad += "  ";
      }
      std::size_t dsp = 0;
      for (const auto& st : leaf.statements) {
        if (const auto* d = std::get_if<DisplayStmt>(&st)) {
          os << pad << display_flag_name(leaf, dsp) << " = 1'b1;\n";
          for (std::size_t k = 0; k < d->args.size(); ++k) {
            os << pad << display_arg_name(leaf, dsp, k) << " = " << expr(d->args[k], d->args[k].width()) << ";\n";
          }
          ++dsp;
          continue;
        }
        const auto& a = std::get<AssignStmt>(st);
        const Signal& t = a.target.signal;
        const unsigned ctx = std::max(t.width(), a.rhs.width());
        if (t.is_array()) {
          std::size_t n = array_port[t.name()]++;
          os << pad << array_port_name(t, "we", n) << " = 1'b1;\n";
          os << pad << array_port_name(t, "waddr", n) << " = " << expr(*a.target.index, a.target.index->width())
             << ";\n";
          os << pad << array_port_name(t, "wdata", n) << " = " << expr(a.rhs, ctx) << ";\n";
        } else {
          const bool direct = t.kind() == SignalKind::Var || t.kind() == SignalKind::Wire;
          os << pad << (direct ? t.name() : wire_name(t)) << " = " << expr(a.rhs, ctx) << ";\n";
        }
      }
      actions(os, plan_.on_fire(id), pad);
      if (!terms.empty()) os << "      end\n";
      os << "    end\n";
    }

    for (const Rule& r : plan_.rules()) {
      os << "\n    if (" << condition(r.when) << ") begin\n";
      actions(os, r.then, "      ");
      os << "    end\n";
    }

    os << "\n    if (START && Ready) begin\n";
    actions(os, plan_.reset_all(), "      ");
    actions(os, plan_.activation(0), "      ");
    os << "    end\n";
    os << "  end\n\n";
    return os.str();
  }

  std::string sequential() const {
    std::ostringstream os;
    os << "  always @(posedge CLK) begin\n    if (RST) begin\n";
    os << "      Done <= 1'b0;\n      Ready <= 1'b1;\n";
    for (const auto& p : m_.ports) {
      os << "      " << p.shadow.name() << " <= " << literal(p.width, 0) << ";\n";
    }
    for (const auto& s : m_.signals) {
      if (s.kind() == SignalKind::Reg && !s.is_array()) {
        os << "      " << s.name() << " <= " << literal(s.width(), s.info().initial) << ";\n";
      } else if (s.kind() == SignalKind::LoopVar) {
        os << "      " << s.name() << " <= " << literal(s.width(), 0) << ";\n";
      } else if (s.is_array()) {
        os << "      for (" << kResetLoopIndex << " = 0; " << kResetLoopIndex << " < " << s.depth() << "; "
           << kResetLoopIndex << " = " << kResetLoopIndex << " + 1) " << s.name() << "[" << kResetLoopIndex
           << "] <= " << literal(s.width(), 0) << ";\n";
      }
    }
    for (const auto& sec : m_.sections) os << "      " << state_name(sec) << " <= 2'd0;\n";
    os << "    end else begin\n";
    for (const auto& p : m_.ports) {
      if (p.dir == PortDir::Out) os << "      " << p.shadow.name() << " <= " << wire_name(p.shadow) << ";\n";
    }
    for (const auto& s : m_.signals) {
      if ((s.kind() == SignalKind::Reg && !s.is_array()) || s.kind() == SignalKind::LoopVar) {
        os << "      " << s.name() << " <= " << wire_name(s) << ";\n";
      }
    }
    for (const auto& sec : m_.sections) os << "      " << state_name(sec) << " <= " << state_wire_name(sec) << ";\n";
    for_each_array_write(m_, [&](const Signal& a, std::size_t n, const AssignStmt&) {
      os << "      if (" << array_port_name(a, "we", n) << ") " << a.name() << "[" << array_port_name(a, "waddr", n)
         << "] <= " << array_port_name(a, "wdata", n) << ";\n";
    });
    os << "      if (START && Ready) begin\n";
    for (const auto& p : m_.ports) {
      if (p.dir == PortDir::In) os << "        " << p.shadow.name() << " <= " << p.name << ";\n";
    }
    os << "        Ready <= 1'b0;\n      end\n";
    os << "      if (" << fin_name(m_.root()) << ") Done <= 1'b1;\n";
    os << "      if (get_done && Done) begin\n        Done <= 1'b0;\n        Ready <= 1'b1;\n      end\n";
    for_each_display(m_, [&](const Section& leaf, std::size_t n, const DisplayStmt& d) {
      os << "      if (" << display_flag_name(leaf, n) << ") $display(\"" << display_format(d.format) << "\"";
      for (std::size_t k = 0; k < d.args.size(); ++k) os << ", " << display_arg_name(leaf, n, k);
      os << ");\n";
    });
    os << "    end\n  end\n\n";
    return os.str();
  }

  const Module& m_;
  ControlPlan plan_;
};

}  // namespace verilog

inline EmittedModule emit_module(const Module& m) { return verilog::ModuleWriter(m).emit(); }
inline std::string emit_verilog(const Module& m) { return emit_module(m).text(); }

// Support files needed by a hierarchy, by file name.
inline std::map<std::string, std::string> support_files(const ModulePtr& top) {
  std::map<std::string, std::string> out;
  for (const auto& m : hierarchy_postorder(top)) {
    for (const auto& inst : m->instances) {
      if (inst.kind == InstanceKind::Fifo) out["simple_fifo.v"] = rtl::kSimpleFifo;
      if (inst.kind == InstanceKind::Bram) out["simple_bram.v"] = rtl::kSimpleBram;
    }
  }
  return out;
}

// File name and contents for every module of the hierarchy, children first,
// followed by the support files it uses.
inline std::vector<std::pair<std::string, std::string>> emit_hierarchy_files(const ModulePtr& top) {
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& m : hierarchy_postorder(top)) files.emplace_back(m->name + ".v", emit_verilog(*m));
  for (auto& [name, text] : support_files(top)) files.emplace_back(name, text);
  return files;
}

inline std::vector<std::filesystem::path> emit_hierarchy(const ModulePtr& top, const std::filesystem::path& outdir) {
  std::error_code ec;
  std::filesystem::create_directories(outdir, ec);
  if (ec) throw Error("cannot create output directory '" + outdir.string() + "': " + ec.message());
  std::vector<std::filesystem::path> written;
  for (const auto& [name, text] : emit_hierarchy_files(top)) {
    auto path = outdir / name;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open '" + path.string() + "' for writing");
    f << text;
    f.close();
    if (!f) throw Error("failed writing '" + path.string() + "'");
    written.push_back(path);
  }
  return written;
}

}  // namespace shdl

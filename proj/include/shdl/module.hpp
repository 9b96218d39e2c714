#pragma once

// Frozen hardware modules, their instances, and the names the Verilog backend
// derives from them.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "shdl/expr.hpp"
#include "shdl/section.hpp"

namespace shdl {

class Module;
using ModulePtr = std::shared_ptr<const Module>;

enum class PortDir { In, Out };

// A registered user port. `shadow` is the register the module body actually
// reads (`<name>_inreg`) or writes (`<name>_outreg`).
struct Port {
  std::string name;
  unsigned width = 1;
  PortDir dir = PortDir::In;
  Signal shadow;
};

enum class InstanceKind { Module, Fifo, Bram };

// Which FIFO side, if any, is exposed on the boundary of the owning module.
enum class FifoKind {
  Internal,  // both sides used inside the module
  Input,     // written from outside, read by the module
  Output,    // written by the module, read from outside
};

struct Instance {
  std::string name;
  InstanceKind kind = InstanceKind::Module;
  ModulePtr module;  // InstanceKind::Module only
  unsigned width = 0;
  std::uint64_t depth = 0;
  FifoKind fifo_kind = FifoKind::Internal;
  std::vector<Signal> wires;  // parent-side wires, in port order

  const Signal& wire(std::string_view port) const {
    for (const auto& w : wires) {
      if (w.info().port == port) return w;
    }
    throw ElaborationError("instance '" + name + "' has no port '" + std::string(port) + "'");
  }
};

inline constexpr const char* kInterfaceSignals[] = {"CLK", "RST", "START", "Done", "get_done", "Ready"};
inline constexpr const char* kRootLabel = "st";

// Standard FIFO / BRAM port names.
inline constexpr const char* kFifoPorts[] = {"read_data",  "read_enable",  "read_ready",
                                             "write_data", "write_enable", "write_ready"};
inline constexpr const char* kBramPorts[] = {"ADDR", "DIN", "DOUT", "WE"};

class Module {
 public:
  std::uint64_t id = 0;
  std::string name;
  std::map<std::string, std::int64_t> params;
  std::vector<Port> ports;
  std::vector<Signal> signals;  // every signal, indexed by SignalInfo::index
  std::vector<Instance> instances;
  std::vector<Section> sections;  // sections[0] is the implicit serial root
  std::vector<std::string> warnings;

  const Section& root() const { return sections.front(); }
  const Section& section(SectionId id) const { return sections.at(id); }

  const Signal* find_signal(std::string_view n) const {
    for (const auto& s : signals) {
      if (s.name() == n) return &s;
    }
    return nullptr;
  }

  const Port* find_port(std::string_view n) const {
    for (const auto& p : ports) {
      if (p.name == n) return &p;
    }
    return nullptr;
  }

  const Instance* find_instance(std::string_view n) const {
    for (const auto& i : instances) {
      if (i.name == n) return &i;
    }
    return nullptr;
  }

  std::optional<SectionId> find_section(std::string_view label) const {
    for (SectionId i = 0; i < sections.size(); ++i) {
      if (sections[i].label == label) return i;
    }
    return std::nullopt;
  }

  // FIFO-side signals exposed as extra module ports, in declaration order.
  std::vector<Signal> external_ports() const {
    std::vector<Signal> out;
    for (const auto& inst : instances) {
      for (const auto& w : inst.wires) {
        if (w.info().role == WireRole::External) out.push_back(w);
      }
    }
    return out;
  }
};

// Direction of an external FIFO port as seen from the owning module.
inline PortDir external_port_dir(const Signal& s) {
  const std::string& p = s.info().port;
  return (p == "write_data" || p == "write_enable" || p == "read_enable") ? PortDir::In : PortDir::Out;
}

// ---------------------------------------------------------------------------
// Names derived for emission. Elaboration checks these against user names.

inline std::string wire_name(const Signal& s) { return s.name() + "_WIRE"; }
inline std::string state_name(const Section& s) { return "state_" + s.label; }
inline std::string state_wire_name(const Section& s) { return "state_" + s.label + "_WIRE"; }
inline std::string fin_name(const Section& s) { return "fin_" + s.label; }
inline std::string array_port_name(const Signal& a, const char* what, std::size_t n) {
  return a.name() + "_" + what + "_" + std::to_string(n);
}
inline std::string display_flag_name(const Section& leaf, std::size_t n) {
  return "dsp_" + leaf.label + "_" + std::to_string(n);
}
inline std::string display_arg_name(const Section& leaf, std::size_t n, std::size_t k) {
  return display_flag_name(leaf, n) + "_" + std::to_string(k);
}
inline constexpr const char* kResetLoopIndex = "shdl_k";

// Signals that carry a `_WIRE` next-state companion.
inline bool has_next_state(const Signal& s) {
  return !s.is_array() && (s.kind() == SignalKind::Reg || s.kind() == SignalKind::OutPort ||
                           s.kind() == SignalKind::LoopVar);
}

// Calls fn(leaf, statement index, display) for every display statement.
template <typename Fn>
void for_each_display(const Module& m, Fn&& fn) {
  for (const auto& sec : m.sections) {
    std::size_t n = 0;
    for (const auto& st : sec.statements) {
      if (auto* d = std::get_if<DisplayStmt>(&st)) fn(sec, n++, *d);
    }
  }
}

// Calls fn(array, port number, assign) for every array write, numbering the
// write ports of each array in tree order.
template <typename Fn>
void for_each_array_write(const Module& m, Fn&& fn) {
  std::map<std::string, std::size_t> next;
  for (const auto& sec : m.sections) {
    for (const auto& st : sec.statements) {
      auto* a = std::get_if<AssignStmt>(&st);
      if (a && a->target.signal.is_array()) fn(a->target.signal, next[a->target.signal.name()]++, *a);
    }
  }
}

// Every identifier the emitter generates for `m` beyond user signal names.
inline std::vector<std::string> generated_names(const Module& m) {
  std::vector<std::string> out;
  for (const auto& s : m.signals) {
    if (has_next_state(s)) out.push_back(wire_name(s));
  }
  for (const auto& sec : m.sections) {
    out.push_back(state_name(sec));
    out.push_back(state_wire_name(sec));
    out.push_back(fin_name(sec));
  }
  bool any_array = false;
  for_each_array_write(m, [&](const Signal& a, std::size_t n, const AssignStmt&) {
    out.push_back(array_port_name(a, "we", n));
    out.push_back(array_port_name(a, "waddr", n));
    out.push_back(array_port_name(a, "wdata", n));
  });
  for (const auto& s : m.signals) any_array = any_array || s.is_array();
  if (any_array) out.push_back(kResetLoopIndex);
  for_each_display(m, [&](const Section& leaf, std::size_t n, const DisplayStmt& d) {
    out.push_back(display_flag_name(leaf, n));
    for (std::size_t k = 0; k < d.args.size(); ++k) out.push_back(display_arg_name(leaf, n, k));
  });
  return out;
}

inline bool is_verilog_keyword(std::string_view s) {
  static const std::set<std::string_view> kw = {
      "always", "and", "assign", "automatic", "begin", "buf", "bufif0", "bufif1", "case",
      "casex", "casez", "cell", "cmos", "config", "deassign", "default", "defparam", "design",
      "disable", "edge", "else", "end", "endcase", "endconfig", "endfunction", "endgenerate",
      "endmodule", "endprimitive", "endspecify", "endtable", "endtask", "event", "for", "force",
      "forever", "fork", "function", "generate", "genvar", "highz0", "highz1", "if", "ifnone",
      "incdir", "include", "initial", "inout", "input", "instance", "integer", "join", "large",
      "liblist", "library", "localparam", "macromodule", "medium", "module", "nand", "negedge",
      "nmos", "nor", "noshowcancelled", "not", "notif0", "notif1", "or", "output", "parameter",
      "pmos", "posedge", "primitive", "pull0", "pull1", "pulldown", "pullup",
      "pulsestyle_onevent", "pulsestyle_ondetect", "rcmos", "real", "realtime", "reg", "release",
      "repeat", "rnmos", "rpmos", "rtran", "rtranif0", "rtranif1", "scalared", "showcancelled",
      "signed", "small", "specify", "specparam", "strong0", "strong1", "supply0", "supply1",
      "table", "task", "time", "tran", "tranif0", "tranif1", "tri", "tri0", "tri1", "triand",
      "trior", "trireg", "unsigned", "use", "uwire", "vectored", "wait", "wand", "weak0", "weak1",
      "while", "wire", "wor", "xnor", "xor",
      // SystemVerilog words that commonly break mixed tool flows
      "logic", "bit", "byte", "int", "shortint", "longint"};
  return kw.count(s) != 0;
}

inline bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
  if (!alpha(s[0])) return false;
  return std::all_of(s.begin() + 1, s.end(),
                     [&](char c) { return alpha(c) || (c >= '0' && c <= '9'); });
}

// ---------------------------------------------------------------------------
// Hierarchy

// Distinct modules reachable from `top`, children before parents.
inline std::vector<ModulePtr> hierarchy_postorder(const ModulePtr& top) {
  std::vector<ModulePtr> order;
  std::set<const Module*> seen;
  std::map<std::string, const Module*> by_name;
  std::function<void(const ModulePtr&)> visit = [&](const ModulePtr& m) {
    if (!seen.insert(m.get()).second) return;
    auto [it, fresh] = by_name.emplace(m->name, m.get());
    if (!fresh && it->second != m.get()) {
      throw ElaborationError("two different modules named '" + m->name + "' in one hierarchy");
    }
    for (const auto& inst : m->instances) {
      if (inst.kind == InstanceKind::Module) visit(inst.module);
    }
    order.push_back(m);
  };
  visit(top);
  return order;
}

// Frozen modules keyed by name.
class ModuleLibrary {
 public:
  void add(const ModulePtr& m) {
    auto [it, fresh] = modules_.emplace(m->name, m);
    if (!fresh && it->second != m) {
      throw ElaborationError("module '" + m->name + "' is already defined");
    }
  }
  ModulePtr find(const std::string& name) const {
    auto it = modules_.find(name);
    return it == modules_.end() ? nullptr : it->second;
  }
  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [n, _] : modules_) out.push_back(n);
    return out;
  }

 private:
  std::map<std::string, ModulePtr> modules_;
};

}  // namespace shdl

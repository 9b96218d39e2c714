#pragma once

// Elaboration: describing one module at a time.
//
//   ModuleBuilder b("add_sub");
//   auto a = reg_in("a", 32);
//   ...
//   {
//     LeafSection add("add");
//     assign(tmp, a + b);
//   }
//   ModulePtr m = b.finish();
//
// A builder installs itself as the current elaboration context of the calling
// thread; the free functions and section scopes below operate on it. Host
// language control flow (loops, conditionals, helper functions) runs at
// elaboration time and simply emits more statements or sections.

#include <atomic>
#include <cstdint>
#include <exception>
#include <initializer_list>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "shdl/expr.hpp"
#include "shdl/module.hpp"
#include "shdl/section.hpp"

namespace shdl {

class ModuleBuilder;

namespace detail {
inline thread_local ModuleBuilder* current_builder = nullptr;
inline std::uint64_t next_module_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter++;
}
}  // namespace detail

enum class DeclKind { Reg, Var, RegIn, RegOut, RegArray };

// Handle to a submodule instance inside the module being elaborated.
class InstanceRef {
 public:
  InstanceRef() = default;
  InstanceRef(std::size_t index, std::string name, ModulePtr module, std::uint64_t owner)
      : index_(index), name_(std::move(name)), module_(std::move(module)), owner_(owner) {}

  const std::string& name() const { return name_; }
  const ModulePtr& module() const { return module_; }
  std::size_t index() const { return index_; }
  std::uint64_t owner() const { return owner_; }

  // Leaf-context operations on the current builder.
  void start(const std::map<std::string, Expr>& bindings) const;
  Expr get(const std::string& port) const;

 private:
  std::size_t index_ = 0;
  std::string name_;
  ModulePtr module_;
  std::uint64_t owner_ = 0;
};

class ModuleBuilder {
 public:
  explicit ModuleBuilder(std::string name, std::map<std::string, std::int64_t> params = {})
      : m_(std::make_unique<Module>()) {
    if (detail::current_builder != nullptr) {
      throw ElaborationError("cannot begin module '" + name + "' while module '" +
                             detail::current_builder->name() + "' is still open");
    }
    check_identifier(name, "module name");
    m_->id = detail::next_module_id();
    m_->name = std::move(name);
    m_->params = std::move(params);
    Section root;
    root.label = kRootLabel;
    root.kind = SectionKind::Serial;
    m_->sections.push_back(std::move(root));
    labels_.insert(kRootLabel);
    for (const char* n : kInterfaceSignals) names_.insert(n);
    detail::current_builder = this;
  }

  ~ModuleBuilder() {
    if (detail::current_builder == this) detail::current_builder = nullptr;
  }

  ModuleBuilder(const ModuleBuilder&) = delete;
  ModuleBuilder& operator=(const ModuleBuilder&) = delete;

  static ModuleBuilder& current() {
    if (detail::current_builder == nullptr) throw ElaborationError("no module is being elaborated");
    return *detail::current_builder;
  }
  static ModuleBuilder* current_or_null() { return detail::current_builder; }

  const std::string& name() const { return frozen_ ? frozen_->name : m_->name; }
  bool frozen() const { return frozen_ != nullptr; }
  const ModulePtr& module() const { return frozen_; }

  void add_parameter(const std::string& key, std::int64_t value) {
    mutable_module().params[key] = value;
  }
  std::int64_t parameter(const std::string& key) const {
    const auto& params = frozen_ ? frozen_->params : m_->params;
    auto it = params.find(key);
    if (it == params.end()) throw ElaborationError("module '" + name() + "' has no parameter '" + key + "'");
    return it->second;
  }

  // ------------------------------------------------------------------ declarations

  Signal declare(DeclKind kind, const std::string& name, unsigned width, std::uint64_t extra = 0) {
    switch (kind) {
      case DeclKind::Reg: return reg(name, width, extra);
      case DeclKind::Var: return var(name, width);
      case DeclKind::RegIn: return reg_in(name, width);
      case DeclKind::RegOut: return reg_out(name, width);
      case DeclKind::RegArray: return reg_array(name, width, extra);
    }
    throw ElaborationError("unknown declaration kind");
  }

  Signal reg(const std::string& name, unsigned width, std::uint64_t initial = 0) {
    if ((initial & ~width_mask(check_width(width, name))) != 0) {
      throw ElaborationError("initial value of '" + name + "' does not fit in " + std::to_string(width) + " bits");
    }
    SignalInfo info;
    info.name = name;
    info.width = width;
    info.kind = SignalKind::Reg;
    info.initial = initial;
    return add_signal(std::move(info));
  }

  Signal var(const std::string& name, unsigned width) {
    SignalInfo info;
    info.name = name;
    info.width = check_width(width, name);
    info.kind = SignalKind::Var;
    return add_signal(std::move(info));
  }

  // Input port `name`; the body reads the copy `<name>_inreg` latched on START.
  Signal reg_in(const std::string& name, unsigned width) {
    check_width(width, name);
    claim_name(name);
    SignalInfo info;
    info.name = name + "_inreg";
    info.width = width;
    info.kind = SignalKind::InPort;
    Signal shadow = add_signal(std::move(info));
    mutable_module().ports.push_back(Port{name, width, PortDir::In, shadow});
    return shadow;
  }

  // Output port `name` driven by the register `<name>_outreg`.
  Signal reg_out(const std::string& name, unsigned width) {
    check_width(width, name);
    claim_name(name);
    SignalInfo info;
    info.name = name + "_outreg";
    info.width = width;
    info.kind = SignalKind::OutPort;
    Signal shadow = add_signal(std::move(info));
    mutable_module().ports.push_back(Port{name, width, PortDir::Out, shadow});
    return shadow;
  }

  Signal reg_array(const std::string& name, unsigned width, std::uint64_t depth) {
    check_width(width, name);
    if (depth == 0) throw ElaborationError("register array '" + name + "' needs depth >= 1");
    SignalInfo info;
    info.name = name;
    info.width = width;
    info.kind = SignalKind::Reg;
    info.depth = depth;
    return add_signal(std::move(info));
  }

  // ------------------------------------------------------------------ sections

  SectionId open_section(SectionKind kind, const std::string& label) {
    if (kind == SectionKind::ForLoop || kind == SectionKind::WhileLoop) {
      throw ElaborationError("loop sections are opened with open_for / open_while");
    }
    return push_section(kind, label);
  }

  SectionId open_for(const std::string& label, const std::string& var_name, std::uint64_t begin,
                     std::uint64_t end) {
    if (begin >= end) {
      throw ElaborationError("for-loop '" + label + "' needs begin < end (got " + std::to_string(begin) +
                             ".." + std::to_string(end) + ")");
    }
    mutable_module();
    check_new_label(label);
    SignalInfo info;
    info.name = var_name;
    info.width = bits_for(end);
    info.kind = SignalKind::LoopVar;
    Signal v = add_signal(std::move(info));
    SectionId id = push_section(SectionKind::ForLoop, label);
    Section& s = m_->sections[id];
    s.loop_var = v;
    s.loop_begin = begin;
    s.loop_end = end;
    return id;
  }

  SectionId open_while(const std::string& label, const Expr& condition) {
    mutable_module();
    check_condition(condition, "while condition");
    SectionId id = push_section(SectionKind::WhileLoop, label);
    m_->sections[id].condition = condition;
    return id;
  }

  void close_section(SectionId id) {
    mutable_module();
    if (open_.empty() || open_.back() != id) {
      throw ElaborationError("section '" + label_of(id) + "' closed out of order" +
                             (open_.empty() ? std::string() : " (innermost open is '" + label_of(open_.back()) + "')"));
    }
    const Section& s = m_->sections[id];
    if (!s.is_leaf() && s.children.empty()) {
      throw ElaborationError(std::string(to_string(s.kind)) + " section '" + s.label + "' has no children");
    }
    open_.pop_back();
  }

  // Closes `id` from a scope destructor; tolerates unwinding and records
  // misuse instead of throwing.
  void close_from_scope(SectionId id) noexcept {
    if (frozen_) return;
    auto it = std::find(open_.begin(), open_.end(), id);
    if (it == open_.end()) return;
    if (std::next(it) != open_.end() && std::uncaught_exceptions() == 0) {
      scope_error_ = "section '" + m_->sections[id].label + "' went out of scope while a nested section was open";
    }
    const Section& s = m_->sections[id];
    if (!s.is_leaf() && s.children.empty() && std::uncaught_exceptions() == 0) {
      scope_error_ = std::string(to_string(s.kind)) + " section '" + s.label + "' has no children";
    }
    open_.erase(it, open_.end());
  }

  std::optional<SectionId> innermost() const {
    if (open_.empty()) return std::nullopt;
    return open_.back();
  }

  const Section& section(SectionId id) const {
    return frozen_ ? frozen_->sections.at(id) : m_->sections.at(id);
  }

  // ------------------------------------------------------------------ statements

  void assign(const Target& target, const Expr& rhs) {
    SectionId leaf = open_leaf("assignment");
    check_target(target);
    check_readable(rhs, leaf, false, "right-hand side");
    if (target.index) check_readable(*target.index, leaf, false, "array index");
    m_->sections[leaf].statements.push_back(AssignStmt{target, rhs});
  }

  void add_guard(const Expr& condition) {
    SectionId leaf = open_leaf("guard");
    check_condition(condition, "guard");
    check_readable(condition, leaf, true, "guard");
    m_->sections[leaf].guards.push_back(condition);
  }

  void display(const std::string& format, std::vector<Expr> args) {
    SectionId leaf = open_leaf("display");
    auto n = count_placeholders(format);
    if (!n) throw ElaborationError("display format '" + format + "' has an unsupported conversion (use %d, %x, %%)");
    if (*n != args.size()) {
      throw ElaborationError("display format '" + format + "' expects " + std::to_string(*n) + " argument(s), got " +
                             std::to_string(args.size()));
    }
    for (const auto& a : args) check_readable(a, leaf, false, "display argument");
    m_->sections[leaf].statements.push_back(DisplayStmt{format, std::move(args)});
  }

  // ------------------------------------------------------------------ hierarchy

  InstanceRef instantiate(const ModulePtr& child, const std::string& instance_name) {
    mutable_module();
    if (!child) throw ElaborationError("cannot instantiate an empty module handle");
    if (child->name == m_->name) {
      throw ElaborationError("module '" + m_->name + "' cannot instantiate itself");
    }
    Instance inst;
    inst.name = instance_name;
    inst.kind = InstanceKind::Module;
    inst.module = child;
    claim_name(instance_name);
    std::size_t index = m_->instances.size();
    auto add = [&](const std::string& port, unsigned width, bool drivable) {
      inst.wires.push_back(make_wire(instance_name + "_" + port, width,
                                     drivable ? WireRole::Drivable : WireRole::Readable, index, port));
    };
    add("START", 1, true);
    add("Done", 1, false);
    add("get_done", 1, true);
    add("Ready", 1, false);
    for (const auto& p : child->ports) add(p.name, p.width, p.dir == PortDir::In);
    for (const auto& e : child->external_ports()) add(e.name(), e.width(), external_port_dir(e) == PortDir::In);
    m_->instances.push_back(std::move(inst));
    return InstanceRef(index, instance_name, child, m_->id);
  }

  InstanceRef instantiate(const ModuleBuilder& child, const std::string& instance_name) {
    if (!child.frozen()) {
      throw ElaborationError("module '" + child.name() + "' must be finished before it is instantiated");
    }
    return instantiate(child.module(), instance_name);
  }

  void start_instance(const InstanceRef& ref, const std::map<std::string, Expr>& bindings) {
    SectionId leaf = open_leaf("start");
    const Instance& inst = instance_of(ref);
    for (const auto& [port, _] : bindings) {
      const Port* p = inst.module->find_port(port);
      if (p == nullptr || p->dir != PortDir::In) {
        throw ElaborationError("module '" + inst.module->name + "' has no input port '" + port + "'");
      }
    }
    for (const auto& p : inst.module->ports) {
      if (p.dir == PortDir::In && bindings.count(p.name) == 0) {
        throw ElaborationError("start of '" + inst.name + "' is missing input '" + p.name + "'");
      }
    }
    if (!leaf_uses_[leaf].insert("start:" + inst.name).second) {
      throw ElaborationError("instance '" + inst.name + "' is started twice in leaf '" + m_->sections[leaf].label + "'");
    }
    add_guard(Expr(inst.wire("Ready")) == constant(1, 1));
    for (const auto& [port, value] : bindings) {
      const Signal& w = inst.wire(port);
      if (value.width() != w.width()) {
        m_->warnings.push_back("start of '" + inst.name + "': input '" + port + "' is " + std::to_string(w.width()) +
                               " bits, bound expression is " + std::to_string(value.width()) + " bits");
      }
      drive(leaf, w, value);
    }
    drive(leaf, inst.wire("START"), constant(1, 1));
  }

  Expr get_result(const InstanceRef& ref, const std::string& port) {
    SectionId leaf = open_leaf("get");
    const Instance& inst = instance_of(ref);
    const Port* p = inst.module->find_port(port);
    if (p == nullptr) throw ElaborationError("module '" + inst.module->name + "' has no port '" + port + "'");
    if (p->dir != PortDir::Out) {
      throw ElaborationError("port '" + port + "' of module '" + inst.module->name + "' is an input");
    }
    if (leaf_uses_[leaf].insert("get:" + inst.name).second) {
      add_guard(Expr(inst.wire("Done")) == constant(1, 1));
      drive(leaf, inst.wire("get_done"), constant(1, 1));
    }
    return Expr(inst.wire(port));
  }

  // ------------------------------------------------------------------ FIFO / BRAM

  std::size_t add_fifo(const std::string& name, unsigned width, std::uint64_t depth, FifoKind kind) {
    mutable_module();
    check_width(width, name);
    if (depth == 0) throw ElaborationError("FIFO '" + name + "' needs depth >= 1");
    claim_name(name);
    Instance inst;
    inst.name = name;
    inst.kind = InstanceKind::Fifo;
    inst.width = width;
    inst.depth = depth;
    inst.fifo_kind = kind;
    std::size_t index = m_->instances.size();
    for (const char* port : kFifoPorts) {
      std::string p = port;
      bool read_side = p.rfind("read_", 0) == 0;
      unsigned w = (p == "read_data" || p == "write_data") ? width : 1;
      WireRole role;
      if ((kind == FifoKind::Input && !read_side) || (kind == FifoKind::Output && read_side)) {
        role = WireRole::External;
      } else {
        role = (p == "read_enable" || p == "write_data" || p == "write_enable") ? WireRole::Drivable
                                                                                 : WireRole::Readable;
      }
      inst.wires.push_back(make_wire(name + "_" + p, w, role, index, p));
    }
    m_->instances.push_back(std::move(inst));
    return index;
  }

  std::size_t add_bram(const std::string& name, unsigned width, std::uint64_t depth) {
    mutable_module();
    check_width(width, name);
    if (depth == 0) throw ElaborationError("BRAM '" + name + "' needs depth >= 1");
    claim_name(name);
    Instance inst;
    inst.name = name;
    inst.kind = InstanceKind::Bram;
    inst.width = width;
    inst.depth = depth;
    std::size_t index = m_->instances.size();
    inst.wires.push_back(make_wire(name + "_ADDR", bits_for(depth), WireRole::Drivable, index, "ADDR"));
    inst.wires.push_back(make_wire(name + "_DIN", width, WireRole::Drivable, index, "DIN"));
    inst.wires.push_back(make_wire(name + "_DOUT", width, WireRole::Readable, index, "DOUT"));
    inst.wires.push_back(make_wire(name + "_WE", 1, WireRole::Drivable, index, "WE"));
    m_->instances.push_back(std::move(inst));
    return index;
  }

  Expr fifo_read(std::size_t index) {
    SectionId leaf = open_leaf("FIFO read");
    const Instance& f = checked_instance(index, InstanceKind::Fifo);
    if (f.fifo_kind == FifoKind::Output) throw ElaborationError("FIFO '" + f.name + "' is read from outside the module");
    if (!leaf_uses_[leaf].insert("read:" + f.name).second) {
      throw ElaborationError("FIFO '" + f.name + "' is read twice in leaf '" + m_->sections[leaf].label + "'");
    }
    add_guard(Expr(f.wire("read_ready")) == constant(1, 1));
    drive(leaf, f.wire("read_enable"), constant(1, 1));
    return Expr(f.wire("read_data"));
  }

  void fifo_write(std::size_t index, const Expr& data) {
    SectionId leaf = open_leaf("FIFO write");
    const Instance& f = checked_instance(index, InstanceKind::Fifo);
    if (f.fifo_kind == FifoKind::Input) throw ElaborationError("FIFO '" + f.name + "' is written from outside the module");
    if (!leaf_uses_[leaf].insert("write:" + f.name).second) {
      throw ElaborationError("FIFO '" + f.name + "' is written twice in leaf '" + m_->sections[leaf].label + "'");
    }
    add_guard(Expr(f.wire("write_ready")) == constant(1, 1));
    drive(leaf, f.wire("write_data"), data);
    drive(leaf, f.wire("write_enable"), constant(1, 1));
  }

  void bram_write(std::size_t index, const Expr& addr, const Expr& data) {
    SectionId leaf = open_leaf("BRAM write");
    const Instance& b = checked_instance(index, InstanceKind::Bram);
    claim_bram_port(leaf, b);
    drive(leaf, b.wire("ADDR"), addr);
    drive(leaf, b.wire("DIN"), data);
    drive(leaf, b.wire("WE"), constant(1, 1));
  }

  void bram_read_issue(std::size_t index, const Expr& addr) {
    SectionId leaf = open_leaf("BRAM read");
    const Instance& b = checked_instance(index, InstanceKind::Bram);
    claim_bram_port(leaf, b);
    drive(leaf, b.wire("ADDR"), addr);
    bram_issued_.insert(index);
  }

  Expr bram_read_data(std::size_t index) {
    const Instance& b = checked_instance(index, InstanceKind::Bram);
    bram_consumed_.insert(index);
    return Expr(b.wire("DOUT"));
  }

  // ------------------------------------------------------------------ freeze

  ModulePtr finish() {
    mutable_module();
    if (!open_.empty()) throw ElaborationError("module '" + m_->name + "' ended with section '" + label_of(open_.back()) + "' still open");
    if (!scope_error_.empty()) throw ElaborationError(scope_error_);
    if (m_->root().children.empty()) throw ElaborationError("module '" + m_->name + "' has no sections");
    for (std::size_t b : bram_consumed_) {
      if (bram_issued_.count(b) == 0) {
        throw ElaborationError("BRAM '" + m_->instances[b].name + "' read data is consumed but no read is ever issued");
      }
    }
    std::set<std::string> all(names_.begin(), names_.end());
    for (const auto& n : generated_names(*m_)) {
      if (!all.insert(n).second) {
        throw ElaborationError("generated name '" + n + "' in module '" + m_->name + "' collides with another name");
      }
    }
    frozen_ = ModulePtr(std::move(m_));
    if (detail::current_builder == this) detail::current_builder = nullptr;
    return frozen_;
  }

  ModulePtr finish(ModuleLibrary& library) {
    ModulePtr m = finish();
    library.add(m);
    return m;
  }

 private:
  Module& mutable_module() {
    if (frozen_) throw ElaborationError("module '" + frozen_->name + "' is frozen");
    return *m_;
  }

  std::string label_of(SectionId id) const { return m_->sections.at(id).label; }

  static unsigned check_width(unsigned width, const std::string& name) {
    if (width == 0 || width > kMaxWidth) {
      throw ElaborationError("signal '" + name + "' width " + std::to_string(width) + " outside 1.." +
                             std::to_string(kMaxWidth));
    }
    return width;
  }

  static void check_identifier(const std::string& name, const char* what) {
    if (!is_identifier(name)) throw ElaborationError(std::string(what) + " '" + name + "' is not a valid identifier");
    if (is_verilog_keyword(name)) throw ElaborationError(std::string(what) + " '" + name + "' is a reserved word");
  }

  void claim_name(const std::string& name) {
    check_identifier(name, "name");
    if (!names_.insert(name).second) {
      throw ElaborationError("name '" + name + "' is already used in module '" + m_->name + "'");
    }
  }

  Signal add_signal(SignalInfo info) {
    Module& m = mutable_module();
    claim_name(info.name);
    info.index = m.signals.size();
    info.owner = m.id;
    Signal s(std::make_shared<const SignalInfo>(std::move(info)));
    m.signals.push_back(s);
    return s;
  }

  Signal make_wire(const std::string& name, unsigned width, WireRole role, std::size_t instance,
                   const std::string& port) {
    SignalInfo info;
    info.name = name;
    info.width = width;
    info.kind = SignalKind::Wire;
    info.role = role;
    info.instance = static_cast<int>(instance);
    info.port = port;
    return add_signal(std::move(info));
  }

  void check_new_label(const std::string& label) const {
    if (!is_identifier(label)) throw ElaborationError("section label '" + label + "' is not a valid identifier");
    if (labels_.count(label)) throw ElaborationError("section label '" + label + "' is already used in module '" + m_->name + "'");
  }

  SectionId push_section(SectionKind kind, const std::string& label) {
    Module& m = mutable_module();
    SectionId parent = open_.empty() ? 0 : open_.back();
    if (m.sections[parent].is_leaf()) {
      throw ElaborationError("section '" + label + "' opened inside leaf '" + m.sections[parent].label +
                             "'; leaves cannot contain sections");
    }
    check_new_label(label);
    labels_.insert(label);
    Section s;
    s.label = label;
    s.kind = kind;
    s.parent = parent;
    SectionId id = m.sections.size();
    m.sections.push_back(std::move(s));
    m.sections[parent].children.push_back(id);
    open_.push_back(id);
    return id;
  }

  SectionId open_leaf(const char* what) {
    mutable_module();
    if (open_.empty() || !m_->sections[open_.back()].is_leaf()) {
      throw ElaborationError(std::string(what) + " outside a leaf section");
    }
    return open_.back();
  }

  bool inside(SectionId leaf, SectionId ancestor) const {
    std::optional<SectionId> cur = leaf;
    while (cur) {
      if (*cur == ancestor) return true;
      cur = m_->sections[*cur].parent;
    }
    return false;
  }

  void check_owned(const Signal& s) const {
    if (s.info().owner != m_->id) {
      throw ElaborationError("signal '" + s.name() + "' belongs to another module");
    }
  }

  // Leaves and guards may read registers, ports, loop variables of enclosing
  // loops and readable wires. Guards and while conditions are evaluated
  // before any leaf runs, so they may not see same-cycle Var values.
  void check_readable(const Expr& e, std::optional<SectionId> leaf, bool pre_cycle, const char* what) const {
    for_each_signal(e, [&](const Signal& s) {
      check_owned(s);
      if (s.info().role == WireRole::Drivable) {
        throw ElaborationError(std::string(what) + " reads '" + s.name() + "', which is driven by this module");
      }
      if (s.info().role == WireRole::External) {
        throw ElaborationError(std::string(what) + " uses external FIFO port '" + s.name() + "'");
      }
      if (pre_cycle && s.kind() == SignalKind::Var) {
        throw ElaborationError(std::string(what) + " reads combinational variable '" + s.name() + "'");
      }
      if (s.kind() == SignalKind::LoopVar && leaf) {
        bool found = false;
        for (SectionId id = 0; id < m_->sections.size() && !found; ++id) {
          const Section& sec = m_->sections[id];
          found = sec.kind == SectionKind::ForLoop && sec.loop_var.same(s) && inside(*leaf, id);
        }
        if (!found) throw ElaborationError("loop variable '" + s.name() + "' used outside its loop");
      }
    });
  }

  void check_condition(const Expr& cond, const char* what) const {
    if (cond.width() != 1) {
      throw ElaborationError(std::string(what) + " must be 1 bit wide, got " + std::to_string(cond.width()) + " bits");
    }
    check_readable(cond, open_.empty() ? std::nullopt : std::optional<SectionId>(open_.back()), true, what);
  }

  void check_target(const Target& t) const {
    const Signal& s = t.signal;
    if (!s) throw ElaborationError("assignment to an empty signal handle");
    check_owned(s);
    switch (s.kind()) {
      case SignalKind::InPort: throw ElaborationError("cannot assign input port '" + s.name() + "'");
      case SignalKind::LoopVar: throw ElaborationError("cannot assign loop variable '" + s.name() + "'");
      case SignalKind::Const: throw ElaborationError("cannot assign constant '" + s.name() + "'");
      case SignalKind::Wire:
        if (s.info().role != WireRole::Drivable) {
          throw ElaborationError("wire '" + s.name() + "' is not driven by this module");
        }
        break;
      default: break;
    }
    if (s.is_array() && !t.index) throw ElaborationError("register array '" + s.name() + "' assigned without an index");
    if (!s.is_array() && t.index) throw ElaborationError("bit assignment to '" + s.name() + "' is not supported");
  }

  void drive(SectionId leaf, const Signal& wire, const Expr& value) {
    check_readable(value, leaf, false, "interface value");
    m_->sections[leaf].statements.push_back(AssignStmt{Target{wire, std::nullopt}, value});
  }

  const Instance& instance_of(const InstanceRef& ref) const {
    if (ref.owner() != m_->id || ref.index() >= m_->instances.size()) {
      throw ElaborationError("instance '" + ref.name() + "' does not belong to module '" + m_->name + "'");
    }
    return m_->instances[ref.index()];
  }

  const Instance& checked_instance(std::size_t index, InstanceKind kind) const {
    if (index >= m_->instances.size() || m_->instances[index].kind != kind) {
      throw ElaborationError("interface handle does not belong to module '" + m_->name + "'");
    }
    return m_->instances[index];
  }

  void claim_bram_port(SectionId leaf, const Instance& b) {
    if (!leaf_uses_[leaf].insert("bram:" + b.name).second) {
      throw ElaborationError("BRAM '" + b.name + "' is accessed twice in leaf '" + m_->sections[leaf].label +
                             "' (single port)");
    }
  }

  std::unique_ptr<Module> m_;
  ModulePtr frozen_;
  std::vector<SectionId> open_;
  std::set<std::string> names_;
  std::set<std::string> labels_;
  std::map<SectionId, std::set<std::string>> leaf_uses_;
  std::set<std::size_t> bram_issued_;
  std::set<std::size_t> bram_consumed_;
  std::string scope_error_;
};

inline void InstanceRef::start(const std::map<std::string, Expr>& bindings) const {
  ModuleBuilder::current().start_instance(*this, bindings);
}

inline Expr InstanceRef::get(const std::string& port) const {
  return ModuleBuilder::current().get_result(*this, port);
}

// ---------------------------------------------------------------------------
// Section scopes

class SectionScope {
 public:
  SectionScope(const SectionScope&) = delete;
  SectionScope& operator=(const SectionScope&) = delete;

  ~SectionScope() {
    if (builder_ != nullptr && open_) builder_->close_from_scope(id_);
  }

  void close() {
    if (!open_) throw ElaborationError("section closed twice");
    builder_->close_section(id_);
    open_ = false;
  }

  SectionId id() const { return id_; }

 protected:
  explicit SectionScope(SectionId id) : builder_(&ModuleBuilder::current()), id_(id) {}
  ModuleBuilder& builder() const { return *builder_; }

 private:
  ModuleBuilder* builder_;
  SectionId id_;
  bool open_ = true;
};

class LeafSection : public SectionScope {
 public:
  explicit LeafSection(const std::string& label)
      : SectionScope(ModuleBuilder::current().open_section(SectionKind::Leaf, label)) {}
};

class SerialSections : public SectionScope {
 public:
  explicit SerialSections(const std::string& label)
      : SectionScope(ModuleBuilder::current().open_section(SectionKind::Serial, label)) {}
};

class ParallelSections : public SectionScope {
 public:
  explicit ParallelSections(const std::string& label)
      : SectionScope(ModuleBuilder::current().open_section(SectionKind::Parallel, label)) {}
};

// Iterates `var` over [begin, end). The loop variable is readable in the body.
class ForLoopSection : public SectionScope {
 public:
  ForLoopSection(const std::string& label, const std::string& var, std::uint64_t begin, std::uint64_t end)
      : SectionScope(ModuleBuilder::current().open_for(label, var, begin, end)) {}

  Signal var() const { return builder().section(id()).loop_var; }
};

class WhileLoopSection : public SectionScope {
 public:
  WhileLoopSection(const std::string& label, const Expr& condition)
      : SectionScope(ModuleBuilder::current().open_while(label, condition)) {}
};

// ---------------------------------------------------------------------------
// Free functions on the current builder

inline Signal reg(const std::string& name, unsigned width, std::uint64_t initial = 0) {
  return ModuleBuilder::current().reg(name, width, initial);
}
inline Signal var(const std::string& name, unsigned width) { return ModuleBuilder::current().var(name, width); }
inline Signal reg_in(const std::string& name, unsigned width) { return ModuleBuilder::current().reg_in(name, width); }
inline Signal reg_out(const std::string& name, unsigned width) { return ModuleBuilder::current().reg_out(name, width); }
inline Signal reg_array(const std::string& name, unsigned width, std::uint64_t depth) {
  return ModuleBuilder::current().reg_array(name, width, depth);
}

inline void assign(const Signal& target, const Expr& rhs) {
  ModuleBuilder::current().assign(Target{target, std::nullopt}, rhs);
}
inline void assign(const Indexed& target, const Expr& rhs) {
  ModuleBuilder::current().assign(Target{target.base(), target.index()}, rhs);
}
inline void assign(const Signal& target, std::uint64_t value) {
  assign(target, constant(std::max(target.width(), bits_for(value)), value));
}
inline void assign(const Indexed& target, std::uint64_t value) {
  assign(target, constant(std::max(target.base().width(), bits_for(value)), value));
}

inline void guard(const Expr& condition) { ModuleBuilder::current().add_guard(condition); }

template <typename... Args>
void display(const std::string& format, const Args&... args) {
  ModuleBuilder::current().display(format, std::vector<Expr>{Expr(args)...});
}

inline InstanceRef instantiate(const ModulePtr& child, const std::string& instance_name) {
  return ModuleBuilder::current().instantiate(child, instance_name);
}

}  // namespace shdl

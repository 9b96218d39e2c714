#pragma once

// Cycle-accurate reference interpreter.
//
// One call to Simulator::step() is one clock cycle of the whole hierarchy:
//
//   comb    every instance, parents before children: refresh the wires fed
//           by registered child outputs, decide which leaves fire from the
//           start-of-cycle state, run their statements in tree preorder and
//           evaluate the control rules;
//   commit  every instance: staged register, array, state, FIFO and BRAM
//           updates take effect together.
//
// All module outputs (Done, Ready, output ports, FIFO status, BRAM data) are
// registered, so a parent never depends combinationally on a child.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "shdl/module.hpp"
#include "shdl/schedule.hpp"

namespace shdl {

struct DisplayLine {
  std::uint64_t cycle = 0;
  std::string instance;  // hierarchical path, e.g. "my_tb.m1"
  std::string text;
};

struct StalledLeaf {
  std::string instance;
  std::string leaf;
  std::vector<std::string> failing_guards;
};

struct DeadlockReport {
  std::uint64_t cycle = 0;
  std::string reason;
  std::vector<StalledLeaf> stalled;

  std::string to_string() const {
    std::ostringstream os;
    os << "deadlock at cycle " << cycle << " (" << reason << ")";
    if (stalled.empty()) os << "; no active leaf is waiting on a guard";
    for (const auto& s : stalled) {
      os << "\n  leaf '" << s.leaf << "' in " << s.instance << " stalled on:";
      for (const auto& g : s.failing_guards) os << "\n    " << g;
    }
    return os.str();
  }
};

struct SectionSpan {
  std::optional<std::uint64_t> activated;  // first cycle the section was active
  std::optional<std::uint64_t> finished;   // last cycle the section completed
};

struct SimReport {
  std::string top;
  bool done = false;
  std::uint64_t cycles = 0;  // cycles simulated
  std::optional<std::uint64_t> done_cycle;      // first cycle Done reads 1
  std::optional<std::uint64_t> cycles_to_done;  // span of the root section
  std::vector<DisplayLine> display;
  std::map<std::string, std::vector<std::uint64_t>> fifo_outputs;
  std::map<std::string, SectionSpan> spans;
  std::map<std::string, std::uint64_t> final_values;
  std::map<std::string, std::vector<std::uint64_t>> final_memories;
  std::optional<DeadlockReport> deadlock;

  std::optional<std::uint64_t> span_cycles(const std::string& label) const {
    auto it = spans.find(label);
    if (it == spans.end() || !it->second.activated || !it->second.finished) return std::nullopt;
    return *it->second.finished - *it->second.activated + 1;
  }

  std::vector<std::string> display_texts() const {
    std::vector<std::string> out;
    for (const auto& d : display) out.push_back(d.text);
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["top"] = top;
    j["done"] = done;
    j["cycles"] = cycles;
    j["done_cycle"] = done_cycle ? nlohmann::json(*done_cycle) : nlohmann::json(nullptr);
    j["cycles_to_done"] = cycles_to_done ? nlohmann::json(*cycles_to_done) : nlohmann::json(nullptr);
    j["display"] = nlohmann::json::array();
    for (const auto& d : display) {
      j["display"].push_back({{"cycle", d.cycle}, {"instance", d.instance}, {"text", d.text}});
    }
    j["fifo_outputs"] = fifo_outputs;
    nlohmann::json spans_j = nlohmann::json::object();
    for (const auto& [label, s] : spans) {
      spans_j[label] = {{"activated", s.activated ? nlohmann::json(*s.activated) : nlohmann::json(nullptr)},
                        {"finished", s.finished ? nlohmann::json(*s.finished) : nlohmann::json(nullptr)}};
    }
    j["spans"] = spans_j;
    j["final_values"] = final_values;
    j["final_memories"] = final_memories;
    if (deadlock) {
      nlohmann::json d;
      d["cycle"] = deadlock->cycle;
      d["reason"] = deadlock->reason;
      d["stalled"] = nlohmann::json::array();
      for (const auto& s : deadlock->stalled) {
        d["stalled"].push_back({{"instance", s.instance}, {"leaf", s.leaf}, {"failing_guards", s.failing_guards}});
      }
      j["deadlock"] = d;
    } else {
      j["deadlock"] = nullptr;
    }
    return j;
  }
};

// Formats a display statement: %d unsigned decimal, %x lower-case hex
// zero-padded to ceil(width / 4) digits, %% a percent sign.
inline std::string format_display(const std::string& format, const std::vector<std::uint64_t>& values,
                                  const std::vector<unsigned>& widths) {
  std::string out;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < format.size(); ++i) {
    if (format[i] != '%' || i + 1 >= format.size()) {
      out += format[i];
      continue;
    }
    char c = format[++i];
    if (c == '%') {
      out += '%';
    } else if (c == 'd') {
      out += std::to_string(values.at(arg++));
    } else if (c == 'x') {
      static const char* digits = "0123456789abcdef";
      unsigned n = (widths.at(arg) + 3) / 4;
      std::uint64_t v = values.at(arg++);
      std::string hex(n, '0');
      for (unsigned k = 0; k < n; ++k) hex[n - 1 - k] = digits[(v >> (4 * k)) & 0xf];
      out += hex;
    } else {
      out += '%';
      out += c;
    }
  }
  return out;
}

class InstanceSim;

// Per-cycle observer hook: called after every commit with the cycle number
// that just completed.
using CycleObserver = std::function<void(std::uint64_t cycle, const InstanceSim& top)>;

class InstanceSim {
 public:
  InstanceSim(ModulePtr module, std::string path)
      : module_(std::move(module)), plan_(std::make_shared<ControlPlan>(*module_)), path_(std::move(path)) {
    const Module& m = *module_;
    values_.assign(m.signals.size(), 0);
    written_.assign(m.signals.size(), kNoLeaf);
    arrays_.resize(m.signals.size());
    for (const auto& s : m.signals) {
      if (s.is_array()) {
        arrays_[s.info().index].assign(s.depth(), 0);
      } else {
        values_[s.info().index] = s.info().initial;
      }
    }
    state_.assign(m.sections.size(), kIdle);
    next_state_ = state_;
    fin_.assign(m.sections.size(), false);
    children_.resize(m.instances.size());
    for (std::size_t i = 0; i < m.instances.size(); ++i) {
      const Instance& inst = m.instances[i];
      Child& c = children_[i];
      if (inst.kind == InstanceKind::Module) {
        c.module = std::make_unique<InstanceSim>(inst.module, path_ + "." + inst.name);
      } else if (inst.kind == InstanceKind::Bram) {
        c.mem.assign(inst.depth, 0);
      }
    }
    for (const auto& p : m.ports) {
      if (p.dir == PortDir::In) port_inputs_[p.name] = 0;
    }
    dout_readers_.resize(m.sections.size());
    for (SectionId leaf : plan_->leaves()) {
      for (const auto& st : m.sections[leaf].statements) {
        auto scan = [&](const Expr& e) {
          for_each_signal(e, [&](const Signal& s) {
            if (s.kind() == SignalKind::Wire && s.info().port == "DOUT" &&
                m.instances[s.info().instance].kind == InstanceKind::Bram) {
              dout_readers_[leaf].insert(static_cast<std::size_t>(s.info().instance));
            }
          });
        };
        if (auto* a = std::get_if<AssignStmt>(&st)) {
          scan(a->rhs);
          if (a->target.index) scan(*a->target.index);
        } else {
          for (const auto& e : std::get<DisplayStmt>(st).args) scan(e);
        }
      }
    }
  }

  const Module& module() const { return *module_; }
  const ControlPlan& plan() const { return *plan_; }
  const std::string& path() const { return path_; }

  // ---------------------------------------------------------------- inputs

  void set_start(bool v) { start_ = v; }
  void set_get_done(bool v) { get_done_ = v; }
  void set_input(const std::string& port, std::uint64_t v) {
    auto it = port_inputs_.find(port);
    if (it == port_inputs_.end()) throw EvaluationError("module '" + module_->name + "' has no input port '" + port + "'");
    const Port* p = module_->find_port(port);
    it->second = v & width_mask(p->width);
  }
  // External FIFO port driven from outside (write_data / write_enable /
  // read_enable of a boundary FIFO).
  void set_external(const std::string& name, std::uint64_t v) {
    const Signal* s = module_->find_signal(name);
    if (s == nullptr || s->info().role != WireRole::External || external_port_dir(*s) != PortDir::In) {
      throw EvaluationError("module '" + module_->name + "' has no external input '" + name + "'");
    }
    values_[s->info().index] = v & width_mask(s->width());
  }

  // ---------------------------------------------------------------- outputs

  bool ready() const { return ready_; }
  bool done() const { return done_; }

  // Registered output as seen by the parent: interface flags, user output
  // ports and the outward-facing FIFO signals.
  std::uint64_t port_output(const std::string& port) const {
    if (port == "Done") return done_;
    if (port == "Ready") return ready_;
    if (const Port* p = module_->find_port(port)) {
      if (p->dir != PortDir::Out) throw EvaluationError("port '" + port + "' is an input");
      return values_[p->shadow.info().index];
    }
    const Signal* s = module_->find_signal(port);
    if (s != nullptr && s->info().role == WireRole::External && external_port_dir(*s) == PortDir::Out) {
      return fifo_status(static_cast<std::size_t>(s->info().instance), s->info().port);
    }
    throw EvaluationError("module '" + module_->name + "' has no output '" + port + "'");
  }

  // ---------------------------------------------------------------- inspection

  std::uint64_t value(const std::string& name) const {
    const Signal* s = module_->find_signal(name);
    if (s == nullptr || s->is_array()) throw EvaluationError("no scalar signal '" + name + "' in " + path_);
    return values_[s->info().index];
  }

  const std::vector<std::uint64_t>& array(const std::string& name) const {
    const Signal* s = module_->find_signal(name);
    if (s == nullptr || !s->is_array()) throw EvaluationError("no register array '" + name + "' in " + path_);
    return arrays_[s->info().index];
  }

  std::uint8_t section_state(const std::string& label) const {
    auto id = module_->find_section(label);
    if (!id) throw EvaluationError("no section '" + label + "' in " + path_);
    return state_[*id];
  }

  std::vector<std::uint64_t> fifo_contents(const std::string& name) const {
    const Child& c = child_of(name, InstanceKind::Fifo);
    return {c.queue.begin(), c.queue.end()};
  }

  const std::vector<std::uint64_t>& bram_contents(const std::string& name) const {
    return child_of(name, InstanceKind::Bram).mem;
  }

  const InstanceSim& child(const std::string& name) const { return *child_of(name, InstanceKind::Module).module; }

  bool fired(const std::string& label) const {
    auto id = module_->find_section(label);
    return id && fired_.count(*id) != 0;
  }

  const std::vector<SectionSpan>& spans() const { return spans_; }

  // ---------------------------------------------------------------- cycle

  // Combinational phase for this instance and, afterwards, its children.
  void comb(std::uint64_t cycle, std::vector<DisplayLine>& log) {
    const Module& m = *module_;
    cycle_ = cycle;
    if (spans_.empty()) spans_.resize(m.sections.size());
    for (SectionId id = 0; id < m.sections.size(); ++id) {
      if (state_[id] == kActive && !spans_[id].activated) spans_[id].activated = cycle;
    }

    refresh_readable();
    for (const auto& s : m.signals) {
      const auto i = s.info().index;
      written_[i] = kNoLeaf;
      if (s.kind() == SignalKind::Var || (s.kind() == SignalKind::Wire && s.info().role == WireRole::Drivable)) {
        values_[i] = 0;
      }
    }
    staged_.clear();
    staged_elems_.clear();
    elem_writer_.clear();
    next_state_ = state_;
    std::fill(fin_.begin(), fin_.end(), false);
    fired_.clear();
    next_done_ = done_;
    next_ready_ = ready_;
    latch_ = false;
    for (auto& c : children_) c.accessed_now = false;

    // Fire decisions use start-of-cycle state only.
    std::vector<SectionId> firing;
    for (SectionId leaf : plan_->leaves()) {
      if (eval_pred(plan_->gate(leaf)) && guards_hold(leaf)) firing.push_back(leaf);
    }
    for (SectionId leaf : firing) {
      execute(leaf, log);
      apply(plan_->on_fire(leaf));
      fired_.insert(leaf);
    }
    for (const Rule& r : plan_->rules()) {
      if (eval_pred(r.when)) apply(r.then);
    }
    if (start_ && ready_) {
      apply(plan_->reset_all());
      apply(plan_->activation(0));
      latch_ = true;
      next_ready_ = false;
    }
    if (fin_[0]) next_done_ = true;
    if (get_done_ && done_) {
      next_done_ = false;
      next_ready_ = true;
    }
    for (SectionId id = 0; id < m.sections.size(); ++id) {
      if (fin_[id]) spans_[id].finished = cycle;
    }

    for (std::size_t i = 0; i < m.instances.size(); ++i) {
      const Instance& inst = m.instances[i];
      if (inst.kind != InstanceKind::Module) continue;
      InstanceSim& sub = *children_[i].module;
      for (const auto& w : inst.wires) {
        if (w.info().role != WireRole::Drivable) continue;
        const std::string& port = w.info().port;
        std::uint64_t v = values_[w.info().index];
        if (port == "START") {
          sub.set_start(v != 0);
        } else if (port == "get_done") {
          sub.set_get_done(v != 0);
        } else if (inst.module->find_port(port)) {
          sub.set_input(port, v);
        } else {
          sub.set_external(port, v);
        }
      }
      sub.comb(cycle, log);
    }
  }

  // Commits staged updates; returns true when any state changed.
  bool commit() {
    const Module& m = *module_;
    bool changed = false;
    auto store = [&](std::uint64_t& slot, std::uint64_t v) {
      if (slot != v) {
        slot = v;
        changed = true;
      }
    };
    for (const auto& [idx, v] : staged_) store(values_[idx], v);
    for (const auto& [key, v] : staged_elems_) store(arrays_[key.first][key.second], v);
    if (latch_) {
      for (const auto& p : m.ports) {
        if (p.dir == PortDir::In) store(values_[p.shadow.info().index], port_inputs_[p.name]);
      }
    }
    if (next_state_ != state_) {
      state_ = next_state_;
      changed = true;
    }
    if (done_ != next_done_ || ready_ != next_ready_) changed = true;
    done_ = next_done_;
    ready_ = next_ready_;

    for (std::size_t i = 0; i < m.instances.size(); ++i) {
      const Instance& inst = m.instances[i];
      Child& c = children_[i];
      switch (inst.kind) {
        case InstanceKind::Module:
          changed = c.module->commit() || changed;
          break;
        case InstanceKind::Fifo: {
          const bool can_read = !c.queue.empty();
          const bool can_write = c.queue.size() < inst.depth;
          if (values_[inst.wire("read_enable").info().index] && can_read) {
            c.queue.pop_front();
            changed = true;
          }
          if (values_[inst.wire("write_enable").info().index] && can_write) {
            c.queue.push_back(values_[inst.wire("write_data").info().index]);
            changed = true;
          }
          break;
        }
        case InstanceKind::Bram: {
          std::uint64_t addr = values_[inst.wire("ADDR").info().index];
          if (addr >= inst.depth) {
            throw AddressError("BRAM '" + inst.name + "' in " + path_ + " addressed at " + std::to_string(addr) +
                               " (depth " + std::to_string(inst.depth) + ") in cycle " + std::to_string(cycle_));
          }
          store(c.dout, c.mem[addr]);
          if (values_[inst.wire("WE").info().index]) store(c.mem[addr], values_[inst.wire("DIN").info().index]);
          c.accessed_prev = c.accessed_now;
          break;
        }
      }
    }
    return changed;
  }

  bool any_fired() const {
    if (!fired_.empty()) return true;
    for (const auto& c : children_) {
      if (c.module && c.module->any_fired()) return true;
    }
    return false;
  }

  // Active leaves whose guards fail, throughout the hierarchy.
  void collect_stalls(std::vector<StalledLeaf>& out) const {
    for (SectionId leaf : plan_->leaves()) {
      if (!eval_pred(plan_->gate(leaf))) continue;
      StalledLeaf s{path_, module_->sections[leaf].label, {}};
      for (const auto& g : module_->sections[leaf].guards) {
        if (evaluate(g, Env{this}) == 0) s.failing_guards.push_back(describe_guard(g));
      }
      if (!s.failing_guards.empty()) out.push_back(std::move(s));
    }
    for (const auto& c : children_) {
      if (c.module) c.module->collect_stalls(out);
    }
  }

  void snapshot(std::map<std::string, std::uint64_t>& values, std::map<std::string, std::vector<std::uint64_t>>& memories) const {
    const Module& m = *module_;
    const std::string prefix = path_.find('.') == std::string::npos ? "" : path_.substr(path_.find('.') + 1) + ".";
    for (const auto& s : m.signals) {
      if (s.kind() == SignalKind::Var || s.kind() == SignalKind::Wire) continue;
      if (s.is_array()) {
        memories[prefix + s.name()] = arrays_[s.info().index];
      } else {
        values[prefix + s.name()] = values_[s.info().index];
      }
    }
    values[prefix + "Done"] = done_;
    values[prefix + "Ready"] = ready_;
    for (std::size_t i = 0; i < m.instances.size(); ++i) {
      const Child& c = children_[i];
      if (m.instances[i].kind == InstanceKind::Bram) memories[prefix + m.instances[i].name] = c.mem;
      if (c.module) c.module->snapshot(values, memories);
    }
  }

 private:
  static constexpr SectionId kNoLeaf = static_cast<SectionId>(-1);

  struct Child {
    std::unique_ptr<InstanceSim> module;
    std::deque<std::uint64_t> queue;
    std::vector<std::uint64_t> mem;
    std::uint64_t dout = 0;
    bool accessed_prev = false;
    bool accessed_now = false;
  };

  struct Env {
    const InstanceSim* sim;
    std::uint64_t value(const Signal& s) const { return sim->values_[s.info().index]; }
    std::uint64_t element(const Signal& s, std::uint64_t i) const { return sim->arrays_[s.info().index][i]; }
  };

  const Child& child_of(const std::string& name, InstanceKind kind) const {
    for (std::size_t i = 0; i < module_->instances.size(); ++i) {
      if (module_->instances[i].name == name && module_->instances[i].kind == kind) return children_[i];
    }
    throw EvaluationError("no such instance '" + name + "' in " + path_);
  }

  std::uint64_t fifo_status(std::size_t index, const std::string& port) const {
    const Instance& inst = module_->instances[index];
    const Child& c = children_[index];
    if (port == "read_data") return c.queue.empty() ? 0 : c.queue.front();
    if (port == "read_ready") return c.queue.empty() ? 0 : 1;
    if (port == "write_ready") return c.queue.size() < inst.depth ? 1 : 0;
    throw EvaluationError("FIFO port '" + port + "' is not an output");
  }

  void refresh_readable() {
    const Module& m = *module_;
    for (std::size_t i = 0; i < m.instances.size(); ++i) {
      const Instance& inst = m.instances[i];
      for (const auto& w : inst.wires) {
        const auto role = w.info().role;
        const std::string& port = w.info().port;
        std::uint64_t v = 0;
        if (inst.kind == InstanceKind::Module) {
          if (role != WireRole::Readable) continue;
          v = children_[i].module->port_output(port);
        } else if (inst.kind == InstanceKind::Fifo) {
          const bool status = port == "read_data" || port == "read_ready" || port == "write_ready";
          if (!status) continue;
          v = fifo_status(i, port);
        } else {
          if (port != "DOUT") continue;
          v = children_[i].dout;
        }
        values_[w.info().index] = v & width_mask(w.width());
      }
    }
  }

  bool guards_hold(SectionId leaf) const {
    for (const auto& g : module_->sections[leaf].guards) {
      if (evaluate(g, Env{this}) == 0) return false;
    }
    return true;
  }

  std::string describe_guard(const Expr& g) const {
    std::string text = render(g);
    std::string hint;
    for_each_signal(g, [&](const Signal& s) {
      if (s.kind() != SignalKind::Wire || !hint.empty()) return;
      const Instance& inst = module_->instances[s.info().instance];
      const std::string& port = s.info().port;
      if (port == "read_ready") hint = "FIFO '" + inst.name + "' is empty";
      if (port == "write_ready") hint = "FIFO '" + inst.name + "' is full";
      if (port == "Ready") hint = "instance '" + inst.name + "' is busy";
      if (port == "Done") hint = "instance '" + inst.name + "' has not finished";
    });
    return hint.empty() ? text : text + "  [" + hint + "]";
  }

  bool eval_pred(const Pred& p) const {
    switch (p.kind) {
      case Pred::Kind::True: return true;
      case Pred::Kind::Fin: return fin_[p.section];
      case Pred::Kind::StateIs: return state_[p.section] == p.value;
      case Pred::Kind::LoopLast: {
        const Section& s = module_->sections[p.section];
        return values_[s.loop_var.info().index] == s.loop_end - 1;
      }
      case Pred::Kind::WhileCond: return evaluate(*module_->sections[p.section].condition, Env{this}) != 0;
      case Pred::Kind::And:
        for (const auto& q : p.operands) {
          if (!eval_pred(q)) return false;
        }
        return true;
      case Pred::Kind::Or:
        for (const auto& q : p.operands) {
          if (eval_pred(q)) return true;
        }
        return false;
      case Pred::Kind::Not: return !eval_pred(p.operands.front());
    }
    return false;
  }

  void apply(const std::vector<Action>& actions) {
    for (const Action& a : actions) {
      switch (a.kind) {
        case Action::Kind::SetState: next_state_[a.section] = a.value; break;
        case Action::Kind::SetFin: fin_[a.section] = true; break;
        case Action::Kind::InitLoopVar: {
          const Section& s = module_->sections[a.section];
          staged_[s.loop_var.info().index] = s.loop_begin;
          break;
        }
        case Action::Kind::StepLoopVar: {
          const Section& s = module_->sections[a.section];
          const auto i = s.loop_var.info().index;
          staged_[i] = (values_[i] + 1) & width_mask(s.loop_var.width());
          break;
        }
      }
    }
  }

  void claim(const std::string& target, std::size_t signal, SectionId leaf) {
    SectionId& w = written_[signal];
    if (w != kNoLeaf && w != leaf) {
      throw ConflictError(path_ + "." + target, module_->sections[w].label, module_->sections[leaf].label, cycle_);
    }
    w = leaf;
  }

  void execute(SectionId leaf, std::vector<DisplayLine>& log) {
    const Module& m = *module_;
    for (std::size_t b : dout_readers_[leaf]) {
      if (!children_[b].accessed_prev) {
        throw ProtocolError("leaf '" + m.sections[leaf].label + "' in " + path_ + " consumes data of BRAM '" +
                            m.instances[b].name + "' in cycle " + std::to_string(cycle_) +
                            " but no access was issued in the previous cycle");
      }
    }
    for (const auto& st : m.sections[leaf].statements) {
      if (const auto* d = std::get_if<DisplayStmt>(&st)) {
        std::vector<std::uint64_t> vals;
        std::vector<unsigned> widths;
        for (const auto& e : d->args) {
          vals.push_back(evaluate(e, Env{this}));
          widths.push_back(e.width());
        }
        log.push_back(DisplayLine{cycle_, path_, format_display(d->format, vals, widths)});
        continue;
      }
      const auto& a = std::get<AssignStmt>(st);
      const Signal& t = a.target.signal;
      const auto idx = t.info().index;
      const std::uint64_t v = evaluate(a.rhs, Env{this}) & width_mask(t.width());
      if (t.is_array()) {
        std::uint64_t e = evaluate(*a.target.index, Env{this});
        if (e >= t.depth()) {
          throw AddressError("leaf '" + m.sections[leaf].label + "' in " + path_ + " writes '" + t.name() + "[" +
                             std::to_string(e) + "]' beyond depth " + std::to_string(t.depth()) + " in cycle " +
                             std::to_string(cycle_));
        }
        auto [it, fresh] = elem_writer_.emplace(std::make_pair(idx, e), leaf);
        if (!fresh && it->second != leaf) {
          throw ConflictError(path_ + "." + t.name() + "[" + std::to_string(e) + "]", m.sections[it->second].label,
                              m.sections[leaf].label, cycle_);
        }
        staged_elems_[{idx, e}] = v;
        continue;
      }
      switch (t.kind()) {
        case SignalKind::Var:
          values_[idx] = v;
          break;
        case SignalKind::Wire:
          claim(t.name(), idx, leaf);
          values_[idx] = v;
          if (t.info().port == "ADDR") children_[t.info().instance].accessed_now = true;
          break;
        default:
          claim(t.name(), idx, leaf);
          staged_[idx] = v;
          break;
      }
    }
  }

  ModulePtr module_;
  std::shared_ptr<const ControlPlan> plan_;
  std::string path_;
  std::uint64_t cycle_ = 0;

  std::vector<std::uint64_t> values_;
  std::vector<std::vector<std::uint64_t>> arrays_;
  std::vector<std::uint8_t> state_;
  bool ready_ = true;
  bool done_ = false;

  bool start_ = false;
  bool get_done_ = false;
  std::map<std::string, std::uint64_t> port_inputs_;

  // Per-cycle scratch
  std::vector<SectionId> written_;
  std::map<std::size_t, std::uint64_t> staged_;
  std::map<std::pair<std::size_t, std::uint64_t>, std::uint64_t> staged_elems_;
  std::map<std::pair<std::size_t, std::uint64_t>, SectionId> elem_writer_;
  std::vector<std::uint8_t> next_state_;
  std::vector<bool> fin_;
  std::set<SectionId> fired_;
  bool next_done_ = false;
  bool next_ready_ = true;
  bool latch_ = false;

  std::vector<Child> children_;
  std::vector<std::set<std::size_t>> dout_readers_;
  std::vector<SectionSpan> spans_;
};

struct SimOptions {
  std::uint64_t max_cycles = 1'000'000;
  // Values for the top module's input ports, applied with START.
  std::map<std::string, std::uint64_t> inputs;
  // Words queued for the top module's input FIFOs, one per cycle while the
  // FIFO has room.
  std::map<std::string, std::vector<std::uint64_t>> stimuli;
  // Stop early when a cycle changes nothing and no leaf fires.
  bool detect_quiescence = true;
  // Mirror display output to this stream as it happens.
  std::ostream* echo = nullptr;
  CycleObserver observer;
};

// Drives a top module: START with the input values in cycle 0, feeds input
// FIFOs, drains output FIFOs and watches for Done.
class Simulator {
 public:
  explicit Simulator(ModulePtr top, SimOptions options = {})
      : top_(std::make_unique<InstanceSim>(top, top->name)), options_(std::move(options)) {
    if (options_.max_cycles == 0) throw EvaluationError("max_cycles must be positive");
    for (const auto& [port, v] : options_.inputs) top_->set_input(port, v);
    for (const auto& inst : top->instances) {
      if (inst.kind != InstanceKind::Fifo) continue;
      if (inst.fifo_kind == FifoKind::Input) feeds_[inst.name] = {};
      if (inst.fifo_kind == FifoKind::Output) outputs_[inst.name] = {};
    }
    for (const auto& [name, words] : options_.stimuli) {
      auto it = feeds_.find(name);
      if (it == feeds_.end()) throw EvaluationError("module '" + top->name + "' has no input FIFO '" + name + "'");
      it->second.assign(words.begin(), words.end());
    }
  }

  InstanceSim& top() { return *top_; }
  const InstanceSim& top() const { return *top_; }
  std::uint64_t cycle() const { return cycle_; }
  const std::vector<DisplayLine>& display() const { return log_; }

  // One clock cycle. Returns true when anything changed.
  bool step() {
    top_->set_start(cycle_ == 0);
    for (auto& [name, queue] : feeds_) {
      bool push = !queue.empty() && top_->port_output(name + "_write_ready");
      top_->set_external(name + "_write_enable", push);
      top_->set_external(name + "_write_data", push ? queue.front() : 0);
      if (push) queue.pop_front();
      harness_moved_ = harness_moved_ || push;
    }
    for (auto& [name, words] : outputs_) {
      bool pop = top_->port_output(name + "_read_ready") != 0;
      top_->set_external(name + "_read_enable", pop);
      if (pop) words.push_back(top_->port_output(name + "_read_data"));
      harness_moved_ = harness_moved_ || pop;
    }
    const std::size_t before = log_.size();
    top_->comb(cycle_, log_);
    bool changed = top_->commit();
    if (options_.echo) {
      for (std::size_t i = before; i < log_.size(); ++i) *options_.echo << log_[i].text << "\n";
    }
    if (options_.observer) options_.observer(cycle_, *top_);
    ++cycle_;
    return changed;
  }

  SimReport run() {
    SimReport r;
    r.top = top_->module().name;
    while (true) {
      if (top_->done()) {
        r.done = true;
        r.done_cycle = cycle_;
        break;
      }
      if (cycle_ >= options_.max_cycles) {
        r.deadlock = deadlock("watchdog expired after " + std::to_string(options_.max_cycles) + " cycles");
        break;
      }
      harness_moved_ = false;
      bool changed = step();
      if (options_.detect_quiescence && cycle_ > 1 && !changed && !harness_moved_ && !top_->any_fired() &&
          !top_->done()) {
        r.deadlock = deadlock("no progress possible");
        break;
      }
    }
    r.cycles = cycle_;
    r.display = log_;
    for (auto& [name, words] : outputs_) {
      auto rest = top_->fifo_contents(name);
      words.insert(words.end(), rest.begin(), rest.end());
    }
    r.fifo_outputs = outputs_;
    const Module& m = top_->module();
    const auto& spans = top_->spans();
    for (SectionId id = 0; id < m.sections.size() && id < spans.size(); ++id) {
      r.spans[m.sections[id].label] = spans[id];
    }
    r.cycles_to_done = r.span_cycles(kRootLabel);
    if (!r.done) r.cycles_to_done.reset();
    top_->snapshot(r.final_values, r.final_memories);
    return r;
  }

  DeadlockReport deadlock(const std::string& reason) const {
    DeadlockReport d;
    d.cycle = cycle_;
    d.reason = reason;
    top_->collect_stalls(d.stalled);
    return d;
  }

 private:
  std::unique_ptr<InstanceSim> top_;
  SimOptions options_;
  std::uint64_t cycle_ = 0;
  std::vector<DisplayLine> log_;
  std::map<std::string, std::deque<std::uint64_t>> feeds_;
  std::map<std::string, std::vector<std::uint64_t>> outputs_;
  bool harness_moved_ = false;
};

inline SimReport run(const ModulePtr& top, SimOptions options = {}) {
  Simulator sim(top, std::move(options));
  return sim.run();
}

inline SimReport run(const ModulePtr& top, const std::map<std::string, std::vector<std::uint64_t>>& stimuli,
                     std::uint64_t max_cycles) {
  SimOptions o;
  o.stimuli = stimuli;
  o.max_cycles = max_cycles;
  return run(top, std::move(o));
}

}  // namespace shdl

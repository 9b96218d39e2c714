#pragma once

// Control semantics of a section tree, as data.
//
// Every section S owns a 2-bit state register (0 idle, 1 active, 2 done;
// while loops additionally use 3 for "condition seen true, body running")
// and a same-cycle flag fin_S that is true in the cycle S completes.
//
// Per cycle, on the state at the start of the cycle:
//   1. a leaf L fires when state_L == 1, every enclosing while loop lets it
//      through (state 3, or state 1 with its condition true) and all guards
//      of L hold;
//   2. fired leaves run their statements in tree preorder;
//   3. the rules below run in order. Each rule tests a predicate over
//      start-of-cycle states and the fin flags set so far, then applies
//      actions to the next-cycle states. Later actions override earlier ones.
//
// The emitter renders the rules as `if` statements in its combinational
// block; the interpreter evaluates them directly. Both backends therefore
// agree on timing by construction.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "shdl/module.hpp"

namespace shdl {

enum SectionState : std::uint8_t { kIdle = 0, kActive = 1, kDone = 2, kRunning = 3 };

struct Pred {
  enum class Kind { True, Fin, StateIs, LoopLast, WhileCond, And, Or, Not };
  Kind kind = Kind::True;
  SectionId section = 0;
  std::uint8_t value = 0;
  std::vector<Pred> operands;

  static Pred truth() { return Pred{}; }
  static Pred fin(SectionId s) { return Pred{Kind::Fin, s, 0, {}}; }
  static Pred state_is(SectionId s, std::uint8_t v) { return Pred{Kind::StateIs, s, v, {}}; }
  static Pred loop_last(SectionId s) { return Pred{Kind::LoopLast, s, 0, {}}; }
  static Pred while_cond(SectionId s) { return Pred{Kind::WhileCond, s, 0, {}}; }
  static Pred all(std::vector<Pred> ps) {
    if (ps.size() == 1) return ps.front();
    return Pred{Kind::And, 0, 0, std::move(ps)};
  }
  static Pred any(std::vector<Pred> ps) {
    if (ps.size() == 1) return ps.front();
    return Pred{Kind::Or, 0, 0, std::move(ps)};
  }
  static Pred negate(Pred p) { return Pred{Kind::Not, 0, 0, {std::move(p)}}; }
};

struct Action {
  enum class Kind { SetState, SetFin, InitLoopVar, StepLoopVar };
  Kind kind;
  SectionId section;
  std::uint8_t value = 0;
};

struct Rule {
  SectionId owner;
  Pred when;
  std::vector<Action> then;
};

class ControlPlan {
 public:
  explicit ControlPlan(const Module& m) : m_(&m) {
    const auto n = m.sections.size();
    activation_.resize(n);
    reset_.resize(n);
    gate_.resize(n);
    fire_.resize(n);
    order(0);
    for (SectionId id = 0; id < n; ++id) {
      build_activation(id, activation_[id]);
      for (SectionId c : m.sections[id].children) build_reset(c, reset_[id]);
    }
    for (SectionId leaf : leaves_) build_leaf(leaf);
    for (SectionId s : composites_) build_composite(s);
    build_reset(0, reset_all_);
  }

  const Module& module() const { return *m_; }

  // Leaves in tree preorder: the statement execution order.
  const std::vector<SectionId>& leaves() const { return leaves_; }
  // Composite sections in post-order: the rule order.
  const std::vector<SectionId>& composites() const { return composites_; }

  // Actions that make section `s` active, recursively entering its children.
  const std::vector<Action>& activation(SectionId s) const { return activation_[s]; }
  // Actions returning every descendant of `s` to idle.
  const std::vector<Action>& reset_descendants(SectionId s) const { return reset_[s]; }
  // Actions returning every section to idle.
  const std::vector<Action>& reset_all() const { return reset_all_; }

  // Enabling predicate of a leaf, without its guards.
  const Pred& gate(SectionId leaf) const { return gate_[leaf]; }
  // Actions of a leaf in the cycle it fires.
  const std::vector<Action>& on_fire(SectionId leaf) const { return fire_[leaf]; }

  // Completion and successor rules, in evaluation order.
  const std::vector<Rule>& rules() const { return rules_; }

 private:
  void order(SectionId id) {
    const Section& s = m_->sections[id];
    if (s.is_leaf()) {
      leaves_.push_back(id);
      return;
    }
    for (SectionId c : s.children) order(c);
    composites_.push_back(id);
  }

  void build_activation(SectionId id, std::vector<Action>& out) const {
    const Section& s = m_->sections[id];
    out.push_back(Action{Action::Kind::SetState, id, kActive});
    if (s.kind == SectionKind::ForLoop) out.push_back(Action{Action::Kind::InitLoopVar, id});
    if (s.is_leaf()) return;
    if (s.kind == SectionKind::Parallel) {
      for (SectionId c : s.children) build_activation(c, out);
    } else {
      build_activation(s.children.front(), out);
    }
  }

  void build_reset(SectionId id, std::vector<Action>& out) const {
    out.push_back(Action{Action::Kind::SetState, id, kIdle});
    for (SectionId c : m_->sections[id].children) build_reset(c, out);
  }

  // Sequenced containers run their children one after another.
  bool sequenced(SectionId id) const { return m_->sections[id].kind != SectionKind::Parallel; }

  void build_leaf(SectionId leaf) {
    std::vector<Pred> terms{Pred::state_is(leaf, kActive)};
    for (auto p = m_->sections[leaf].parent; p; p = m_->sections[*p].parent) {
      if (m_->sections[*p].kind == SectionKind::WhileLoop) {
        terms.push_back(Pred::any({Pred::state_is(*p, kRunning),
                                   Pred::all({Pred::state_is(*p, kActive), Pred::while_cond(*p)})}));
      }
    }
    gate_[leaf] = Pred::all(std::move(terms));

    auto& acts = fire_[leaf];
    acts.push_back(Action{Action::Kind::SetState, leaf, kDone});
    SectionId parent = *m_->sections[leaf].parent;
    const auto& sib = m_->sections[parent].children;
    if (sequenced(parent)) {
      auto pos = std::find(sib.begin(), sib.end(), leaf) - sib.begin();
      if (static_cast<std::size_t>(pos) + 1 < sib.size()) {
        const auto& next = activation_[sib[pos + 1]];
        acts.insert(acts.end(), next.begin(), next.end());
      }
    }
    acts.push_back(Action{Action::Kind::SetFin, leaf});
  }

  void append(std::vector<Action>& out, const std::vector<Action>& more) const {
    out.insert(out.end(), more.begin(), more.end());
  }

  void build_composite(SectionId id) {
    const Section& s = m_->sections[id];
    const std::vector<Action> finish = {Action{Action::Kind::SetFin, id}, Action{Action::Kind::SetState, id, kDone}};
    if (sequenced(id)) {
      for (std::size_t k = 0; k + 1 < s.children.size(); ++k) {
        SectionId c = s.children[k];
        if (!m_->sections[c].is_leaf()) rules_.push_back(Rule{id, Pred::fin(c), activation_[s.children[k + 1]]});
      }
    }
    const SectionId last = s.children.back();
    switch (s.kind) {
      case SectionKind::Serial:
        rules_.push_back(Rule{id, Pred::fin(last), finish});
        break;
      case SectionKind::Parallel: {
        std::vector<Pred> terms{Pred::state_is(id, kActive)};
        for (SectionId c : s.children) terms.push_back(Pred::any({Pred::state_is(c, kDone), Pred::fin(c)}));
        rules_.push_back(Rule{id, Pred::all(std::move(terms)), finish});
        break;
      }
      case SectionKind::ForLoop: {
        rules_.push_back(Rule{id, Pred::all({Pred::fin(last), Pred::loop_last(id)}), finish});
        std::vector<Action> again{Action{Action::Kind::StepLoopVar, id}};
        append(again, reset_[id]);
        append(again, activation_[s.children.front()]);
        rules_.push_back(Rule{id, Pred::all({Pred::fin(last), Pred::negate(Pred::loop_last(id))}), again});
        break;
      }
      case SectionKind::WhileLoop: {
        std::vector<Action> exit = finish;
        append(exit, reset_[id]);
        rules_.push_back(Rule{id, Pred::all({Pred::state_is(id, kActive), Pred::negate(Pred::while_cond(id))}), exit});
        rules_.push_back(Rule{id, Pred::all({Pred::state_is(id, kActive), Pred::while_cond(id)}),
                              {Action{Action::Kind::SetState, id, kRunning}}});
        std::vector<Action> again{Action{Action::Kind::SetState, id, kActive}};
        append(again, reset_[id]);
        append(again, activation_[s.children.front()]);
        rules_.push_back(Rule{id, Pred::fin(last), again});
        break;
      }
      case SectionKind::Leaf:
        break;
    }
  }

  const Module* m_;
  std::vector<SectionId> leaves_;
  std::vector<SectionId> composites_;
  std::vector<std::vector<Action>> activation_;
  std::vector<std::vector<Action>> reset_;
  std::vector<Action> reset_all_;
  std::vector<Pred> gate_;
  std::vector<std::vector<Action>> fire_;
  std::vector<Rule> rules_;
};

// ---------------------------------------------------------------------------
// Static cycle counts

// Cycles from activation to completion (inclusive) of a section whose
// subtree has no guards and no while loops; nullopt otherwise.
inline std::optional<std::uint64_t> static_cycles(const Module& m, SectionId id) {
  const Section& s = m.sections.at(id);
  switch (s.kind) {
    case SectionKind::Leaf:
      if (!s.guards.empty()) return std::nullopt;
      return 1;
    case SectionKind::WhileLoop:
      return std::nullopt;
    case SectionKind::Parallel: {
      std::uint64_t best = 0;
      for (SectionId c : s.children) {
        auto n = static_cycles(m, c);
        if (!n) return std::nullopt;
        best = std::max(best, *n);
      }
      return best;
    }
    case SectionKind::Serial:
    case SectionKind::ForLoop: {
      std::uint64_t sum = 0;
      for (SectionId c : s.children) {
        auto n = static_cycles(m, c);
        if (!n) return std::nullopt;
        sum += *n;
      }
      return s.kind == SectionKind::ForLoop ? sum * s.trip_count() : sum;
    }
  }
  return std::nullopt;
}

inline std::optional<std::uint64_t> static_cycles(const Module& m) { return static_cycles(m, 0); }

}  // namespace shdl

#pragma once

// Schedule tree: leaves holding single-cycle statement blocks, grouped by
// serial, parallel and loop sections.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "shdl/expr.hpp"

namespace shdl {

using SectionId = std::size_t;

enum class SectionKind { Leaf, Serial, Parallel, ForLoop, WhileLoop };

inline const char* to_string(SectionKind k) {
  switch (k) {
    case SectionKind::Leaf: return "Leaf";
    case SectionKind::Serial: return "Serial";
    case SectionKind::Parallel: return "Parallel";
    case SectionKind::ForLoop: return "ForLoop";
    case SectionKind::WhileLoop: return "WhileLoop";
  }
  return "?";
}

// Scalar signal, or one element of a register array.
struct Target {
  Signal signal;
  std::optional<Expr> index;

  std::string to_string() const {
    return index ? signal.name() + "[" + render(*index) + "]" : signal.name();
  }
};

struct AssignStmt {
  Target target;
  Expr rhs;
};

struct DisplayStmt {
  std::string format;
  std::vector<Expr> args;
};

using Statement = std::variant<AssignStmt, DisplayStmt>;

struct Section {
  std::string label;
  SectionKind kind = SectionKind::Leaf;
  std::optional<SectionId> parent;
  std::vector<SectionId> children;

  // Leaf
  std::vector<Statement> statements;
  std::vector<Expr> guards;

  // ForLoop: loop_var runs loop_begin .. loop_end - 1
  Signal loop_var;
  std::uint64_t loop_begin = 0;
  std::uint64_t loop_end = 0;

  // WhileLoop
  std::optional<Expr> condition;

  bool is_leaf() const { return kind == SectionKind::Leaf; }
  bool is_loop() const { return kind == SectionKind::ForLoop || kind == SectionKind::WhileLoop; }
  std::uint64_t trip_count() const { return loop_end - loop_begin; }
};

// Counts %d / %x placeholders; "%%" is a literal percent sign. Returns
// std::nullopt when the format contains any other conversion.
inline std::optional<std::size_t> count_placeholders(const std::string& format) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < format.size(); ++i) {
    if (format[i] != '%') continue;
    if (i + 1 >= format.size()) return std::nullopt;
    char c = format[i + 1];
    if (c == 'd' || c == 'x') {
      ++n;
    } else if (c != '%') {
      return std::nullopt;
    }
    ++i;
  }
  return n;
}

}  // namespace shdl

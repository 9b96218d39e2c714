#pragma once

// Symbolic expressions over hardware signals.
//
// Expressions are immutable trees built by overloaded operators on Signal and
// Expr handles. All arithmetic is unsigned, two-state and wraps modulo
// 2^width at every node. The width of a node is derived from its operands:
//
//   arithmetic / bitwise / shifts   max(width(lhs), width(rhs))
//   comparisons                     1
//   bit select of a scalar          1
//   element of a register array     element width
//   slice [hi:lo]                   hi - lo + 1
//   mux                             max(width(then), width(else))
//
// Widths are limited to 64 bits so that every value fits a std::uint64_t.

#include <algorithm>
#include <cstdint>
#include <iterator>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "shdl/error.hpp"

namespace shdl {

inline constexpr unsigned kMaxWidth = 64;

enum class SignalKind { Reg, Var, InPort, OutPort, Wire, Const, LoopVar };

// How a Wire signal may be used from inside the module that owns it.
enum class WireRole {
  None,      // not a wire
  Drivable,  // written by leaves (instance inputs, FIFO/BRAM control)
  Readable,  // read by leaves (instance outputs, FIFO status, BRAM data)
  External,  // FIFO side exposed on the module boundary
};

inline const char* to_string(SignalKind k) {
  switch (k) {
    case SignalKind::Reg: return "Reg";
    case SignalKind::Var: return "Var";
    case SignalKind::InPort: return "InPort";
    case SignalKind::OutPort: return "OutPort";
    case SignalKind::Wire: return "Wire";
    case SignalKind::Const: return "Const";
    case SignalKind::LoopVar: return "LoopVar";
  }
  return "?";
}

inline constexpr std::uint64_t width_mask(unsigned width) {
  return width >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << width) - 1);
}

// Number of bits needed to represent `value` (at least 1).
inline constexpr unsigned bits_for(std::uint64_t value) {
  unsigned n = 1;
  while (n < 64 && (value >> n) != 0) ++n;
  return n;
}

struct SignalInfo {
  std::string name;
  unsigned width = 1;
  SignalKind kind = SignalKind::Reg;
  std::uint64_t initial = 0;
  std::uint64_t depth = 0;  // > 0 for register arrays
  std::size_t index = 0;    // slot inside the owning module
  std::uint64_t owner = 0;  // id of the owning module elaboration
  WireRole role = WireRole::None;
  int instance = -1;  // owning instance for wires
  std::string port;   // instance-side port name for wires
};

class Expr;
class Indexed;

class Signal {
 public:
  Signal() = default;
  explicit Signal(std::shared_ptr<const SignalInfo> info) : info_(std::move(info)) {}

  const SignalInfo& info() const { return *info_; }
  const std::string& name() const { return info_->name; }
  unsigned width() const { return info_->width; }
  SignalKind kind() const { return info_->kind; }
  bool is_array() const { return info_->depth > 0; }
  std::uint64_t depth() const { return info_->depth; }
  bool same(const Signal& other) const { return info_ == other.info_; }
  explicit operator bool() const { return static_cast<bool>(info_); }

  // Element of a register array, or a single bit of a scalar.
  Indexed operator[](const Expr& index) const;
  Indexed operator[](std::uint64_t index) const;

 private:
  std::shared_ptr<const SignalInfo> info_;
};

enum class BinOp { Add, Sub, Mul, And, Or, Xor, Shl, Shr, Eq, Ne, Lt, Le, Gt, Ge };
enum class UnOp { Not, Neg };

inline const char* symbol(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::And: return "&";
    case BinOp::Or: return "|";
    case BinOp::Xor: return "^";
    case BinOp::Shl: return "<<";
    case BinOp::Shr: return ">>";
    case BinOp::Eq: return "==";
    case BinOp::Ne: return "!=";
    case BinOp::Lt: return "<";
    case BinOp::Le: return "<=";
    case BinOp::Gt: return ">";
    case BinOp::Ge: return ">=";
  }
  return "?";
}

inline const char* symbol(UnOp op) { return op == UnOp::Not ? "~" : "-"; }

inline bool is_comparison(BinOp op) {
  return op == BinOp::Eq || op == BinOp::Ne || op == BinOp::Lt ||
         op == BinOp::Le || op == BinOp::Gt || op == BinOp::Ge;
}

inline std::optional<BinOp> parse_binop(std::string_view tag) {
  static const std::pair<std::string_view, BinOp> table[] = {
      {"+", BinOp::Add}, {"-", BinOp::Sub},  {"*", BinOp::Mul},  {"&", BinOp::And},
      {"|", BinOp::Or},  {"^", BinOp::Xor},  {"<<", BinOp::Shl}, {">>", BinOp::Shr},
      {"==", BinOp::Eq}, {"!=", BinOp::Ne},  {"<", BinOp::Lt},   {"<=", BinOp::Le},
      {">", BinOp::Gt},  {">=", BinOp::Ge},
  };
  for (const auto& [s, op] : table) {
    if (s == tag) return op;
  }
  return std::nullopt;
}

namespace detail {
struct Node;
}

class Expr {
 public:
  struct Ref {
    Signal signal;
  };
  struct Const {
    unsigned width;
    std::uint64_t value;
  };
  struct Binary;
  struct Unary;
  struct Index;
  struct Slice {
    Signal base;
    unsigned hi;
    unsigned lo;
  };
  struct Mux;

  Expr(const Signal& s);  // NOLINT(google-explicit-constructor)
  Expr(const Indexed& e);  // NOLINT(google-explicit-constructor)

  unsigned width() const;
  std::string to_string() const;

  template <typename Visitor>
  decltype(auto) visit(Visitor&& v) const;

  const detail::Node* node() const { return node_.get(); }

  static Expr make(detail::Node node);

 private:
  Expr() = default;
  std::shared_ptr<const detail::Node> node_;
};

struct Expr::Binary {
  BinOp op;
  Expr lhs;
  Expr rhs;
};
struct Expr::Unary {
  UnOp op;
  Expr operand;
};
struct Expr::Index {
  Signal base;
  Expr index;
};
struct Expr::Mux {
  Expr cond;
  Expr then_value;
  Expr else_value;
};

namespace detail {
struct Node {
  std::variant<Expr::Ref, Expr::Const, Expr::Binary, Expr::Unary, Expr::Index,
               Expr::Slice, Expr::Mux>
      value;
  unsigned width;
};
}  // namespace detail

inline Expr Expr::make(detail::Node node) {
  Expr e;
  e.node_ = std::make_shared<const detail::Node>(std::move(node));
  return e;
}

inline unsigned Expr::width() const { return node_->width; }

template <typename Visitor>
decltype(auto) Expr::visit(Visitor&& v) const {
  return std::visit(std::forward<Visitor>(v), node_->value);
}

// Result of `signal[index]`. Usable as an expression and as an assignment
// target when the base is a register array.
class Indexed {
 public:
  Indexed(Signal base, Expr index) : base_(std::move(base)), index_(std::move(index)) {}
  const Signal& base() const { return base_; }
  const Expr& index() const { return index_; }

 private:
  Signal base_;
  Expr index_;
};

inline Expr::Expr(const Signal& s) {
  if (!s) throw ElaborationError("expression built from an empty signal handle");
  if (s.is_array()) {
    throw ElaborationError("register array '" + s.name() +
                           "' must be indexed before use in an expression");
  }
  node_ = std::make_shared<const detail::Node>(detail::Node{Ref{s}, s.width()});
}

inline Expr::Expr(const Indexed& e) {
  const Signal& base = e.base();
  unsigned w = 1;
  if (base.is_array()) {
    w = base.width();
  } else if (base.kind() == SignalKind::Const) {
    throw ElaborationError("cannot index constant '" + base.name() + "'");
  }
  node_ = std::make_shared<const detail::Node>(detail::Node{Index{base, e.index()}, w});
}

// ---------------------------------------------------------------------------
// Construction

inline Expr constant(unsigned width, std::uint64_t value) {
  if (width == 0 || width > kMaxWidth) {
    throw ElaborationError("constant width " + std::to_string(width) +
                           " outside 1.." + std::to_string(kMaxWidth));
  }
  if ((value & ~width_mask(width)) != 0) {
    throw ElaborationError("constant " + std::to_string(value) + " does not fit in " +
                           std::to_string(width) + " bits");
  }
  return Expr::make(detail::Node{Expr::Const{width, value}, width});
}

inline Expr make_binary(BinOp op, const Expr& a, const Expr& b) {
  unsigned w = is_comparison(op) ? 1u : std::max(a.width(), b.width());
  return Expr::make(detail::Node{Expr::Binary{op, a, b}, w});
}

inline Expr make_binary(std::string_view tag, const Expr& a, const Expr& b) {
  auto op = parse_binop(tag);
  if (!op) throw ElaborationError("unsupported operator '" + std::string(tag) + "'");
  return make_binary(*op, a, b);
}

inline Expr make_unary(UnOp op, const Expr& a) {
  return Expr::make(detail::Node{Expr::Unary{op, a}, a.width()});
}

inline Expr slice(const Signal& base, unsigned hi, unsigned lo) {
  if (!base) throw ElaborationError("slice of an empty signal handle");
  if (base.is_array()) throw ElaborationError("cannot slice register array '" + base.name() + "'");
  if (lo > hi || hi >= base.width()) {
    throw ElaborationError("slice [" + std::to_string(hi) + ":" + std::to_string(lo) +
                           "] out of range for '" + base.name() + "' of width " +
                           std::to_string(base.width()));
  }
  return Expr::make(detail::Node{Expr::Slice{base, hi, lo}, hi - lo + 1});
}

inline Expr mux(const Expr& cond, const Expr& then_value, const Expr& else_value) {
  if (cond.width() != 1) {
    throw ElaborationError("mux condition must be 1 bit wide, got " +
                           std::to_string(cond.width()));
  }
  unsigned w = std::max(then_value.width(), else_value.width());
  return Expr::make(detail::Node{Expr::Mux{cond, then_value, else_value}, w});
}

// Zero-extends `e` to `width` bits (no-op when already that wide).
inline Expr zext(const Expr& e, unsigned width) {
  if (e.width() >= width) return e;
  return make_binary(BinOp::Or, constant(width, 0), e);
}

// Read-only table indexed by `index`, built as a mux chain. Indices past
// the end of the table read the last entry.
template <typename Table>
Expr lookup(const Expr& index, const Table& table, unsigned width) {
  if (std::empty(table)) throw ElaborationError("lookup table is empty");
  std::vector<std::uint64_t> t(std::begin(table), std::end(table));
  Expr out = constant(width, t.back());
  for (std::size_t k = t.size() - 1; k-- > 0;) {
    out = mux(make_binary(BinOp::Eq, index, constant(std::max(index.width(), bits_for(k)), k)),
              constant(width, t[k]), out);
  }
  return out;
}

inline Indexed Signal::operator[](const Expr& index) const {
  if (!info_) throw ElaborationError("index of an empty signal handle");
  return Indexed(*this, index);
}

inline Indexed Signal::operator[](std::uint64_t index) const {
  if (!info_) throw ElaborationError("index of an empty signal handle");
  std::uint64_t limit = is_array() ? depth() - 1 : width() - 1;
  return Indexed(*this, constant(bits_for(std::max(limit, index)), index));
}

// Integer literals mixed into an expression take the other operand's width,
// widened only if the literal itself needs more bits.
inline Expr literal_like(const Expr& other, std::uint64_t value) {
  return constant(std::max(other.width(), bits_for(value)), value);
}

#define SHDL_BINARY_OPERATOR(OP, TAG)                                              \
  inline Expr operator OP(const Expr& a, const Expr& b) {                          \
    return make_binary(BinOp::TAG, a, b);                                          \
  }                                                                                \
  inline Expr operator OP(const Expr& a, std::uint64_t b) {                        \
    return make_binary(BinOp::TAG, a, literal_like(a, b));                         \
  }                                                                                \
  inline Expr operator OP(std::uint64_t a, const Expr& b) {                        \
    return make_binary(BinOp::TAG, literal_like(b, a), b);                         \
  }                                                                                \
  inline Expr operator OP(const Signal& a, const Signal& b) {                      \
    return make_binary(BinOp::TAG, Expr(a), Expr(b));                              \
  }                                                                                \
  inline Expr operator OP(const Signal& a, std::uint64_t b) {                      \
    return Expr(a) OP b;                                                           \
  }                                                                                \
  inline Expr operator OP(std::uint64_t a, const Signal& b) {                      \
    return a OP Expr(b);                                                           \
  }

SHDL_BINARY_OPERATOR(+, Add)
SHDL_BINARY_OPERATOR(-, Sub)
SHDL_BINARY_OPERATOR(*, Mul)
SHDL_BINARY_OPERATOR(&, And)
SHDL_BINARY_OPERATOR(|, Or)
SHDL_BINARY_OPERATOR(^, Xor)
SHDL_BINARY_OPERATOR(<<, Shl)
SHDL_BINARY_OPERATOR(>>, Shr)
SHDL_BINARY_OPERATOR(==, Eq)
SHDL_BINARY_OPERATOR(!=, Ne)
SHDL_BINARY_OPERATOR(<, Lt)
SHDL_BINARY_OPERATOR(<=, Le)
SHDL_BINARY_OPERATOR(>, Gt)
SHDL_BINARY_OPERATOR(>=, Ge)

#undef SHDL_BINARY_OPERATOR

inline Expr operator~(const Expr& a) { return make_unary(UnOp::Not, a); }
inline Expr operator-(const Expr& a) { return make_unary(UnOp::Neg, a); }
inline Expr operator~(const Signal& a) { return ~Expr(a); }
inline Expr operator-(const Signal& a) { return -Expr(a); }

// ---------------------------------------------------------------------------
// Rendering

namespace detail {

inline void render_to(const Expr& e, std::string& out);

struct RenderVisitor {
  std::string& out;
  void operator()(const Expr::Ref& r) const { out += r.signal.name(); }
  void operator()(const Expr::Const& c) const {
    out += std::to_string(c.width);
    out += "'d";
    out += std::to_string(c.value);
  }
  void operator()(const Expr::Binary& b) const {
    out += '(';
    render_to(b.lhs, out);
    out += ' ';
    out += symbol(b.op);
    out += ' ';
    render_to(b.rhs, out);
    out += ')';
  }
  void operator()(const Expr::Unary& u) const {
    out += '(';
    out += symbol(u.op);
    render_to(u.operand, out);
    out += ')';
  }
  void operator()(const Expr::Index& i) const {
    out += i.base.name();
    out += '[';
    render_to(i.index, out);
    out += ']';
  }
  void operator()(const Expr::Slice& s) const {
    out += s.base.name();
    out += '[' + std::to_string(s.hi) + ':' + std::to_string(s.lo) + ']';
  }
  void operator()(const Expr::Mux& m) const {
    out += '(';
    render_to(m.cond, out);
    out += " ? ";
    render_to(m.then_value, out);
    out += " : ";
    render_to(m.else_value, out);
    out += ')';
  }
};

inline void render_to(const Expr& e, std::string& out) { e.visit(RenderVisitor{out}); }

}  // namespace detail

// Fully parenthesised infix text: `((a + b) + c)`, constants as `32'd5`.
inline std::string render(const Expr& e) {
  std::string out;
  detail::render_to(e, out);
  return out;
}

inline std::string Expr::to_string() const { return render(*this); }

// Structural equality; signals compare by name and width.
inline bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.width() != b.width() || a.node()->value.index() != b.node()->value.index()) return false;
  const auto& av = a.node()->value;
  const auto& bv = b.node()->value;
  auto same_sig = [](const Signal& x, const Signal& y) {
    return x.name() == y.name() && x.width() == y.width();
  };
  if (auto* r = std::get_if<Expr::Ref>(&av)) return same_sig(r->signal, std::get<Expr::Ref>(bv).signal);
  if (auto* c = std::get_if<Expr::Const>(&av)) {
    const auto& d = std::get<Expr::Const>(bv);
    return c->width == d.width && c->value == d.value;
  }
  if (auto* x = std::get_if<Expr::Binary>(&av)) {
    const auto& y = std::get<Expr::Binary>(bv);
    return x->op == y.op && structurally_equal(x->lhs, y.lhs) && structurally_equal(x->rhs, y.rhs);
  }
  if (auto* x = std::get_if<Expr::Unary>(&av)) {
    const auto& y = std::get<Expr::Unary>(bv);
    return x->op == y.op && structurally_equal(x->operand, y.operand);
  }
  if (auto* x = std::get_if<Expr::Index>(&av)) {
    const auto& y = std::get<Expr::Index>(bv);
    return same_sig(x->base, y.base) && structurally_equal(x->index, y.index);
  }
  if (auto* x = std::get_if<Expr::Slice>(&av)) {
    const auto& y = std::get<Expr::Slice>(bv);
    return same_sig(x->base, y.base) && x->hi == y.hi && x->lo == y.lo;
  }
  const auto& x = std::get<Expr::Mux>(av);
  const auto& y = std::get<Expr::Mux>(bv);
  return structurally_equal(x.cond, y.cond) && structurally_equal(x.then_value, y.then_value) &&
         structurally_equal(x.else_value, y.else_value);
}

// Calls `fn(const Signal&)` for every signal referenced by `e`.
template <typename Fn>
void for_each_signal(const Expr& e, Fn&& fn) {
  e.visit([&](const auto& n) {
    using T = std::decay_t<decltype(n)>;
    if constexpr (std::is_same_v<T, Expr::Ref>) {
      fn(n.signal);
    } else if constexpr (std::is_same_v<T, Expr::Binary>) {
      for_each_signal(n.lhs, fn);
      for_each_signal(n.rhs, fn);
    } else if constexpr (std::is_same_v<T, Expr::Unary>) {
      for_each_signal(n.operand, fn);
    } else if constexpr (std::is_same_v<T, Expr::Index>) {
      fn(n.base);
      for_each_signal(n.index, fn);
    } else if constexpr (std::is_same_v<T, Expr::Slice>) {
      fn(n.base);
    } else if constexpr (std::is_same_v<T, Expr::Mux>) {
      for_each_signal(n.cond, fn);
      for_each_signal(n.then_value, fn);
      for_each_signal(n.else_value, fn);
    }
  });
}

// ---------------------------------------------------------------------------
// Evaluation

inline std::uint64_t apply_binary(BinOp op, std::uint64_t a, std::uint64_t b, unsigned width) {
  std::uint64_t r = 0;
  switch (op) {
    case BinOp::Add: r = a + b; break;
    case BinOp::Sub: r = a - b; break;
    case BinOp::Mul: r = a * b; break;
    case BinOp::And: r = a & b; break;
    case BinOp::Or: r = a | b; break;
    case BinOp::Xor: r = a ^ b; break;
    case BinOp::Shl: r = b >= 64 ? 0 : a << b; break;
    case BinOp::Shr: r = b >= 64 ? 0 : a >> b; break;
    case BinOp::Eq: return a == b;
    case BinOp::Ne: return a != b;
    case BinOp::Lt: return a < b;
    case BinOp::Le: return a <= b;
    case BinOp::Gt: return a > b;
    case BinOp::Ge: return a >= b;
  }
  return r & width_mask(width);
}

// An evaluation environment supplies current values:
//   std::uint64_t value(const Signal&) const;
//   std::uint64_t element(const Signal&, std::uint64_t index) const;
template <typename Env>
std::uint64_t evaluate(const Expr& e, const Env& env) {
  const unsigned w = e.width();
  return e.visit([&](const auto& n) -> std::uint64_t {
    using T = std::decay_t<decltype(n)>;
    if constexpr (std::is_same_v<T, Expr::Ref>) {
      return env.value(n.signal) & width_mask(w);
    } else if constexpr (std::is_same_v<T, Expr::Const>) {
      return n.value;
    } else if constexpr (std::is_same_v<T, Expr::Binary>) {
      return apply_binary(n.op, evaluate(n.lhs, env), evaluate(n.rhs, env), w);
    } else if constexpr (std::is_same_v<T, Expr::Unary>) {
      std::uint64_t v = evaluate(n.operand, env);
      return (n.op == UnOp::Not ? ~v : (0 - v)) & width_mask(w);
    } else if constexpr (std::is_same_v<T, Expr::Index>) {
      std::uint64_t idx = evaluate(n.index, env);
      if (n.base.is_array()) {
        if (idx >= n.base.depth()) {
          throw AddressError("index " + std::to_string(idx) + " out of range for '" +
                             n.base.name() + "' of depth " + std::to_string(n.base.depth()));
        }
        return env.element(n.base, idx) & width_mask(w);
      }
      if (idx >= n.base.width()) {
        throw AddressError("bit " + std::to_string(idx) + " out of range for '" +
                           n.base.name() + "' of width " + std::to_string(n.base.width()));
      }
      return (env.value(n.base) >> idx) & 1u;
    } else if constexpr (std::is_same_v<T, Expr::Slice>) {
      return (env.value(n.base) >> n.lo) & width_mask(w);
    } else {
      return evaluate(n.cond, env) ? evaluate(n.then_value, env) & width_mask(w)
                                   : evaluate(n.else_value, env) & width_mask(w);
    }
  });
}

// Name-keyed environment; arrays are looked up as "name[index]".
class MapEnv {
 public:
  MapEnv() = default;
  MapEnv(std::initializer_list<std::pair<const std::string, std::uint64_t>> init) : values_(init) {}
  explicit MapEnv(std::map<std::string, std::uint64_t> values) : values_(std::move(values)) {}

  void set(const std::string& name, std::uint64_t v) { values_[name] = v; }

  std::uint64_t value(const Signal& s) const { return lookup(s.name()); }
  std::uint64_t element(const Signal& s, std::uint64_t index) const {
    return lookup(s.name() + "[" + std::to_string(index) + "]");
  }

 private:
  std::uint64_t lookup(const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end()) throw EvaluationError("unbound signal '" + name + "'");
    return it->second;
  }
  std::map<std::string, std::uint64_t> values_;
};

inline std::uint64_t evaluate(const Expr& e, const std::map<std::string, std::uint64_t>& env) {
  return evaluate(e, MapEnv(env));
}

}  // namespace shdl

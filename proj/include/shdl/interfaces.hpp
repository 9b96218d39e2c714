#pragma once

// FIFO and BRAM handles. Each call made inside a leaf adds the guards and
// interface-wire drives the transfer needs; the bundled Verilog lives in
// rtl/simple_fifo.v and rtl/simple_bram.v.

#include <cstdint>
#include <string>

#include "shdl/builder.hpp"

namespace shdl {

inline constexpr std::uint64_t kDefaultFifoDepth = 16;

// First-word-fall-through FIFO. read_data shows the head element while
// read_ready is high; read_enable pops it at the clock edge.
class Fifo {
 public:
  Fifo(const std::string& name, unsigned width, std::uint64_t depth = kDefaultFifoDepth,
       FifoKind kind = FifoKind::Internal)
      : builder_(&ModuleBuilder::current()),
        index_(builder_->add_fifo(name, width, depth, kind)),
        name_(name),
        width_(width),
        depth_(depth) {}

  // Guarded dequeue; the returned expression is the dequeued word.
  Expr read() const { return builder_->fifo_read(index_); }
  // Guarded enqueue.
  void write(const Expr& data) const { builder_->fifo_write(index_, data); }
  void write(std::uint64_t data) const { write(constant(std::max(width_, bits_for(data)), data)); }

  const std::string& name() const { return name_; }
  unsigned width() const { return width_; }
  std::uint64_t depth() const { return depth_; }

 private:
  ModuleBuilder* builder_;
  std::size_t index_;
  std::string name_;
  unsigned width_;
  std::uint64_t depth_;
};

// A FIFO whose write side is a port of the module.
inline Fifo input_fifo(const std::string& name, unsigned width, std::uint64_t depth = kDefaultFifoDepth) {
  return Fifo(name, width, depth, FifoKind::Input);
}

// A FIFO whose read side is a port of the module.
inline Fifo output_fifo(const std::string& name, unsigned width, std::uint64_t depth = kDefaultFifoDepth) {
  return Fifo(name, width, depth, FifoKind::Output);
}

// Single-port block RAM with a registered, read-first output: data for an
// address issued in cycle t is readable in cycle t+1.
class Bram {
 public:
  Bram(const std::string& name, unsigned width, std::uint64_t depth)
      : builder_(&ModuleBuilder::current()),
        index_(builder_->add_bram(name, width, depth)),
        name_(name),
        width_(width),
        depth_(depth) {}

  void write_data(const Expr& addr, const Expr& data) const { builder_->bram_write(index_, addr, data); }
  void write_data(const Expr& addr, std::uint64_t data) const {
    write_data(addr, constant(std::max(width_, bits_for(data)), data));
  }
  void read(const Expr& addr) const { builder_->bram_read_issue(index_, addr); }
  Expr data() const { return builder_->bram_read_data(index_); }

  const std::string& name() const { return name_; }
  unsigned width() const { return width_; }
  std::uint64_t depth() const { return depth_; }
  unsigned addr_width() const { return bits_for(depth_); }

 private:
  ModuleBuilder* builder_;
  std::size_t index_;
  std::string name_;
  unsigned width_;
  std::uint64_t depth_;
};

}  // namespace shdl

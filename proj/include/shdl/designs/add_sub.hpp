#pragma once

#include <cstdint>

#include "shdl/builder.hpp"

namespace shdl::designs {

// d = (a + b) - c over two cycles.
inline ModulePtr build_add_sub() {
  ModuleBuilder m("add_sub");
  auto a = reg_in("a", 32);
  auto b = reg_in("b", 32);
  auto c = reg_in("c", 32);
  auto d = reg_out("d", 32);
  auto tmp = reg("tmp", 32);
  {
    LeafSection add("add");
    display("add: a=%d b=%d", a, b);
    assign(tmp, a + b);
  }
  {
    LeafSection sub("sub");
    display("result: d=%d", tmp - c);
    assign(d, tmp - c);
  }
  return m.finish();
}

// Testbench module: starts an add_sub instance and prints its result.
inline ModulePtr build_my_tb(std::uint64_t a = 21, std::uint64_t b = 34, std::uint64_t c = 5) {
  ModulePtr child = build_add_sub();
  ModuleBuilder m("my_tb");
  InstanceRef m1 = instantiate(child, "m1");
  {
    SerialSections s("S");
    {
      LeafSection l("S10");
      m1.start({{"a", constant(32, a)}, {"b", constant(32, b)}, {"c", constant(32, c)}});
    }
    {
      LeafSection l("S11");
      display("Result = %d", m1.get("d"));
    }
  }
  return m.finish();
}

}  // namespace shdl::designs

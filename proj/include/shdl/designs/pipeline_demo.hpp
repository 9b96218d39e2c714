#pragma once

#include <cstdint>

#include "shdl/builder.hpp"

namespace shdl::designs {

// Three-stage computation y[e] = (3e + 1)^2 + 7 over e = 0..N-1.
//
// Pipelined: one ForLoopSection per stage under a ParallelSections, with
// staggered index ranges. Each stage waits on a progress counter written by
// the stage before it, so stage 2 trails stage 1 by one cycle and stage 3
// trails stage 2 by one cycle. The parallel block takes N + 2 cycles.
//
// Serial: the same three leaves in one loop body, 3N cycles.
inline ModulePtr build_pipeline_demo(std::uint64_t n, bool pipelined = true) {
  if (n < 1) throw ElaborationError("pipeline_demo needs N >= 1");
  ModuleBuilder m(pipelined ? "pipeline_demo" : "pipeline_serial", {{"N", static_cast<std::int64_t>(n)}});
  auto s1 = reg("s1", 32);
  auto s2 = reg("s2", 32);
  auto y = reg_array("y", 32, n);

  if (pipelined) {
    auto p1 = reg("p1", 16);
    auto p2 = reg("p2", 16);
    ParallelSections ps("PS_1");
    {
      ForLoopSection f("FLS_1", "i", 0, n);
      LeafSection l("stage1");
      assign(s1, zext(f.var(), 32) * 3 + 1);
      assign(p1, zext(f.var(), 16) + 1);
    }
    {
      ForLoopSection f("FLS_2", "j", 1, n + 1);
      LeafSection l("stage2");
      guard(p1 >= zext(f.var(), 16));
      assign(s2, s1 * s1);
      assign(p2, zext(f.var(), 16));
    }
    {
      ForLoopSection f("FLS_3", "k", 2, n + 2);
      LeafSection l("stage3");
      guard(p2 >= zext(f.var() - 1, 16));
      Expr e = f.var() - 2;
      assign(y[e], s2 + 7);
      display("y[%d] = %d", e, s2 + 7);
    }
  } else {
    ForLoopSection f("FLS", "i", 0, n);
    {
      LeafSection l("stage1");
      assign(s1, zext(f.var(), 32) * 3 + 1);
    }
    {
      LeafSection l("stage2");
      assign(s2, s1 * s1);
    }
    {
      LeafSection l("stage3");
      assign(y[f.var()], s2 + 7);
      display("y[%d] = %d", f.var(), s2 + 7);
    }
  }
  return m.finish();
}

}  // namespace shdl::designs

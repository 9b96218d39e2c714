#pragma once

// C = A * B for an N x Q matrix A and a Q x M matrix B, row-major 32-bit
// words with wrap-around arithmetic.
//
//   par_A_B_C   A and B arrive through input FIFOs fA / fB into BRAMs while
//               C is zero-filled, three loops in parallel
//   K / I / J   C[i*M + j] += A[i*Q + k] * B[k*M + j], two cycles per step:
//               mac_read issues the three BRAM reads, mac_write consumes
//               them and writes C back
//   D           C streams out through output FIFO fC, two cycles per word
//
// With FIFOs that never run dry or fill up the run takes
// max(NQ, QM, NM) + 2NQM + 2NM cycles.

#include <algorithm>
#include <cstdint>

#include "shdl/builder.hpp"
#include "shdl/interfaces.hpp"

namespace shdl::designs {

inline std::uint64_t matmul_cycles(std::uint64_t n, std::uint64_t q, std::uint64_t m) {
  return std::max({n * q, q * m, n * m}) + 2 * n * q * m + 2 * n * m;
}

inline ModulePtr build_matmul(std::uint64_t n, std::uint64_t q, std::uint64_t m) {
  if (n < 1 || q < 1 || m < 1) throw ElaborationError("matmul needs N, Q, M >= 1");
  ModuleBuilder mod("matmul", {{"N", static_cast<std::int64_t>(n)},
                               {"Q", static_cast<std::int64_t>(q)},
                               {"M", static_cast<std::int64_t>(m)}});
  Fifo fA = input_fifo("fA", 32);
  Fifo fB = input_fifo("fB", 32);
  Fifo fC = output_fifo("fC", 32);
  Bram A("A", 32, n * q);
  Bram B("B", 32, q * m);
  Bram C("C", 32, n * m);

  {
    ParallelSections par("par_A_B_C");
    {
      ForLoopSection r("R_A", "p", 0, n * q);
      LeafSection l("recv_A");
      A.write_data(r.var(), fA.read());
    }
    {
      ForLoopSection r("R_B", "q", 0, q * m);
      LeafSection l("recv_B");
      B.write_data(r.var(), fB.read());
    }
    {
      ForLoopSection r("R_C", "r", 0, n * m);
      LeafSection l("Initialize_C");
      C.write_data(r.var(), 0);
    }
  }
  {
    ForLoopSection lk("K", "k", 0, q);
    ForLoopSection li("I", "i", 0, n);
    ForLoopSection lj("J", "j", 0, m);
    const unsigned aw = bits_for(std::max({n * q, q * m, n * m}));
    Expr k = zext(lk.var(), aw);
    Expr i = zext(li.var(), aw);
    Expr j = zext(lj.var(), aw);
    {
      LeafSection l("mac_read");
      A.read(i * q + k);
      B.read(k * m + j);
      C.read(i * m + j);
    }
    {
      LeafSection l("mac_write");
      C.write_data(i * m + j, A.data() * B.data() + C.data());
    }
  }
  {
    ForLoopSection d("D", "d", 0, n * m);
    {
      LeafSection l("drain_issue");
      C.read(d.var());
    }
    {
      LeafSection l("drain_send");
      fC.write(C.data());
      display("C[%d] = %d", d.var(), C.data());
    }
  }
  return mod.finish();
}

}  // namespace shdl::designs

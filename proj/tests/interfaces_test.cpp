#include <gtest/gtest.h>

#include <random>

#include "shdl/interfaces.hpp"
#include "shdl/interp.hpp"

using namespace shdl;

namespace {

// producer -> internal FIFO -> consumer, running in parallel.
ModulePtr relay(std::uint64_t n, std::uint64_t depth, unsigned consumer_delay) {
  ModuleBuilder m("relay");
  auto in = input_fifo("src", 16);
  auto out = output_fifo("dst", 16);
  Fifo mid("mid", 16, depth);
  auto hold = reg("hold", 16);
  {
    ParallelSections p("P");
    {
      ForLoopSection f("prod", "i", 0, n);
      LeafSection l("push");
      mid.write(in.read());
    }
    {
      ForLoopSection f("cons", "j", 0, n);
      for (unsigned d = 0; d < consumer_delay; ++d) {
        LeafSection l("idle" + std::to_string(d));
      }
      {
        LeafSection l("pop");
        assign(hold, mid.read());
      }
      {
        LeafSection l("emit");
        out.write(hold + 1);
      }
    }
  }
  return m.finish();
}

}  // namespace

TEST(Fifo, WordsAreConservedInOrder) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::uint64_t n = 1 + rng() % 12, depth = 1 + rng() % 4;
    const unsigned delay = rng() % 3;
    std::vector<std::uint64_t> words;
    for (std::uint64_t k = 0; k < n; ++k) words.push_back(rng() & 0x7fff);
    auto r = run(relay(n, depth, delay), {{"src", words}}, 10000);
    ASSERT_TRUE(r.done) << (r.deadlock ? r.deadlock->to_string() : "");
    std::vector<std::uint64_t> want;
    for (auto w : words) want.push_back(w + 1);
    ASSERT_EQ(r.fifo_outputs.at("dst"), want) << "n=" << n << " depth=" << depth;
  }
}

TEST(Fifo, ProducerStallsOnAFullFifo) {
  ModuleBuilder m("t");
  Fifo q("q", 8, 2);
  {
    ForLoopSection f("F", "i", 0, 3);
    LeafSection l("push");
    q.write(zext(f.var(), 8));
  }
  auto r = run(m.finish());
  EXPECT_FALSE(r.done);
  ASSERT_TRUE(r.deadlock.has_value());
  EXPECT_NE(r.deadlock->to_string().find("q"), std::string::npos);
}

TEST(Fifo, ReadGuardBlocksOnEmpty) {
  ModuleBuilder m("t");
  Fifo q("q", 8, 4);
  auto r = reg("r", 8);
  {
    LeafSection l("pop");
    assign(r, q.read());
  }
  auto rep = run(m.finish());
  EXPECT_FALSE(rep.done);
  ASSERT_TRUE(rep.deadlock.has_value());
  EXPECT_EQ(rep.deadlock->stalled.at(0).leaf, "pop");
}

TEST(Fifo, OutputFifoResidueIsReported) {
  ModuleBuilder m("t");
  auto out = output_fifo("o", 8);
  {
    ForLoopSection f("F", "i", 0, 5);
    LeafSection l("w");
    out.write(zext(f.var(), 8) * 3);
  }
  auto r = run(m.finish());
  ASSERT_TRUE(r.done);
  EXPECT_EQ(r.fifo_outputs.at("o"), (std::vector<std::uint64_t>{0, 3, 6, 9, 12}));
}

TEST(Fifo, UnknownStimulusFifoIsRejected) {
  ModuleBuilder m("t");
  auto r = reg("r", 8);
  {
    LeafSection l("L");
    assign(r, 1);
  }
  EXPECT_THROW(run(m.finish(), {{"nope", {1}}}, 10), EvaluationError);
}

TEST(Bram, ReadDataArrivesOneCycleAfterTheAddress) {
  ModuleBuilder m("t");
  Bram mem("mem", 16, 8);
  auto got = reg("got", 16);
  {
    ForLoopSection f("W", "i", 0, 8);
    LeafSection l("fill");
    mem.write_data(zext(f.var(), mem.addr_width()), zext(f.var(), 16) * 100);
  }
  {
    LeafSection l("issue");
    mem.read(constant(mem.addr_width(), 5));
  }
  {
    LeafSection l("take");
    assign(got, mem.data());
  }
  auto r = run(m.finish());
  ASSERT_TRUE(r.done);
  EXPECT_EQ(r.final_values.at("got"), 500u);
  EXPECT_EQ(r.cycles_to_done, 10u);
}

TEST(Bram, ReadFirstOnSimultaneousWrite) {
  ModuleBuilder m("t");
  Bram mem("mem", 8, 4);
  auto before = reg("before", 8), after = reg("after", 8);
  {
    LeafSection l("w1");
    mem.write_data(constant(3, 2), 11);
  }
  {
    LeafSection l("w2");
    mem.write_data(constant(3, 2), 22);
  }
  {
    LeafSection l("capture");
    assign(before, mem.data());
    mem.read(constant(3, 2));
  }
  {
    LeafSection l("capture2");
    assign(after, mem.data());
  }
  auto r = run(m.finish());
  ASSERT_TRUE(r.done);
  // The write in w2 returns the old word 11 on DOUT.
  EXPECT_EQ(r.final_values.at("before"), 11u);
  EXPECT_EQ(r.final_values.at("after"), 22u);
}

TEST(Bram, AddressOutOfRange) {
  ModuleBuilder m("t");
  Bram mem("mem", 8, 5);
  {
    ForLoopSection f("F", "i", 0, 6);
    LeafSection l("w");
    mem.write_data(zext(f.var(), mem.addr_width()), 1);
  }
  EXPECT_THROW(run(m.finish()), AddressError);
}

TEST(Bram, ConsumingDataWithoutAPriorAccessIsAProtocolError) {
  ModuleBuilder m("t");
  Bram mem("mem", 8, 4);
  auto r = reg("r", 8);
  {
    LeafSection l("issue");
    mem.read(constant(3, 1));
  }
  {
    LeafSection l("gap");
  }
  {
    LeafSection l("late");
    assign(r, mem.data());
  }
  EXPECT_THROW(run(m.finish()), ProtocolError);
}

TEST(Bram, ContentsSurviveInReport) {
  ModuleBuilder m("t");
  Bram mem("mem", 8, 3);
  {
    ForLoopSection f("F", "i", 0, 3);
    LeafSection l("w");
    mem.write_data(zext(f.var(), mem.addr_width()), zext(f.var(), 8) + 1);
  }
  auto r = run(m.finish());
  EXPECT_EQ(r.final_memories.at("mem"), (std::vector<std::uint64_t>{1, 2, 3}));
}

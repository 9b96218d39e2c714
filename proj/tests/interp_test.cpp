#include <gtest/gtest.h>

#include <sstream>

#include "shdl/interfaces.hpp"
#include "shdl/interp.hpp"

using namespace shdl;

namespace {

// Records a signal's value at the end of each cycle's combinational phase.
std::map<std::uint64_t, std::uint64_t> trace(const ModulePtr& top, const std::string& name) {
  std::map<std::uint64_t, std::uint64_t> out;
  SimOptions o;
  o.observer = [&](std::uint64_t cycle, const InstanceSim& sim) { out[cycle] = sim.value(name); };
  run(top, o);
  return out;
}

}  // namespace

TEST(Timing, RegisterWritesAreVisibleNextCycle) {
  ModuleBuilder m("t");
  auto r = reg("r", 8), seen = reg("seen", 8);
  {
    LeafSection l("w");
    assign(r, 5);
    assign(seen, r);  // reads the old value
  }
  {
    LeafSection l("rd");
    assign(seen, r);
  }
  auto top = m.finish();
  auto r1 = run(top);
  EXPECT_EQ(r1.final_values.at("seen"), 5u);

  ModuleBuilder m2("t2");
  auto a = reg("a", 8), b = reg("b", 8);
  {
    LeafSection l("w");
    assign(a, 5);
    assign(b, a);
  }
  auto r2 = run(m2.finish());
  EXPECT_EQ(r2.final_values.at("a"), 5u);
  EXPECT_EQ(r2.final_values.at("b"), 0u);
}

TEST(Timing, VariableWritesAreVisibleSameCycle) {
  ModuleBuilder m("t");
  auto v = var("v", 8);
  auto b = reg("b", 8);
  {
    LeafSection l("w");
    assign(v, 7);
    assign(b, v + 1);
  }
  auto r = run(m.finish());
  EXPECT_EQ(r.final_values.at("b"), 8u);
}

TEST(Timing, VariableWrittenByAnEarlierLeafIsVisibleToALaterOneInTheSameCycle) {
  ModuleBuilder m("t");
  auto v = var("v", 8);
  auto b = reg("b", 8);
  {
    ParallelSections p("P");
    {
      LeafSection l("producer");
      assign(v, 42);
    }
    {
      LeafSection l("consumer");
      assign(b, v);
    }
  }
  auto r = run(m.finish());
  EXPECT_EQ(r.final_values.at("b"), 42u);
}

TEST(Timing, RegisterTraceAcrossCycles) {
  ModuleBuilder m("t");
  auto r = reg("r", 8);
  {
    ForLoopSection f("F", "i", 0, 3);
    LeafSection l("L");
    assign(r, r + 10);
  }
  auto t = trace(m.finish(), "r");
  // Values after each clock edge: cycle 0 is the START cycle.
  EXPECT_EQ(t.at(0), 0u);
  EXPECT_EQ(t.at(1), 10u);
  EXPECT_EQ(t.at(2), 20u);
  EXPECT_EQ(t.at(3), 30u);
}

TEST(Timing, InputPortsAreLatchedOnStart) {
  ModuleBuilder m("t");
  auto a = reg_in("a", 8);
  auto o = reg_out("o", 8);
  {
    LeafSection l("L");
    assign(o, a + 1);
  }
  SimOptions opts;
  opts.inputs["a"] = 41;
  auto r = run(m.finish(), opts);
  EXPECT_EQ(r.final_values.at("o_outreg"), 42u);
}

TEST(Conflict, TwoParallelLeavesWritingOneRegister) {
  ModuleBuilder m("t");
  auto r = reg("r", 8);
  {
    ParallelSections p("P");
    {
      LeafSection l("left");
      assign(r, 1);
    }
    {
      LeafSection l("right");
      assign(r, 2);
    }
  }
  auto top = m.finish();
  try {
    run(top);
    FAIL() << "expected a conflict";
  } catch (const ConflictError& e) {
    EXPECT_EQ(e.target(), "t.r");
    EXPECT_EQ(e.first_leaf(), "left");
    EXPECT_EQ(e.second_leaf(), "right");
    EXPECT_EQ(e.cycle(), 1u);
    const std::string what = e.what();
    EXPECT_NE(what.find("left"), std::string::npos);
    EXPECT_NE(what.find("right"), std::string::npos);
  }
}

TEST(Conflict, DistinctArrayElementsDoNotConflict) {
  ModuleBuilder m("t");
  auto arr = reg_array("arr", 8, 4);
  {
    ParallelSections p("P");
    {
      LeafSection l("a");
      assign(arr[1], 1);
    }
    {
      LeafSection l("b");
      assign(arr[2], 2);
    }
  }
  auto r = run(m.finish());
  EXPECT_EQ(r.final_memories.at("arr"), (std::vector<std::uint64_t>{0, 1, 2, 0}));
}

TEST(Conflict, SameArrayElementConflicts) {
  ModuleBuilder m("t");
  auto arr = reg_array("arr", 8, 4);
  {
    ParallelSections p("P");
    {
      LeafSection l("a");
      assign(arr[3], 1);
    }
    {
      LeafSection l("b");
      assign(arr[3], 2);
    }
  }
  EXPECT_THROW(run(m.finish()), ConflictError);
}

TEST(Conflict, WritesInDifferentCyclesAreFine) {
  ModuleBuilder m("t");
  auto r = reg("r", 8);
  {
    ParallelSections p("P");
    {
      LeafSection l("a");
      assign(r, 1);
    }
    {
      SerialSections s("S");
      {
        LeafSection l("wait");
      }
      {
        LeafSection l("b");
        assign(r, 2);
      }
    }
  }
  auto r1 = run(m.finish());
  EXPECT_EQ(r1.final_values.at("r"), 2u);
}

TEST(Errors, ArrayIndexOutOfRange) {
  ModuleBuilder m("t");
  auto arr = reg_array("arr", 8, 4);
  {
    ForLoopSection f("F", "i", 0, 6);
    LeafSection l("L");
    assign(arr[f.var()], 1);
  }
  EXPECT_THROW(run(m.finish()), AddressError);
}

TEST(Deadlock, UnsatisfiableGuardIsReported) {
  ModuleBuilder m("t");
  auto r = reg("r", 8);
  {
    LeafSection l("stuck");
    guard(r == 9);
    assign(r, 0);
  }
  auto rep = run(m.finish());
  EXPECT_FALSE(rep.done);
  ASSERT_TRUE(rep.deadlock.has_value());
  ASSERT_EQ(rep.deadlock->stalled.size(), 1u);
  EXPECT_EQ(rep.deadlock->stalled[0].leaf, "stuck");
  EXPECT_NE(rep.deadlock->to_string().find("stuck"), std::string::npos);
}

TEST(Deadlock, WatchdogWithoutQuiescenceDetection) {
  ModuleBuilder m("t");
  auto r = reg("r", 8);
  {
    LeafSection l("stuck");
    guard(r == 9);
  }
  SimOptions o;
  o.detect_quiescence = false;
  o.max_cycles = 50;
  auto rep = run(m.finish(), o);
  EXPECT_FALSE(rep.done);
  ASSERT_TRUE(rep.deadlock.has_value());
  EXPECT_EQ(rep.cycles, 50u);
  EXPECT_NE(rep.deadlock->reason.find("watchdog"), std::string::npos);
}

TEST(Deadlock, EmptyInputFifoNamesTheFifo) {
  ModuleBuilder m("t");
  auto r = reg("r", 8);
  auto in = input_fifo("feed", 8);
  {
    ForLoopSection f("F", "i", 0, 4);
    LeafSection l("take");
    assign(r, in.read());
  }
  auto rep = run(m.finish(), {{"feed", {1, 2}}}, 1000);
  EXPECT_FALSE(rep.done);
  ASSERT_TRUE(rep.deadlock.has_value());
  EXPECT_NE(rep.deadlock->to_string().find("feed"), std::string::npos);
  EXPECT_EQ(rep.final_values.at("r"), 2u);
}

TEST(Display, FormatsDecimalHexAndPercent) {
  EXPECT_EQ(format_display("a=%d b=%x %%", {5, 255}, {8, 12}), "a=5 b=0ff %");
  EXPECT_EQ(format_display("%x", {1}, {64}), "0000000000000001");
  EXPECT_EQ(format_display("%d", {0}, {1}), "0");
}

TEST(Display, PlaceholderCountMustMatch) {
  ModuleBuilder m("t");
  auto r = reg("r", 8);
  LeafSection l("L");
  EXPECT_THROW(display("%d %d", r), ElaborationError);
  EXPECT_NO_THROW(display("%d", r));
}

TEST(Display, LinesCarryCycleAndInstancePath) {
  ModuleBuilder m("t");
  auto r = reg("r", 8);
  {
    LeafSection l("L1");
    assign(r, 3);
  }
  {
    LeafSection l("L2");
    display("r=%d", r);
  }
  std::ostringstream echo;
  SimOptions o;
  o.echo = &echo;
  auto rep = run(m.finish(), o);
  ASSERT_EQ(rep.display.size(), 1u);
  EXPECT_EQ(rep.display[0].text, "r=3");
  EXPECT_EQ(rep.display[0].cycle, 2u);
  EXPECT_EQ(rep.display[0].instance, "t");
  EXPECT_EQ(echo.str(), "r=3\n");
}

TEST(Report, JsonHasTheMainFields) {
  ModuleBuilder m("t");
  auto r = reg("r", 8);
  {
    LeafSection l("L");
    assign(r, 1);
    display("hi");
  }
  auto j = run(m.finish()).to_json();
  EXPECT_EQ(j["top"], "t");
  EXPECT_EQ(j["done"], true);
  EXPECT_EQ(j["cycles_to_done"], 1);
  EXPECT_EQ(j["display"][0]["text"], "hi");
}

TEST(Hierarchy, ChildRunsAfterStartAndResultIsCollected) {
  ModulePtr child;
  {
    ModuleBuilder c("child");
    auto x = reg_in("x", 8);
    auto y = reg_out("y", 8);
    {
      LeafSection l("one");
      assign(y, x * 2);
    }
    {
      LeafSection l("two");
      assign(y, y + 1);
    }
    child = c.finish();
  }
  ModuleBuilder m("parent");
  auto got = reg("got", 8);
  auto u = instantiate(child, "u");
  {
    LeafSection l("go");
    u.start({{"x", constant(8, 20)}});
  }
  {
    LeafSection l("collect");
    assign(got, u.get("y"));
  }
  auto rep = run(m.finish());
  ASSERT_TRUE(rep.done);
  EXPECT_EQ(rep.final_values.at("got"), 41u);
  // go (cycle 1) starts the child in the same cycle; the child runs in
  // cycles 2-3 and collect sees Done in cycle 4.
  EXPECT_EQ(rep.cycles_to_done, 4u);
}

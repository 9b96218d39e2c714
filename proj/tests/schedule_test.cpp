#include <gtest/gtest.h>

#include "random_tree.hpp"
#include "shdl/interp.hpp"
#include "shdl/schedule.hpp"

using namespace shdl;
namespace tt = testing_trees;

TEST(Schedule, RandomTreesFollowTheCycleLaws) {
  for (std::uint64_t seed = 1; seed <= 150; ++seed) {
    tt::Generator gen(seed);
    auto forest = gen.forest(4);
    auto top = tt::build(forest);
    auto r = run(top);
    ASSERT_TRUE(r.done) << "seed " << seed;
    const auto want = tt::expected_cycles(forest);
    ASSERT_EQ(r.cycles_to_done, want) << "seed " << seed;
    ASSERT_EQ(static_cycles(*top), want) << "seed " << seed;
    // Done is visible the cycle after the root finishes; START is cycle 0.
    ASSERT_EQ(r.done_cycle, want + 1) << "seed " << seed;

    std::vector<std::pair<std::string, std::uint64_t>> fires;
    for (const auto& n : forest) tt::expected_fires(n, 1, fires);
    for (const auto& [label, count] : fires) {
      ASSERT_EQ(r.final_values.at("c_" + label), count & 0xffff) << label << " seed " << seed;
    }
  }
}

TEST(Schedule, EveryCompositeSpanMatchesItsLaw) {
  tt::Generator gen(77);
  auto forest = gen.forest(4);
  auto top = tt::build(forest);
  auto r = run(top);
  ASSERT_TRUE(r.done);
  std::function<void(const tt::Node&)> visit = [&](const tt::Node& n) {
    if (n.kind == tt::Kind::Leaf) return;
    auto span = r.span_cycles(n.label);
    ASSERT_TRUE(span.has_value()) << n.label;
    EXPECT_EQ(*span, tt::expected_cycles(n)) << n.label;
    // Spans run from first activation to last completion, so sections
    // inside a loop body cover every iteration; stop descending there.
    if (n.kind == tt::Kind::For) return;
    for (const auto& c : n.children) visit(c);
  };
  for (const auto& n : forest) visit(n);
}

TEST(Schedule, PlanOrdersLeavesInPreorderAndCompositesInPostorder) {
  ModuleBuilder m("t");
  auto r = reg("r", 8);
  {
    SerialSections a("A");
    {
      LeafSection l("L1");
      assign(r, 1);
    }
    {
      ParallelSections p("P");
      {
        LeafSection l("L2");
        assign(r, 2);
      }
      {
        LeafSection l("L3");
        guard(r == 2);
      }
    }
  }
  auto top = m.finish();
  ControlPlan plan(*top);
  std::vector<std::string> leaves, comps;
  for (auto id : plan.leaves()) leaves.push_back(top->sections[id].label);
  for (auto id : plan.composites()) comps.push_back(top->sections[id].label);
  EXPECT_EQ(leaves, (std::vector<std::string>{"L1", "L2", "L3"}));
  EXPECT_EQ(comps, (std::vector<std::string>{"P", "A", "st"}));
  EXPECT_FALSE(static_cycles(*top).has_value());
}

TEST(Schedule, LastLeafOfASerialActivatesNoSibling) {
  ModuleBuilder m("t");
  auto r = reg("r", 8);
  {
    LeafSection l("L1");
    assign(r, 1);
  }
  {
    LeafSection l("L2");
    assign(r, 2);
  }
  auto top = m.finish();
  ControlPlan plan(*top);
  const auto l1 = *top->find_section("L1"), l2 = *top->find_section("L2");
  auto activates = [&](SectionId leaf, SectionId target) {
    for (const auto& a : plan.on_fire(leaf)) {
      if (a.kind == Action::Kind::SetState && a.section == target && a.value == kActive) return true;
    }
    return false;
  };
  EXPECT_TRUE(activates(l1, l2));
  EXPECT_FALSE(activates(l2, l1));
  EXPECT_EQ(plan.on_fire(l2).back().kind, Action::Kind::SetFin);
}

TEST(Schedule, WhileLoopCostsOneCheckCycleOnExit) {
  for (std::uint64_t k : {0u, 1u, 3u, 7u}) {
    ModuleBuilder m("w" + std::to_string(k));
    auto n = reg("n", 8);
    {
      WhileLoopSection w("W", n < k);
      LeafSection l("inc");
      assign(n, n + 1);
    }
    auto top = m.finish();
    auto r = run(top);
    ASSERT_TRUE(r.done);
    EXPECT_EQ(r.final_values.at("n"), k);
    EXPECT_EQ(r.span_cycles("W"), k + 1) << "k=" << k;
  }
}

TEST(Schedule, WhileBodyWithSeveralLeaves) {
  ModuleBuilder m("t");
  auto n = reg("n", 8), acc = reg("acc", 16);
  {
    WhileLoopSection w("W", n != 4);
    {
      LeafSection l("a");
      assign(acc, acc + n);
    }
    {
      LeafSection l("b");
      assign(n, n + 1);
    }
  }
  auto r = run(m.finish());
  ASSERT_TRUE(r.done);
  EXPECT_EQ(r.final_values.at("acc"), 0u + 1 + 2 + 3);
  EXPECT_EQ(r.span_cycles("W"), 4u * 2 + 1);
}

TEST(Schedule, NestedForLoopsRestartInnerLoop) {
  ModuleBuilder m("t");
  auto seen = reg_array("seen", 8, 12);
  {
    ForLoopSection o("O", "i", 0, 3);
    ForLoopSection in("I", "j", 0, 4);
    LeafSection l("L");
    assign(seen[zext(o.var(), 4) * 4 + zext(in.var(), 4)], zext(o.var(), 8) * 10 + zext(in.var(), 8));
  }
  auto r = run(m.finish());
  ASSERT_TRUE(r.done);
  const auto& s = r.final_memories.at("seen");
  for (std::uint64_t i = 0; i < 3; ++i)
    for (std::uint64_t j = 0; j < 4; ++j) EXPECT_EQ(s[i * 4 + j], i * 10 + j);
  EXPECT_EQ(r.cycles_to_done, 12u);
}

TEST(Schedule, ForLoopWithNonZeroStart) {
  ModuleBuilder m("t");
  auto sum = reg("sum", 16);
  {
    ForLoopSection f("F", "i", 5, 9);
    LeafSection l("L");
    assign(sum, sum + zext(f.var(), 16));
  }
  auto r = run(m.finish());
  EXPECT_EQ(r.final_values.at("sum"), 5u + 6 + 7 + 8);
  EXPECT_EQ(r.cycles_to_done, 4u);
}

TEST(Schedule, GuardStallsOnlyItsOwnLeaf) {
  ModuleBuilder m("t");
  auto flag = reg("flag", 1), x = reg("x", 8), y = reg("y", 8);
  {
    ParallelSections p("P");
    {
      SerialSections s("A");
      {
        LeafSection l("a1");
        assign(x, 1);
      }
      {
        LeafSection l("a2");
        assign(x, 2);
      }
      {
        LeafSection l("a3");
        assign(flag, 1);
      }
    }
    {
      LeafSection l("b");
      guard(flag == 1);
      assign(y, x);
    }
  }
  auto r = run(m.finish());
  ASSERT_TRUE(r.done);
  EXPECT_EQ(r.final_values.at("y"), 2u);
  // a3 commits flag in cycle 3; b sees it in cycle 4.
  EXPECT_EQ(r.span_cycles("P"), 4u);
}

TEST(Schedule, HandshakeRestartsAfterGetDone) {
  ModuleBuilder m("t");
  auto n = reg("n", 8);
  {
    LeafSection l("L");
    assign(n, n + 1);
  }
  auto top = m.finish();
  InstanceSim sim(top, "t");
  std::vector<DisplayLine> log;
  auto cycle = [&](bool start, bool get_done, std::uint64_t c) {
    sim.set_start(start);
    sim.set_get_done(get_done);
    sim.comb(c, log);
    sim.commit();
  };
  EXPECT_TRUE(sim.ready());
  cycle(true, false, 0);
  EXPECT_FALSE(sim.ready());
  EXPECT_EQ(sim.section_state("st"), kActive);
  cycle(false, false, 1);
  EXPECT_TRUE(sim.done());
  EXPECT_EQ(sim.value("n"), 1u);
  cycle(true, false, 2);  // START ignored while not Ready
  EXPECT_EQ(sim.section_state("L"), kDone);
  cycle(false, true, 3);
  EXPECT_FALSE(sim.done());
  EXPECT_TRUE(sim.ready());
  cycle(true, false, 4);
  cycle(false, false, 5);
  EXPECT_EQ(sim.value("n"), 2u);
  EXPECT_TRUE(sim.done());
}

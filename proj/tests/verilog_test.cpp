#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <regex>

#include "cosim.hpp"
#include "shdl/designs/registry.hpp"
#include "shdl/verilog.hpp"

using namespace shdl;
using designs::DesignRegistry;

namespace {

ModulePtr build(const std::string& name) {
  const auto* d = DesignRegistry::builtin().find(name);
  return d->build(designs::resolve_params(*d, {}));
}

bool has_word(const std::string& text, const std::string& word) {
  return std::regex_search(text, std::regex("(^|[^A-Za-z0-9_$])" + word + "($|[^A-Za-z0-9_$])"));
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("shdl_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST(Emitter, AddSubContainsTheExpectedAssignments) {
  const auto v = emit_verilog(*build("add_sub"));
  EXPECT_NE(v.find("tmp_WIRE = (a_inreg + b_inreg)"), std::string::npos) << v;
  EXPECT_NE(v.find("(tmp - c_inreg)"), std::string::npos);
  EXPECT_NE(v.find("module add_sub ("), std::string::npos);
  EXPECT_NE(v.find("always @(posedge CLK)"), std::string::npos);
  EXPECT_NE(v.find("always @(*)"), std::string::npos);
  EXPECT_NE(v.find("if (state_add == 1) begin"), std::string::npos);
  EXPECT_NE(v.find("endmodule"), std::string::npos);
}

TEST(Emitter, InterfacePortsComeFirst) {
  const auto v = emit_verilog(*build("add_sub"));
  const auto header = v.substr(0, v.find(");"));
  const auto pos = [&](const char* s) { return header.find(s); };
  EXPECT_LT(pos("CLK"), pos("START"));
  EXPECT_LT(pos("START"), pos("Done"));
  EXPECT_LT(pos("Ready"), pos(" a,"));
}

TEST(Emitter, ByteDeterministicAcrossBuilds) {
  for (const auto& name : DesignRegistry::builtin().names()) {
    auto a = emit_hierarchy_files(build(name));
    auto b = emit_hierarchy_files(build(name));
    EXPECT_EQ(a, b) << name;
  }
}

TEST(Emitter, UserNamesSurviveVerbatim) {
  for (const auto& name : DesignRegistry::builtin().names()) {
    auto top = build(name);
    std::string all;
    for (const auto& entry : emit_hierarchy_files(top)) all += entry.second;
    for (const auto& s : top->signals) EXPECT_TRUE(has_word(all, s.name())) << name << ": " << s.name();
    for (const auto& p : top->ports) EXPECT_TRUE(has_word(all, p.name)) << name << ": " << p.name;
    for (const auto& i : top->instances) EXPECT_TRUE(has_word(all, i.name)) << name << ": " << i.name;
    for (const auto& sec : top->sections) EXPECT_TRUE(has_word(all, "state_" + sec.label)) << name << ": " << sec.label;
  }
}

TEST(Emitter, SupportFilesOnlyWhenUsed) {
  auto files = [](const ModulePtr& m) {
    std::set<std::string> out;
    for (const auto& [f, _] : emit_hierarchy_files(m)) out.insert(f);
    return out;
  };
  EXPECT_EQ(files(build("add_sub")), (std::set<std::string>{"add_sub.v"}));
  EXPECT_EQ(files(build("my_tb")), (std::set<std::string>{"my_tb.v", "add_sub.v"}));
  EXPECT_EQ(files(build("matmul")), (std::set<std::string>{"matmul.v", "simple_fifo.v", "simple_bram.v"}));
}

TEST(Emitter, ChildInstanceIsWiredByName) {
  const auto v = emit_verilog(*build("my_tb"));
  EXPECT_NE(v.find("add_sub m1 ("), std::string::npos) << v;
  EXPECT_NE(v.find(".START(m1_START)"), std::string::npos);
  EXPECT_NE(v.find(".d(m1_d)"), std::string::npos);
}

TEST(Emitter, FifoAndBramInstancesAreParameterised) {
  const auto v = emit_verilog(*build("matmul"));
  EXPECT_NE(v.find("simple_fifo #("), std::string::npos);
  EXPECT_NE(v.find("simple_bram #("), std::string::npos);
  EXPECT_NE(v.find(".WIDTH(32)"), std::string::npos);
  EXPECT_TRUE(has_word(v, "fA_write_data"));
  EXPECT_TRUE(has_word(v, "fC_read_data"));
}

TEST(Emitter, WritesFilesAndReportsBadDirectories) {
  auto dir = scratch("emit");
  auto files = emit_hierarchy(build("matmul"), dir / "nested");
  EXPECT_EQ(files.size(), 3u);
  for (const auto& f : files) EXPECT_TRUE(std::filesystem::exists(f));
  std::ofstream(dir / "blocker") << "x";
  EXPECT_THROW(emit_hierarchy(build("add_sub"), dir / "blocker" / "sub"), Error);
}

TEST(Emitter, LintsCleanWithYosys) {
  if (std::string(SHDL_YOSYS).empty()) GTEST_SKIP() << "yosys not available";
  for (const auto& name : DesignRegistry::builtin().names()) {
    auto dir = scratch("lint_" + name);
    auto files = emit_hierarchy(build(name), dir);
    std::string list;
    for (const auto& f : files) list += " " + f.filename().string();
    std::string log;
    int rc = cosim::shell("cd '" + dir.string() + "' && '" SHDL_YOSYS "' -q -p 'read_verilog" + list +
                              "; hierarchy -check -top " + name + "; proc; check -assert'",
                          &log);
    EXPECT_EQ(rc, 0) << name << "\n" << log;
  }
}

TEST(Emitter, RtlSimulationMatchesTheInterpreter) {
  std::string why;
  if (!cosim::available(&why)) GTEST_SKIP() << why;
  for (const auto& name : DesignRegistry::builtin().names()) {
    const auto* d = DesignRegistry::builtin().find(name);
    const auto p = designs::resolve_params(*d, {});
    const auto o = d->default_inputs(p);
    auto top = d->build(p);
    auto ref = run(top, o);
    auto rtl = cosim::run(top, o, scratch("cosim_" + name));
    ASSERT_TRUE(rtl.ran) << name << ": " << rtl.error;
    EXPECT_EQ(rtl.done_cycle, ref.done_cycle) << name;
    EXPECT_EQ(rtl.display, ref.display_texts()) << name;
    EXPECT_EQ(rtl.fifo_outputs, ref.fifo_outputs) << name;
  }
}

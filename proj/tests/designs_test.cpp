#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "shdl/designs/registry.hpp"

using namespace shdl;
using namespace shdl::designs;

TEST(Registry, HasTheBundledDesigns) {
  auto names = DesignRegistry::builtin().names();
  EXPECT_EQ(names, (std::vector<std::string>{"add_sub", "fft8", "matmul", "my_tb", "pipeline_demo"}));
}

TEST(Registry, UnknownParameterIsRejected) {
  const Design& d = *DesignRegistry::builtin().find("matmul");
  EXPECT_THROW(resolve_params(d, {{"K", 3}}), Error);
  auto p = resolve_params(d, {{"N", 2}});
  EXPECT_EQ(p.at("N"), 2);
  EXPECT_EQ(p.at("Q"), 4);
}

TEST(Registry, EveryDesignPassesItsBundledChecks) {
  for (const auto& name : DesignRegistry::builtin().names()) {
    const Design& d = *DesignRegistry::builtin().find(name);
    for (const auto& c : d.check(resolve_params(d, {}))) EXPECT_TRUE(c.pass) << name << ": " << c.name << " " << c.detail;
  }
}

TEST(Oracles, MatmulHandExample) {
  EXPECT_EQ(matmul_reference({1, 2, 3, 4}, {5, 6, 7, 8}, 2, 2, 2), (std::vector<std::uint64_t>{19, 22, 43, 50}));
  // 2x3 * 3x1
  EXPECT_EQ(matmul_reference({1, 2, 3, 4, 5, 6}, {1, 1, 1}, 2, 3, 1), (std::vector<std::uint64_t>{6, 15}));
}

TEST(Oracles, MatmulClosedForm) {
  EXPECT_EQ(matmul_cycles(2, 2, 2), 4u + 16 + 8);
  EXPECT_EQ(matmul_cycles(4, 4, 4), 16u + 128 + 32);
  EXPECT_EQ(matmul_cycles(2, 3, 4), 12u + 48 + 16);
}

TEST(Oracles, PipelineReference) {
  EXPECT_EQ(pipeline_reference(3), (std::vector<std::uint64_t>{8, 23, 56}));
}

TEST(Oracles, FftReferenceIsCloseToTheExactDft) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::uint64_t> x;
    std::vector<std::complex<double>> xc;
    for (unsigned n = 0; n < kFftPoints; ++n) {
      std::int64_t re = static_cast<std::int64_t>(rng() % 4096) - 2048, im = static_cast<std::int64_t>(rng() % 4096) - 2048;
      x.push_back(fft8_pack(re, im));
      xc.emplace_back(static_cast<double>(re), static_cast<double>(im));
    }
    auto got = fft8_reference(x);
    for (unsigned k = 0; k < kFftPoints; ++k) {
      std::complex<double> acc = 0;
      for (unsigned n = 0; n < kFftPoints; ++n) acc += xc[n] * std::polar(1.0, -2 * M_PI * n * k / kFftPoints);
      EXPECT_NEAR(static_cast<double>(fft8_re(got[k])), acc.real(), 4.0);
      EXPECT_NEAR(static_cast<double>(fft8_im(got[k])), acc.imag(), 4.0);
    }
  }
}

TEST(Fft8, TwiddlesAreQuantisedUnitRoots) {
  for (unsigned m = 0; m < kFftPoints; ++m) {
    auto w = fft8_twiddle(m);
    const double scale = 1 << kTwiddleShift;
    EXPECT_EQ(w[0], std::llround(std::cos(2 * M_PI * m / kFftPoints) * scale));
    EXPECT_EQ(w[1], std::llround(-std::sin(2 * M_PI * m / kFftPoints) * scale));
  }
}

TEST(Fft8, BitReversal) {
  std::vector<unsigned> got;
  for (unsigned i = 0; i < 8; ++i) got.push_back(fft8_bitrev(i));
  EXPECT_EQ(got, (std::vector<unsigned>{0, 4, 2, 6, 1, 5, 3, 7}));
}

TEST(Fft8, PackRoundTrips) {
  for (std::int64_t re : {-5, 0, 7, -2048, 2047})
    for (std::int64_t im : {-1, 3, 1000}) {
      auto w = fft8_pack(re, im);
      EXPECT_EQ(fft8_re(w), re);
      EXPECT_EQ(fft8_im(w), im);
    }
}

TEST(Fft8, CompletesInSeventyTwoCycles) {
  const Design& d = *DesignRegistry::builtin().find("fft8");
  auto o = d.default_inputs({});
  auto r = run(d.build({}), o);
  ASSERT_TRUE(r.done);
  EXPECT_EQ(r.cycles_to_done, 72u);
}

TEST(Matmul, RectangularShapes) {
  const Design& d = *DesignRegistry::builtin().find("matmul");
  for (auto [n, q, m] : std::vector<std::array<std::int64_t, 3>>{{1, 1, 1}, {2, 3, 4}, {3, 1, 2}, {4, 2, 1}}) {
    Params p{{"N", n}, {"Q", q}, {"M", m}};
    auto o = d.random_inputs(p, 5);
    auto r = run(d.build(p), o);
    for (const auto& c : d.verify(p, o, r)) EXPECT_TRUE(c.pass) << n << "x" << q << "x" << m << ": " << c.name << " " << c.detail;
  }
}

TEST(Pipeline, SmallSizes) {
  const Design& d = *DesignRegistry::builtin().find("pipeline_demo");
  for (std::int64_t n = 1; n <= 6; ++n) {
    for (std::int64_t mode : {0, 1}) {
      Params p{{"N", n}, {"mode", mode}};
      auto r = run(d.build(p));
      for (const auto& c : d.verify(p, {}, r)) EXPECT_TRUE(c.pass) << "N=" << n << " mode=" << mode << ": " << c.name;
    }
  }
}

TEST(MyTb, OtherOperands) {
  const Design& d = *DesignRegistry::builtin().find("my_tb");
  Params p{{"a", 100}, {"b", 1}, {"c", 2}};
  auto r = run(d.build(p));
  for (const auto& c : d.verify(p, {}, r)) EXPECT_TRUE(c.pass) << c.name << " " << c.detail;
}

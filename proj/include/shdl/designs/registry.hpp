#pragma once

// Named example designs with default stimuli, oracles and bundled checks.

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "shdl/designs/add_sub.hpp"
#include "shdl/designs/fft8.hpp"
#include "shdl/designs/matmul.hpp"
#include "shdl/designs/pipeline_demo.hpp"
#include "shdl/interp.hpp"

namespace shdl::designs {

using Params = std::map<std::string, std::int64_t>;

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct Design {
  std::string name;
  std::string summary;
  Params defaults;
  std::function<ModulePtr(const Params&)> build;
  std::function<SimOptions(const Params&)> default_inputs;
  // Empty when the design has no FIFO inputs to randomize.
  std::function<SimOptions(const Params&, std::uint64_t seed)> random_inputs;
  // Oracle comparison for one simulation run.
  std::function<std::vector<CheckResult>(const Params&, const SimOptions&, const SimReport&)> verify;
  // Bundled assertions run by `check`.
  std::function<std::vector<CheckResult>(const Params&)> check;
};

// Fills unspecified parameters from the design defaults; rejects unknown keys.
inline Params resolve_params(const Design& d, const Params& overrides) {
  Params p = d.defaults;
  for (const auto& [k, v] : overrides) {
    if (p.count(k) == 0) throw Error("design '" + d.name + "' has no parameter '" + k + "'");
    p[k] = v;
  }
  return p;
}

inline std::uint64_t param(const Params& p, const std::string& key) {
  auto v = p.at(key);
  if (v < 1 || v > 64) throw Error("parameter " + key + "=" + std::to_string(v) + " outside 1..64");
  return static_cast<std::uint64_t>(v);
}

// ---------------------------------------------------------------------------
// Oracles

inline std::vector<std::uint64_t> matmul_reference(const std::vector<std::uint64_t>& a,
                                                   const std::vector<std::uint64_t>& b, std::uint64_t n,
                                                   std::uint64_t q, std::uint64_t m) {
  std::vector<std::uint64_t> c(n * m, 0);
  for (std::uint64_t i = 0; i < n; ++i)
    for (std::uint64_t j = 0; j < m; ++j) {
      std::uint32_t acc = 0;
      for (std::uint64_t k = 0; k < q; ++k) {
        acc += static_cast<std::uint32_t>(a[i * q + k]) * static_cast<std::uint32_t>(b[k * m + j]);
      }
      c[i * m + j] = acc;
    }
  return c;
}

// Direct O(n^2) DFT with the quantized twiddles and a final floor division.
inline std::vector<std::uint64_t> fft8_reference(const std::vector<std::uint64_t>& x) {
  std::vector<std::uint64_t> out;
  for (unsigned k = 0; k < kFftPoints; ++k) {
    std::int64_t re = 0, im = 0;
    for (unsigned n = 0; n < kFftPoints; ++n) {
      auto w = fft8_twiddle((n * k) % kFftPoints);
      std::int64_t xr = fft8_re(x[n]), xi = fft8_im(x[n]);
      re += xr * w[0] - xi * w[1];
      im += xr * w[1] + xi * w[0];
    }
    auto floor_div = [](std::int64_t v) { return v >> kTwiddleShift; };
    out.push_back(fft8_pack(floor_div(re), floor_div(im)));
  }
  return out;
}

inline std::vector<std::uint64_t> pipeline_reference(std::uint64_t n) {
  std::vector<std::uint64_t> y;
  for (std::uint64_t e = 0; e < n; ++e) {
    std::uint32_t s1 = static_cast<std::uint32_t>(3 * e + 1);
    y.push_back(static_cast<std::uint32_t>(s1 * s1 + 7));
  }
  return y;
}

namespace detail {

inline CheckResult expect(const std::string& name, bool ok, const std::string& detail = {}) {
  return CheckResult{name, ok, detail};
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
  return os.str();
}

inline std::string cycles_text(const std::optional<std::uint64_t>& c) {
  return c ? std::to_string(*c) : std::string("none");
}

inline SimOptions matmul_inputs(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  SimOptions o;
  o.stimuli["fA"] = a;
  o.stimuli["fB"] = b;
  return o;
}

inline SimOptions matmul_random(const Params& p, std::uint64_t seed) {
  const auto n = param(p, "N"), q = param(p, "Q"), m = param(p, "M");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint64_t> dist(0, 0xffffffffu);
  std::vector<std::uint64_t> a(n * q), b(q * m);
  for (auto& v : a) v = dist(rng);
  for (auto& v : b) v = dist(rng);
  return matmul_inputs(a, b);
}

inline std::vector<CheckResult> matmul_verify(const Params& p, const SimOptions& o, const SimReport& r) {
  const auto n = param(p, "N"), q = param(p, "Q"), m = param(p, "M");
  std::vector<CheckResult> out;
  out.push_back(expect("done", r.done, r.deadlock ? r.deadlock->to_string() : ""));
  auto want = matmul_reference(o.stimuli.at("fA"), o.stimuli.at("fB"), n, q, m);
  auto it = r.fifo_outputs.find("fC");
  const auto got = it == r.fifo_outputs.end() ? std::vector<std::uint64_t>{} : it->second;
  out.push_back(expect("C equals host matrix product", got == want, "got [" + join(got) + "] want [" + join(want) + "]"));
  const auto predicted = matmul_cycles(n, q, m);
  out.push_back(expect("cycles = max(NQ,QM,NM) + 2NQM + 2NM", r.cycles_to_done == predicted,
                       "measured " + cycles_text(r.cycles_to_done) + ", predicted " + std::to_string(predicted)));
  return out;
}

inline SimOptions fft8_random(const Params&, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int64_t> dist(-2048, 2047);
  SimOptions o;
  auto& x = o.stimuli["fin"];
  for (unsigned k = 0; k < kFftPoints; ++k) {
    std::int64_t re = dist(rng);
    std::int64_t im = dist(rng);
    x.push_back(fft8_pack(re, im));
  }
  return o;
}

inline std::vector<CheckResult> fft8_verify(const Params&, const SimOptions& o, const SimReport& r) {
  std::vector<CheckResult> out;
  out.push_back(expect("done", r.done, r.deadlock ? r.deadlock->to_string() : ""));
  auto want = fft8_reference(o.stimuli.at("fin"));
  auto it = r.fifo_outputs.find("fout");
  const auto got = it == r.fifo_outputs.end() ? std::vector<std::uint64_t>{} : it->second;
  out.push_back(expect("spectrum equals quantized DFT", got == want, "got [" + join(got) + "] want [" + join(want) + "]"));
  out.push_back(expect("72 cycles", r.cycles_to_done == 72u, "measured " + cycles_text(r.cycles_to_done)));
  return out;
}

inline bool all_pass(const std::vector<CheckResult>& v) {
  for (const auto& c : v) {
    if (!c.pass) return false;
  }
  return true;
}

// Collapses a batch of checks into one line, keeping the first failure.
inline CheckResult summarize(const std::string& name, const std::vector<std::vector<CheckResult>>& runs) {
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (const auto& c : runs[i]) {
      if (!c.pass) return CheckResult{name, false, "case " + std::to_string(i) + ": " + c.name + ": " + c.detail};
    }
  }
  return CheckResult{name, true, std::to_string(runs.size()) + " cases"};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Registry

class DesignRegistry {
 public:
  void add(Design d) {
    auto name = d.name;
    if (!designs_.emplace(name, std::move(d)).second) throw Error("design '" + name + "' registered twice");
  }
  const Design* find(const std::string& name) const {
    auto it = designs_.find(name);
    return it == designs_.end() ? nullptr : &it->second;
  }
  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [n, _] : designs_) out.push_back(n);
    return out;
  }

  static const DesignRegistry& builtin();

 private:
  std::map<std::string, Design> designs_;
};

inline Design add_sub_design() {
  Design d;
  d.name = "add_sub";
  d.summary = "d = (a + b) - c in two leaves";
  d.build = [](const Params&) { return build_add_sub(); };
  d.default_inputs = [](const Params&) {
    SimOptions o;
    o.inputs = {{"a", 21}, {"b", 34}, {"c", 5}};
    return o;
  };
  d.verify = [](const Params&, const SimOptions& o, const SimReport& r) {
    auto in = [&](const char* k) { return o.inputs.count(k) ? o.inputs.at(k) : 0; };
    const std::uint64_t want = (in("a") + in("b") - in("c")) & 0xffffffffu;
    std::vector<CheckResult> out;
    out.push_back(detail::expect("done", r.done));
    auto it = r.final_values.find("d_outreg");
    const std::uint64_t got = it == r.final_values.end() ? ~0ull : it->second;
    out.push_back(detail::expect("d = a + b - c", got == want, "got " + std::to_string(got) + " want " + std::to_string(want)));
    out.push_back(detail::expect("2 cycles", r.cycles_to_done == 2u, "measured " + detail::cycles_text(r.cycles_to_done)));
    return out;
  };
  d.check = [d](const Params& p) {
    std::vector<CheckResult> out;
    SimOptions o = d.default_inputs(p);
    auto r = run(d.build(p), o);
    out = d.verify(p, o, r);
    bool printed = false;
    for (const auto& t : r.display_texts()) printed = printed || t == "result: d=50";
    out.push_back(detail::expect("prints result 50", printed, detail::join(r.display_texts())));
    return out;
  };
  return d;
}

inline Design my_tb_design() {
  Design d;
  d.name = "my_tb";
  d.summary = "testbench module driving an add_sub instance";
  d.defaults = {{"a", 21}, {"b", 34}, {"c", 5}};
  d.build = [](const Params& p) {
    return build_my_tb(static_cast<std::uint64_t>(p.at("a")), static_cast<std::uint64_t>(p.at("b")),
                       static_cast<std::uint64_t>(p.at("c")));
  };
  d.default_inputs = [](const Params&) { return SimOptions{}; };
  d.verify = [](const Params& p, const SimOptions&, const SimReport& r) {
    const std::uint64_t want = static_cast<std::uint64_t>(p.at("a") + p.at("b") - p.at("c")) & 0xffffffffu;
    std::vector<CheckResult> out;
    out.push_back(detail::expect("done", r.done));
    const std::string line = "Result = " + std::to_string(want);
    bool printed = false;
    for (const auto& t : r.display_texts()) printed = printed || t == line;
    out.push_back(detail::expect("prints '" + line + "'", printed, detail::join(r.display_texts())));
    return out;
  };
  d.check = [d](const Params& p) {
    SimOptions o = d.default_inputs(p);
    return d.verify(p, o, run(d.build(p), o));
  };
  return d;
}

inline Design pipeline_design() {
  Design d;
  d.name = "pipeline_demo";
  d.summary = "three pipelined loop stages under a parallel section (mode=1 pipelined, mode=0 serial)";
  d.defaults = {{"N", 8}, {"mode", 1}};
  d.build = [](const Params& p) { return build_pipeline_demo(param(p, "N"), p.at("mode") != 0); };
  d.default_inputs = [](const Params&) { return SimOptions{}; };
  d.verify = [](const Params& p, const SimOptions&, const SimReport& r) {
    const auto n = param(p, "N");
    const bool piped = p.at("mode") != 0;
    std::vector<CheckResult> out;
    out.push_back(detail::expect("done", r.done));
    auto y = r.final_memories.count("y") ? r.final_memories.at("y") : std::vector<std::uint64_t>{};
    out.push_back(detail::expect("y matches reference", y == pipeline_reference(n), detail::join(y)));
    const std::string block = piped ? "PS_1" : "FLS";
    const std::uint64_t want = piped ? n + 2 : 3 * n;
    auto got = r.span_cycles(block);
    out.push_back(detail::expect(block + " takes " + std::to_string(want) + " cycles", got == want,
                                 "measured " + detail::cycles_text(got)));
    return out;
  };
  d.check = [d](const Params& p) {
    const auto n = param(p, "N");
    Params piped = p, serial = p;
    piped["mode"] = 1;
    serial["mode"] = 0;
    auto rp = run(d.build(piped));
    auto rs = run(d.build(serial));
    auto out = d.verify(piped, {}, rp);
    for (auto& c : d.verify(serial, {}, rs)) {
      c.name = "serial: " + c.name;
      out.push_back(c);
    }
    out.push_back(detail::expect("identical output streams", rp.display_texts() == rs.display_texts()));
    auto a = rp.span_cycles("PS_1"), b = rs.span_cycles("FLS");
    out.push_back(detail::expect("serial / pipelined = 3N / (N + 2)", a && b && *a * 3 * n == *b * (n + 2)));
    Params one{{"N", 1}, {"mode", 1}};
    auto r1 = run(d.build(one));
    out.push_back(detail::expect("N=1 takes 3 cycles", r1.span_cycles("PS_1") == 3u,
                                 "measured " + detail::cycles_text(r1.span_cycles("PS_1"))));
    return out;
  };
  return d;
}

inline Design matmul_design() {
  Design d;
  d.name = "matmul";
  d.summary = "BRAM matrix multiply C = A * B with FIFO input and output";
  d.defaults = {{"N", 4}, {"Q", 4}, {"M", 4}};
  d.build = [](const Params& p) { return build_matmul(param(p, "N"), param(p, "Q"), param(p, "M")); };
  d.default_inputs = [](const Params& p) { return detail::matmul_random(p, 1); };
  d.random_inputs = detail::matmul_random;
  d.verify = detail::matmul_verify;
  d.check = [d](const Params& p) {
    const auto n = param(p, "N"), q = param(p, "Q"), m = param(p, "M");
    std::vector<CheckResult> out;
    ModulePtr top = d.build(p);
    std::vector<std::vector<CheckResult>> runs;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
      SimOptions o = detail::matmul_random(p, seed);
      runs.push_back(detail::matmul_verify(p, o, run(top, o)));
    }
    out.push_back(detail::summarize("50 random cases equal the host product", runs));
    if (n == q) {
      std::vector<std::uint64_t> ident(n * n, 0), b(q * m);
      for (std::uint64_t i = 0; i < n; ++i) ident[i * n + i] = 1;
      for (std::uint64_t i = 0; i < b.size(); ++i) b[i] = 1000 + 17 * i;
      auto r = run(top, detail::matmul_inputs(ident, b));
      out.push_back(detail::expect("identity * B == B", r.fifo_outputs["fC"] == b));
    }
    {
      Params p2{{"N", 2}, {"Q", 2}, {"M", 2}};
      auto r = run(d.build(p2), detail::matmul_inputs({1, 2, 3, 4}, {5, 6, 7, 8}));
      const std::vector<std::uint64_t> want{19, 22, 43, 50};
      out.push_back(detail::expect("[[1,2],[3,4]] * [[5,6],[7,8]] == [[19,22],[43,50]]", r.fifo_outputs["fC"] == want,
                                   detail::join(r.fifo_outputs["fC"])));
    }
    for (std::uint64_t s : {2u, 3u, 4u}) {
      Params ps{{"N", static_cast<std::int64_t>(s)}, {"Q", static_cast<std::int64_t>(s)}, {"M", static_cast<std::int64_t>(s)}};
      auto r = run(d.build(ps), detail::matmul_random(ps, 99));
      out.push_back(detail::expect("closed-form cycles for N=Q=M=" + std::to_string(s),
                                   r.cycles_to_done == matmul_cycles(s, s, s),
                                   "measured " + detail::cycles_text(r.cycles_to_done) + ", predicted " +
                                       std::to_string(matmul_cycles(s, s, s))));
    }
    return out;
  };
  return d;
}

inline Design fft8_design() {
  Design d;
  d.name = "fft8";
  d.summary = "8-point fixed-point FFT, BRAM ping-pong, FIFO input and output";
  d.build = [](const Params&) { return build_fft8(); };
  d.default_inputs = [](const Params& p) { return detail::fft8_random(p, 1); };
  d.random_inputs = detail::fft8_random;
  d.verify = detail::fft8_verify;
  d.check = [d](const Params& p) {
    std::vector<CheckResult> out;
    ModulePtr top = d.build(p);
    auto spectrum = [&](const std::vector<std::uint64_t>& x) {
      SimOptions o;
      o.stimuli["fin"] = x;
      return run(top, o).fifo_outputs["fout"];
    };
    const std::int64_t k = 1000;
    std::vector<std::uint64_t> impulse(kFftPoints, 0), dc(kFftPoints, fft8_pack(k, 0));
    impulse[0] = fft8_pack(k, 0);
    auto imp = spectrum(impulse);
    bool flat = imp.size() == kFftPoints;
    for (auto w : imp) flat = flat && w == fft8_pack(k, 0);
    out.push_back(detail::expect("impulse gives a flat spectrum", flat, detail::join(imp)));
    auto dcs = spectrum(dc);
    bool single = dcs.size() == kFftPoints && dcs[0] == fft8_pack(kFftPoints * k, 0);
    for (std::size_t i = 1; i < dcs.size(); ++i) single = single && dcs[i] == 0;
    out.push_back(detail::expect("DC gives a single bin", single, detail::join(dcs)));
    std::vector<std::vector<CheckResult>> runs;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
      SimOptions o = detail::fft8_random(p, seed);
      runs.push_back(detail::fft8_verify(p, o, run(top, o)));
    }
    out.push_back(detail::summarize("50 random inputs equal the quantized DFT", runs));
    return out;
  };
  return d;
}

inline const DesignRegistry& DesignRegistry::builtin() {
  static const DesignRegistry registry = [] {
    DesignRegistry r;
    r.add(add_sub_design());
    r.add(my_tb_design());
    r.add(pipeline_design());
    r.add(matmul_design());
    r.add(fft8_design());
    return r;
  }();
  return registry;
}

}  // namespace shdl::designs

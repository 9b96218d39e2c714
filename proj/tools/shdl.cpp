// Command-line front end: list, emit, sim and check for the bundled designs.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "shdl/designs/registry.hpp"
#include "shdl/shdl.hpp"

namespace {

using shdl::designs::Design;
using shdl::designs::DesignRegistry;
using shdl::designs::Params;

constexpr int kOk = 0;
constexpr int kSimFailure = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t parse_number(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    auto v = std::stoull(text, &used, 0);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw UsageError("invalid number '" + text + "' for " + what);
  }
}

const Design& find_design(const std::string& name) {
  const auto& reg = DesignRegistry::builtin();
  if (const Design* d = reg.find(name)) return *d;
  std::string msg = "unknown design '" + name + "'; available:";
  for (const auto& n : reg.names()) msg += " " + n;
  throw UsageError(msg);
}

// Splits the free arguments into key=value design parameters and
// `--port value` input-port assignments.
struct FreeArgs {
  Params params;
  std::map<std::string, std::uint64_t> ports;
};

FreeArgs split_free(const std::vector<std::string>& args, bool allow_ports) {
  FreeArgs out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const auto& a = args[i];
    if (auto eq = a.find('='); eq != std::string::npos && a.rfind("--", 0) != 0) {
      const auto key = a.substr(0, eq);
      out.params[key] = static_cast<std::int64_t>(parse_number(a.substr(eq + 1), key));
    } else if (allow_ports && a.rfind("--", 0) == 0 && a.size() > 2) {
      auto name = a.substr(2);
      std::string value;
      if (auto eq2 = name.find('='); eq2 != std::string::npos) {
        value = name.substr(eq2 + 1);
        name = name.substr(0, eq2);
      } else {
        if (i + 1 >= args.size()) throw UsageError("option --" + name + " needs a value");
        value = args[++i];
      }
      out.ports[name] = parse_number(value, "--" + name);
    } else {
      throw UsageError("unexpected argument '" + a + "'");
    }
  }
  return out;
}

shdl::ModulePtr elaborate(const Design& d, const Params& p) {
  try {
    return d.build(p);
  } catch (const shdl::Error& e) {
    throw UsageError(e.what());
  }
}

Params resolve(const Design& d, const Params& overrides) {
  try {
    return shdl::designs::resolve_params(d, overrides);
  } catch (const shdl::Error& e) {
    throw UsageError(e.what());
  }
}

int cmd_list() {
  for (const auto& n : DesignRegistry::builtin().names()) {
    const Design& d = *DesignRegistry::builtin().find(n);
    std::cout << n;
    for (const auto& [k, v] : d.defaults) std::cout << " " << k << "=" << v;
    std::cout << "\n    " << d.summary << "\n";
  }
  return kOk;
}

int cmd_emit(const std::string& name, const std::vector<std::string>& extra, const std::string& outdir) {
  const Design& d = find_design(name);
  auto free = split_free(extra, false);
  auto top = elaborate(d, resolve(d, free.params));
  for (const auto& f : shdl::emit_hierarchy(top, outdir)) std::cout << f.string() << "\n";
  return kOk;
}

std::map<std::string, std::vector<std::uint64_t>> read_stimuli(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read stimuli file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
    return j.get<std::map<std::string, std::vector<std::uint64_t>>>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("stimuli file '" + path + "': expected an object of unsigned integer lists (" + e.what() + ")");
  }
}

struct SimArgs {
  std::string design;
  std::vector<std::string> extra;
  std::string stimuli;
  std::uint64_t seed = 1;
  std::uint64_t max_cycles = 1'000'000;
  std::string report;
  bool quiet = false;
};

int cmd_sim(const SimArgs& a) {
  const Design& d = find_design(a.design);
  auto free = split_free(a.extra, true);
  const Params p = resolve(d, free.params);
  auto top = elaborate(d, p);

  shdl::SimOptions o;
  if (a.stimuli == "random") {
    if (!d.random_inputs) throw UsageError("design '" + d.name + "' has no FIFO inputs to randomize");
    o = d.random_inputs(p, a.seed);
  } else if (!a.stimuli.empty()) {
    o.stimuli = read_stimuli(a.stimuli);
  } else {
    o = d.default_inputs(p);
  }
  for (const auto& [port, v] : free.ports) {
    const shdl::Port* port_info = top->find_port(port);
    if (!port_info || port_info->dir != shdl::PortDir::In) throw UsageError("design '" + d.name + "' has no input port '" + port + "'");
    o.inputs[port] = v;
  }
  o.max_cycles = a.max_cycles;
  if (!a.quiet) o.echo = &std::cout;

  shdl::SimReport r;
  try {
    r = shdl::run(top, o);
  } catch (const shdl::Error& e) {
    std::cerr << "simulation error: " << e.what() << "\n";
    return kSimFailure;
  }

  for (const auto& port : top->ports) {
    if (port.dir != shdl::PortDir::Out) continue;
    auto it = r.final_values.find(port.shadow.name());
    if (it != r.final_values.end()) std::cout << "Result = " << it->second << " [" << port.name << "]\n";
  }
  for (const auto& [fifo, words] : r.fifo_outputs) std::cout << fifo << ": " << words.size() << " words\n";
  if (r.done) {
    std::cout << "Done asserted at cycle " << *r.done_cycle << "; cycles_to_done: " << *r.cycles_to_done << "\n";
  }
  for (const auto& [label, span] : r.spans) {
    if (label == shdl::kRootLabel) continue;
    const auto& sec = top->sections[*top->find_section(label)];
    if (sec.is_leaf()) continue;
    if (auto n = r.span_cycles(label)) std::cout << "  " << label << ": " << *n << " cycles\n";
  }

  bool ok = r.done;
  nlohmann::json checks = nlohmann::json::array();
  if (r.deadlock) std::cout << r.deadlock->to_string() << "\n";
  if (r.done && d.verify) {
    for (const auto& c : d.verify(p, o, r)) {
      ok = ok && c.pass;
      std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << (c.detail.empty() ? "" : " (" + c.detail + ")") << "\n";
      checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    }
  }
  if (!a.report.empty()) {
    auto j = r.to_json();
    j["checks"] = checks;
    std::ofstream out(a.report);
    if (!out) {
      std::cerr << "cannot write report '" << a.report << "'\n";
      return kSimFailure;
    }
    out << j.dump(2) << "\n";
  }
  return ok ? kOk : kSimFailure;
}

int cmd_check(const std::vector<std::string>& names, const std::vector<std::string>& extra) {
  std::vector<std::string> todo = names;
  if (todo.empty()) todo = DesignRegistry::builtin().names();
  auto free = split_free(extra, false);
  bool ok = true;
  for (const auto& n : todo) {
    const Design& d = find_design(n);
    Params overrides;
    for (const auto& [k, v] : free.params) {
      if (d.defaults.count(k)) overrides[k] = v;
    }
    const Params p = resolve(d, overrides);
    try {
      for (const auto& c : d.check(p)) {
        ok = ok && c.pass;
        std::cout << (c.pass ? "PASS " : "FAIL ") << n << ": " << c.name
                  << (c.detail.empty() || c.pass ? "" : " (" + c.detail + ")") << "\n";
      }
    } catch (const shdl::Error& e) {
      ok = false;
      std::cout << "FAIL " << n << ": " << e.what() << "\n";
    }
  }
  return ok ? kOk : kSimFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shdl: elaborate, emit and simulate the bundled hardware designs"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list", "List registered designs and their parameters");

  std::string emit_design, outdir = ".";
  std::vector<std::string> emit_extra;
  auto* emit = app.add_subcommand("emit", "Write the design's Verilog hierarchy and support files");
  emit->add_option("design", emit_design, "Design name")->required();
  emit->add_option("params", emit_extra, "key=value design parameters");
  emit->add_option("-o,--outdir", outdir, "Output directory");

  SimArgs sim_args;
  auto* sim = app.add_subcommand("sim", "Simulate the design in the cycle interpreter");
  sim->add_option("design", sim_args.design, "Design name")->required();
  sim->add_option("--stimuli", sim_args.stimuli, "JSON file of FIFO input words, or 'random'");
  sim->add_option("--seed", sim_args.seed, "Seed for --stimuli random");
  sim->add_option("--max-cycles", sim_args.max_cycles, "Watchdog limit")->check(CLI::PositiveNumber);
  sim->add_option("--report", sim_args.report, "Write a JSON report to this path");
  sim->add_flag("-q,--quiet", sim_args.quiet, "Do not echo display output");
  sim->allow_extras();

  std::vector<std::string> check_names, check_extra;
  auto* check = app.add_subcommand("check", "Run the bundled assertions of one or all designs");
  check->add_option("designs", check_names, "Design names (default: all)");
  check->allow_extras();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return e.get_exit_code() == 0 ? rc : kUsage;
  }

  try {
    if (*list) return cmd_list();
    if (*emit) return cmd_emit(emit_design, emit_extra, outdir);
    if (*sim) {
      sim_args.extra = sim->remaining();
      return cmd_sim(sim_args);
    }
    if (*check) {
      // Positionals containing '=' are parameters, not design names.
      std::vector<std::string> names;
      for (const auto& n : check_names) (n.find('=') == std::string::npos ? names : check_extra).push_back(n);
      for (const auto& r : check->remaining()) check_extra.push_back(r);
      return cmd_check(names, check_extra);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSimFailure;
  }
  return kUsage;
}

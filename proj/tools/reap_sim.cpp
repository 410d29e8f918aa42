// reap-sim: read-disturbance reliability simulator for STT-MRAM caches.
//
// Exit codes: 0 success, 1 usage error, 2 input error, 3 validation failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "reap/disturbance_model.hpp"
#include "reap/reporting.hpp"
#include "reap/run_config.hpp"
#include "reap/simulation.hpp"
#include "reap/trace_io.hpp"
#include "reap/validation.hpp"

namespace fs = std::filesystem;
using namespace reap;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitInput = 2;
constexpr int kExitValidation = 3;

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << text;
  out.flush();
  if (!out) throw InputError("write failed for '" + path.string() + "'");
}

struct RunOptions {
  std::string trace;
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--trace", o.trace, "Trace file (R|W <hex-addr> [ones=N] [payload=HEX] per line)")->required();
  cmd->add_option("--config", o.config, "Config file: key = value lines, or a JSON report to rerun");
  cmd->add_option("--set", o.overrides, "Override one config key (key=value); repeatable, wins over --config");
  cmd->add_option("--out", o.out, "Output directory for report files")->required();
}

RunConfig resolve_config(const RunOptions& o) {
  RunConfig c;
  if (!o.config.empty()) load_config_file(c, o.config);
  for (const auto& kv : o.overrides) apply_override(c, kv);
  c.validate();
  return c;
}

std::ifstream open_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open trace file '" + path + "'");
  return in;
}

int cmd_model(const std::string& formula, const BlockErrorQuery& q, const DeviceParams& d, bool ratio_given,
              double i_ratio, std::uint64_t trials, std::uint64_t k_min, double failures, double sim_time) {
  Json j;
  j["formula"] = formula;
  Json in;
  double value = 0.0;
  if (formula == "single" || formula == "accumulated" || formula == "reap") {
    q.validate();
    in["p"] = q.p;
    in["n"] = q.n;
    in["reads"] = q.reads;
    in["ecc_t"] = q.ecc_t;
    if (formula == "single") {
      if (q.reads != 1) throw UsageError("--formula single takes --reads 1");
      value = block_error_probability(q);
    } else if (formula == "accumulated") {
      value = accumulated_error_probability(q);
    } else {
      value = reap_error_probability(q);
    }
  } else if (formula == "eq1") {
    DeviceParams dev = d;
    dev.p_override.reset();
    if (ratio_given) dev.i_read_ua = i_ratio * dev.i_c0_ua;
    in["t_read_ns"] = dev.t_read_ns;
    in["tau_ns"] = dev.tau_ns;
    in["delta"] = dev.delta;
    in["i_read_ua"] = dev.i_read_ua;
    in["i_c0_ua"] = dev.i_c0_ua;
    in["sign_convention"] = to_string(dev.sign_convention);
    value = read_disturbance_probability(dev);
  } else if (formula == "tail") {
    in["trials"] = trials;
    in["p"] = q.p;
    in["k_min"] = k_min;
    value = binomial_tail(trials, q.p, k_min);
  } else if (formula == "mttf") {
    in["expected_failures"] = failures;
    in["sim_time_ns"] = sim_time;
    value = mttf_from_ledger(failures, sim_time);
  }
  j["inputs"] = std::move(in);
  j["value"] = value;
  write_json(std::cout, j);
  return 0;
}

int cmd_simulate(const RunOptions& o, const std::string& scheme_flag) {
  RunOptions opts = o;
  if (!scheme_flag.empty()) opts.overrides.push_back("scheme.name=" + scheme_flag);
  const RunConfig config = resolve_config(opts);
  auto trace = open_trace(opts.trace);
  const auto result = run_trace(config, trace);
  for (const auto& [name, text] : simulate_outputs(config, result)) write_file(fs::path(opts.out) / name, text);
  const auto& l = result.schemes.at(0).ledger;
  std::cout << to_string(config.scheme.scheme) << ": accesses=" << result.accesses
            << " checked_reads=" << l.checked_reads << " concealed=" << l.concealed_increments
            << " expected_failures=" << format_real(l.expected_failures) << "\n";
  return 0;
}

int cmd_compare(const RunOptions& o) {
  const RunConfig config = resolve_config(o);
  auto trace = open_trace(o.trace);
  const Scheme schemes[] = {Scheme::ConventionalParallel, Scheme::ReapParallel};
  const auto result = run_trace(config, trace, schemes);
  const Json j = compare_json(config, result);
  write_file(fs::path(o.out) / "compare.json", to_json_text(j));
  for (const auto& s : result.schemes) {
    std::ostringstream csv;
    write_csv(csv, build_histogram(s.ledger, config.device, config.mean_ones, config.geometry.ecc_t).table());
    write_file(fs::path(o.out) / ("histogram_" + to_string(s.counters.scheme) + ".csv"), csv.str());
  }
  std::cout << "normalized_mttf=" << format_real(j["normalized_mttf"].get<double>())
            << " energy_overhead_ratio=" << format_real(j["energy_overhead_ratio"].get<double>()) << "\n";
  return 0;
}

int cmd_mc_validate(const ValidationGrid& grid, const std::string& out_json, const std::string& out_csv) {
  const auto rows = run_validation(grid);
  bool all = true;
  std::printf("%-10s %5s %6s %-13s %-19s %-19s %-19s %10s\n", "p", "n", "reads", "protocol", "analytical",
              "empirical", "stderr", "z");
  for (const auto& r : rows) {
    std::printf("%-10.3e %5u %6llu %-13s %-19s %-19s %-19s %10.3f%s\n", r.p, r.n,
                static_cast<unsigned long long>(r.reads), to_string(r.protocol).c_str(),
                format_real(r.analytical).c_str(), format_real(r.stats.uncorrectable_rate).c_str(),
                format_real(r.stats.stderr_rate).c_str(), r.z, r.passes(grid.z_limit) ? "" : "  FAIL");
    all = all && r.passes(grid.z_limit);
  }
  std::fflush(stdout);
  if (!out_json.empty()) write_file(out_json, to_json_text(validation_json(grid, rows)));
  if (!out_csv.empty()) {
    std::ostringstream csv;
    write_csv(csv, validation_table(rows));
    write_file(out_csv, csv.str());
  }
  if (!all) {
    std::cerr << "mc-validate: at least one cell exceeds |z| <= " << grid.z_limit << "\n";
    return kExitValidation;
  }
  return 0;
}

int cmd_gen_trace(SyntheticSpec spec, const std::string& ones, const std::string& config_path,
                  const std::vector<std::string>& overrides, const std::string& out) {
  RunConfig c;
  if (!config_path.empty()) load_config_file(c, config_path);
  for (const auto& kv : overrides) apply_override(c, kv);
  c.validate();
  spec.ones_model = ones.empty() ? c.default_ones : parse_ones_model(ones);
  SyntheticGenerator gen(spec, c.geometry);

  std::ostringstream text;
  text << "# reap-sim gen-trace events=" << spec.num_events << " read_fraction=" << detail::real_text(spec.read_fraction)
       << " address_space=" << spec.address_space << " skew=" << detail::real_text(spec.set_skew)
       << " ones=" << to_string(spec.ones_model) << " seed=" << spec.seed << " rng=" << kRngName
       << " block_bits=" << c.geometry.block_bits << "\n";
  while (auto ev = gen.next()) text << format_trace_line(*ev) << "\n";
  if (out == "-") {
    std::cout << text.str();
  } else {
    write_file(out, text.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reap-sim: read-disturbance reliability simulator for STT-MRAM caches"};
  app.require_subcommand(1);

  // model
  auto* model = app.add_subcommand("model", "Evaluate a reliability formula and print JSON");
  std::string formula;
  BlockErrorQuery q;
  DeviceParams dev;
  double i_ratio = 1.0;
  std::uint64_t tail_trials = 0, k_min = 0;
  double failures = 0.0, sim_time = 1.0;
  std::string convention = "standard";
  model->add_option("--formula", formula, "single | accumulated | reap | eq1 | tail | mttf")
      ->required()
      ->check(CLI::IsMember({"single", "accumulated", "reap", "eq1", "tail", "mttf"}));
  model->add_option("--p", q.p, "Per-cell per-read flip probability");
  model->add_option("--n", q.n, "Cells holding '1' in the block");
  model->add_option("--reads", q.reads, "Reads per ECC check (default 1)");
  model->add_option("--ecc-t", q.ecc_t, "Correctable bits per block (default 1)");
  model->add_option("--t-read", dev.t_read_ns, "Read pulse width, ns (eq1)");
  model->add_option("--tau", dev.tau_ns, "Attempt period, ns (eq1)");
  model->add_option("--delta", dev.delta, "Thermal stability factor (eq1)");
  auto* ratio_opt = model->add_option("--i-ratio", i_ratio, "I_read / I_c0 (eq1); overrides --i-read");
  model->add_option("--i-read", dev.i_read_ua, "Read current, uA (eq1)");
  model->add_option("--i-c0", dev.i_c0_ua, "Critical current at 0 K, uA (eq1)");
  model->add_option("--convention", convention, "Exponent form: standard | as-printed (eq1)")
      ->check(CLI::IsMember({"standard", "as-printed"}));
  model->add_option("--trials", tail_trials, "Binomial trials (tail)");
  model->add_option("--k-min", k_min, "Lower bound of the tail event (tail)");
  model->add_option("--expected-failures", failures, "Expected failure count (mttf)");
  model->add_option("--sim-time", sim_time, "Simulated time, ns (mttf)");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Run one read-path scheme over a trace and write reports");
  RunOptions sim_opts;
  std::string scheme_flag;
  add_run_options(simulate, sim_opts);
  simulate->add_option("--scheme", scheme_flag, "conventional | reap | serial (overrides scheme.name)")
      ->check(CLI::IsMember({"conventional", "reap", "serial"}));

  // compare
  auto* compare = app.add_subcommand("compare", "Run conventional and REAP read paths over one trace");
  RunOptions cmp_opts;
  add_run_options(compare, cmp_opts);

  // mc-validate
  auto* mc = app.add_subcommand("mc-validate", "Check analytical formulas against Monte Carlo fault injection");
  ValidationGrid grid;
  std::vector<std::string> protocols{"conventional", "reap"};
  std::string depletion = "rebinomial", mc_json, mc_csv;
  mc->add_option("--p-list", grid.p_values, "Flip probabilities (comma separated)")->delimiter(',');
  mc->add_option("--n-list", grid.n_values, "Ones-counts (comma separated)")->delimiter(',');
  mc->add_option("--reads-list", grid.read_values, "Reads between checks (comma separated)")->delimiter(',');
  mc->add_option("--protocols", protocols, "conventional, reap (comma separated)")
      ->delimiter(',')
      ->check(CLI::IsMember({"conventional", "reap"}));
  mc->add_option("--trials", grid.trials, "Trials per cell (default 1000000)");
  mc->add_option("--seed", grid.seed, "Base seed");
  mc->add_option("--ecc-t", grid.ecc_t, "Correctable bits per block");
  mc->add_option("--depletion", depletion, "rebinomial | physical")->check(CLI::IsMember({"rebinomial", "physical"}));
  mc->add_option("--threads", grid.workers, "Worker threads (0 = hardware concurrency)");
  mc->add_option("--z-limit", grid.z_limit, "Largest accepted |z| (default 3)");
  mc->add_option("--out", mc_json, "Write the table as JSON");
  mc->add_option("--csv", mc_csv, "Write the table as CSV");

  // gen-trace
  auto* gen = app.add_subcommand("gen-trace", "Write a deterministic synthetic trace");
  SyntheticSpec spec;
  std::string ones, gen_config, gen_out;
  std::vector<std::string> gen_overrides;
  gen->add_option("--events", spec.num_events, "Number of accesses");
  gen->add_option("--read-fraction", spec.read_fraction, "Probability an access is a read");
  gen->add_option("--address-space", spec.address_space, "Distinct blocks");
  gen->add_option("--skew", spec.set_skew, "Zipf exponent over block ranks");
  gen->add_option("--ones", ones, "fixed:<n> | uniform | from-seed (default: trace.default_ones)");
  gen->add_option("--seed", spec.seed, "Generator seed");
  gen->add_option("--config", gen_config, "Config file supplying the geometry");
  gen->add_option("--set", gen_overrides, "Override one config key (key=value); repeatable");
  gen->add_option("--out", gen_out, "Output trace path ('-' for stdout)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*model) {
      dev.sign_convention = parse_sign_convention(convention);
      return cmd_model(formula, q, dev, ratio_opt->count() > 0, i_ratio, tail_trials, k_min, failures, sim_time);
    }
    if (*simulate) return cmd_simulate(sim_opts, scheme_flag);
    if (*compare) return cmd_compare(cmp_opts);
    if (*mc) {
      grid.protocols.clear();
      for (const auto& p : protocols)
        grid.protocols.push_back(p == "reap" ? McProtocol::Reap : McProtocol::Conventional);
      grid.depletion = parse_depletion(depletion);
      return cmd_mc_validate(grid, mc_json, mc_csv);
    }
    if (*gen) return cmd_gen_trace(spec, ones, gen_config, gen_overrides, gen_out);
  } catch (const UsageError& e) {
    std::cerr << "reap-sim: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "reap-sim: " << e.what() << "\n";
    return kExitUsage;
  } catch (const TraceError& e) {
    std::cerr << "reap-sim: trace: " << e.what() << "\n";
    return kExitInput;
  } catch (const ConfigError& e) {
    std::cerr << "reap-sim: config: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "reap-sim: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitUsage;
}

#include "gridrestore_cli/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "gridrestore/errors.hpp"
#include "gridrestore/generator.hpp"
#include "gridrestore/instance.hpp"
#include "gridrestore/loadloss.hpp"
#include "gridrestore/metrics.hpp"
#include "gridrestore/rollout.hpp"

namespace gridrestore {

namespace {

namespace fs = std::filesystem;

struct RunArgs {
  std::string instance;
  std::string policy{"base"};
  std::size_t candidates{40};
  std::size_t scenarios{50};
  std::vector<std::uint64_t> seeds;
  std::optional<int> horizon;
  std::optional<double> delta_t;
  std::optional<std::string> dispatch;
  std::optional<std::string> waod_mode;
  std::optional<bool> lv_weighted;
  std::string out_dir;
};

Instance resolve_instance(const std::string& spec) {
  if (is_builtin_instance(spec) && !fs::exists(spec)) return builtin_instance(spec);
  return load_instance_file(spec);
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  return f;
}

int run_experiment(const RunArgs& args, std::ostream& out) {
  if (args.candidates < 1 || args.scenarios < 1) throw ValidationError("--candidates and --scenarios must be at least 1");
  Instance instance = resolve_instance(args.instance);
  if (args.delta_t) {
    if (!(*args.delta_t > 0.0)) throw ValidationError("--delta-t must be positive");
    instance.settings.delta_t = *args.delta_t;
  }
  if (args.dispatch) instance.settings.dispatch = *args.dispatch;
  if (args.lv_weighted) instance.settings.lv_weighted = *args.lv_weighted;
  if (args.waod_mode) {
    if (*args.waod_mode == "any_shortfall")
      instance.settings.waod_mode = WaodMode::any_shortfall;
    else if (*args.waod_mode == "full_outage")
      instance.settings.waod_mode = WaodMode::full_outage;
    else
      throw ValidationError("--waod-mode must be any_shortfall or full_outage");
  }
  if (args.horizon && *args.horizon < 1) throw ValidationError("--horizon must be at least 1");
  check_dispatch_mode(instance.settings.dispatch);

  RunOptions options;
  options.policy = parse_policy_kind(args.policy);
  options.odp.candidates = args.candidates;
  options.odp.scenarios = args.scenarios;
  options.horizon = args.horizon;

  const auto seeds = args.seeds.empty() ? std::vector<std::uint64_t>{1} : args.seeds;
  const fs::path root = args.out_dir.empty() ? fs::path("results") : fs::path(args.out_dir);
  fs::create_directories(root);

  std::vector<SeedResult> results;
  for (const auto seed : seeds) {
    options.seed = seed;
    auto record = run_online(instance, options);
    const auto metrics = compute_metrics(record, instance.network, instance.settings.delta_t, instance.settings.waod_mode);
    const fs::path dir = seeds.size() == 1 ? root : root / ("seed-" + std::to_string(seed));
    fs::create_directories(dir);
    auto periods = open_output(dir / "periods.csv");
    write_periods_csv(periods, record, instance.network);
    auto actions = open_output(dir / "actions.csv");
    write_actions_csv(actions, record);
    results.push_back({seed, metrics, std::move(record)});
  }
  auto summary = open_output(root / "summary.txt");
  write_summary(summary, instance.name, options.policy, results);
  write_summary(out, instance.name, options.policy, results);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Post-disaster distribution grid restoration runner"};
  app.require_subcommand(0, 1);

  RunArgs run;
  app.add_option("--instance", run.instance, "Instance file, or tiny6 / medium123");
  app.add_option("--policy", run.policy, "base or odp")->check(CLI::IsMember({"base", "odp"}));
  app.add_option("--candidates", run.candidates, "Candidate actions per decision");
  app.add_option("--scenarios", run.scenarios, "Sampled scenarios per decision");
  app.add_option("--seed", run.seeds, "Ground-truth seed, repeat for a sweep");
  app.add_option("--horizon", run.horizon, "Last period (exclusive)");
  app.add_option("--delta-t", run.delta_t, "Period length in hours");
  app.add_option("--dispatch", run.dispatch, "approx or exact:NAME");
  app.add_option("--waod-mode", run.waod_mode, "any_shortfall or full_outage");
  app.add_option("--lv-weighted", run.lv_weighted, "Weight load loss by shed cost (true/false)");
  app.add_option("--out", run.out_dir, "Output directory");

  GeneratorSpec gen;
  std::string gen_out;
  auto* generate = app.add_subcommand("generate", "Write a synthetic instance document");
  generate->add_option("--buses", gen.buses);
  generate->add_option("--faults", gen.faults);
  generate->add_option("--crews", gen.crews);
  generate->add_option("--megs", gen.megs);
  generate->add_option("--depots", gen.depots);
  generate->add_option("--staged", gen.staged_faults, "Faults discovered after the start");
  generate->add_option("--seed", gen.seed);
  generate->add_flag("--deterministic", gen.deterministic, "Fixed known repair times and no forecast noise");
  generate->add_option("--out", gen_out, "Output file (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (generate->parsed()) {
      const auto doc = dump_instance(generate_instance(gen));
      if (gen_out.empty()) {
        out << doc;
      } else {
        auto f = open_output(gen_out);
        f << doc;
      }
      return 0;
    }
    if (run.instance.empty()) {
      err << "error: --instance is required\n";
      return 2;
    }
    return run_experiment(run, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace gridrestore

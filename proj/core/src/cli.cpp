#include "gvps/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gvps/checkpoint.hpp"
#include "gvps/compare.hpp"
#include "gvps/config.hpp"
#include "gvps/curves.hpp"
#include "gvps/error.hpp"
#include "gvps/manifest.hpp"
#include "gvps/progress.hpp"
#include "gvps/random.hpp"
#include "gvps/signal_eval.hpp"
#include "gvps/trainer.hpp"

namespace gvps {

namespace fs = std::filesystem;

namespace {

constexpr const char* kModule = "harness";

fs::path default_out_dir() {
  const char* env = std::getenv("GVPS_OUT_DIR");
  return env && *env ? fs::path(env) : fs::path("runs");
}

struct ConfigArgs {
  std::string path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* app, const std::string& suffix = "") {
    app->add_option("--config" + suffix, path, "key=value or JSON config file");
    app->add_option("--set" + suffix, overrides, "key=value override, repeatable");
  }

  TrainConfig resolve() const {
    TrainConfig c = path.empty() ? TrainConfig{} : load_config(path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw InputError(kModule, "override must be key=value: " + kv);
      set_config_value(c, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) c.seed = *seed;
    validate(c);
    return c;
  }
};

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw InputError(kModule, "cannot write " + path.string());
  return f;
}

std::ifstream open_in(const fs::path& path, const std::string& what) {
  std::ifstream f(path);
  if (!f) throw InputError(kModule, "cannot read " + what + " " + path.string());
  return f;
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

PolicyParams policy_for(const std::string& checkpoint, const TrainConfig& config) {
  if (checkpoint.empty()) return warm_start(config);
  return load_checkpoint(checkpoint).params;
}

// Sampled rollouts for the debug dumps: problem k uses seed derive(problem_seed, k).
struct DebugRollout {
  Problem problem;
  Trajectory trajectory;
};

std::vector<DebugRollout> debug_rollouts(const PolicyParams& params, const TrainConfig& config,
                                         std::uint64_t problem_seed, int count) {
  const PolicyEvaluator evaluator(params);
  std::vector<DebugRollout> out;
  for (int k = 0; k < count; ++k) {
    DebugRollout d;
    d.problem = generate_problem(config.task, config.difficulty, derive_seed({problem_seed, 0xdb01, std::uint64_t(k)}));
    d.trajectory = sample_trajectory(evaluator, d.problem.prompt_ids, config.temperature, config.max_response_length,
                                     derive_seed({problem_seed, 0xdb02, std::uint64_t(k)}));
    out.push_back(std::move(d));
  }
  return out;
}

int cmd_train(const ConfigArgs& args, const fs::path& out_dir, const std::string& init_checkpoint,
              std::ostream& out) {
  const TrainConfig config = args.resolve();
  fs::create_directories(out_dir);
  const fs::path manifest_path = out_dir / "manifest.json";
  const fs::path metrics_path = out_dir / "metrics.jsonl";
  const fs::path checkpoint_path = out_dir / "policy.ckpt";
  const fs::path dump_path = out_dir / "rollouts.jsonl";

  RunManifest manifest;
  manifest.command = "train";
  manifest.config_text = to_config_text(config);
  manifest.seed = config.seed;
  manifest.outputs = {metrics_path.string(), checkpoint_path.string()};
  if (config.dump_every > 0) manifest.outputs.push_back(dump_path.string());
  manifest.begin(manifest_path);

  std::ofstream metrics = open_out(metrics_path);
  std::ofstream dump;
  if (config.dump_every > 0) dump = open_out(dump_path);

  TrainOptions options;
  if (!init_checkpoint.empty()) options.initial_params = load_checkpoint(init_checkpoint).params;
  options.checkpoint_out = checkpoint_path;
  options.on_metrics = [&](const TrainMetrics& m) {
    metrics << to_json_line(m, !config.reproducible) << '\n';
    metrics.flush();
  };
  if (config.dump_every > 0) options.on_dump = [&](const RolloutDump& d) { dump << to_json_line(d) << '\n'; };

  const TrainResult result = train(config, options);
  metrics.close();
  if (dump.is_open()) dump.close();
  manifest.finish(manifest_path);

  const ArmSummary s = summarize(config, result);
  out << "steps " << result.metrics.size() << "  final_accuracy " << fixed(s.final_accuracy)
      << "  mean_length " << fixed(s.final_mean_length, 2) << "  steps_to_threshold " << s.steps_to_threshold
      << "\n";
  out << "wrote " << out_dir.string() << "\n";
  return 0;
}

void print_arm(std::ostream& out, const char* name, const ArmSummary& s) {
  out << "  " << name << ": steps_to_threshold " << s.steps_to_threshold << "  final_accuracy "
      << fixed(s.final_accuracy) << "  mean_length " << fixed(s.final_mean_length, 2) << "  grad_norm_var "
      << fixed(s.grad_norm_variance, 6) << "\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"gvps: group policy optimization with verifiable process supervision"};
  app.require_subcommand(1);
  app.set_version_flag("--version", code_version());

  std::optional<std::uint64_t> seed;
  std::string out_dir_arg;

  // train
  ConfigArgs train_args;
  std::string init_checkpoint;
  auto* train_cmd = app.add_subcommand("train", "run one training config");
  train_args.attach(train_cmd);
  train_cmd->add_option("--seed", seed, "overrides the config seed");
  train_cmd->add_option("--out", out_dir_arg, "output directory");
  train_cmd->add_option("--init-checkpoint", init_checkpoint, "start from this policy instead of the warm start");

  // compare
  ConfigArgs cmp_a, cmp_b;
  int cmp_seeds = 5;
  auto* cmp_cmd = app.add_subcommand("compare", "paired multi-seed comparison of two configs");
  cmp_a.attach(cmp_cmd, "-a");
  cmp_b.attach(cmp_cmd, "-b");
  cmp_cmd->add_option("--seeds", cmp_seeds, "number of paired seeds")->check(CLI::Range(3, 1000));
  cmp_cmd->add_option("--seed", seed, "first seed for both arms");
  cmp_cmd->add_option("--out", out_dir_arg, "output directory");

  // sweep
  ConfigArgs sweep_args;
  std::vector<std::string> alpha_values, n_values;
  int sweep_seeds = 3;
  auto* sweep_cmd = app.add_subcommand("sweep", "alpha grid or n grid");
  sweep_args.attach(sweep_cmd);
  auto* alpha_opt = sweep_cmd->add_option("--alpha", alpha_values, "comma-separated alpha grid")->delimiter(',');
  auto* n_opt = sweep_cmd->add_option("--n", n_values, "comma-separated cutpoints-per-segment grid")->delimiter(',');
  alpha_opt->excludes(n_opt);
  sweep_cmd->add_option("--seeds", sweep_seeds, "seeds per grid value")->check(CLI::Range(1, 1000));
  sweep_cmd->add_option("--seed", seed, "first seed");
  sweep_cmd->add_option("--out", out_dir_arg, "output directory");

  // segment / probe
  ConfigArgs debug_args;
  std::string debug_checkpoint, debug_out;
  std::uint64_t problem_seed = 1;
  int debug_count = 1;
  auto* segment_cmd = app.add_subcommand("segment", "dump segmentation of sampled rollouts");
  auto* probe_cmd = app.add_subcommand("probe", "dump progress probes of sampled rollouts");
  for (auto* cmd : {segment_cmd, probe_cmd}) {
    debug_args.attach(cmd);
    cmd->add_option("--checkpoint", debug_checkpoint, "policy checkpoint (default: warm start from config)");
    cmd->add_option("--problem-seed", problem_seed, "seed of the problem and rollout streams");
    cmd->add_option("--count", debug_count, "number of rollouts")->check(CLI::Range(1, 100000));
    cmd->add_option("--out", debug_out, "output JSONL file (default: stdout)");
  }

  // corpus
  int corpus_n = 1000;
  double corpus_rate = 0.5;
  std::uint64_t corpus_seed = 1;
  std::string corpus_task = "chain_add";
  int corpus_difficulty = 3;
  std::string corpus_out, problems_out;
  auto* corpus_cmd = app.add_subcommand("corpus", "write a labeled step corpus");
  corpus_cmd->add_option("--problems", corpus_n, "number of problems")->check(CLI::Range(1, 10000000));
  corpus_cmd->add_option("--rate", corpus_rate, "fraction of corrupted steps");
  corpus_cmd->add_option("--seed", corpus_seed, "corpus seed");
  corpus_cmd->add_option("--task", corpus_task, "chain_add, modular_chain or compare_chain");
  corpus_cmd->add_option("--difficulty", corpus_difficulty, "reductions per problem");
  corpus_cmd->add_option("--corpus-out", corpus_out, "corpus JSONL")->required();
  corpus_cmd->add_option("--problems-out", problems_out, "problems JSONL")->required();

  // score-steps
  std::string score_checkpoint, score_corpus_path, score_problems_path, score_out;
  double dead_band = 0.0;
  auto* score_cmd = app.add_subcommand("score-steps", "classify corpus steps by the sign of dC");
  score_cmd->add_option("--checkpoint", score_checkpoint, "policy checkpoint")->required();
  score_cmd->add_option("--corpus", score_corpus_path, "corpus JSONL")->required();
  score_cmd->add_option("--problems", score_problems_path, "problems JSONL")->required();
  score_cmd->add_option("--dead-band", dead_band, "abstain when |dC| <= this")->check(CLI::NonNegativeNumber);
  score_cmd->add_option("--out", score_out, "report JSON file (default: stdout)");

  // export-curves
  std::string curves_in, curves_out;
  auto* curves_cmd = app.add_subcommand("export-curves", "metrics JSONL to CSV");
  curves_cmd->add_option("--metrics", curves_in, "metrics JSONL")->required();
  curves_cmd->add_option("--out", curves_out, "CSV path (default: metrics path with .csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error [" << kModule << "]: " << e.what() << "\n";
    return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
  }

  const fs::path out_dir = out_dir_arg.empty() ? default_out_dir() : fs::path(out_dir_arg);

  try {
    if (*train_cmd) {
      train_args.seed = seed;
      return cmd_train(train_args, out_dir, init_checkpoint, out);
    }

    if (*cmp_cmd) {
      cmp_a.seed = seed;
      cmp_b.seed = seed;
      const TrainConfig a = cmp_a.resolve();
      const TrainConfig b = cmp_b.resolve();
      if (a.seed != b.seed) throw InputError(kModule, "compare arms must share a seed (use --seed)");
      RunManifest manifest;
      manifest.command = "compare";
      manifest.config_text = to_config_text(a);
      manifest.seed = a.seed;
      manifest.outputs = {(out_dir / "summary.csv").string()};
      manifest.begin(out_dir / "manifest.json");
      {
        std::ofstream f = open_out(out_dir / "config_b.cfg");
        f << to_config_text(b);
      }
      const PairedSummary s = compare(a, b, cmp_seeds, out_dir);
      manifest.finish(out_dir / "manifest.json");
      for (const auto& row : s.rows) {
        out << "seed " << row.seed << "\n";
        print_arm(out, "a", row.a);
        print_arm(out, "b", row.b);
      }
      out << "median steps_to_threshold  a " << s.median_steps_a() << "  b " << s.median_steps_b() << "\n";
      out << "mean final length          a " << fixed(s.mean_final_length_a(), 2) << "  b "
          << fixed(s.mean_final_length_b(), 2) << "\n";
      return 0;
    }

    if (*sweep_cmd) {
      sweep_args.seed = seed;
      const TrainConfig base = sweep_args.resolve();
      const bool by_alpha = !alpha_values.empty();
      if (!by_alpha && n_values.empty()) throw InputError(kModule, "sweep needs --alpha or --n");
      const std::string key = by_alpha ? "alpha" : "n";
      RunManifest manifest;
      manifest.command = "sweep " + key;
      manifest.config_text = to_config_text(base);
      manifest.seed = base.seed;
      manifest.outputs = {(out_dir / "sweep.csv").string()};
      manifest.begin(out_dir / "manifest.json");
      const auto rows = sweep(base, key, by_alpha ? alpha_values : n_values, sweep_seeds, out_dir);
      manifest.finish(out_dir / "manifest.json");
      for (const auto& r : rows) {
        out << key << "=" << r.value << " seed " << r.seed << "  final_accuracy " << fixed(r.summary.final_accuracy)
            << "  steps_to_threshold " << r.summary.steps_to_threshold << "\n";
      }
      return 0;
    }

    if (*segment_cmd || *probe_cmd) {
      debug_args.seed = seed;
      const TrainConfig config = debug_args.resolve();
      const PolicyParams params = policy_for(debug_checkpoint, config);
      const PolicyEvaluator evaluator(params);
      std::ofstream file;
      if (!debug_out.empty()) file = open_out(debug_out);
      std::ostream& sink = debug_out.empty() ? out : file;
      const Vocab& vocab = Vocab::arithmetic();
      for (const auto& d : debug_rollouts(params, config, problem_seed, debug_count)) {
        nlohmann::ordered_json j;
        j["problem_id"] = d.problem.id;
        j["tokens"] = vocab.decode(d.trajectory.response_ids);
        j["reward"] = verify(d.problem, d.trajectory.response_ids);
        const auto delim = last_answer_delim(d.trajectory.response_ids);
        if (delim && *delim == 0) {
          j["boundaries"] = std::vector<int>{1};
          if (*segment_cmd) j["entropies"] = std::vector<double>{};
          sink << j.dump() << '\n';
          continue;
        }
        const SegmentedTrajectory seg = segment_reasoning(d.trajectory, config);
        if (*segment_cmd) {
          const CutpointSet cut = find_cutpoints(seg.trajectory, config.percentile_p);
          j["entropies"] = seg.trajectory.entropies;
          j["tau"] = cut.threshold_tau;
          j["cutpoints"] = cut.positions;
          j["boundaries"] = seg.boundaries;
          j["strategy"] = std::string(to_string(seg.strategy));
        } else {
          const ProgressTrace trace = compute_progress(evaluator, seg, d.problem.gold_answer_ids);
          j["boundaries"] = seg.boundaries;
          j["c_values"] = trace.c_values;
          j["deltas"] = trace.deltas;
        }
        sink << j.dump() << '\n';
      }
      return 0;
    }

    if (*corpus_cmd) {
      CorpusOptions opts;
      opts.kind = parse_task_kind(corpus_task);
      opts.difficulty = corpus_difficulty;
      const LabeledCorpus corpus = generate_labeled_corpus(corpus_n, corpus_rate, corpus_seed, opts);
      std::ofstream c = open_out(corpus_out);
      write_corpus_jsonl(c, corpus);
      std::ofstream p = open_out(problems_out);
      write_problems_jsonl(p, corpus.problems);
      out << "wrote " << corpus.steps.size() << " steps over " << corpus.problems.size() << " problems\n";
      return 0;
    }

    if (*score_cmd) {
      const Checkpoint ckpt = load_checkpoint(score_checkpoint);
      std::ifstream c = open_in(score_corpus_path, "corpus");
      std::ifstream p = open_in(score_problems_path, "problems");
      const LabeledCorpus corpus = read_corpus_jsonl(c, p);
      const std::string report = to_json(score_corpus(ckpt.params, corpus, dead_band));
      if (score_out.empty()) {
        out << report << '\n';
      } else {
        std::ofstream f = open_out(score_out);
        f << report << '\n';
      }
      return 0;
    }

    if (*curves_cmd) {
      fs::path csv = curves_out.empty() ? fs::path(curves_in).replace_extension(".csv") : fs::path(curves_out);
      const std::size_t rows = export_curves(fs::path(curves_in), csv);
      out << "wrote " << rows << " rows to " << csv.string() << "\n";
      return 0;
    }
  } catch (const Error& e) {
    err << "error [" << e.module() << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error [" << kModule << "]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace gvps

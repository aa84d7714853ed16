#include "faec/cli/commands.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "faec/errors.hpp"
#include "faec/io.hpp"
#include "faec/numerics/rng.hpp"
#include "faec/transceiver/checkpoint.hpp"

namespace faec::cli {

namespace {

std::string distance_tag(double km) {
  std::string s = format_double(km);
  for (char& c : s) {
    if (c == '.') c = 'p';
  }
  return s;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw FormatError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

TrainReport run_training(Transceiver& model, const RunConfig& c, std::ostream& log,
                         const std::string& tag) {
  log << "[" << tag << "] training " << to_string(c.model.kind) << " M=" << c.model.messages
      << " at " << c.channel().distance_km << " km for " << c.train.iterations << " iterations\n";
  TrainReport report = train(model, c.train, [&](const TrainRecord& r) {
    char line[128];
    std::snprintf(line, sizeof line, "[%s] it %llu loss %.5f bler %.4f\n", tag.c_str(),
                  static_cast<unsigned long long>(r.iteration), r.loss, r.block_error_rate);
    log << line << std::flush;
  });
  log << "[" << tag << "] done in " << report.wall_seconds << " s, loss " << report.initial_loss
      << " -> " << report.final_loss << "\n";
  return report;
}

SweepRow ber_row(double distance, ModelKind kind, std::size_t window, std::uint64_t seed,
                 const BerResult& r) {
  SweepRow row;
  row.distance_km = distance;
  row.kind = kind;
  row.window = window;
  row.ber = r.ber;
  row.ci95_lo = r.ci95.lo;
  row.ci95_hi = r.ci95.hi;
  row.bit_errors = r.bit_errors;
  row.bits_total = r.bits_total;
  row.blocks = r.blocks_total;
  row.seed = seed;
  return row;
}

}  // namespace

std::uint64_t sweep_cell_seed(std::uint64_t seed, ModelKind kind, double distance_km) {
  RngStream s = RngStream::derive(seed, StreamPurpose::eval_messages,
                                  {static_cast<std::uint64_t>(kind),
                                   std::bit_cast<std::uint64_t>(distance_km)});
  return s.next_u64();
}

TrainOutcome cmd_train(const ConfigFile& file, const Overrides& overrides, std::ostream& log) {
  TrainOutcome out;
  out.config = resolve(file, required_model_kind(file), overrides);
  const RunConfig& c = out.config;
  const std::string kind(to_string(c.model.kind));
  out.checkpoint = c.out_dir / (kind + ".faec");
  out.loss_csv = c.out_dir / (kind + "_train.csv");
  out.summary = c.out_dir / (kind + "_summary.json");

  Transceiver model = Transceiver::create(c.model, c.seed);
  out.report = run_training(model, c, log, "train");

  ensure_dir(c.out_dir);
  save_checkpoint(model, c.channel(), out.checkpoint);
  out.report.checkpoint_path = out.checkpoint.string();
  write_file_atomic(out.loss_csv, train_csv(out.report));
  write_file_atomic(out.summary,
                    train_summary_json(c, out.report, out.checkpoint.filename().string()));
  log << "[train] wrote " << out.checkpoint.string() << ", " << out.loss_csv.string() << ", "
      << out.summary.string() << "\n";
  return out;
}

BerResult cmd_evaluate(const ConfigFile& file, const Overrides& overrides,
                       const std::filesystem::path& checkpoint, std::ostream& out,
                       std::ostream& log) {
  if (checkpoint.empty()) throw ConfigError("checkpoint: required field is missing (--checkpoint)");
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const Architecture& arch = ckpt.model.architecture();
  if (apply_model_keys(file, arch) != arch) {
    throw FormatError("checkpoint '" + checkpoint.string() +
                      "' does not match the [model] settings of the config");
  }
  const RunConfig c = resolve(file, arch.kind, overrides);
  ChannelConfig channel = apply_channel_keys(file, ckpt.training_channel);
  if (overrides.distance_km) channel.distance_km = *overrides.distance_km;
  channel.validate();

  log << "[evaluate] " << to_string(arch.kind) << " at " << channel.distance_km << " km, window "
      << c.eval.window_size << "\n";
  const BerResult r = evaluate_ber(ckpt.model, channel, c.eval);
  const std::string json = ber_json(r, channel, c.eval.window_size, c.eval.seed);
  out << json;
  if (overrides.out_dir || file.has("run.out")) {
    ensure_dir(c.out_dir);
    write_file_atomic(c.out_dir / "evaluate.json", json);
  }
  return r;
}

SweepResult cmd_sweep(const ConfigFile& file, const Overrides& overrides, bool retrain,
                      std::ostream& log) {
  const RunConfig ffnn = resolve(file, ModelKind::ffnn, overrides);
  const RunConfig brnn = resolve(file, ModelKind::brnn, overrides);
  retrain = retrain || ffnn.sweep.retrain;
  if (ffnn.sweep.distances_km.empty()) throw ConfigError("sweep.distances: required field is missing");
  if (!retrain) {
    if (ffnn.sweep.ffnn_checkpoint.empty()) {
      throw ConfigError("sweep.ffnn_checkpoint: required field is missing (or set sweep.retrain)");
    }
    if (ffnn.sweep.brnn_checkpoint.empty()) {
      throw ConfigError("sweep.brnn_checkpoint: required field is missing (or set sweep.retrain)");
    }
  }
  ensure_dir(ffnn.out_dir);

  SweepResult result;
  for (const RunConfig* base : {&ffnn, &brnn}) {
    const ModelKind kind = base->model.kind;
    const std::string name(to_string(kind));
    std::optional<Checkpoint> shared;
    std::string load_error;
    if (!retrain) {
      try {
        shared = load_checkpoint(kind == ModelKind::ffnn ? base->sweep.ffnn_checkpoint
                                                          : base->sweep.brnn_checkpoint);
        if (shared->model.kind() != kind) {
          throw FormatError("checkpoint holds a " + std::string(to_string(shared->model.kind())) +
                            " model");
        }
      } catch (const std::exception& e) {
        shared.reset();
        load_error = e.what();
      }
    }
    for (double d : base->sweep.distances_km) {
      RunConfig c = *base;
      c.eval.seed = sweep_cell_seed(c.seed, kind, d);
      SweepRow row = ber_row(d, kind, c.eval.window_size, c.eval.seed, {});
      try {
        ChannelConfig channel;
        BerResult r;
        if (retrain) {
          c.train.channel.distance_km = d;
          Transceiver model = Transceiver::create(c.model, c.seed);
          run_training(model, c, log, name + "@" + format_double(d) + "km");
          save_checkpoint(model, c.channel(),
                          c.out_dir / (name + "_" + distance_tag(d) + "km.faec"));
          r = evaluate_ber(model, c.channel(), c.eval);
          channel = c.channel();
        } else {
          if (!shared) throw FormatError(load_error);
          channel = apply_channel_keys(file, shared->training_channel);
          channel.distance_km = d;
          r = evaluate_ber(shared->model, channel, c.eval);
        }
        row = ber_row(d, kind, c.eval.window_size, c.eval.seed, r);
        log << "[sweep] " << name << " " << d << " km: ber " << r.ber << " [" << r.ci95.lo << ", "
            << r.ci95.hi << "] over " << r.blocks_total << " blocks\n";
      } catch (const std::exception& e) {
        row.status = std::string("failed: ") + e.what();
        log << "[sweep] " << name << " " << d << " km failed: " << e.what() << "\n";
      }
      result.rows.push_back(row);
    }
  }
  sort_rows(result.rows);
  write_file_atomic(ffnn.out_dir / "sweep.csv", sweep_csv(result));
  log << "[sweep] wrote " << (ffnn.out_dir / "sweep.csv").string() << "\n";
  return result;
}

GradSuiteReport cmd_gradcheck(GradScope scope, std::ostream& out) {
  const GradSuiteReport report = run_grad_suite(grad_cases(scope));
  out << format_grad_report(report);
  out << (report.pass() ? "gradcheck: PASS" : "gradcheck: FAIL") << " (" << report.total_probes()
      << " probes)\n";
  return report;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"faec: differentiable IM/DD auto-encoder simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string profile;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::size_t window = 0;
  double distance = 0.0;
  std::uint64_t min_errors = 0;
  std::uint64_t max_blocks = 0;
  std::string checkpoint;
  std::string scope = "all";
  bool retrain = false;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Config file");
    sub->add_option("--profile", profile, "full or desk");
    sub->add_option("--seed", seed, "Run seed");
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--window", window, "Sliding window size in blocks");
    sub->add_option("--distance", distance, "Fiber length in km");
    sub->add_option("--min-errors", min_errors, "Stop after this many bit errors");
    sub->add_option("--max-blocks", max_blocks, "Block budget per evaluation");
  };
  CLI::App* train_cmd = app.add_subcommand("train", "Train a transceiver");
  common(train_cmd);
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "Monte-Carlo BER of a checkpoint");
  common(eval_cmd);
  eval_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file");
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "BER versus distance for both models");
  common(sweep_cmd);
  sweep_cmd->add_flag("--retrain", retrain, "Train a fresh model per distance");
  CLI::App* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient suites");
  grad_cmd->add_option("--scope", scope, "ops, chain, e2e or all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    auto given = [&](const char* flag) { return sub->get_option_no_throw(flag) && sub->count(flag) > 0; };
    Overrides o;
    if (given("--profile")) o.profile = parse_profile(profile);
    if (given("--seed")) o.seed = seed;
    if (given("--out")) o.out_dir = out_dir;
    if (given("--window")) o.window = window;
    if (given("--distance")) o.distance_km = distance;
    if (given("--min-errors")) o.min_errors = min_errors;
    if (given("--max-blocks")) o.max_blocks = max_blocks;
    const ConfigFile file = config_path.empty() ? ConfigFile{} : ConfigFile::load(config_path);

    if (sub == train_cmd) {
      cmd_train(file, o, err);
    } else if (sub == eval_cmd) {
      cmd_evaluate(file, o, checkpoint, out, err);
    } else if (sub == sweep_cmd) {
      const SweepResult r = cmd_sweep(file, o, retrain, err);
      for (const SweepRow& row : r.rows) {
        if (!row.ok()) return kExitFailure;
      }
    } else {
      const GradSuiteReport report = cmd_gradcheck(parse_grad_scope(scope), out);
      if (!report.pass()) {
        err << "error: gradient check failed, worst offender " << report.worst()->name << "\n";
        return kExitFailure;
      }
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace faec::cli

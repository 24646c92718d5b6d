// Command-line front end: data generation, training in both regimes,
// pairwise and population alignment baselines, prior sampling, evaluation,
// and SVG export. Exit codes: 0 success, 2 usage/input error, 3 numeric
// failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "srvfnet/checkpoint.hpp"
#include "srvfnet/csv_io.hpp"
#include "srvfnet/dataset.hpp"
#include "srvfnet/diffeo.hpp"
#include "srvfnet/elastic.hpp"
#include "srvfnet/errors.hpp"
#include "srvfnet/function.hpp"
#include "srvfnet/kv_config.hpp"
#include "srvfnet/model.hpp"
#include "srvfnet/parallel.hpp"
#include "srvfnet/rng.hpp"
#include "srvfnet/svg_plot.hpp"
#include "srvfnet/training.hpp"

namespace {

using json = nlohmann::json;
using namespace srvfnet;

std::uint64_t os_entropy() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

// Values from a key=value config file fill in flags the user did not pass.
class ConfigBinding {
 public:
  void bind(CLI::Option* opt, const std::string& key,
            std::function<void(const std::string&)> set) {
    options_[key] = opt;
    setters_[key] = std::move(set);
  }

  void apply(const std::string& path) {
    if (path.empty()) return;
    for (const auto& [key, value] : read_kv_config(path)) {
      const auto it = setters_.find(key);
      if (it == setters_.end()) {
        throw ParseError("config: unknown key '" + key + "'");
      }
      const CLI::Option* opt = options_.at(key);
      if (opt && opt->count() > 0) continue;  // explicit flag wins
      it->second(value);
    }
  }

 private:
  std::map<std::string, std::function<void(const std::string&)>> setters_;
  std::map<std::string, CLI::Option*> options_;
};

double parse_double(const std::string& s) {
  size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw ParseError("config: bad number '" + s + "'");
  return v;
}

long long parse_int(const std::string& s) {
  size_t used = 0;
  const long long v = std::stoll(s, &used);
  if (used != s.size()) throw ParseError("config: bad integer '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  size_t used = 0;
  const std::uint64_t v = std::stoull(s, &used);
  if (used != s.size()) throw ParseError("config: bad integer '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s) {
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw ParseError("config: bad boolean '" + s + "'");
}

int csv_row_width(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    int cols = 1;
    for (char c : line) cols += (c == ',');
    return cols;
  }
  throw ParseError("no data rows in " + path);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ParseError("cannot create output directory " + dir);
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open " + path);
  out << j.dump(1) << '\n';
}

Eigen::MatrixXd rows_from(const std::vector<Srvf>& qs) {
  return stack_rows(qs);
}

Eigen::MatrixXd rows_from(const std::vector<Diffeo>& gs) {
  Eigen::MatrixXd m(static_cast<int>(gs.size()), gs.front().size());
  for (int i = 0; i < m.rows(); ++i) m.row(i) = gs[i].values.transpose();
  return m;
}

Srvf read_unit_srvf(const std::string& path, int expected_size,
                    const char* what) {
  const Eigen::MatrixXd m = read_csv(path);
  if (m.rows() != 1 || m.cols() != expected_size) {
    throw DimensionError(std::string(what) + ": expected one row of " +
                         std::to_string(expected_size) + " values");
  }
  Srvf q{m.row(0).transpose(), true};
  if (std::abs(trapz_norm_sq(q.values) - 1.0) > 1e-6) {
    throw PreconditionError(std::string(what) + ": row is not a unit-norm SRVF");
  }
  return q;
}

json breakdown_json(const LossBreakdown& b) {
  return json{{"total", b.total}, {"fr", b.fr},   {"kl", b.kl},
              {"grad", b.grad},   {"grad2", b.grad2}};
}

// Shared state for the two training subcommands.
struct TrainCli {
  std::string config, data, template_path, out, test_data;
  std::uint64_t seed = 0;
  int workers = 1;
  bool deterministic = false;
  int epochs = 300;
  int latent_dim = 16;
  int batch_size = 512;
  double lr = 1e-3;
  double lambda_fr = 1.0, lambda_kl = 1e-2, lambda_grad = 1e-3,
         lambda_grad2 = 1e-4;
  int tsmooth = 0;  // 0 = default max(10, T/10)
  int checkpoint_interval = 0;
  bool stop_template_gradient = false;
  CLI::Option* seed_opt = nullptr;

  void register_options(CLI::App* cmd, ConfigBinding& cfg, bool fixed) {
    cmd->add_option("--config", config, "key=value config file");
    auto* o_data =
        cmd->add_option("--data", data, "training profiles CSV")->required();
    cfg.bind(o_data, "data", [this](const std::string& v) { data = v; });
    if (fixed) {
      auto* o_tpl = cmd->add_option("--template", template_path,
                                    "template SRVF CSV (one unit-norm row)");
      cfg.bind(o_tpl, "template",
               [this](const std::string& v) { template_path = v; });
    }
    auto* o_out = cmd->add_option("--out", out, "output directory")->required();
    cfg.bind(o_out, "out", [this](const std::string& v) { out = v; });
    seed_opt = cmd->add_option("--seed", seed, "rng seed (default: OS entropy)");
    cfg.bind(seed_opt, "seed",
             [this](const std::string& v) { seed = parse_u64(v); seeded_by_config = true; });
    auto* o_workers = cmd->add_option("--workers", workers, "thread fan-out");
    cfg.bind(o_workers, "workers",
             [this](const std::string& v) { workers = static_cast<int>(parse_int(v)); });
    auto* o_det = cmd->add_flag("--deterministic", deterministic,
                                "force single-threaded reductions");
    cfg.bind(o_det, "deterministic",
             [this](const std::string& v) { deterministic = parse_bool(v); });
    auto* o_epochs = cmd->add_option("--epochs", epochs, "training epochs");
    cfg.bind(o_epochs, "epochs",
             [this](const std::string& v) { epochs = static_cast<int>(parse_int(v)); });
    auto* o_latent = cmd->add_option("--latent-dim", latent_dim, "latent size");
    cfg.bind(o_latent, "latent-dim",
             [this](const std::string& v) { latent_dim = static_cast<int>(parse_int(v)); });
    auto* o_batch = cmd->add_option("--batch-size", batch_size, "batch size");
    cfg.bind(o_batch, "batch-size",
             [this](const std::string& v) { batch_size = static_cast<int>(parse_int(v)); });
    auto* o_lr = cmd->add_option("--lr", lr, "Adam learning rate");
    cfg.bind(o_lr, "lr", [this](const std::string& v) { lr = parse_double(v); });
    auto* o_fr = cmd->add_option("--lambda-fr", lambda_fr, "FR weight");
    cfg.bind(o_fr, "lambda-fr",
             [this](const std::string& v) { lambda_fr = parse_double(v); });
    auto* o_kl = cmd->add_option("--lambda-kl", lambda_kl, "KL weight");
    cfg.bind(o_kl, "lambda-kl",
             [this](const std::string& v) { lambda_kl = parse_double(v); });
    auto* o_g = cmd->add_option("--lambda-grad", lambda_grad,
                                "first-derivative weight");
    cfg.bind(o_g, "lambda-grad",
             [this](const std::string& v) { lambda_grad = parse_double(v); });
    auto* o_g2 = cmd->add_option("--lambda-grad2", lambda_grad2,
                                 "second-derivative weight");
    cfg.bind(o_g2, "lambda-grad2",
             [this](const std::string& v) { lambda_grad2 = parse_double(v); });
    auto* o_ts = cmd->add_option("--tsmooth", tsmooth,
                                 "smoothing grid size (0 = auto)");
    cfg.bind(o_ts, "tsmooth",
             [this](const std::string& v) { tsmooth = static_cast<int>(parse_int(v)); });
    cfg.bind(nullptr, "test-data",
             [this](const std::string& v) { test_data = v; });
    cfg.bind(nullptr, "checkpoint-interval", [this](const std::string& v) {
      checkpoint_interval = static_cast<int>(parse_int(v));
    });
    if (!fixed) {
      auto* o_stop = cmd->add_flag("--stop-template-gradient",
                                   stop_template_gradient,
                                   "do not differentiate the batch template");
      cfg.bind(o_stop, "stop-template-gradient", [this](const std::string& v) {
        stop_template_gradient = parse_bool(v);
      });
    }
  }

  bool seeded() const { return seed_opt->count() > 0 || seeded_by_config; }
  bool seeded_by_config = false;
};

int run_training(TrainCli& cli, ConfigBinding& cfg_binding, Regime regime) {
  cfg_binding.apply(cli.config);
  ensure_dir(cli.out);
  const std::string out = cli.out + "/";

  const int t = csv_row_width(cli.data);
  Dataset dataset = load_profiles_csv(cli.data, t);
  if (dataset.size() == 0) {
    throw PreconditionError("training data is empty after exclusions");
  }
  if (!dataset.excluded_rows.empty()) {
    std::cerr << "excluded " << dataset.excluded_rows.size()
              << " degenerate row(s) from " << cli.data << "\n";
  }

  TrainConfig cfg;
  cfg.batch_size = cli.batch_size;
  cfg.learning_rate = cli.lr;
  cfg.epochs = cli.epochs;
  cfg.latent_dim = cli.latent_dim;
  cfg.pi = PiConfig::defaults(t);
  if (cli.tsmooth > 0) cfg.pi.smooth_size = cli.tsmooth;
  cfg.weights = LossWeights{cli.lambda_fr, cli.lambda_kl, cli.lambda_grad,
                            cli.lambda_grad2};
  cfg.seed = cli.seeded() ? cli.seed : os_entropy();
  cfg.regime = regime;
  cfg.stop_template_gradient = cli.stop_template_gradient;
  cfg.checkpoint_interval = cli.checkpoint_interval;
  cfg.workers = cli.deterministic ? 1 : cli.workers;
  if (regime == Regime::kFixedTemplate) {
    if (cli.template_path.empty()) {
      throw PreconditionError("train-fixed: --template is required");
    }
    cfg.target = read_unit_srvf(cli.template_path, t, "template");
  }

  std::ofstream log(out + "train_log.csv");
  if (!log) throw ParseError("cannot open " + out + "train_log.csv");
  log << "epoch,total,fr,kl,grad,grad2,wall_seconds\n";
  char buf[192];

  TrainHooks hooks;
  hooks.on_epoch = [&](int epoch, const LossBreakdown& b, double wall) {
    std::snprintf(buf, sizeof(buf),
                  "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.3f\n", epoch, b.total,
                  b.fr, b.kl, b.grad, b.grad2, wall);
    log << buf;
    log.flush();
  };
  hooks.on_checkpoint = [&](const ModelParams& params, int epoch) {
    (void)epoch;
    save_checkpoint(out + "checkpoint.json", params, cfg);
  };

  const TrainReport report = train(dataset.srvfs, cfg, hooks);

  json summary;
  summary["seed"] = cfg.seed;
  summary["epochs"] = report.epochs_completed;
  summary["wall_seconds"] = report.wall_seconds;
  summary["n_train"] = dataset.size();
  summary["grid_size"] = t;
  summary["latent_dim"] = cfg.latent_dim;
  summary["excluded_rows"] = dataset.excluded_rows;
  if (!report.trace.empty()) {
    summary["final"] = breakdown_json(report.trace.back());
  }

  if (regime == Regime::kTemplatePrediction) {
    Srvf predicted;
    eval_loss(dataset.srvfs, report.params, cfg, &predicted);
    write_csv(out + "predicted_template.csv", predicted.values.transpose());
    summary["template_norm_sq"] = trapz_norm_sq(predicted.values);
  }

  if (!cli.test_data.empty()) {
    Dataset test = load_profiles_csv(cli.test_data, t);
    if (test.size() > 0) {
      summary["test"] = breakdown_json(
          eval_loss(test.srvfs, report.params, cfg));
      summary["n_test"] = test.size();
    }
  }

  write_json(out + "summary.json", summary);
  return 0;
}

void setup_gen_data(CLI::App& app) {
  auto cmd = app.add_subcommand("gen-data", "generate synthetic bump profiles");
  auto cli = std::make_shared<ConfigBinding>();
  struct Opts {
    std::string config, out;
    int n = 2000, n_test = 0, peaks = 2, grid = 300, workers = 1;
    std::uint64_t seed = 0;
    double jitter = -1.0;  // negative = default 0.3 / peaks
    CLI::Option* seed_opt = nullptr;
    bool seeded_by_config = false;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--config", o->config, "key=value config file");
  auto* oo = cmd->add_option("--out", o->out, "output directory")->required();
  cli->bind(oo, "out", [o](const std::string& v) { o->out = v; });
  auto* on = cmd->add_option("--n", o->n, "number of functions");
  cli->bind(on, "n", [o](const std::string& v) { o->n = static_cast<int>(parse_int(v)); });
  auto* ont = cmd->add_option("--n-test", o->n_test, "extra held-out corpus");
  cli->bind(ont, "n-test",
            [o](const std::string& v) { o->n_test = static_cast<int>(parse_int(v)); });
  auto* op = cmd->add_option("--peaks", o->peaks, "bumps per function");
  cli->bind(op, "peaks",
            [o](const std::string& v) { o->peaks = static_cast<int>(parse_int(v)); });
  auto* og = cmd->add_option("--grid", o->grid, "grid size T");
  cli->bind(og, "grid",
            [o](const std::string& v) { o->grid = static_cast<int>(parse_int(v)); });
  o->seed_opt = cmd->add_option("--seed", o->seed, "rng seed");
  cli->bind(o->seed_opt, "seed", [o](const std::string& v) {
    o->seed = parse_u64(v);
    o->seeded_by_config = true;
  });
  auto* ow = cmd->add_option("--workers", o->workers, "thread fan-out");
  cli->bind(ow, "workers",
            [o](const std::string& v) { o->workers = static_cast<int>(parse_int(v)); });
  cli->bind(nullptr, "jitter",
            [o](const std::string& v) { o->jitter = parse_double(v); });

  cmd->callback([cli, o]() {
    cli->apply(o->config);
    ensure_dir(o->out);
    const std::uint64_t seed =
        (o->seed_opt->count() > 0 || o->seeded_by_config) ? o->seed
                                                          : os_entropy();
    BumpSpec spec = BumpSpec::defaults(o->peaks, o->grid, seed);
    if (o->jitter >= 0.0) spec.center_jitter = o->jitter;

    const Dataset train = generate_bumps(spec, o->n, o->workers);
    Eigen::MatrixXd rows(train.size(), o->grid);
    for (int i = 0; i < train.size(); ++i) {
      rows.row(i) = train.raw[i].values.transpose();
    }
    write_csv(o->out + "/data.csv", rows);

    json manifest;
    manifest["n"] = o->n;
    manifest["n_test"] = o->n_test;
    manifest["grid_size"] = o->grid;
    manifest["seed"] = seed;
    manifest["spec"] = {{"num_peaks", spec.num_peaks},
                        {"amplitude_range", spec.amplitude_range},
                        {"center_jitter", spec.center_jitter},
                        {"width_range", spec.width_range}};
    manifest["excluded_rows"] = json::array();

    if (o->n_test > 0) {
      BumpSpec test_spec = spec;
      test_spec.seed = derive_seed(seed, 0x7e57);
      const Dataset test = generate_bumps(test_spec, o->n_test, o->workers);
      Eigen::MatrixXd test_rows(test.size(), o->grid);
      for (int i = 0; i < test.size(); ++i) {
        test_rows.row(i) = test.raw[i].values.transpose();
      }
      write_csv(o->out + "/test.csv", test_rows);
      manifest["test_seed"] = test_spec.seed;
    }
    write_json(o->out + "/manifest.json", manifest);
  });
}

void setup_train(CLI::App& app, bool fixed) {
  auto cmd = app.add_subcommand(
      fixed ? "train-fixed" : "train-template",
      fixed ? "train warps toward a fixed template"
            : "train warps and the template jointly");
  auto binding = std::make_shared<ConfigBinding>();
  auto cli = std::make_shared<TrainCli>();
  cli->register_options(cmd, *binding, fixed);
  cmd->callback([binding, cli, fixed]() {
    run_training(*cli, *binding,
                 fixed ? Regime::kFixedTemplate : Regime::kTemplatePrediction);
  });
}

void setup_align_pair(CLI::App& app) {
  auto cmd = app.add_subcommand("align-pair",
                                "dynamic-programming alignment of two rows");
  auto binding = std::make_shared<ConfigBinding>();
  struct Opts {
    std::string config, data, out;
    int slope_window = 3;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--config", o->config, "key=value config file");
  auto* od = cmd->add_option("--data", o->data, "CSV with exactly two rows")
                 ->required();
  binding->bind(od, "data", [o](const std::string& v) { o->data = v; });
  auto* oo = cmd->add_option("--out", o->out, "output directory")->required();
  binding->bind(oo, "out", [o](const std::string& v) { o->out = v; });
  binding->bind(nullptr, "slope-window", [o](const std::string& v) {
    o->slope_window = static_cast<int>(parse_int(v));
  });

  cmd->callback([binding, o]() {
    binding->apply(o->config);
    const Eigen::MatrixXd m = read_csv(o->data);
    if (m.rows() != 2) {
      throw PreconditionError("align-pair: input must have exactly two rows");
    }
    ensure_dir(o->out);
    const int t = static_cast<int>(m.cols());
    const Srvf qf = to_srvf(SampledFunction{m.row(0).transpose()}, true);
    const Srvf qg = to_srvf(SampledFunction{m.row(1).transpose()}, true);
    DpConfig cfg = DpConfig::defaults(t);
    cfg.slope_window = o->slope_window;
    const DpResult res = dp_align(qf, qg, cfg);
    const Srvf warped = warp_srvf(qg, res.warp);

    write_csv(o->out + "/gamma.csv", res.warp.values.transpose());
    write_csv(o->out + "/warped_srvf.csv", warped.values.transpose());
    json summary;
    summary["cost"] = res.cost;
    summary["unaligned_cost"] = trapz_norm_sq(qf.values - qg.values);
    summary["grid_size"] = t;
    write_json(o->out + "/summary.json", summary);
  });
}

void setup_karcher(CLI::App& app) {
  auto cmd = app.add_subcommand("karcher-mean",
                                "iterative elastic mean of a population");
  auto binding = std::make_shared<ConfigBinding>();
  struct Opts {
    std::string config, data, out;
    int workers = 1, max_iter = 50, slope_window = 3;
    double tol = 1e-4;
    bool deterministic = false;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--config", o->config, "key=value config file");
  auto* od = cmd->add_option("--data", o->data, "profiles CSV")->required();
  binding->bind(od, "data", [o](const std::string& v) { o->data = v; });
  auto* oo = cmd->add_option("--out", o->out, "output directory")->required();
  binding->bind(oo, "out", [o](const std::string& v) { o->out = v; });
  auto* ow = cmd->add_option("--workers", o->workers, "thread fan-out");
  binding->bind(ow, "workers",
                [o](const std::string& v) { o->workers = static_cast<int>(parse_int(v)); });
  auto* odt = cmd->add_flag("--deterministic", o->deterministic,
                            "force single-threaded reductions");
  binding->bind(odt, "deterministic",
                [o](const std::string& v) { o->deterministic = parse_bool(v); });
  binding->bind(nullptr, "max-iter", [o](const std::string& v) {
    o->max_iter = static_cast<int>(parse_int(v));
  });
  binding->bind(nullptr, "tol",
                [o](const std::string& v) { o->tol = parse_double(v); });
  binding->bind(nullptr, "slope-window", [o](const std::string& v) {
    o->slope_window = static_cast<int>(parse_int(v));
  });

  cmd->callback([binding, o]() {
    binding->apply(o->config);
    const int t = csv_row_width(o->data);
    Dataset d = load_profiles_csv(o->data, t);
    if (d.size() == 0) throw PreconditionError("karcher-mean: empty data");
    ensure_dir(o->out);
    DpConfig cfg = DpConfig::defaults(t);
    cfg.slope_window = o->slope_window;
    const KarcherResult res =
        karcher_mean(d.srvfs, cfg, o->max_iter, o->tol,
                     o->deterministic ? 1 : o->workers);

    write_csv(o->out + "/mean_srvf.csv", res.mean.values.transpose());
    write_csv(o->out + "/warps.csv", rows_from(res.warps));
    Eigen::MatrixXd trace(static_cast<int>(res.objective_trace.size()), 1);
    for (int i = 0; i < trace.rows(); ++i) trace(i, 0) = res.objective_trace[i];
    write_csv(o->out + "/objective_trace.csv", trace, {"objective"});
    json summary;
    summary["iterations"] = res.iterations;
    summary["converged"] = res.converged;
    summary["final_objective"] =
        res.objective_trace.empty() ? 0.0 : res.objective_trace.back();
    summary["n"] = d.size();
    summary["grid_size"] = t;
    summary["excluded_rows"] = d.excluded_rows;
    write_json(o->out + "/summary.json", summary);
  });
}

void setup_sample_warps(CLI::App& app) {
  auto cmd = app.add_subcommand("sample-warps",
                                "decode prior draws from a trained model");
  auto binding = std::make_shared<ConfigBinding>();
  struct Opts {
    std::string config, checkpoint, out;
    int n = 200;
    std::uint64_t seed = 0;
    CLI::Option* seed_opt = nullptr;
    bool seeded_by_config = false;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--config", o->config, "key=value config file");
  auto* oc = cmd->add_option("--checkpoint", o->checkpoint, "model checkpoint")
                 ->required();
  binding->bind(oc, "checkpoint",
                [o](const std::string& v) { o->checkpoint = v; });
  auto* oo = cmd->add_option("--out", o->out, "output directory")->required();
  binding->bind(oo, "out", [o](const std::string& v) { o->out = v; });
  auto* on = cmd->add_option("--n", o->n, "number of draws");
  binding->bind(on, "n",
                [o](const std::string& v) { o->n = static_cast<int>(parse_int(v)); });
  o->seed_opt = cmd->add_option("--seed", o->seed, "rng seed");
  binding->bind(o->seed_opt, "seed", [o](const std::string& v) {
    o->seed = parse_u64(v);
    o->seeded_by_config = true;
  });

  cmd->callback([binding, o]() {
    binding->apply(o->config);
    const Checkpoint ckpt = load_checkpoint(o->checkpoint);
    ensure_dir(o->out);
    const std::uint64_t seed =
        (o->seed_opt->count() > 0 || o->seeded_by_config) ? o->seed
                                                          : os_entropy();
    Rng rng(seed);
    const std::vector<Diffeo> warps =
        sample_warps(ckpt.params, o->n, ckpt.config.pi, rng);
    write_csv(o->out + "/warps.csv", rows_from(warps));
    json summary;
    summary["n"] = o->n;
    summary["seed"] = seed;
    summary["grid_size"] = ckpt.params.grid_size;
    write_json(o->out + "/summary.json", summary);
  });
}

void setup_eval(CLI::App& app) {
  auto cmd = app.add_subcommand("eval", "run a trained model over a corpus");
  auto binding = std::make_shared<ConfigBinding>();
  struct Opts {
    std::string config, checkpoint, data, template_path, out;
    int workers = 1;
    bool oracle = false;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--config", o->config, "key=value config file");
  auto* oc = cmd->add_option("--checkpoint", o->checkpoint, "model checkpoint")
                 ->required();
  binding->bind(oc, "checkpoint",
                [o](const std::string& v) { o->checkpoint = v; });
  auto* od = cmd->add_option("--data", o->data, "profiles CSV")->required();
  binding->bind(od, "data", [o](const std::string& v) { o->data = v; });
  auto* ot = cmd->add_option("--template", o->template_path,
                             "override target SRVF CSV");
  binding->bind(ot, "template",
                [o](const std::string& v) { o->template_path = v; });
  auto* oo = cmd->add_option("--out", o->out, "output directory")->required();
  binding->bind(oo, "out", [o](const std::string& v) { o->out = v; });
  auto* ow = cmd->add_option("--workers", o->workers, "thread fan-out");
  binding->bind(ow, "workers",
                [o](const std::string& v) { o->workers = static_cast<int>(parse_int(v)); });
  auto* oor = cmd->add_flag("--oracle", o->oracle,
                            "also compute DP-oracle alignment costs");
  binding->bind(oor, "oracle",
                [o](const std::string& v) { o->oracle = parse_bool(v); });

  cmd->callback([binding, o]() {
    binding->apply(o->config);
    const Checkpoint ckpt = load_checkpoint(o->checkpoint);
    const int t = ckpt.params.grid_size;
    const int width = csv_row_width(o->data);
    if (width != t) {
      throw DimensionError("eval: data width " + std::to_string(width) +
                           " does not match checkpoint grid " +
                           std::to_string(t));
    }
    Dataset d = load_profiles_csv(o->data, t);
    if (d.size() == 0) throw PreconditionError("eval: empty data");
    ensure_dir(o->out);

    TrainConfig cfg = ckpt.config;
    cfg.workers = o->workers;

    Srvf target;
    if (!o->template_path.empty()) {
      target = read_unit_srvf(o->template_path, t, "template");
    } else if (cfg.regime == Regime::kFixedTemplate) {
      target = *cfg.target;
    }

    const int n = d.size();
    std::vector<Diffeo> gammas(n);
    std::vector<Srvf> warped(n);
    parallel_for(n, cfg.workers, [&](int i) {
      const auto [mu, logvar] = encode(d.srvfs[i], ckpt.params);
      gammas[i] = decode(mu, ckpt.params, cfg.pi);
      warped[i] = warp_srvf(d.srvfs[i], gammas[i]);
    });
    if (target.size() == 0) {
      target = estimate_template(warped);  // prediction regime
    }

    Eigen::VectorXd fr_before(n), fr_after(n), dp_cost(n);
    for (int i = 0; i < n; ++i) {
      fr_before(i) = trapz_norm_sq(target.values - d.srvfs[i].values);
      fr_after(i) = trapz_norm_sq(target.values - warped[i].values);
    }
    if (o->oracle) {
      const DpConfig dp_cfg = DpConfig::defaults(t);
      parallel_for(n, cfg.workers, [&](int i) {
        dp_cost(i) = dp_align(target, d.srvfs[i], dp_cfg).cost;
      });
    }

    write_csv(o->out + "/gammas.csv", rows_from(gammas));
    write_csv(o->out + "/warped.csv", rows_from(warped));
    Eigen::MatrixXd table(n, o->oracle ? 4 : 3);
    std::vector<std::string> header{"index", "fr_before", "fr_after"};
    if (o->oracle) header.push_back("dp_cost");
    for (int i = 0; i < n; ++i) {
      table(i, 0) = i;
      table(i, 1) = fr_before(i);
      table(i, 2) = fr_after(i);
      if (o->oracle) table(i, 3) = dp_cost(i);
    }
    write_csv(o->out + "/eval.csv", table, header);

    auto median = [](Eigen::VectorXd v) {
      std::sort(v.data(), v.data() + v.size());
      const int m = static_cast<int>(v.size());
      return (m % 2) ? v(m / 2) : 0.5 * (v(m / 2 - 1) + v(m / 2));
    };
    json summary;
    summary["n"] = n;
    summary["excluded_rows"] = d.excluded_rows;
    summary["mean_fr_before"] = fr_before.mean();
    summary["mean_fr_after"] = fr_after.mean();
    summary["median_fr_before"] = median(fr_before);
    summary["median_fr_after"] = median(fr_after);
    if (o->oracle) {
      summary["mean_dp_cost"] = dp_cost.mean();
      summary["ratio_to_oracle"] =
          dp_cost.mean() > 0 ? fr_after.mean() / dp_cost.mean() : 0.0;
    }
    write_json(o->out + "/summary.json", summary);
  });
}

void setup_export_plots(CLI::App& app) {
  auto cmd = app.add_subcommand("export-plots", "render CSV rows as SVG lines");
  auto binding = std::make_shared<ConfigBinding>();
  struct Opts {
    std::string config, data, template_path, out, title = "functions";
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--config", o->config, "key=value config file");
  auto* od = cmd->add_option("--data", o->data, "CSV of rows to plot")
                 ->required();
  binding->bind(od, "data", [o](const std::string& v) { o->data = v; });
  auto* ot = cmd->add_option("--template", o->template_path,
                             "extra row highlighted in orange");
  binding->bind(ot, "template",
                [o](const std::string& v) { o->template_path = v; });
  auto* oo = cmd->add_option("--out", o->out, "output SVG path")->required();
  binding->bind(oo, "out", [o](const std::string& v) { o->out = v; });
  binding->bind(nullptr, "title",
                [o](const std::string& v) { o->title = v; });

  cmd->callback([binding, o]() {
    binding->apply(o->config);
    const Eigen::MatrixXd m = read_csv(o->data);
    PlotPanel panel;
    panel.title = o->title;
    for (int r = 0; r < m.rows(); ++r) {
      panel.series.push_back(PlotSeries{m.row(r).transpose()});
    }
    if (!o->template_path.empty()) {
      const Eigen::MatrixXd tpl = read_csv(o->template_path);
      if (tpl.rows() != 1 || tpl.cols() != m.cols()) {
        throw DimensionError("export-plots: template must be one row of " +
                             std::to_string(m.cols()) + " values");
      }
      panel.series.push_back(
          PlotSeries{tpl.row(0).transpose(), "#e07a1f", 2.0, 1.0});
    }
    write_svg_plot(o->out, {panel});
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Elastic alignment of 1-D functions: DP and Karcher baselines "
               "plus a generative warp model"};
  app.require_subcommand(1);
  setup_gen_data(app);
  setup_train(app, true);
  setup_train(app, false);
  setup_align_pair(app);
  setup_karcher(app);
  setup_sample_warps(app);
  setup_eval(app);
  setup_export_plots(app);

  try {
    app.parse(argc, argv);
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

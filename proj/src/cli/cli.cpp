#include "dca/cli.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dca/data_io.hpp"
#include "dca/embedder.hpp"
#include "dca/errors.hpp"
#include "dca/gradients.hpp"
#include "dca/retrieval.hpp"
#include "dca/trainer.hpp"

namespace dca {
namespace {

// Flat run configuration. Every field is reachable as `--key` and as a
// `key = value` line in the file given to --config.
struct RunConfig {
  std::string command;

  std::string loss = "dca_bh";
  double margin = 1.2;
  double lambda = 0.5;
  std::string nonzero_average = "auto";
  bool detach_context = false;

  std::size_t p = 8;
  std::size_t k = 4;

  std::size_t identities = 16;
  std::size_t samples = 32;
  std::size_t input_dim = 8;
  double separation = 10.0;
  double sigma = 1.0;

  std::vector<std::size_t> hidden{64};
  std::size_t emb_dim = 128;
  bool normalize = false;

  std::size_t steps = 300;
  double lr = 1e-3;
  std::uint64_t seed = 42;

  std::size_t holdout = 8;
  std::size_t queries = 2;
  std::string mode = "euclidean";

  std::size_t check_p = 3;
  std::size_t check_k = 3;
  std::size_t check_dim = 4;
  double fd_step = 1e-5;
  double tolerance = 1e-5;

  std::vector<double> margins{0.5, 0.8, 1.2};

  std::string data;
  std::string model;
  std::string out;
  std::string history;
};

std::string bool_text(bool b) { return b ? "true" : "false"; }

// Resolved configuration, one `key = value` per line, in a fixed order.
std::vector<std::string> describe(const RunConfig& c) {
  return {
      fmt::format("command = {}", c.command),
      fmt::format("loss = {}", c.loss),
      fmt::format("margin = {}", c.margin),
      fmt::format("lambda = {}", c.lambda),
      fmt::format("nonzero_average = {}", c.nonzero_average),
      fmt::format("detach_context = {}", bool_text(c.detach_context)),
      fmt::format("p = {}", c.p),
      fmt::format("k = {}", c.k),
      fmt::format("identities = {}", c.identities),
      fmt::format("samples = {}", c.samples),
      fmt::format("input_dim = {}", c.input_dim),
      fmt::format("separation = {}", c.separation),
      fmt::format("sigma = {}", c.sigma),
      fmt::format("hidden = {}", fmt::join(c.hidden, ",")),
      fmt::format("emb_dim = {}", c.emb_dim),
      fmt::format("normalize = {}", bool_text(c.normalize)),
      fmt::format("steps = {}", c.steps),
      fmt::format("lr = {}", c.lr),
      fmt::format("seed = {}", c.seed),
      fmt::format("holdout = {}", c.holdout),
      fmt::format("queries = {}", c.queries),
      fmt::format("mode = {}", c.mode),
      fmt::format("check_p = {}", c.check_p),
      fmt::format("check_k = {}", c.check_k),
      fmt::format("check_dim = {}", c.check_dim),
      fmt::format("fd_step = {}", c.fd_step),
      fmt::format("tolerance = {}", c.tolerance),
      fmt::format("margins = {}", fmt::join(c.margins, ",")),
      fmt::format("data = {}", c.data),
      fmt::format("model = {}", c.model),
      fmt::format("out = {}", c.out),
      fmt::format("history = {}", c.history),
  };
}

std::string metadata_block(const RunConfig& c) { return fmt::format("{}\n", fmt::join(describe(c), "\n")); }

void write_preamble(std::ostream& out, const RunConfig& c) {
  for (const auto& line : describe(c)) out << "# " << line << '\n';
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

void finish_output(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("failed writing " + path);
}

LossConfig loss_config(const RunConfig& c) {
  LossConfig cfg = LossConfig::defaults(parse_loss_variant(c.loss));
  cfg.margin = c.margin;
  cfg.lambda = c.lambda;
  cfg.detach_context = c.detach_context;
  if (c.nonzero_average == "true") {
    cfg.nonzero_average = true;
  } else if (c.nonzero_average == "false") {
    cfg.nonzero_average = false;
  } else if (c.nonzero_average != "auto") {
    throw ConfigError("nonzero_average must be auto, true or false, got '" + c.nonzero_average + "'");
  }
  validate(cfg);
  return cfg;
}

TrainConfig train_config(const RunConfig& c, const LossConfig& loss, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.steps = c.steps;
  cfg.lr = c.lr;
  cfg.milestones = TrainConfig::default_schedule(c.steps);
  cfg.seed = seed;
  cfg.loss = loss;
  cfg.pk = {c.p, c.k, seed};
  validate(cfg);
  return cfg;
}

MlpModel fresh_model(const RunConfig& c, std::size_t input_dim, std::uint64_t seed) {
  std::vector<std::size_t> widths{input_dim};
  widths.insert(widths.end(), c.hidden.begin(), c.hidden.end());
  widths.push_back(c.emb_dim);
  Rng rng(seed);
  return MlpModel::create(widths, rng, c.normalize);
}

SynthSpec synth_spec(const RunConfig& c) {
  SynthSpec spec{c.identities, c.samples, c.input_dim, c.separation, c.sigma, c.seed};
  validate(spec);
  return spec;
}

EmbeddingBatch dataset_for(const RunConfig& c) {
  if (!c.data.empty()) return load_dataset(c.data);
  spdlog::info("no --data given; generating {} identities x {} samples", c.identities, c.samples);
  return generate(synth_spec(c)).data;
}

void require_path(const std::string& value, const char* key) {
  if (value.empty()) throw ConfigError(fmt::format("--{} is required for this command", key));
}

void default_path(std::string& value, const char* fallback) {
  if (value.empty()) value = fallback;
}

EmbeddingBatch embed(const MlpModel& model, const EmbeddingBatch& batch) {
  return {forward(model, batch.features), batch.labels};
}

int cmd_synth(RunConfig& c) {
  default_path(c.out, "synthetic.dcae");
  const auto data = generate(synth_spec(c)).data;
  write_embeddings(data, c.out, metadata_block(c));
  spdlog::info("wrote {} rows of dimension {} to {}", data.size(), data.dim(), c.out);
  return 0;
}

int cmd_train(RunConfig& c) {
  default_path(c.out, "model.dcam");
  default_path(c.history, "loss_history.csv");
  const auto loss = loss_config(c);
  const auto cfg = train_config(c, loss, c.seed);
  const auto split = split_holdout(dataset_for(c), c.holdout, c.queries);
  const auto start = std::chrono::steady_clock::now();
  const auto result = train(split.train, fresh_model(c, split.train.dim(), c.seed), cfg);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  spdlog::info("trained {} steps of {} in {:.2f} s", c.steps, c.loss, seconds);

  save_checkpoint(result.model, c.out, metadata_block(c));
  auto out = open_output(c.history);
  write_preamble(out, c);
  out << "step,lr,loss\n";
  for (std::size_t s = 0; s < result.loss_history.size(); ++s) {
    out << fmt::format("{},{},{}\n", s, learning_rate_at(cfg, s), result.loss_history[s]);
  }
  finish_output(out, c.history);
  if (!result.loss_history.empty()) {
    std::cout << fmt::format("final loss {}\n", result.loss_history.back());
  }
  return 0;
}

int write_reports(const RunConfig& c, const std::vector<RetrievalReport>& reports) {
  auto out = open_output(c.out);
  write_report_csv(out, reports, describe(c));
  finish_output(out, c.out);
  print_report_table(std::cout, reports);
  return 0;
}

DataSplit embedded_split(const RunConfig& c) {
  require_path(c.model, "model");
  const MlpModel model = load_checkpoint(c.model);
  const auto split = split_holdout(dataset_for(c), c.holdout, c.queries);
  return {embed(model, split.train), embed(model, split.queries), embed(model, split.gallery)};
}

int cmd_eval(RunConfig& c) {
  default_path(c.out, "report.csv");
  const auto mode = parse_retrieval_mode(c.mode);
  validate_lambda(c.lambda);
  const auto split = embedded_split(c);
  return write_reports(c, {evaluate(split.queries, split.gallery, mode, c.lambda)});
}

int cmd_rerank(RunConfig& c) {
  default_path(c.out, "rerank.csv");
  validate_lambda(c.lambda);
  c.mode = "dca";
  const auto split = embedded_split(c);
  return write_reports(c, {evaluate(split.queries, split.gallery, RetrievalMode::kEuclidean),
                           evaluate(split.queries, split.gallery, RetrievalMode::kDcaRerank, c.lambda)});
}

int cmd_gradcheck(RunConfig& c) {
  const auto cfg = loss_config(c);
  Rng rng(c.seed);
  const auto batch = sample_smooth_batch(c.check_p, c.check_k, c.check_dim, cfg, c.fd_step, rng);
  const auto report = finite_difference_check(batch, cfg, c.fd_step);
  std::cout << fmt::format("max relative error {:.3e} at ({}, {}) for {}\n", report.max_relative_error,
                           report.worst_row, report.worst_col, c.loss);
  if (!(report.max_relative_error < c.tolerance)) {
    std::cerr << fmt::format("error: gradient check above tolerance {}\n", c.tolerance);
    return 1;
  }
  return 0;
}

int cmd_compare(RunConfig& c) {
  default_path(c.out, "compare.csv");
  if (c.margins.empty()) throw ConfigError("margins must list at least one value");
  validate_lambda(c.lambda);
  const auto split = split_holdout(dataset_for(c), c.holdout, c.queries);

  auto out = open_output(c.out);
  write_preamble(out, c);
  out << "loss,margin,seed,map,rank1\n";
  std::uint64_t cell = 0;
  for (std::string_view family : {"tri", "dca"}) {
    for (std::string_view mining : {"bh", "ba"}) {
      for (double margin : c.margins) {
        RunConfig cell_cfg = c;
        cell_cfg.loss = fmt::format("{}_{}", family, mining);
        cell_cfg.margin = margin;
        const std::uint64_t seed = c.seed + cell++;
        const auto cfg = train_config(cell_cfg, loss_config(cell_cfg), seed);
        const auto result = train(split.train, fresh_model(c, split.train.dim(), seed), cfg);
        const auto report = evaluate(embed(result.model, split.queries), embed(result.model, split.gallery),
                                     RetrievalMode::kEuclidean);
        const auto line = fmt::format("{},{},{},{},{}", cell_cfg.loss, margin, seed, report.map, report.cmc.front());
        out << line << '\n';
        std::cout << line << '\n';
        spdlog::debug("cell {} done", line);
      }
    }
  }
  finish_output(out, c.out);
  return 0;
}

void setup_logging() {
  static const bool once = [] {
    auto logger = spdlog::stderr_logger_st("dca");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    spdlog::cfg::load_env_levels();
    return true;
  }();
  (void)once;
}

void add_options(CLI::App& app, RunConfig& c) {
  app.add_option("--loss", c.loss, "tri_bh, tri_ba, dca_bh or dca_ba");
  app.add_option("--margin", c.margin, "hinge margin");
  app.add_option("--lambda", c.lambda, "context weight in [0, 1]");
  app.add_option("--nonzero_average", c.nonzero_average, "auto, true or false");
  app.add_option("--detach_context", c.detach_context, "treat the Jaccard context as constant");
  app.add_option("--p", c.p, "identities per batch");
  app.add_option("--k", c.k, "samples per identity in a batch");
  app.add_option("--identities", c.identities, "synthetic identities");
  app.add_option("--samples", c.samples, "synthetic samples per identity");
  app.add_option("--input_dim", c.input_dim, "synthetic input dimension");
  app.add_option("--separation", c.separation, "minimum centroid distance in units of sigma");
  app.add_option("--sigma", c.sigma, "synthetic noise scale");
  app.add_option("--hidden", c.hidden, "hidden layer widths")->delimiter(',');
  app.add_option("--emb_dim", c.emb_dim, "embedding dimension");
  app.add_option("--normalize", c.normalize, "L2-normalise embeddings");
  app.add_option("--steps", c.steps, "training steps");
  app.add_option("--lr", c.lr, "Adam learning rate");
  app.add_option("--seed", c.seed, "random seed");
  app.add_option("--holdout", c.holdout, "rows per identity held out of training");
  app.add_option("--queries", c.queries, "held-out rows per identity used as queries");
  app.add_option("--mode", c.mode, "euclidean or dca");
  app.add_option("--check_p", c.check_p, "gradcheck identities");
  app.add_option("--check_k", c.check_k, "gradcheck samples per identity");
  app.add_option("--check_dim", c.check_dim, "gradcheck embedding dimension");
  app.add_option("--fd_step", c.fd_step, "finite-difference step");
  app.add_option("--tolerance", c.tolerance, "gradcheck pass threshold");
  app.add_option("--margins", c.margins, "compare grid margins")->delimiter(',');
  app.add_option("--data", c.data, "dataset file (.dcae or .csv)");
  app.add_option("--model", c.model, "checkpoint file");
  app.add_option("--out", c.out, "output file");
  app.add_option("--history", c.history, "loss history CSV (train)");
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  setup_logging();
  RunConfig c;
  CLI::App app{"Distribution-context-aware metric learning toolkit", "dca"};
  app.set_config("--config", "", "file of key = value lines; flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);
  add_options(app, c);
  app.require_subcommand(1);

  struct Command {
    const char* name;
    const char* help;
    int (*run)(RunConfig&);
  };
  const Command commands[] = {
      {"synth", "generate a synthetic dataset", cmd_synth},
      {"train", "train an embedder and write a checkpoint and loss history", cmd_train},
      {"eval", "score held-out retrieval with a checkpoint", cmd_eval},
      {"rerank", "score held-out retrieval with and without DCA re-ranking", cmd_rerank},
      {"gradcheck", "compare analytic and numerical loss gradients", cmd_gradcheck},
      {"compare", "train and score the loss x margin grid", cmd_compare},
  };
  for (const auto& cmd : commands) app.add_subcommand(cmd.name, cmd.help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    for (const auto& cmd : commands) {
      if (app.got_subcommand(cmd.name)) {
        c.command = cmd.name;
        return cmd.run(c);
      }
    }
    throw InvariantError("no subcommand dispatched");
  } catch (const InvariantError& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace dca

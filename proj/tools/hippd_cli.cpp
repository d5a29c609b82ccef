#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "hippd/analysis.hpp"
#include "hippd/errors.hpp"
#include "hippd/synthetic.hpp"
#include "hippd/trainer.hpp"

using namespace hippd;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kDivergence = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_json(const std::string& path, const nlohmann::json& doc) {
  if (path.empty() || path == "-") {
    std::cout << doc.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << doc.dump(2) << '\n';
}

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string data;
  std::string embeddings;
  std::string checkpoint;
  std::string out;
  std::string split;
  AblationFlags flags;
};

TrainConfig resolve_config(const CommonOptions& o) {
  TrainConfig cfg;
  if (!o.config.empty()) cfg = load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.data.empty()) cfg.data_path = o.data;
  if (!o.embeddings.empty()) cfg.embeddings_path = o.embeddings;
  if (!o.checkpoint.empty()) cfg.checkpoint_path = o.checkpoint;
  if (!o.out.empty()) cfg.out_path = o.out;
  auto& f = cfg.flags;
  f.no_memory = f.no_memory || o.flags.no_memory;
  f.mlp_memory = f.mlp_memory || o.flags.mlp_memory;
  f.no_pe = f.no_pe || o.flags.no_pe;
  f.soft_routing = f.soft_routing || o.flags.soft_routing;
  f.random_routing = f.random_routing || o.flags.random_routing;
  f.mean_pooling = f.mean_pooling || o.flags.mean_pooling;
  cfg.validate();
  return cfg;
}

std::optional<EmbeddingTable> load_embeddings(const TrainConfig& cfg) {
  if (cfg.encoder != EncoderProvider::precomputed) return std::nullopt;
  if (cfg.embeddings_path.empty()) throw UsageError("the precomputed encoder needs --embeddings");
  return load_precomputed_embeddings(cfg.embeddings_path);
}

int run_train(const CommonOptions& o) {
  const auto cfg = resolve_config(o);
  if (cfg.data_path.empty()) throw UsageError("train needs --data");
  const auto data = load_jsonl_dataset(cfg.data_path);
  const auto embeddings = load_embeddings(cfg);
  const auto* table = embeddings ? &*embeddings : nullptr;
  auto progress = [](const EpochSummary& s) {
    std::fprintf(stderr, "epoch %3zu  tau %.3f  loss %.5f  val macro-F1 %.4f\n", s.epoch, s.temperature, s.mean_loss,
                 s.validation_macro_f1);
  };
  const auto result = o.split.empty() ? train(cfg, data, table, progress)
                                      : train(cfg, data, load_split(o.split), table, progress);
  if (!cfg.checkpoint_path.empty()) save_checkpoint(cfg.checkpoint_path, result.checkpoint);
  write_json(cfg.out_path, to_json(result.report));
  return kOk;
}

int run_eval(const CommonOptions& o, const std::string& part) {
  if (o.checkpoint.empty()) throw UsageError("eval needs --checkpoint");
  const auto ckpt = load_checkpoint(o.checkpoint);
  const std::string data_path = o.data.empty() ? ckpt.config.data_path : o.data;
  if (data_path.empty()) throw UsageError("eval needs --data");
  const auto data = load_jsonl_dataset(data_path);
  const auto split = o.split.empty() ? stratified_split(data, ckpt.config.split_seed) : load_split(o.split);
  const auto& ids = part == "train" ? split.train : part == "validation" ? split.validation : split.test;
  std::optional<EmbeddingTable> embeddings;
  if (ckpt.config.encoder == EncoderProvider::precomputed) {
    const std::string path = o.embeddings.empty() ? ckpt.config.embeddings_path : o.embeddings;
    if (path.empty()) throw UsageError("the precomputed encoder needs --embeddings");
    embeddings = load_precomputed_embeddings(path);
  }
  const auto report = evaluate(ckpt, ids, data, embeddings ? &*embeddings : nullptr);
  write_json(o.out, to_json(report));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical personality detection: train, evaluate and inspect MBTI models"};
  app.require_subcommand(1);

  CommonOptions o;
  auto add_common = [&o](CLI::App* cmd) {
    cmd->add_option("--config", o.config, "Flat key = value config file");
    cmd->add_option("--seed", o.seed, "Seed override");
    cmd->add_option("--data", o.data, "Dataset JSONL");
    cmd->add_option("--embeddings", o.embeddings, "Precomputed post embeddings");
    cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint path");
    cmd->add_option("--out", o.out, "Output path ('-' or empty for stdout)");
    cmd->add_option("--split", o.split, "Split file from the split subcommand");
    cmd->add_flag("--no-memory", o.flags.no_memory);
    cmd->add_flag("--mlp-memory", o.flags.mlp_memory);
    cmd->add_flag("--no-pe", o.flags.no_pe);
    cmd->add_flag("--soft-routing", o.flags.soft_routing);
    cmd->add_flag("--random-routing", o.flags.random_routing);
    cmd->add_flag("--mean-pooling", o.flags.mean_pooling);
  };

  auto* train_cmd = app.add_subcommand("train", "Train a model and write its checkpoint and test metrics");
  add_common(train_cmd);

  std::string part = "test";
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on one split part");
  add_common(eval_cmd);
  eval_cmd->add_option("--part", part, "train, validation or test")
      ->check(CLI::IsMember({"train", "validation", "test"}));

  GeneratorConfig gen;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  std::vector<double> rates;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic corpus with latent styles");
  synth_cmd->add_option("--seed", synth_seed);
  synth_cmd->add_option("--out", synth_out)->required();
  synth_cmd->add_option("--users", gen.users);
  synth_cmd->add_option("--posts", gen.posts_per_user);
  synth_cmd->add_option("--vocabulary", gen.vocabulary);
  synth_cmd->add_option("--styles", gen.styles);
  synth_cmd->add_option("--words", gen.words_per_post);
  synth_cmd->add_option("--noise", gen.token_noise);
  synth_cmd->add_option("--rates", rates, "Positive rates for IE SN TF PJ")->expected(4)->delimiter(',');

  std::uint64_t split_seed = 0;
  std::string split_data, split_out;
  auto* split_cmd = app.add_subcommand("split", "Stratified 60/20/20 split by type");
  split_cmd->add_option("--data", split_data)->required();
  split_cmd->add_option("--seed", split_seed);
  split_cmd->add_option("--out", split_out);

  std::string analyze_data, analyze_out;
  std::size_t top_k = 10;
  auto* analyze_cmd = app.add_subcommand("analyze", "Top words, co-occurrence and mutual information");
  analyze_cmd->add_option("--data", analyze_data)->required();
  analyze_cmd->add_option("--out", analyze_out);
  analyze_cmd->add_option("--top-k", top_k);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train_cmd) return run_train(o);
    if (*eval_cmd) return run_eval(o, part);
    if (*synth_cmd) {
      if (!rates.empty()) std::copy(rates.begin(), rates.end(), gen.positive_rates.begin());
      write_jsonl_dataset(synth_out, generate_synthetic(gen, synth_seed));
      return kOk;
    }
    if (*split_cmd) {
      const auto split = stratified_split(load_jsonl_dataset(split_data), split_seed);
      if (split_out.empty()) {
        write_json("-", nlohmann::json{{"seed", split.seed},
                                       {"train", split.train},
                                       {"validation", split.validation},
                                       {"test", split.test}});
      } else {
        write_split(split_out, split);
      }
      return kOk;
    }
    if (*analyze_cmd) {
      write_json(analyze_out, to_json(analyze_corpus(preprocess(load_jsonl_dataset(analyze_data)), top_k)));
      return kOk;
    }
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kDivergence;
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

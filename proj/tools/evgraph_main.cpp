// Copyright 2026 The EventGraph Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// evgraph: conversion, validation, statistics, synthesis, training,
// prediction and evaluation for labeled-edge event graphs.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "evgraph/corpus_io.hpp"
#include "evgraph/errors.hpp"
#include "evgraph/kernels.hpp"
#include "evgraph/scoring.hpp"
#include "evgraph/synthetic.hpp"
#include "evgraph/trainer.hpp"
#include "json.hpp"

namespace {

using namespace evgraph;
using nlohmann::json;
using nlohmann::ordered_json;

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool g_json = false;

void print_json(const ordered_json& j) { std::cout << j.dump(2) << '\n'; }

std::unique_ptr<Ontology> maybe_ontology(const std::string& path) {
  if (path.empty()) return nullptr;
  return std::make_unique<Ontology>(load_ontology(path));
}

// ---- convert ---------------------------------------------------------------

struct ConvertArgs {
  std::string input, output, to, sentences, ontology;
};

int run_convert(const ConvertArgs& a) {
  std::string to = a.to;
  if (to.empty()) {
    switch (detect_schema(a.input)) {
      case FileSchema::kCorpus: to = "graph"; break;
      case FileSchema::kGraph: to = "mentions"; break;
      case FileSchema::kEmpty: throw UsageError("cannot infer direction from an empty file; pass --to");
    }
  }
  if (to == "graph") {
    auto ontology = maybe_ontology(a.ontology);
    const Corpus corpus = read_corpus(std::filesystem::path(a.input), ontology.get());
    std::vector<EventGraph> graphs;
    for (const auto& s : corpus.sentences) graphs.push_back(encode_graph(s.sentence, s.events));
    write_graphs(graphs, std::filesystem::path(a.output));
    if (g_json) print_json({{"direction", "graph"}, {"sentences", graphs.size()}});
    else std::cout << "wrote " << graphs.size() << " graphs to " << a.output << '\n';
    return kOk;
  }
  if (a.sentences.empty())
    throw UsageError("graph files carry no tokens; pass --sentences with the matching corpus");
  const Corpus source = read_corpus(std::filesystem::path(a.sentences));
  std::map<std::string, const Sentence*> by_id;
  for (const auto& s : source.sentences) by_id[s.sentence.id] = &s.sentence;
  const std::vector<EventGraph> graphs = read_graphs(std::filesystem::path(a.input));
  Corpus out;
  for (const EventGraph& g : graphs) {
    auto it = by_id.find(g.sentence_id);
    if (it == by_id.end())
      throw AlignmentError("graph '" + g.sentence_id + "' has no sentence in " + a.sentences);
    out.sentences.push_back(AnnotatedSentence{*it->second, decode_graph(g, *it->second)});
  }
  write_corpus(out, std::filesystem::path(a.output));
  if (g_json) print_json({{"direction", "mentions"}, {"sentences", out.sentences.size()}});
  else std::cout << "wrote " << out.sentences.size() << " sentences to " << a.output << '\n';
  return kOk;
}

// ---- validate --------------------------------------------------------------

struct ValidateArgs {
  std::string input, sentences, ontology;
};

int run_validate(const ValidateArgs& a) {
  std::vector<std::string> problems;
  std::size_t records = 0;
  const FileSchema schema = detect_schema(a.input);
  if (schema == FileSchema::kCorpus) {
    auto ontology = maybe_ontology(a.ontology);
    std::ifstream in(a.input);
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
      ++line;
      if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
      ++records;
      try {
        std::istringstream one(text);
        const Corpus c = read_corpus(one, ontology.get());
        for (const auto& s : c.sentences) encode_graph(s.sentence, s.events);
      } catch (const std::exception& e) {
        std::string msg = e.what();
        if (msg.rfind("line 1: ", 0) == 0) msg = msg.substr(8);
        problems.push_back("line " + std::to_string(line) + ": " + msg);
      }
    }
  } else if (schema == FileSchema::kGraph) {
    std::map<std::string, Sentence> by_id;
    if (!a.sentences.empty())
      for (const auto& s : read_corpus(std::filesystem::path(a.sentences)).sentences)
        by_id[s.sentence.id] = s.sentence;
    std::ifstream in(a.input);
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
      ++line;
      if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
      ++records;
      try {
        const EventGraph g = graph_from_json(json::parse(text));
        auto it = by_id.find(g.sentence_id);
        const ValidationResult r =
            validate_graph(g, it == by_id.end() ? nullptr : &it->second);
        if (!r) problems.push_back("line " + std::to_string(line) + ": " + r.violation);
      } catch (const std::exception& e) {
        problems.push_back("line " + std::to_string(line) + ": " + e.what());
      }
    }
  }
  if (g_json) {
    print_json({{"file", a.input},
                {"records", records},
                {"valid", problems.empty()},
                {"violations", problems}});
  } else {
    for (const auto& p : problems) std::cerr << a.input << ": " << p << '\n';
    if (problems.empty()) std::cout << a.input << ": " << records << " records valid\n";
  }
  return problems.empty() ? kOk : kInvalid;
}

// ---- stats -----------------------------------------------------------------

int run_stats(const std::string& input) {
  const Corpus corpus = read_corpus(std::filesystem::path(input));
  const CorpusStats s = compute_stats(corpus);
  if (g_json) {
    print_json({{"sentences", s.sentence_count},
                {"events", s.event_count},
                {"arguments", s.role_count},
                {"avg_trigger_len", s.avg_trigger_len},
                {"avg_arg_len", s.avg_arg_len},
                {"single_token_arg_pct", s.single_token_arg_pct},
                {"multi_token_arg_pct", s.multi_token_arg_pct},
                {"event_types", corpus.ontology.event_types.size()},
                {"roles", corpus.ontology.roles.size()}});
    return kOk;
  }
  std::printf("sentences               %zu\n", s.sentence_count);
  std::printf("events                  %zu\n", s.event_count);
  std::printf("arguments               %zu\n", s.role_count);
  std::printf("event types             %zu\n", corpus.ontology.event_types.size());
  std::printf("roles                   %zu\n", corpus.ontology.roles.size());
  std::printf("avg trigger length      %.3f\n", s.avg_trigger_len);
  std::printf("avg argument length     %.3f\n", s.avg_arg_len);
  std::printf("single-token args (%%)   %.2f\n", s.single_token_arg_pct);
  std::printf("multi-token args (%%)    %.2f\n", s.multi_token_arg_pct);
  return kOk;
}

// ---- gen-synthetic ---------------------------------------------------------

struct SynthArgs {
  std::string output, ontology_out;
  std::uint64_t seed = 7;
  std::size_t n = 500;
  std::size_t event_types = 5, roles = 6;
};

int run_synth(const SynthArgs& a) {
  if (a.n == 0 || a.event_types == 0 || a.roles == 0)
    throw UsageError("--n, --event-types and --roles must be positive");
  const Corpus c = gen_synthetic(a.seed, a.n, a.event_types, a.roles);
  write_corpus(c, std::filesystem::path(a.output));
  if (!a.ontology_out.empty()) save_ontology(c.ontology, a.ontology_out);
  if (g_json) print_json({{"sentences", c.sentences.size()}, {"output", a.output}});
  else std::cout << "wrote " << c.sentences.size() << " sentences to " << a.output << '\n';
  return kOk;
}

// ---- configuration ---------------------------------------------------------

struct Configs {
  ModelConfig model;
  TrainConfig train;
};

// Defaults, then the config file, then --seed, then --set overrides.
Configs build_configs(const std::string& config_path, const std::vector<std::string>& sets,
                      std::optional<std::uint64_t> seed) {
  ordered_json model = ModelConfig{}.to_json();
  ordered_json train = TrainConfig{}.to_json();
  auto assign = [&](const std::string& key, const json& value) {
    if (model.contains(key)) model[key] = value;
    else if (train.contains(key)) train[key] = value;
    else throw UsageError("unknown configuration key '" + key + "'");
  };
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw UsageError("cannot open config file '" + config_path + "'");
    json file;
    try {
      file = json::parse(in);
    } catch (const json::exception& e) {
      throw UsageError("config file '" + config_path + "': " + e.what());
    }
    if (!file.is_object()) throw UsageError("config file must hold a JSON object");
    for (const auto& [key, value] : file.items()) {
      if ((key == "model" || key == "train") && value.is_object()) {
        for (const auto& [k, v] : value.items()) assign(k, v);
      } else {
        assign(key, value);
      }
    }
  }
  if (seed) {
    model["init_seed"] = *seed;
    train["seed"] = *seed;
  }
  for (const std::string& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq), text = kv.substr(eq + 1);
    json value;
    try {
      value = json::parse(text);
    } catch (const json::exception&) {
      value = text;
    }
    assign(key, value);
  }
  try {
    return Configs{ModelConfig::from_json(model), TrainConfig::from_json(train)};
  } catch (const json::exception& e) {
    throw UsageError(std::string("bad configuration value: ") + e.what());
  }
}

std::shared_ptr<const ExternalEmbeddings> maybe_embeddings(const std::string& path) {
  if (path.empty()) return nullptr;
  return std::make_shared<const ExternalEmbeddings>(load_external_embeddings(path));
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string train, dev, out, config, ontology, embeddings;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

int run_train(const TrainArgs& a) {
  Configs c = build_configs(a.config, a.sets, a.seed);
  c.train.checkpoint_dir = a.out;
  auto ontology = maybe_ontology(a.ontology);
  const Corpus train_corpus = read_corpus(std::filesystem::path(a.train), ontology.get());
  const Corpus dev_corpus =
      a.dev.empty() ? Corpus{} : read_corpus(std::filesystem::path(a.dev), ontology.get());
  if (ontology && c.model.event_types.empty() && c.model.roles.empty()) {
    c.model.event_types = ontology->event_types;
    c.model.roles = ontology->roles;
  }
  auto embeddings = maybe_embeddings(a.embeddings);
  if (embeddings && c.model.encoder == EncoderKind::kExternal && c.model.external_dim == 0)
    c.model.external_dim = static_cast<int>(embeddings->dim);
  const TrainResult r = train(train_corpus, dev_corpus, c.model, c.train,
                              a.quiet || g_json ? nullptr : &std::cerr, embeddings);
  const EpochRecord& best = r.history.at(static_cast<std::size_t>(r.best_epoch - 1));
  if (g_json) {
    ordered_json j;
    j["checkpoint"] = (std::filesystem::path(a.out) / "best.ckpt").string();
    j["best_epoch"] = r.best_epoch;
    j["final_loss"] = r.history.back().loss;
    j["dev"] = best.dev ? report_to_json(*best.dev) : ordered_json(nullptr);
    print_json(j);
  } else {
    std::cout << "best epoch " << r.best_epoch << ", checkpoint "
              << (std::filesystem::path(a.out) / "best.ckpt").string() << '\n';
    if (best.dev) std::cout << report_table(*best.dev);
  }
  return kOk;
}

// ---- predict ---------------------------------------------------------------

struct PredictArgs {
  std::string checkpoint, input, output, format = "mentions", embeddings;
};

int run_predict(const PredictArgs& a) {
  EventGraphParser<float> parser = load_model(a.checkpoint);
  if (auto e = maybe_embeddings(a.embeddings)) parser.set_external_embeddings(e);
  const Corpus input = read_corpus(std::filesystem::path(a.input));
  const Corpus pred = predict_corpus(parser, input);
  if (a.format == "graph") {
    std::vector<EventGraph> graphs;
    for (const auto& s : pred.sentences) graphs.push_back(encode_graph(s.sentence, s.events));
    write_graphs(graphs, std::filesystem::path(a.output));
  } else {
    write_corpus(pred, std::filesystem::path(a.output));
  }
  if (g_json) print_json({{"sentences", pred.sentences.size()}, {"output", a.output}});
  else std::cout << "wrote predictions for " << pred.sentences.size() << " sentences to " << a.output << '\n';
  return kOk;
}

// ---- evaluate --------------------------------------------------------------

struct EvaluateArgs {
  std::string pred, gold, checkpoint, embeddings;
};

int run_evaluate(const EvaluateArgs& a) {
  if (a.pred.empty() == a.checkpoint.empty())
    throw UsageError("evaluate needs exactly one of --pred or --checkpoint");
  const Corpus gold = read_corpus(std::filesystem::path(a.gold));
  ScoreReport report;
  if (!a.checkpoint.empty()) {
    EventGraphParser<float> parser = load_model(a.checkpoint);
    if (auto e = maybe_embeddings(a.embeddings)) parser.set_external_embeddings(e);
    report = evaluate_model(parser, gold);
  } else {
    report = score_report(read_corpus(std::filesystem::path(a.pred)), gold);
  }
  if (g_json) print_json(report_to_json(report));
  else std::cout << report_table(report);
  return kOk;
}

void apply_thread_cap() {
  if (const char* env = std::getenv("EVGRAPH_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) kernels::set_max_threads(n);
    } catch (const std::exception&) {
      std::cerr << "warning: ignoring EVGRAPH_THREADS='" << env << "'\n";
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_cap();
  CLI::App app{"Labeled-edge event graph toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("--json", g_json, "Machine-readable JSON output");

  ConvertArgs conv;
  auto* convert = app.add_subcommand("convert", "Convert between mention corpora and graph files");
  convert->add_option("input", conv.input, "Input file")->required()->check(CLI::ExistingFile);
  convert->add_option("output", conv.output, "Output file")->required();
  convert->add_option("--to", conv.to, "Target format (default: inferred from the input)")
      ->check(CLI::IsMember({"graph", "mentions"}));
  convert->add_option("--sentences", conv.sentences, "Corpus supplying tokens for graph input")
      ->check(CLI::ExistingFile);
  convert->add_option("--ontology", conv.ontology, "Declared ontology JSON")
      ->check(CLI::ExistingFile);

  ValidateArgs val;
  auto* validate = app.add_subcommand("validate", "Check a corpus or graph file");
  validate->add_option("input", val.input, "Input file")->required()->check(CLI::ExistingFile);
  validate->add_option("--sentences", val.sentences, "Corpus for bound checks of graph files")
      ->check(CLI::ExistingFile);
  validate->add_option("--ontology", val.ontology, "Declared ontology JSON")
      ->check(CLI::ExistingFile);

  std::string stats_input;
  auto* stats = app.add_subcommand("stats", "Corpus statistics");
  stats->add_option("input", stats_input, "Corpus file")->required()->check(CLI::ExistingFile);

  SynthArgs syn;
  auto* synth = app.add_subcommand("gen-synthetic", "Generate a seeded synthetic corpus");
  synth->add_option("output", syn.output, "Output corpus")->required();
  synth->add_option("--seed", syn.seed, "Generator seed")->capture_default_str();
  synth->add_option("--n", syn.n, "Number of sentences")->capture_default_str();
  synth->add_option("--event-types", syn.event_types, "Number of event types")->capture_default_str();
  synth->add_option("--roles", syn.roles, "Number of roles")->capture_default_str();
  synth->add_option("--ontology-out", syn.ontology_out, "Also write the ontology JSON here");

  TrainArgs tr;
  auto* trainc = app.add_subcommand("train", "Train a parser");
  trainc->add_option("--train", tr.train, "Training corpus")->required()->check(CLI::ExistingFile);
  trainc->add_option("--dev", tr.dev, "Development corpus for model selection")
      ->check(CLI::ExistingFile);
  trainc->add_option("--out", tr.out, "Output directory for best.ckpt and history.jsonl")
      ->required();
  trainc->add_option("--config", tr.config, "JSON file with model and training keys")
      ->check(CLI::ExistingFile);
  trainc->add_option("--set", tr.sets, "Override one key, key=value (repeatable)");
  trainc->add_option("--seed", tr.seed, "Seed for initialization, shuffling and dropout");
  trainc->add_option("--ontology", tr.ontology, "Declared ontology JSON")
      ->check(CLI::ExistingFile);
  trainc->add_option("--embeddings", tr.embeddings, "External token vectors (JSONL)")
      ->check(CLI::ExistingFile);
  trainc->add_flag("--quiet", tr.quiet, "No per-epoch progress on stderr");

  PredictArgs pr;
  auto* predict = app.add_subcommand("predict", "Parse a corpus with a trained checkpoint");
  predict->add_option("--checkpoint", pr.checkpoint, "Checkpoint file")
      ->required()->check(CLI::ExistingFile);
  predict->add_option("--input", pr.input, "Corpus to parse")->required()->check(CLI::ExistingFile);
  predict->add_option("--output", pr.output, "Prediction file")->required();
  predict->add_option("--format", pr.format, "Output format")
      ->check(CLI::IsMember({"graph", "mentions"}))->capture_default_str();
  predict->add_option("--embeddings", pr.embeddings, "External token vectors (JSONL)")
      ->check(CLI::ExistingFile);

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against gold mentions");
  evaluate->add_option("--gold", ev.gold, "Gold corpus")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--pred", ev.pred, "Predicted corpus")->check(CLI::ExistingFile);
  evaluate->add_option("--checkpoint", ev.checkpoint, "Predict with this checkpoint instead")
      ->check(CLI::ExistingFile);
  evaluate->add_option("--embeddings", ev.embeddings, "External token vectors (JSONL)")
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*convert) return run_convert(conv);
    if (*validate) return run_validate(val);
    if (*stats) return run_stats(stats_input);
    if (*synth) return run_synth(syn);
    if (*trainc) return run_train(tr);
    if (*predict) return run_predict(pr);
    if (*evaluate) return run_evaluate(ev);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  }
  return kUsage;
}

// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "mulan/app/commands.h"
#include "mulan/error.h"

namespace {

struct Flags {
  std::string config, checkpoint, corpus, out, task, index, query, kind, modality = "audio";
  std::size_t k = 10;
  std::uint64_t seed = 0;
  bool resume = false;
};

mulan::app::CommandOptions to_options(const Flags& f, const CLI::App& sub) {
  mulan::app::CommandOptions o;
  auto set = [&](const char* flag, const std::string& value, std::optional<std::filesystem::path>& dst) {
    if (sub.get_option_no_throw(flag) && sub.count(flag)) dst = value;
  };
  set("--config", f.config, o.config);
  set("--checkpoint", f.checkpoint, o.checkpoint);
  set("--corpus", f.corpus, o.corpus);
  set("--out", f.out, o.out);
  set("--task", f.task, o.task);
  set("--index", f.index, o.index);
  if (sub.get_option_no_throw("--query") && sub.count("--query")) o.query = f.query;
  if (sub.get_option_no_throw("--kind") && sub.count("--kind")) o.kind = f.kind;
  if (sub.get_option_no_throw("--seed") && sub.count("--seed")) o.seed = f.seed;
  o.modality = f.modality;
  o.k = f.k;
  o.resume = f.resume;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-tower music/text embedding toolkit"};
  app.require_subcommand(1);
  Flags f;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with planted concepts");
  auto* train = app.add_subcommand("train", "Train both towers with the contrastive objective");
  auto* embed = app.add_subcommand("embed", "Write clip or text embeddings for a corpus");
  auto* retrieve = app.add_subcommand("retrieve", "Rank indexed clips for a text query");
  auto* eval = app.add_subcommand("eval", "Run an evaluation task and emit a JSON report");

  for (auto* sub : {synth, train, embed, retrieve, eval}) {
    sub->add_option("--config", f.config, "Run configuration JSON (default: desk profile)");
    sub->add_option("--seed", f.seed, "Override the run seed");
  }
  synth->add_option("--out", f.out, "Output directory")->required();
  train->add_option("--corpus", f.corpus, "Corpus JSONL (default: synthetic training split)");
  train->add_option("--out", f.out, "Checkpoint directory")->required();
  train->add_flag("--resume", f.resume, "Continue from the directory's latest checkpoint");
  embed->add_option("--checkpoint", f.checkpoint, "Checkpoint file")->required();
  embed->add_option("--corpus", f.corpus, "Corpus JSONL")->required();
  embed->add_option("--out", f.out, "Index file (.jsonl for JSON lines, binary otherwise)")->required();
  embed->add_option("--modality", f.modality, "audio or text")->check(CLI::IsMember({"audio", "text"}));
  retrieve->add_option("--checkpoint", f.checkpoint, "Checkpoint file")->required();
  retrieve->add_option("--index", f.index, "Embedding index from `embed`")->required();
  retrieve->add_option("--query", f.query, "Query text")->required();
  retrieve->add_option("--k", f.k, "Number of results")->check(CLI::PositiveNumber);
  eval->add_option("--checkpoint", f.checkpoint, "Checkpoint file")->required();
  eval->add_option("--task", f.task, "Task JSONL")->required();
  eval->add_option("--kind", f.kind, "Override: zero_shot, linear_probe, retrieval, triplet");
  eval->add_option("--corpus", f.corpus, "Corpus JSONL holding the task's clips");
  eval->add_option("--out", f.out, "Report path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*synth) return mulan::app::cmd_synth(to_options(f, *synth), std::cout);
    if (*train) return mulan::app::cmd_train(to_options(f, *train), std::cout);
    if (*embed) return mulan::app::cmd_embed(to_options(f, *embed), std::cout);
    if (*retrieve) return mulan::app::cmd_retrieve(to_options(f, *retrieve), std::cout);
    if (*eval) return mulan::app::cmd_eval(to_options(f, *eval), std::cout);
  } catch (const mulan::ArgumentError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const mulan::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

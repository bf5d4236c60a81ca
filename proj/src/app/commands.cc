// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mulan/app/commands.h"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>

#include "mulan/app/bundle.h"
#include "mulan/app/index.h"
#include "mulan/app/pipeline.h"
#include "mulan/app/trainer.h"
#include "mulan/error.h"
#include "mulan/eval/metrics.h"
#include "mulan/parallel.h"

namespace mulan::app {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

template <typename T>
const T& require(const std::optional<T>& v, const char* flag) {
  if (!v) throw ArgumentError(std::string("missing required option ") + flag);
  return *v;
}

std::string text_digest(const std::string& text) {
  const auto crc = nn::crc32_of(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08x", crc);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("failed writing " + path.string());
}

void ensure_writable_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
  const fs::path probe = dir / ".mulan_write_probe";
  {
    std::ofstream f(probe);
    if (!f) throw IoError("output directory " + dir.string() + " is not writable");
  }
  fs::remove(probe, ec);
}

}  // namespace

RunConfig resolve_config(const CommandOptions& opts) {
  RunConfig cfg = opts.config ? load_config(*opts.config) : desk_profile();
  if (opts.seed) cfg.seed = *opts.seed;
  cfg.workers = num_workers_from_env(cfg.workers);
  cfg.validate(false);
  return cfg;
}

int cmd_synth(const CommandOptions& opts, std::ostream& out) {
  RunConfig cfg = resolve_config(opts);
  if (opts.seed) cfg.synthetic.seed = *opts.seed;
  cfg.validate(false);
  const fs::path dir = require(opts.out, "--out");
  corpus::Corpus all = corpus::generate_synthetic(cfg.synthetic, cfg.mel);
  const corpus::Lexicon lex = corpus::make_lexicon(cfg.synthetic);

  ensure_writable_dir(dir);
  fs::create_directories(dir / "audio");
  fs::create_directories(dir / "tasks");
  corpus::Corpus with_paths(dir);
  std::vector<corpus::Recording> recs(all.recordings().begin(), all.recordings().end());
  parallel_for(recs.size(), cfg.workers, [&](std::size_t i) {
    const std::string rel = "audio/" + recs[i].id + ".wav";
    dsp::write_wav(dir / rel, corpus::render_synthetic(recs[i], cfg.synthetic, cfg.mel));
    recs[i].audio = rel;
  });
  for (auto& r : recs) with_paths.add(std::move(r));
  const auto [train, ev] = corpus::split_corpus(with_paths, cfg.training.train_recordings);
  const std::string jsonl = corpus::corpus_to_jsonl(with_paths);
  write_text(dir / "corpus.jsonl", jsonl);
  corpus::save_corpus(train, dir / "train.jsonl");
  corpus::save_corpus(ev, dir / "eval.jsonl");
  text::write_labeled_tsv(dir / "filter_labels.tsv",
                          corpus::labeled_sentences(cfg.synthetic, cfg.filter.labeled_sentences,
                                                    cfg.seed ^ 0x6c6162656cULL));
  eval::save_task(synthetic_zero_shot_task(ev, lex), dir / "tasks" / "zero_shot.jsonl");
  eval::save_task(synthetic_probe_task(train, train.size() / 2, ev, lex), dir / "tasks" / "linear_probe.jsonl");
  eval::save_task(synthetic_retrieval_task(ev, lex, 4, cfg.seed), dir / "tasks" / "retrieval.jsonl");
  eval::save_task(synthetic_triplet_task(cfg.synthetic, lex, 2000, cfg.seed), dir / "tasks" / "triplet.jsonl");
  write_text(dir / "config.json", to_json(cfg).dump(2) + "\n");
  out << "recordings " << with_paths.size() << " (train " << train.size() << ", eval " << ev.size() << ")\n";
  out << "manifest digest " << text_digest(jsonl) << "\n";
  return 0;
}

int cmd_train(const CommandOptions& opts, std::ostream& out) {
  RunConfig cfg = resolve_config(opts);
  const fs::path dir = require(opts.out, "--out");
  corpus::Corpus raw;
  if (opts.corpus) {
    raw = corpus::load_corpus(*opts.corpus);
  } else {
    raw = corpus::split_corpus(corpus::generate_synthetic(cfg.synthetic, cfg.mel),
                               cfg.training.train_recordings).first;
  }
  FilterSummary filter;
  const corpus::Corpus train = apply_filters(cfg, raw, &filter);
  text::Vocabulary vocab = text::build_vocabulary(train.all_texts());
  const corpus::FeatureStore features = compute_features(cfg, train);
  Trainer trainer(cfg, train, features, std::move(vocab));  // validates before any write

  if (cfg.filter.lf_classifier) {
    out << "lf filter kept " << filter.lf_after << " of " << filter.lf_before
        << " (classifier training accuracy " << filter.classifier_accuracy << ")\n";
  }
  RunOptions ro;
  ro.out_dir = dir;
  ro.resume = opts.resume;
  const std::uint64_t report_every = std::max<std::uint64_t>(1, trainer.total_steps() / 20);
  ro.on_step = [&](const StepStats& s) {
    if (s.step % report_every == 0) {
      out << "step " << s.step << "/" << trainer.total_steps() << " loss " << s.loss << " tau " << s.tau << "\n";
      out.flush();
    }
  };
  const RunSummary summary = run_training(trainer, ro);
  trainer.vocab().save(dir / "vocab.txt");
  out << "trained " << summary.steps << " steps; checkpoint " << summary.final_checkpoint.string() << " ("
      << nn::file_digest(summary.final_checkpoint) << ")\n";
  return 0;
}

int cmd_embed(const CommandOptions& opts, std::ostream& out) {
  const ModelBundle model = load_bundle(require(opts.checkpoint, "--checkpoint"));
  const fs::path out_path = require(opts.out, "--out");
  const corpus::Corpus corpus = corpus::load_corpus(require(opts.corpus, "--corpus"));
  if (opts.modality != "audio" && opts.modality != "text") {
    throw ArgumentError("--modality must be audio or text");
  }
  const int workers = num_workers_from_env(model.config.workers);
  EmbeddingIndex index;
  index.dim = model.config.model.embed_dim();
  index.digest = model.digest;
  index.modality = opts.modality;
  if (opts.modality == "audio") {
    const corpus::FeatureStore features = compute_features(model.config, corpus);
    index.vectors = embed_clips(model, corpus, features, workers);
    for (const auto& r : corpus.recordings()) index.ids.push_back(r.id);
  } else {
    std::set<std::string> unique;
    for (const auto& t : corpus.all_texts()) unique.insert(t);
    index.ids.assign(unique.begin(), unique.end());
    index.vectors = embed_texts(model, index.ids, workers);
  }
  for (const auto& v : index.vectors) {
    if (v.size() != index.dim) throw SizeError("embedding dimension does not match the checkpoint");
  }
  write_index(out_path, index);
  out << "wrote " << index.ids.size() << " " << opts.modality << " embeddings to " << out_path.string() << "\n";
  return 0;
}

int cmd_retrieve(const CommandOptions& opts, std::ostream& out) {
  const ModelBundle model = load_bundle(require(opts.checkpoint, "--checkpoint"));
  const EmbeddingIndex index = read_index(require(opts.index, "--index"));
  const std::string& query = require(opts.query, "--query");
  if (index.dim != model.config.model.embed_dim()) {
    throw SizeError("index dimension " + std::to_string(index.dim) + " does not match the checkpoint");
  }
  if (index.digest != model.digest) {
    throw IntegrityError("index was built by checkpoint " + index.digest + ", not " + model.digest);
  }
  if (opts.k == 0) throw ArgumentError("--k must be positive");
  const auto hits = eval::retrieve(embed_text_string(model, query), index.ids, index.vectors, opts.k);
  for (std::size_t i = 0; i < hits.size(); ++i) {
    char score[32];
    std::snprintf(score, sizeof(score), "%.6f", hits[i].score);
    out << (i + 1) << '\t' << hits[i].id << '\t' << score << '\n';
  }
  return 0;
}

int cmd_eval(const CommandOptions& opts, std::ostream& out) {
  const ModelBundle model = load_bundle(require(opts.checkpoint, "--checkpoint"));
  eval::Task task = eval::load_task(require(opts.task, "--task"));
  if (opts.kind) {
    const eval::TaskKind kind = eval::parse_task_kind(*opts.kind);
    const bool tagging = [](eval::TaskKind k) {
      return k == eval::TaskKind::kZeroShot || k == eval::TaskKind::kLinearProbe;
    }(kind);
    const bool file_tagging = task.kind == eval::TaskKind::kZeroShot || task.kind == eval::TaskKind::kLinearProbe;
    if (kind != task.kind && !(tagging && file_tagging)) {
      throw ArgumentError("task file holds a " + eval::task_kind_name(task.kind) + " task, not " + *opts.kind);
    }
    task.kind = kind;
  }
  const int workers = num_workers_from_env(model.config.workers);
  corpus::Corpus clips;
  corpus::FeatureStore features;
  if (task.kind != eval::TaskKind::kTriplet) {
    clips = corpus::load_corpus(require(opts.corpus, "--corpus"));
    features = compute_features(model.config, clips);
  }
  json report = run_task(model, task, clips, features, workers);
  report["config_digest"] = config_digest(model.config);
  report["checkpoint_digest"] = model.digest;
  const std::string text = report.dump(2) + "\n";
  if (opts.out) {
    write_text(*opts.out, text);
  } else {
    out << text;
  }
  return 0;
}

}  // namespace mulan::app

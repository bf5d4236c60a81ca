// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mulan/app/pipeline.h"

#include <algorithm>
#include <map>
#include <random>

#include "mulan/error.h"
#include "mulan/eval/metrics.h"
#include "mulan/parallel.h"

namespace mulan::app {
namespace {

using nlohmann::json;

json number_or_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

std::vector<int> concept_labels(const corpus::Recording& r, std::size_t k) {
  std::vector<int> row(k, 0);
  for (int c : r.concepts) {
    if (c >= 0 && static_cast<std::size_t>(c) < k) row[static_cast<std::size_t>(c)] = 1;
  }
  return row;
}

std::string phrase(const std::vector<std::string>& pool, std::size_t lo, std::size_t hi,
                   std::size_t words, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(lo, hi - 1);
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) out += ' ';
    out += pool[pick(rng)];
  }
  return out;
}

std::vector<std::size_t> lookup(const corpus::Corpus& clips, const std::vector<std::string>& ids) {
  std::vector<std::size_t> rows;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < clips.size(); ++i) index.emplace(clips[i].id, i);
  for (const auto& id : ids) {
    auto it = index.find(id);
    if (it == index.end()) throw ArgumentError("task references unknown clip '" + id + "'");
    rows.push_back(it->second);
  }
  return rows;
}

// Embeds only the referenced clips.
std::vector<model::Embedding> clip_embeddings(const ModelBundle& model, const corpus::Corpus& clips,
                                              const corpus::FeatureStore& features,
                                              const std::vector<std::string>& ids, int workers,
                                              std::vector<std::string>* padded) {
  const auto rows = lookup(clips, ids);
  corpus::Corpus subset;
  std::vector<std::size_t> unique_rows;
  std::map<std::size_t, std::size_t> slot;
  for (std::size_t r : rows) {
    if (slot.emplace(r, unique_rows.size()).second) unique_rows.push_back(r);
  }
  std::vector<model::Embedding> unique(unique_rows.size());
  std::vector<char> pads(unique_rows.size(), 0);
  parallel_for(unique_rows.size(), workers, [&](std::size_t i) {
    bool pad = false;
    const auto segs = corpus::clip_segments(features[unique_rows[i]], model.config.model.window_frames, &pad);
    pads[i] = pad;
    unique[i] = model::embed_clip(model.params, model.config.model, segs);
  });
  if (padded) {
    for (std::size_t i = 0; i < unique_rows.size(); ++i) {
      if (pads[i]) padded->push_back(clips[unique_rows[i]].id);
    }
  }
  std::vector<model::Embedding> out;
  for (std::size_t r : rows) out.push_back(unique[slot[r]]);
  return out;
}

json class_report(const std::vector<std::string>& tags, const eval::ClassReport& rep) {
  json per = json::object();
  for (std::size_t c = 0; c < tags.size(); ++c) per[tags[c]] = number_or_null(rep.per_class[c]);
  json skipped = json::array();
  for (std::size_t c : rep.skipped) skipped.push_back(tags[c]);
  return json{{"per_class", per}, {"skipped", skipped}, {"macro", {{"auc", number_or_null(rep.macro)}}}};
}

}  // namespace

corpus::FeatureStore compute_features(const RunConfig& cfg, const corpus::Corpus& c) {
  return corpus::FeatureStore::compute(c, cfg.mel, &cfg.synthetic, cfg.workers);
}

SyntheticData make_synthetic_data(const RunConfig& cfg) {
  SyntheticData d;
  d.all = corpus::generate_synthetic(cfg.synthetic, cfg.mel);
  d.lexicon = corpus::make_lexicon(cfg.synthetic);
  std::tie(d.train, d.eval) = corpus::split_corpus(d.all, cfg.training.train_recordings);
  d.train_features = compute_features(cfg, d.train);
  d.eval_features = compute_features(cfg, d.eval);
  d.all_features = compute_features(cfg, d.all);
  return d;
}

eval::Task synthetic_zero_shot_task(const corpus::Corpus& ev, const corpus::Lexicon& lex) {
  eval::TaggingTask t;
  t.tags = lex.names;
  for (const auto& r : ev.recordings()) {
    t.clips.push_back(r.id);
    t.labels.push_back(concept_labels(r, lex.names.size()));
    t.train.push_back(false);
  }
  return {eval::TaskKind::kZeroShot, t};
}

eval::Task synthetic_probe_task(const corpus::Corpus& train, std::size_t train_clips,
                                const corpus::Corpus& ev, const corpus::Lexicon& lex) {
  eval::TaggingTask t;
  t.tags = lex.names;
  for (std::size_t i = 0; i < std::min(train_clips, train.size()); ++i) {
    t.clips.push_back(train[i].id);
    t.labels.push_back(concept_labels(train[i], lex.names.size()));
    t.train.push_back(true);
  }
  for (const auto& r : ev.recordings()) {
    t.clips.push_back(r.id);
    t.labels.push_back(concept_labels(r, lex.names.size()));
    t.train.push_back(false);
  }
  return {eval::TaskKind::kLinearProbe, t};
}

eval::Task synthetic_retrieval_task(const corpus::Corpus& ev, const corpus::Lexicon& lex,
                                    std::size_t queries_per_concept, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  eval::RetrievalTask t;
  for (const auto& r : ev.recordings()) t.pool.push_back(r.id);
  for (std::size_t k = 0; k < lex.names.size(); ++k) {
    std::set<std::string> targets;
    for (const auto& r : ev.recordings()) {
      if (std::find(r.concepts.begin(), r.concepts.end(), static_cast<int>(k)) != r.concepts.end()) {
        targets.insert(r.id);
      }
    }
    if (targets.empty()) continue;
    const auto& sf = lex.pools[k][0];
    for (std::size_t q = 0; q < queries_per_concept; ++q) {
      t.queries.push_back(lex.names[k] + " " + phrase(sf, 0, sf.size(), 2, rng));
      t.targets.push_back(targets);
    }
  }
  return {eval::TaskKind::kRetrieval, t};
}

eval::Task synthetic_triplet_task(const corpus::SyntheticSpec& spec, const corpus::Lexicon& lex,
                                  std::size_t count, std::uint64_t seed) {
  if (spec.pool_size < 2) throw ConfigError("triplets need long-form pools of at least 2 words");
  std::mt19937_64 rng(seed);
  const std::size_t k = lex.names.size();
  const std::size_t half = spec.pool_size / 2;
  std::uniform_int_distribution<std::size_t> pick_concept(0, k - 1);
  std::uniform_int_distribution<std::size_t> pick_other(0, k - 2);
  eval::TripletTask t;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t a = pick_concept(rng);
    std::size_t b = pick_other(rng);
    if (b >= a) ++b;
    const auto& pa = lex.pools[a][1];
    const auto& pb = lex.pools[b][1];
    eval::Triplet tr;
    tr.anchor = phrase(pa, 0, half, 3, rng);
    tr.pos = phrase(pa, half, pa.size(), 3, rng);
    tr.neg = phrase(pb, half, pb.size(), 3, rng);
    t.triplets.push_back(std::move(tr));
  }
  return {eval::TaskKind::kTriplet, t};
}

json run_task(const ModelBundle& model, const eval::Task& task, const corpus::Corpus& clips,
              const corpus::FeatureStore& features, int workers) {
  json report{{"task", eval::task_kind_name(task.kind)}};
  switch (task.kind) {
    case eval::TaskKind::kZeroShot: {
      const auto& t = std::get<eval::TaggingTask>(task.body);
      t.validate(false);
      std::vector<std::string> padded;
      const auto clip_emb = clip_embeddings(model, clips, features, t.clips, workers, &padded);
      const auto tag_emb = embed_texts(model, t.tags, workers);
      const auto rep = eval::auc_roc_class_balanced(eval::cosine_scores(clip_emb, tag_emb), t.labels);
      report.update(class_report(t.tags, rep));
      report["padded_clips"] = padded;
      break;
    }
    case eval::TaskKind::kLinearProbe: {
      const auto& t = std::get<eval::TaggingTask>(task.body);
      t.validate(true);
      std::vector<std::string> padded;
      const auto emb = clip_embeddings(model, clips, features, t.clips, workers, &padded);
      std::vector<std::vector<double>> xtr, xev;
      eval::LabelMatrix ytr, yev;
      for (std::size_t i = 0; i < t.clips.size(); ++i) {
        (t.train[i] ? xtr : xev).push_back(emb[i]);
        (t.train[i] ? ytr : yev).push_back(t.labels[i]);
      }
      const auto rep = eval::linear_probe(xtr, ytr, xev, yev, model.config.probe);
      report.update(class_report(t.tags, rep));
      report["padded_clips"] = padded;
      break;
    }
    case eval::TaskKind::kRetrieval: {
      const auto& t = std::get<eval::RetrievalTask>(task.body);
      t.validate();
      const auto pool_emb = clip_embeddings(model, clips, features, t.pool, workers, nullptr);
      const auto query_emb = embed_texts(model, t.queries, workers);
      std::vector<std::vector<std::string>> ranked;
      json per = json::array();
      double auc_sum = 0.0;
      std::size_t auc_n = 0;
      for (std::size_t q = 0; q < t.queries.size(); ++q) {
        const auto hits = eval::retrieve(query_emb[q], t.pool, pool_emb, t.pool.size());
        std::vector<std::string> ids;
        std::vector<double> scores;
        std::vector<int> labels;
        for (const auto& h : hits) {
          ids.push_back(h.id);
          scores.push_back(h.score);
          labels.push_back(t.targets[q].count(h.id) ? 1 : 0);
        }
        ranked.push_back(std::move(ids));
        double auc = std::nan("");
        if (t.targets[q].size() < t.pool.size()) {
          auc = eval::auc_roc(scores, labels);
          auc_sum += auc;
          ++auc_n;
        }
        per.push_back({{"query", t.queries[q]}, {"auc", number_or_null(auc)}});
      }
      std::vector<double> ap;
      const double map = eval::mean_average_precision(ranked, t.targets, &ap);
      for (std::size_t q = 0; q < ap.size(); ++q) per[q]["ap"] = ap[q];
      report["per_query"] = per;
      report["macro"] = {{"map", map},
                         {"auc", number_or_null(auc_n ? auc_sum / static_cast<double>(auc_n) : std::nan(""))}};
      break;
    }
    case eval::TaskKind::kTriplet: {
      const auto& t = std::get<eval::TripletTask>(task.body);
      t.validate();
      std::vector<eval::TripletEmbeddings> emb(t.triplets.size());
      parallel_for(t.triplets.size(), workers, [&](std::size_t i) {
        emb[i] = {embed_text_string(model, t.triplets[i].anchor), embed_text_string(model, t.triplets[i].pos),
                  embed_text_string(model, t.triplets[i].neg)};
      });
      report["count"] = t.triplets.size();
      report["macro"] = {{"accuracy", eval::triplet_accuracy(emb)}};
      break;
    }
  }
  return report;
}

}  // namespace mulan::app

// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mulan/app/bundle.h"
#include "mulan/app/config.h"
#include "mulan/app/pipeline.h"
#include "mulan/app/trainer.h"
#include "mulan/contrastive/loss.h"
#include "mulan/corpus/sampling.h"
#include "mulan/eval/metrics.h"
#include "mulan/model/towers.h"
#include "mulan/nn/gradcheck.h"
#include "mulan/nn/ops.h"
#include "mulan/text/tokenizer.h"

using namespace mulan;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

nn::Tensor random_tensor(const nn::Shape& shape, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  nn::Tensor t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = normal(rng);
  return t;
}

nn::Var project(nn::Var y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  nn::Var w = y.tape().constant(random_tensor(y.shape(), rng));
  return nn::sum(nn::mul(y, w));
}

// ---------------------------------------------------------------- 1

Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  constexpr double kTol = 1e-4;
  double worst = 0.0;
  std::string worst_where;
  std::size_t checks = 0;
  auto note = [&](const nn::GradCheckReport& r, const std::string& what) {
    ++checks;
    if (r.coordinates == 0 || r.max_rel_error >= worst) {
      worst = r.coordinates == 0 ? INFINITY : r.max_rel_error;
      worst_where = what + " " + r.worst;
    }
  };
  using nn::Var;
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 1 + trial % 3, k = 2 + trial % 4, n = 1 + (trial * 7) % 5;
    const nn::Tensor a = random_tensor({m, k}, rng), b = random_tensor({k, n}, rng);
    const nn::Tensor c = random_tensor({m, k}, rng), bias = random_tensor({n}, rng);
    const nn::Tensor row_bias = random_tensor({k}, rng), gain = random_tensor({k}, rng);
    nn::Tensor pos = a;
    for (double& x : pos.data()) x = 0.5 + std::abs(x);
    const auto s = static_cast<std::uint64_t>(trial);
    const std::size_t heads = 1 + trial % 2, len = 2 + trial % 4;
    const nn::Tensor qkv = random_tensor({len, 3 * heads * 2}, rng);
    std::vector<std::uint8_t> mask(len, 1);
    mask[len - 1] = static_cast<std::uint8_t>(trial % 2);
    const std::vector<int> ids = {0, 2, 1, 2};
    const nn::Tensor table = random_tensor({3, k}, rng);

    struct Case {
      const char* name;
      nn::InputGraph graph;
      std::vector<nn::Tensor> inputs;
    };
    const std::vector<Case> cases = {
        {"matmul", [&](nn::Tape&, std::span<const Var> v) { return project(nn::matmul(v[0], v[1]), s); }, {a, b}},
        {"linear", [&](nn::Tape&, std::span<const Var> v) { return project(nn::linear(v[0], v[1], v[2]), s); },
         {a, b, bias}},
        {"add", [&](nn::Tape&, std::span<const Var> v) { return project(nn::add(v[0], v[1]), s); }, {a, c}},
        {"sub", [&](nn::Tape&, std::span<const Var> v) { return project(nn::sub(v[0], v[1]), s); }, {a, c}},
        {"mul", [&](nn::Tape&, std::span<const Var> v) { return project(nn::mul(v[0], v[1]), s); }, {a, c}},
        {"add_row", [&](nn::Tape&, std::span<const Var> v) { return project(nn::add_row(v[0], v[1]), s); },
         {a, row_bias}},
        {"scale", [&](nn::Tape&, std::span<const Var> v) { return project(nn::scale(v[0], -1.7), s); }, {a}},
        {"mean_rows", [&](nn::Tape&, std::span<const Var> v) { return project(nn::mean_rows(v[0]), s); }, {a}},
        {"exp", [&](nn::Tape&, std::span<const Var> v) { return project(nn::exp(v[0]), s); }, {a}},
        {"log", [&](nn::Tape&, std::span<const Var> v) { return project(nn::log(v[0]), s); }, {pos}},
        {"gelu", [&](nn::Tape&, std::span<const Var> v) { return project(nn::gelu(v[0]), s); }, {a}},
        {"softmax", [&](nn::Tape&, std::span<const Var> v) { return project(nn::softmax(v[0]), s); }, {a}},
        {"layer_norm",
         [&](nn::Tape&, std::span<const Var> v) { return project(nn::layer_norm(v[0], v[1], v[2]), s); },
         {a, gain, row_bias}},
        {"l2_normalize", [&](nn::Tape&, std::span<const Var> v) { return project(nn::l2_normalize(v[0]), s); },
         {a}},
        {"embedding", [&](nn::Tape&, std::span<const Var> v) { return project(nn::embedding(v[0], ids), s); },
         {table}},
        {"concat_rows",
         [&](nn::Tape&, std::span<const Var> v) { return project(nn::concat_rows(v[0], v[1]), s); }, {a, c}},
        {"take_row", [&](nn::Tape&, std::span<const Var> v) { return project(nn::take_row(v[0], m - 1), s); },
         {a}},
        {"sum", [&](nn::Tape&, std::span<const Var> v) { return nn::sum(v[0]); }, {a}},
        {"masked_attention",
         [&](nn::Tape&, std::span<const Var> v) { return project(nn::masked_attention(v[0], heads, mask), s); },
         {qkv}},
    };
    for (const auto& cs : cases) note(nn::check_gradients(cs.graph, cs.inputs), cs.name);
  }

  // Full loss through both towers on micro configurations.
  for (int trial = 0; trial < 20; ++trial) {
    model::ModelConfig cfg;
    for (model::TowerConfig* t : {&cfg.audio, &cfg.text}) {
      t->num_layers = 1 + trial % 2;
      t->hidden_dim = 8;
      t->num_heads = 2;
      t->mlp_dim = 16;
      t->embed_dim = 4;
      t->patch_size = 4;
      t->patch_stride = trial % 3 == 0 ? 2 : 4;
    }
    cfg.text.vocab_size = 10;
    cfg.text.max_positions = 6;
    cfg.mel_channels = 8;
    cfg.window_frames = 8;
    cfg.init_std = 0.3;
    std::mt19937_64 r(500 + trial);
    nn::ParameterStore store;
    model::init_tower_parameters(store, cfg, r);
    store.add(contrastive::kLogTauName, nn::Tensor::scalar(std::log(0.1 + 0.05 * (trial % 5))));
    const std::size_t batch = 2 + trial % 2;
    std::vector<dsp::ContextWindow> windows(batch);
    std::vector<text::TokenSequence> texts(batch);
    for (std::size_t i = 0; i < batch; ++i) {
      windows[i].values = random_tensor({8, 8}, r);
      const std::size_t len = 2 + (i + static_cast<std::size_t>(trial)) % 4;
      texts[i].ids.assign(6, 0);
      texts[i].attention_mask.assign(6, 0);
      texts[i].ids[0] = 1;
      for (std::size_t p = 0; p < 6; ++p) {
        if (p > 0 && p < len) texts[i].ids[p] = 2 + static_cast<int>(r() % 8);
        texts[i].attention_mask[p] = p < len ? 1 : 0;
      }
    }
    const auto den = trial % 2 ? contrastive::Denominator::kInclusive : contrastive::Denominator::kExclusive;
    const auto rep = nn::check_parameter_gradients(store, [&](nn::Tape& tape) {
      Var a = model::audio_tower(tape, store, cfg, windows[0]);
      Var t = model::text_tower(tape, store, cfg, texts[0]);
      for (std::size_t i = 1; i < batch; ++i) {
        a = nn::concat_rows(a, model::audio_tower(tape, store, cfg, windows[i]));
        t = nn::concat_rows(t, model::text_tower(tape, store, cfg, texts[i]));
      }
      return contrastive::cmc_loss(a, t, contrastive::temperature(store.bind(tape, contrastive::kLogTauName), 1e-3),
                                   den);
    });
    note(rep, "towers+loss#" + std::to_string(trial));
  }
  const double secs = seconds_since(t0);
  return {worst < kTol && secs < 120.0,
          std::to_string(checks) + " checks, max rel err " + fmt("%.2e", worst) + " at " + worst_where + ", " +
              fmt("%.1f", secs) + " s"};
}

// ---------------------------------------------------------------- 2

nn::Tensor rows_of(const std::vector<std::vector<double>>& rows) {
  nn::Tensor t = nn::Tensor::matrix(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy(rows[i].begin(), rows[i].end(), t.row(i).begin());
  return t;
}

Outcome loss_closed_forms() {
  using contrastive::Denominator;
  const nn::Tensor perfect = rows_of({{1, 0, 0, 0}, {0, 1, 0, 0}});
  const double exclusive = contrastive::cmc_loss_value(perfect, perfect, 0.1, Denominator::kExclusive);
  const double inclusive = contrastive::cmc_loss_value(perfect, perfect, 0.1, Denominator::kInclusive);
  // Per pair: h_ii = e^10, cross terms e^0 = 1.
  const double inclusive_oracle = 2.0 * std::log((2.0 * std::exp(10.0) + 2.0) / std::exp(10.0));
  bool ok = std::abs(exclusive - -18.61371) < 1e-4 && std::abs(inclusive - inclusive_oracle) < 1e-6;
  double same_err = 0.0;
  const nn::Tensor same = rows_of({{0.6, 0.8}, {0.6, 0.8}});
  for (double tau : {1e-3, 0.05, 0.1, 0.5, 1.0}) {
    same_err = std::max(same_err, std::abs(contrastive::cmc_loss_value(same, same, tau, Denominator::kExclusive) -
                                           2.0 * std::log(2.0)));
  }
  ok = ok && same_err < 1e-9;
  return {ok, "exclusive " + fmt("%.6f", exclusive) + ", inclusive " + fmt("%.7f", inclusive) + " (oracle " +
                  fmt("%.7f", inclusive_oracle) + "), identical-pair max err " + fmt("%.1e", same_err)};
}

// ---------------------------------------------------------------- 3

Outcome unit_norm() {
  const app::RunConfig desk = app::desk_profile();
  model::ModelConfig cfg = desk.model;
  cfg.text.vocab_size = 50;
  double worst = 0.0;
  std::size_t evals = 0;
  std::mt19937_64 rng(303);
  for (int init = 0; init < 50; ++init) {
    nn::ParameterStore store;
    std::mt19937_64 init_rng(rng());
    model::init_tower_parameters(store, cfg, init_rng);
    for (int i = 0; i < 100; ++i) {
      dsp::ContextWindow w;
      w.values = random_tensor({cfg.mel_channels, cfg.window_frames}, rng, 1.0 + i % 7);
      worst = std::max(worst, std::abs(model::l2_norm(model::embed_audio(store, cfg, w)) - 1.0));
      text::TokenSequence t;
      const std::size_t len = 1 + rng() % cfg.text.max_positions;
      for (std::size_t p = 0; p < cfg.text.max_positions; ++p) {
        t.ids.push_back(p == 0 ? 1 : (p < len ? static_cast<int>(rng() % 50) : 0));
        t.attention_mask.push_back(p < len ? 1 : 0);
      }
      worst = std::max(worst, std::abs(model::l2_norm(model::embed_text(store, cfg, t)) - 1.0));
      evals += 2;
    }
  }
  return {worst <= 1e-9 && evals >= 10000,
          std::to_string(evals) + " evaluations, max |norm - 1| " + fmt("%.2e", worst)};
}

// ---------------------------------------------------------------- 4

double brute_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double good = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] == 1 && y[j] == 0) {
        pairs += 1.0;
        good += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
    }
  }
  return good / pairs;
}

double brute_ap(const std::vector<int>& rel) {
  long double total = 0.0L;
  int hits = 0;
  for (std::size_t r = 0; r < rel.size(); ++r) {
    if (!rel[r]) continue;
    int upto = 0;
    for (std::size_t q = 0; q <= r; ++q) upto += rel[q];
    total += static_cast<long double>(upto) / static_cast<long double>(r + 1);
    ++hits;
  }
  return static_cast<double>(total / hits);
}

Outcome metric_oracles() {
  std::size_t mismatches = 0;
  std::mt19937_64 rng(404);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng() % 199;
    std::vector<double> s(n);
    std::vector<int> y(n);
    const bool coarse = trial % 3 == 0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = coarse ? static_cast<double>(rng() % 5) : std::uniform_real_distribution<double>(-1, 1)(rng);
      y[i] = static_cast<int>(rng() % 2);
    }
    y[0] = 1;
    y[1] = 0;
    std::shuffle(y.begin(), y.end(), rng);
    if (eval::auc_roc(s, y) != brute_auc(s, y)) ++mismatches;
    if (eval::average_precision(y) != brute_ap(y)) ++mismatches;
    // Same relevance through the id-based mAP path.
    std::vector<std::string> ranked;
    std::set<std::string> targets;
    for (std::size_t i = 0; i < n; ++i) {
      ranked.push_back("c" + std::to_string(i));
      if (y[i]) targets.insert(ranked.back());
    }
    if (eval::mean_average_precision({ranked}, {targets}) != brute_ap(y)) ++mismatches;
  }
  const double hand_auc = eval::auc_roc(std::vector<double>{0.9, 0.8, 0.3, 0.1}, std::vector<int>{1, 0, 1, 0});
  const double hand_ap = eval::average_precision(std::vector<int>{1, 0, 1});
  const bool ok = mismatches == 0 && hand_auc == 0.75 && hand_ap == 5.0 / 6.0;
  return {ok, "1000 instances, " + std::to_string(mismatches) + " mismatches; hand AUC " + fmt("%.17g", hand_auc) +
                  ", hand AP " + fmt("%.17g", hand_ap)};
}

// ---------------------------------------------------------------- 5

Outcome batch_mixing() {
  app::RunConfig cfg = app::desk_profile();
  const app::SyntheticData data = app::make_synthetic_data(cfg);
  const text::Vocabulary vocab = text::build_vocabulary(data.train.all_texts());
  corpus::SamplerConfig sc;
  sc.window_frames = cfg.model.window_frames;
  sc.max_tokens = cfg.max_tokens;
  sc.augment = true;
  sc.augment_config = cfg.training.spec_augment;
  const corpus::PairSampler sampler(data.train, data.train_features, vocab, sc);
  const corpus::MixingSpec mix = corpus::MixingSpec::from_ratio(64, {2, 2, 1, 1});
  const std::array<std::size_t, 4> expected = {22, 21, 11, 10};
  std::mt19937_64 rng(505);
  std::size_t bad_counts = 0, bad_pairs = 0, pairs = 0;
  for (int b = 0; b < 1000; ++b) {
    const auto batch = corpus::assemble_batch(sampler, mix, rng, 1);
    std::array<std::size_t, 4> counts{};
    for (const auto& p : batch) {
      ++pairs;
      ++counts[static_cast<std::size_t>(p.source)];
      const corpus::Recording& rec = data.train[p.recording];
      bool ok = p.annotation < rec.annotations.size() && rec.annotations[p.annotation].source == p.source &&
                text::tokenize(rec.annotations[p.annotation].text, vocab, cfg.max_tokens) == p.tokens &&
                p.window.source_id == rec.id;
      const auto& spec = data.train_features[p.recording];
      ok = ok && p.window.start_frame + p.window.frames() <= spec.frames();
      // Every cell is the recording's own value unless SpecAugment masked it.
      for (std::size_t f = 0; ok && f < p.window.channels(); ++f) {
        for (std::size_t t = 0; ok && t < p.window.frames(); ++t) {
          const double v = p.window.values.at(f, t);
          ok = v == spec.values.at(f, p.window.start_frame + t) || v == sc.augment_config.mask_value;
        }
      }
      if (!ok) ++bad_pairs;
    }
    if (counts != expected) ++bad_counts;
  }
  return {bad_counts == 0 && bad_pairs == 0 && mix.counts == expected,
          "1000 batches of 64: " + std::to_string(bad_counts) + " with counts != (22,21,11,10); " +
              std::to_string(bad_pairs) + "/" + std::to_string(pairs) + " pairs failing provenance"};
}

// ---------------------------------------------------------------- 6, 7, 9

struct Metrics {
  double zero_shot = 0.0, probe = 0.0, retrieval_auc = 0.0, retrieval_map = 0.0, triplet = 0.0;
};

struct RunResult {
  Metrics untrained, trained;
  double seconds = 0.0;
  std::uint64_t steps = 0;
};

RunResult train_and_evaluate(app::RunConfig cfg) {
  const auto t0 = Clock::now();
  const app::SyntheticData data = app::make_synthetic_data(cfg);
  const corpus::Corpus train = app::apply_filters(cfg, data.train);
  const text::Vocabulary vocab = text::build_vocabulary(train.all_texts());
  app::Trainer trainer(cfg, train, data.train_features, vocab);
  trainer.initialize();
  const eval::Task zs = app::synthetic_zero_shot_task(data.eval, data.lexicon);
  const eval::Task probe = app::synthetic_probe_task(data.train, 400, data.eval, data.lexicon);
  const eval::Task ret = app::synthetic_retrieval_task(data.eval, data.lexicon, 4, 7);
  const eval::Task trip = app::synthetic_triplet_task(cfg.synthetic, data.lexicon, 2000, 9);
  auto measure = [&] {
    const app::ModelBundle b = trainer.bundle();
    Metrics m;
    m.zero_shot = app::run_task(b, zs, data.all, data.all_features, cfg.workers)["macro"]["auc"];
    m.probe = app::run_task(b, probe, data.all, data.all_features, cfg.workers)["macro"]["auc"];
    const json r = app::run_task(b, ret, data.all, data.all_features, cfg.workers)["macro"];
    m.retrieval_auc = r["auc"];
    m.retrieval_map = r["map"];
    m.triplet = app::run_task(b, trip, data.all, data.all_features, cfg.workers)["macro"]["accuracy"];
    return m;
  };
  RunResult out;
  out.untrained = measure();
  const std::uint64_t total = trainer.total_steps();
  while (trainer.global_step() < total) trainer.step();
  out.steps = trainer.global_step();
  out.trained = measure();
  out.seconds = seconds_since(t0);
  return out;
}

std::string describe(const Metrics& m) {
  return "zero-shot AUC " + fmt("%.4f", m.zero_shot) + ", retrieval mAP " + fmt("%.4f", m.retrieval_map) +
         " (AUC " + fmt("%.4f", m.retrieval_auc) + "), triplet " + fmt("%.4f", m.triplet) + ", probe AUC " +
         fmt("%.4f", m.probe);
}

Outcome convergence(const RunResult& r, std::size_t batch) {
  const Metrics& t = r.trained;
  const Metrics& u = r.untrained;
  auto chance = [](double v) { return std::abs(v - 0.5) <= 0.05; };
  const bool trained_ok = t.zero_shot >= 0.95 && t.retrieval_map >= 0.6 && t.triplet >= 0.9;
  const bool untrained_ok = chance(u.zero_shot) && chance(u.retrieval_auc) && chance(u.triplet);
  const bool budget_ok = r.steps <= 3000 && batch == 64 && r.seconds < 1800.0;
  return {trained_ok && untrained_ok && budget_ok,
          std::to_string(r.steps) + " steps in " + fmt("%.0f", r.seconds) + " s; trained: " + describe(t) +
              "; untrained: zero-shot AUC " + fmt("%.4f", u.zero_shot) + ", retrieval AUC " +
              fmt("%.4f", u.retrieval_auc) + ", triplet " + fmt("%.4f", u.triplet)};
}

// ---------------------------------------------------------------- 8

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return {};
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

app::RunConfig pipeline_config() {
  app::RunConfig c = app::desk_profile();
  c.seed = 808;
  for (model::TowerConfig* t : {&c.model.audio, &c.model.text}) {
    t->num_layers = 1;
    t->hidden_dim = 16;
    t->num_heads = 2;
    t->mlp_dim = 32;
    t->embed_dim = 8;
  }
  c.synthetic.num_recordings = 40;
  c.training.train_recordings = 30;
  c.training.batch_size = 12;
  c.training.epochs = 3;
  c.filter.labeled_sentences = 40;
  return c;
}

int run(const std::string& cmd) {
  const std::string full = cmd + " > /dev/null 2>&1";
  return std::system(full.c_str());
}

// Runs synth, train, embed and all four evals into `dir`; returns the
// artifacts to compare, keyed by relative path.
std::vector<std::pair<std::string, std::string>> pipeline(const std::string& bin, const fs::path& dir,
                                                          const fs::path& cfg, std::string* error) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string d = dir.string(), c = cfg.string();
  std::vector<std::string> cmds = {
      bin + " synth --config " + c + " --out " + d + "/data",
      bin + " train --config " + c + " --corpus " + d + "/data/train.jsonl --out " + d + "/run",
      bin + " embed --checkpoint " + d + "/run/final.ckpt --corpus " + d + "/data/eval.jsonl --out " + d +
          "/eval.idx",
  };
  for (const char* kind : {"zero_shot", "linear_probe", "retrieval", "triplet"}) {
    cmds.push_back(bin + " eval --checkpoint " + d + "/run/final.ckpt --corpus " + d +
                   "/data/corpus.jsonl --task " + d + "/data/tasks/" + kind + ".jsonl --out " + d + "/" + kind +
                   ".json");
  }
  for (const auto& cmd : cmds) {
    if (run(cmd) != 0) {
      *error = "command failed: " + cmd;
      return {};
    }
  }
  std::vector<std::pair<std::string, std::string>> files;
  for (const char* rel : {"data/corpus.jsonl", "run/final.ckpt", "run/train_log.csv", "eval.idx", "zero_shot.json",
                          "linear_probe.json", "retrieval.json", "triplet.json"}) {
    files.emplace_back(rel, slurp(dir / rel));
  }
  return files;
}

Outcome determinism() {
  const char* bin = std::getenv("MULAN_TEST_BIN");
  if (!bin) return {false, "MULAN_TEST_BIN is not set"};
  const fs::path root = fs::temp_directory_path() / "mulan_acceptance_pipeline";
  fs::remove_all(root);
  fs::create_directories(root);
  const app::RunConfig cfg = pipeline_config();
  { std::ofstream(root / "cfg.json") << app::to_json(cfg).dump(2); }
  std::string error;
  const auto a = pipeline(bin, root / "a", root / "cfg.json", &error);
  if (!error.empty()) return {false, error};
  const auto b = pipeline(bin, root / "b", root / "cfg.json", &error);
  if (!error.empty()) return {false, error};
  std::size_t differing = 0, empty = 0;
  std::string which;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].second.empty()) ++empty;
    if (a[i].second != b[i].second) {
      ++differing;
      which += " " + a[i].first;
    }
  }

  // Interrupted run resumed from its mid-training checkpoint.
  const app::SyntheticData data = app::make_synthetic_data(cfg);
  const text::Vocabulary vocab = text::build_vocabulary(data.train.all_texts());
  app::Trainer full(cfg, data.train, data.train_features, vocab);
  full.initialize();
  app::run_training(full, app::RunOptions{root / "full", false, std::nullopt, {}});
  app::Trainer first(cfg, data.train, data.train_features, vocab);
  first.initialize();
  const std::uint64_t stop = full.total_steps() / 2;
  app::run_training(first, app::RunOptions{root / "part", false, stop, {}});
  app::Trainer second(cfg, data.train, data.train_features, vocab);
  app::run_training(second, app::RunOptions{root / "part", true, std::nullopt, {}});
  const std::string full_ckpt = slurp(root / "full" / "final.ckpt");
  const bool resumed = !full_ckpt.empty() && full_ckpt == slurp(root / "part" / "final.ckpt") &&
                       slurp(root / "full" / "train_log.csv") == slurp(root / "part" / "train_log.csv");
  fs::remove_all(root);
  return {differing == 0 && empty == 0 && resumed,
          std::to_string(a.size()) + " artifacts compared across two pipeline runs, " + std::to_string(differing) +
              " differ" + which + "; resume after step " + std::to_string(stop) + "/" +
              std::to_string(full.total_steps()) + (resumed ? " bit-identical" : " DIFFERS")};
}

// ---------------------------------------------------------------- driver

int failures = 0;
std::set<int> selected;  // empty = every criterion

void report(int id, const std::string& title, const std::function<Outcome()>& body) {
  if (!selected.empty() && !selected.count(id)) return;
  Outcome o;
  const auto t0 = Clock::now();
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << title << ": " << o.detail << " ("
            << fmt("%.1f", seconds_since(t0)) << " s)" << std::endl;
}

}  // namespace

// Optional arguments restrict the run to the listed criterion numbers.
int main(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  report(1, "gradient correctness", gradient_correctness);
  report(2, "loss closed forms", loss_closed_forms);
  report(3, "unit-norm embeddings", unit_norm);
  report(4, "metric oracles", metric_oracles);
  report(5, "batch mixing and provenance", batch_mixing);

  const app::RunConfig base = app::desk_profile();
  std::optional<RunResult> unfiltered;
  report(6, "synthetic convergence", [&] {
    unfiltered = train_and_evaluate(base);
    return convergence(*unfiltered, base.training.batch_size);
  });
  report(7, "distractor filtering", [&]() -> Outcome {
    if (!unfiltered) unfiltered = train_and_evaluate(base);
    app::RunConfig filtered_cfg = base;
    filtered_cfg.filter.lf_classifier = true;
    const RunResult filtered = train_and_evaluate(filtered_cfg);
    const double u = unfiltered->trained.zero_shot, f = filtered.trained.zero_shot;
    return {f >= u - 0.02, "filtered zero-shot AUC " + fmt("%.4f", f) + " vs unfiltered " + fmt("%.4f", u) +
                               " (margin " + fmt("%+.4f", f - u) + ")"};
  });
  report(8, "determinism and persistence", determinism);
  report(9, "linear probe vs zero-shot", [&]() -> Outcome {
    if (!unfiltered) unfiltered = train_and_evaluate(base);
    const Metrics& m = unfiltered->trained;
    return {m.probe >= m.zero_shot,
            "probe AUC " + fmt("%.4f", m.probe) + " vs zero-shot AUC " + fmt("%.4f", m.zero_shot)};
  });
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}

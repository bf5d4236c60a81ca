// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mulan/app/trainer.h"

#include <fcntl.h>
#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "mulan/contrastive/loss.h"
#include "mulan/error.h"
#include "mulan/model/towers.h"
#include "mulan/nn/ops.h"
#include "mulan/parallel.h"

namespace mulan::app {
namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kTrainStreamSalt = 0x747261696e696e67ULL;

class LockFile {
 public:
  explicit LockFile(fs::path path) : path_(std::move(path)) {
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) {
      throw StateError("checkpoint directory is locked by another run (" + path_.string() + ")");
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto n = ::write(fd_, pid.data(), pid.size());
  }
  ~LockFile() {
    ::close(fd_);
    std::error_code ec;
    fs::remove(path_, ec);
  }
  LockFile(const LockFile&) = delete;
  LockFile& operator=(const LockFile&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

std::string rng_state(const std::mt19937_64& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

std::size_t count_source(const corpus::Corpus& c, corpus::SourceType s) {
  std::size_t n = 0;
  for (const auto& r : c.recordings()) n += r.annotation_indices(s).size();
  return n;
}

}  // namespace

corpus::Corpus apply_filters(const RunConfig& cfg, const corpus::Corpus& input,
                             FilterSummary* summary) {
  FilterSummary local;
  local.sf_before = count_source(input, corpus::SourceType::kSF);
  local.lf_before = count_source(input, corpus::SourceType::kLF);
  std::optional<text::DescriptivenessClassifier> clf;
  if (cfg.filter.lf_classifier) {
    const auto labeled = cfg.filter.labeled_path.empty()
                             ? corpus::labeled_sentences(cfg.synthetic, cfg.filter.labeled_sentences,
                                                         cfg.seed ^ 0x6c6162656cULL)
                             : text::read_labeled_tsv(cfg.filter.labeled_path);
    std::vector<std::string> texts;
    for (const auto& [t, y] : labeled) texts.push_back(t);
    auto vocab = std::make_shared<const text::Vocabulary>(text::build_vocabulary(texts));
    auto trained = text::train_descriptiveness_classifier(labeled, vocab);
    trained.classifier.set_threshold(cfg.filter.threshold);
    local.classifier_accuracy = trained.training_accuracy;
    clf.emplace(std::move(trained.classifier));
  }
  corpus::Corpus out(input.base_dir());
  for (corpus::Recording r : input.recordings()) {
    std::vector<std::string> sf;
    for (const auto& a : r.annotations) {
      if (a.source == corpus::SourceType::kSF) sf.push_back(a.text);
    }
    std::vector<std::string> kept = text::apply_sf_rules(sf, cfg.filter.sf_rules);
    std::vector<corpus::Annotation> annotations;
    std::size_t next_sf = 0;
    for (const auto& a : r.annotations) {
      if (a.source == corpus::SourceType::kSF) {
        // apply_sf_rules preserves order, so kept items match in sequence.
        if (next_sf < kept.size() && kept[next_sf] == a.text) {
          annotations.push_back(a);
          ++next_sf;
        }
      } else if (a.source == corpus::SourceType::kLF && clf) {
        if (clf->keep(a.text)) annotations.push_back(a);
      } else {
        annotations.push_back(a);
      }
    }
    r.annotations = std::move(annotations);
    out.add(std::move(r));
  }
  local.sf_after = count_source(out, corpus::SourceType::kSF);
  local.lf_after = count_source(out, corpus::SourceType::kLF);
  if (summary) *summary = local;
  return out;
}

std::string format_log_row(const StepStats& s) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%llu,%.17g,%.17g,%.17g,SF:%zu|LF:%zu|PL:%zu|ASET:%zu",
                static_cast<unsigned long long>(s.step), s.loss, s.tau, s.lr, s.pairs[0], s.pairs[1],
                s.pairs[2], s.pairs[3]);
  return buf;
}

Trainer::Trainer(RunConfig cfg, const corpus::Corpus& corpus, const corpus::FeatureStore& features,
                 text::Vocabulary vocab)
    : cfg_(std::move(cfg)),
      corpus_(corpus),
      vocab_(std::move(vocab)),
      sampler_(corpus_, features, vocab_,
               corpus::SamplerConfig{cfg_.model.window_frames, cfg_.max_tokens, cfg_.training.augment,
                                     cfg_.training.spec_augment}),
      mix_(corpus::MixingSpec::from_ratio(cfg_.training.batch_size, cfg_.training.mixing)) {
  cfg_.model.text.vocab_size = vocab_.size();
  cfg_.validate(true);
  if (corpus_.empty()) throw ConfigError("training corpus is empty");
  for (corpus::SourceType s : corpus::kAllSources) {
    if (mix_.count(s) > 0 && sampler_.eligible_count(s) == 0) {
      throw ConfigError("mixing assigns " + std::to_string(mix_.count(s)) + " " +
                        corpus::source_name(s) + " pairs per batch but the corpus has none");
    }
  }
  initialize();
}

void Trainer::initialize() {
  params_ = nn::ParameterStore();
  std::mt19937_64 init_rng(cfg_.seed);
  model::init_tower_parameters(params_, cfg_.model, init_rng);
  params_.add(contrastive::kLogTauName, nn::Tensor::scalar(std::log(cfg_.loss.tau_init)));
  rng_.seed(cfg_.seed ^ kTrainStreamSalt);
  global_step_ = 0;
}

void Trainer::restore(const nn::Checkpoint& ckpt) {
  const ModelBundle b = bundle_from_checkpoint(ckpt);
  if (config_text(b.config) != config_text(cfg_) || !(b.vocab == vocab_)) {
    throw StateError("checkpoint was written by a different configuration or vocabulary");
  }
  std::istringstream in(ckpt.rng_state);
  in >> rng_;
  if (!in) throw LoadError("checkpoint rng state is malformed");
  params_ = ckpt.params;
  global_step_ = ckpt.global_step;
}

nn::Checkpoint Trainer::checkpoint() const {
  nn::Checkpoint c;
  c.config_json = bundle_payload(cfg_, vocab_);
  c.global_step = global_step_;
  c.rng_state = rng_state(rng_);
  c.params = params_;
  return c;
}

ModelBundle Trainer::bundle() const { return ModelBundle{cfg_, vocab_, params_, {}}; }

std::uint64_t Trainer::steps_per_epoch() const {
  return std::max<std::uint64_t>(1, corpus_.size() / cfg_.training.batch_size);
}

std::uint64_t Trainer::total_steps() const {
  const std::uint64_t all = steps_per_epoch() * cfg_.training.epochs;
  return cfg_.training.max_steps ? std::min<std::uint64_t>(all, cfg_.training.max_steps) : all;
}

StepStats Trainer::step() {
  const std::mt19937_64 rng_before = rng_;
  try {
    const int workers = cfg_.workers;
    const std::vector<corpus::PairSample> batch = corpus::assemble_batch(sampler_, mix_, rng_, workers);
    const std::size_t b = batch.size();
    const std::size_t d = cfg_.model.embed_dim();

    std::vector<std::unique_ptr<nn::Tape>> audio_tapes(b), text_tapes(b);
    std::vector<nn::Var> audio_out(b), text_out(b);
    parallel_for(b, workers, [&](std::size_t i) {
      audio_tapes[i] = std::make_unique<nn::Tape>();
      text_tapes[i] = std::make_unique<nn::Tape>();
      audio_out[i] = model::audio_tower(*audio_tapes[i], params_, cfg_.model, batch[i].window);
      text_out[i] = model::text_tower(*text_tapes[i], params_, cfg_.model, batch[i].tokens);
    });

    nn::Tensor a = nn::Tensor::matrix(b, d), t = nn::Tensor::matrix(b, d);
    for (std::size_t i = 0; i < b; ++i) {
      std::copy_n(audio_out[i].value().raw(), d, a.row(i).begin());
      std::copy_n(text_out[i].value().raw(), d, t.row(i).begin());
    }
    nn::Tape loss_tape;
    nn::Var av = loss_tape.variable(a);
    nn::Var tv = loss_tape.variable(t);
    nn::Var theta = params_.bind(loss_tape, contrastive::kLogTauName);
    nn::Var tau = contrastive::temperature(theta, cfg_.loss.tau_min);
    nn::Var loss = contrastive::cmc_loss(av, tv, tau, cfg_.loss.denominator);
    loss_tape.backward(loss);
    const nn::Tensor ga = av.grad();
    const nn::Tensor gt = tv.grad();

    parallel_for(b, workers, [&](std::size_t i) {
      nn::Tensor seed_a = nn::Tensor::matrix(1, d), seed_t = nn::Tensor::matrix(1, d);
      std::copy_n(ga.raw() + i * d, d, seed_a.raw());
      std::copy_n(gt.raw() + i * d, d, seed_t.raw());
      audio_tapes[i]->backward(audio_out[i], seed_a);
      text_tapes[i]->backward(text_out[i], seed_t);
    });

    nn::GradMap grads;
    for (const auto& name : params_.names()) grads.emplace(name, nn::Tensor(params_.value(name).shape()));
    for (std::size_t i = 0; i < b; ++i) {
      nn::accumulate_grads(grads, audio_tapes[i]->parameter_grads());
      nn::accumulate_grads(grads, text_tapes[i]->parameter_grads());
    }
    nn::accumulate_grads(grads, loss_tape.parameter_grads());
    for (const auto& [name, g] : grads) {
      if (!g.all_finite()) throw NumericError("non-finite gradient for " + name);
    }

    StepStats stats;
    stats.step = global_step_ + 1;
    stats.loss = loss.value().item();
    stats.lr = nn::lr_at(global_step_, cfg_.optimizer);
    stats.pairs = mix_.counts;
    nn::adam_step(params_, grads, cfg_.optimizer, global_step_);
    contrastive::clamp_log_tau(params_, cfg_.loss.tau_min);
    ++global_step_;
    stats.tau = contrastive::tau_of(params_.value(contrastive::kLogTauName).item(), cfg_.loss.tau_min);
    return stats;
  } catch (const NumericError& e) {
    rng_ = rng_before;
    throw TrainingError("numeric failure at step " + std::to_string(global_step_ + 1) + ": " + e.what());
  }
}

RunSummary run_training(Trainer& trainer, const RunOptions& options) {
  fs::create_directories(options.out_dir);
  LockFile lock(options.out_dir / "train.lock");
  const fs::path latest = options.out_dir / "checkpoint.ckpt";
  const fs::path log_path = options.out_dir / "train_log.csv";

  std::vector<std::string> kept_rows;
  if (options.resume) {
    if (!fs::exists(latest)) throw StateError("nothing to resume: " + latest.string() + " missing");
    trainer.restore(nn::load_checkpoint(latest));
    std::ifstream old(log_path);
    std::string line;
    while (std::getline(old, line)) {
      if (line.empty() || line == kLogHeader) continue;
      const auto step = std::stoull(line.substr(0, line.find(',')));
      if (step <= trainer.global_step()) kept_rows.push_back(line);
    }
  }
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw IoError("cannot write " + log_path.string());
  log << kLogHeader << '\n';
  for (const auto& row : kept_rows) log << row << '\n';
  log.flush();

  RunSummary summary;
  const std::uint64_t total = trainer.total_steps();
  const std::uint64_t per_epoch = trainer.steps_per_epoch();
  const std::uint64_t ckpt_every = per_epoch * trainer.config().training.checkpoint_every_epochs;
  while (trainer.global_step() < total) {
    if (options.stop_after && trainer.global_step() >= *options.stop_after) break;
    StepStats stats;
    try {
      stats = trainer.step();
    } catch (const TrainingError&) {
      nn::save_checkpoint(options.out_dir / "abort.ckpt", trainer.checkpoint());
      throw;
    }
    log << format_log_row(stats) << '\n';
    summary.losses.push_back(stats.loss);
    if (options.on_step) options.on_step(stats);
    if (trainer.global_step() % ckpt_every == 0) {
      log.flush();
      nn::save_checkpoint(latest, trainer.checkpoint());
    }
  }
  log.flush();
  summary.steps = trainer.global_step();
  if (trainer.global_step() >= total) {
    summary.final_checkpoint = options.out_dir / "final.ckpt";
    nn::save_checkpoint(summary.final_checkpoint, trainer.checkpoint());
    nn::save_checkpoint(latest, trainer.checkpoint());
  }
  return summary;
}

}  // namespace mulan::app

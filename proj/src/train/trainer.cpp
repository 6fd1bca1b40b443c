#include "temos/train/trainer.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include "temos/errors.hpp"

namespace temos::train {

namespace {

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id)};
  return std::mt19937_64(seq);
}

motion::StandardizationStats round_to_f32(motion::StandardizationStats s) {
  for (auto& v : s.mean) v = static_cast<float>(v);
  for (auto& v : s.std) v = static_cast<float>(v);
  return s;
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os << std::setprecision(9) << v;
  return os.str();
}

}  // namespace

PreparedData prepare_data(std::vector<data::DatasetEntry> entries, const TrainConfig& cfg) {
  PreparedData out;
  const std::size_t want = data::feature_dim(cfg.codec);
  for (const auto& e : entries) {
    if (e.features.dim != want) {
      throw DataError("entry " + e.id + " has " + std::to_string(e.features.dim) + " features, codec " +
                      std::string(data::to_string(cfg.codec)) + " needs " + std::to_string(want));
    }
  }
  out.vocab = data::build_vocab(entries);
  data::attach_tokens(entries, out.vocab);
  for (auto& e : entries) {
    if (e.split == data::Split::Train) {
      if (e.features.frames > cfg.max_train_frames) {
        ++out.dropped_long;
        continue;
      }
      out.train.push_back(std::move(e));
    } else if (e.split == data::Split::Val) {
      out.val.push_back(std::move(e));
    }
  }
  if (out.train.empty()) throw DataError("no usable training entries");
  std::vector<const motion::FeatureSequence*> feats;
  for (const auto& e : out.train) feats.push_back(&e.features);
  out.stats = round_to_f32(motion::fit_standardization(feats));
  return out;
}

model::Batch make_batch(std::span<const data::DatasetEntry* const> entries, const motion::StandardizationStats& stats,
                        data::DescriptionMode mode, std::mt19937_64& rng, std::size_t max_frames) {
  std::vector<const data::DatasetEntry*> kept;
  for (const auto* e : entries)
    if (max_frames == 0 || e->features.frames <= max_frames) kept.push_back(e);
  if (kept.empty()) throw InvalidArgument("make_batch: every entry exceeds the frame limit");

  model::Batch b;
  b.size = kept.size();
  b.feature_dim = stats.dim();
  std::vector<const data::TextSample*> texts;
  for (const auto* e : kept) {
    if (e->features.dim != stats.dim()) throw InvalidArgument("make_batch: feature width mismatch in " + e->id);
    if (e->features.frames == 0) throw InvalidArgument("make_batch: empty motion in " + e->id);
    const auto& t = data::select_description(*e, mode, rng);
    if (t.tokens.empty()) throw InvalidArgument("make_batch: description of " + e->id + " is not tokenized");
    texts.push_back(&t);
    b.max_frames = std::max(b.max_frames, e->features.frames);
    b.max_tokens = std::max(b.max_tokens, t.tokens.size());
  }
  b.features.assign(b.size * b.max_frames * b.feature_dim, 0.0);
  b.tokens.assign(b.size * b.max_tokens, data::Vocabulary::kPad);
  std::vector<std::size_t> token_lengths;
  for (std::size_t i = 0; i < b.size; ++i) {
    const auto std_f = motion::standardize(kept[i]->features, stats);
    std::copy(std_f.values.begin(), std_f.values.end(),
              b.features.begin() + static_cast<std::ptrdiff_t>(i * b.max_frames * b.feature_dim));
    std::copy(texts[i]->tokens.begin(), texts[i]->tokens.end(),
              b.tokens.begin() + static_cast<std::ptrdiff_t>(i * b.max_tokens));
    b.durations.push_back(kept[i]->features.frames);
    token_lengths.push_back(texts[i]->tokens.size());
    b.ids.push_back(kept[i]->id);
  }
  b.motion_mask = nn::AttentionMask::from_lengths(b.durations, b.max_frames);
  b.text_mask = nn::AttentionMask::from_lengths(token_lengths, b.max_tokens);
  return b;
}

double text_reconstruction_loss(const Model& model, const std::vector<data::DatasetEntry>& entries,
                                const motion::StandardizationStats& stats, std::size_t batch_size) {
  if (entries.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::mt19937_64 unused(0);
  double weighted = 0.0;
  double count = 0.0;
  const auto ctx = nn::ForwardContext::eval();
  for (std::size_t start = 0; start < entries.size(); start += batch_size) {
    std::vector<const data::DatasetEntry*> group;
    for (std::size_t i = start; i < std::min(entries.size(), start + batch_size); ++i) group.push_back(&entries[i]);
    const auto batch = make_batch(group, stats, data::DescriptionMode::EvalFirst, unused);
    const auto dist = model.encode_text(batch.tokens, batch.text_mask, ctx);
    const auto h = model.decode(dist.mu, batch.durations, ctx, batch.max_frames);
    const auto loss = nn::smooth_l1(Model::features_tensor(batch), h, &batch.motion_mask);
    double valid = 0.0;
    for (auto d : batch.durations) valid += static_cast<double>(d);
    weighted += static_cast<double>(loss.item()) * valid;
    count += valid;
  }
  return weighted / count;
}

Trainer::Trainer(const TrainConfig& cfg, std::vector<data::DatasetEntry> entries)
    : cfg_(cfg),
      data_(prepare_data(std::move(entries), cfg)),
      model_(cfg.model(data_.vocab.size()), cfg.seed),
      params_(model_.parameters()),
      opt_(nn::make_adamw_state(params_, nn::AdamWOptions{cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay})),
      order_rng_(stream(cfg.seed, 1)),
      text_rng_(stream(cfg.seed, 2)),
      z_rng_(stream(cfg.seed, 3)),
      dropout_rng_(stream(cfg.seed, 4)) {
  cfg_.validate();
}

EpochMetrics Trainer::run_epoch() {
  std::vector<std::size_t> order(data_.train.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), order_rng_);
  const auto lc = cfg_.loss();
  const nn::ForwardContext ctx{true, cfg_.dropout, &dropout_rng_};

  EpochMetrics m;
  m.epoch = ++epoch_;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
    std::vector<const data::DatasetEntry*> group;
    for (std::size_t i = start; i < std::min(order.size(), start + cfg_.batch_size); ++i)
      group.push_back(&data_.train[order[i]]);
    const auto batch = make_batch(group, data_.stats, data::DescriptionMode::TrainRandom, text_rng_,
                                  cfg_.max_train_frames);
    nn::zero_grad(params_);
    const auto l = model_.loss(batch, lc, ctx, &z_rng_);
    nn::backward(l.total);
    if (cfg_.max_grad_norm > 0.0) nn::clip_grad_norm(params_, cfg_.max_grad_norm);
    nn::adamw_step(params_, opt_);
    m.recon += l.recon;
    m.kl += l.kl_total;
    m.embedding += l.embedding;
    m.total += l.total_value;
    m.recon_text += l.recon_text;
    ++batches;
  }
  const double n = static_cast<double>(batches);
  m.recon /= n;
  m.kl /= n;
  m.embedding /= n;
  m.total /= n;
  m.recon_text /= n;
  m.val_recon = validation_loss();
  return m;
}

double Trainer::validation_loss() const {
  return text_reconstruction_loss(model_, data_.val, data_.stats, cfg_.batch_size);
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint ck;
  ck.config = cfg_;
  ck.vocab = data_.vocab;
  ck.stats = data_.stats;
  ck.model = model_;
  ck.optimizer = opt_;
  ck.epoch = epoch_;
  ck.best_val = best_val_;
  return ck;
}

TrainResult train(const TrainConfig& cfg, std::vector<data::DatasetEntry> entries, const std::filesystem::path& out_dir,
                  std::ostream* log) {
  std::filesystem::create_directories(out_dir);
  Trainer trainer(cfg, std::move(entries));
  if (log && trainer.data().dropped_long > 0) {
    *log << "dropped " << trainer.data().dropped_long << " training entries longer than " << cfg.max_train_frames
         << " frames\n";
  }
  std::ofstream csv(out_dir / "metrics.csv");
  if (!csv) throw DataError("cannot write " + (out_dir / "metrics.csv").string());
  csv << "epoch,L_R,L_KL,L_E,total,val_L_R\n";

  TrainResult result;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    EpochMetrics m;
    try {
      m = trainer.run_epoch();
    } catch (const NumericalError&) {
      save_checkpoint(out_dir / "last_good.ckpt", trainer.checkpoint());
      throw;
    }
    result.history.push_back(m);
    csv << m.epoch << ',' << csv_number(m.recon) << ',' << csv_number(m.kl) << ',' << csv_number(m.embedding) << ','
        << csv_number(m.total) << ',' << csv_number(m.val_recon) << '\n'
        << std::flush;
    if (log) {
      *log << "epoch " << m.epoch << " L_R " << m.recon << " L_KL " << m.kl << " L_E " << m.embedding << " total "
           << m.total;
      if (!std::isnan(m.val_recon)) *log << " val_L_R " << m.val_recon;
      *log << '\n';
    }
    if (!std::isnan(m.val_recon) && !(m.val_recon >= trainer.best_val())) {
      trainer.set_best_val(m.val_recon);
      result.best_checkpoint = out_dir / "best.ckpt";
      save_checkpoint(result.best_checkpoint, trainer.checkpoint());
    }
    if (cfg.checkpoint_every > 0 && m.epoch % cfg.checkpoint_every == 0) {
      std::ostringstream name;
      name << "epoch_" << std::setw(4) << std::setfill('0') << m.epoch << ".ckpt";
      save_checkpoint(out_dir / name.str(), trainer.checkpoint());
    }
  }
  result.final_checkpoint = out_dir / "final.ckpt";
  save_checkpoint(result.final_checkpoint, trainer.checkpoint());
  return result;
}

}  // namespace temos::train

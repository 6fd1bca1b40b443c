#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "temos/data/synth.hpp"
#include "temos/errors.hpp"
#include "temos/train/trainer.hpp"

using namespace temos;

namespace {

train::TrainConfig small_config() {
  train::TrainConfig c;
  c.epochs = 2;
  c.batch_size = 4;
  c.layers = 1;
  c.dim = 16;
  c.heads = 2;
  c.ff_dim = 32;
  c.dropout = 0.1;
  c.lr = 1e-3;
  c.checkpoint_every = 1;
  return c;
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("temos_test_train_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::vector<std::string> read_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("train config parses, echoes and rejects bad input") {
  const auto c = train::TrainConfig::parse(
      "# comment\nepochs = 7\nlr=0.001  # trailing\ncodec = smpl135\ndeterministic = true\ncross_kl = false\n");
  CHECK(c.epochs == 7);
  CHECK(c.lr == doctest::Approx(1e-3));
  CHECK(c.codec == data::Codec::Smpl135);
  CHECK(c.deterministic);
  CHECK_FALSE(c.cross_kl);
  CHECK(c.batch_size == 32);
  CHECK(c.model(10).feature_dim == 135);

  const auto again = train::TrainConfig::parse(c.to_text());
  CHECK(again.to_text() == c.to_text());

  CHECK_THROWS_AS(train::TrainConfig::parse("bogus = 1\n"), InvalidArgument);
  CHECK_THROWS_AS(train::TrainConfig::parse("epochs = -1\n"), InvalidArgument);
  CHECK_THROWS_AS(train::TrainConfig::parse("epochs 3\n"), InvalidArgument);
  CHECK_THROWS_AS(train::TrainConfig::parse("dim = 256\nheads = 6\n"), InvalidArgument);
  CHECK_THROWS_AS(train::TrainConfig::parse("dropout = 1.0\n"), InvalidArgument);
  CHECK_THROWS_AS(train::TrainConfig::parse("deterministic = maybe\n"), InvalidArgument);
}

TEST_CASE("make_batch pads, masks, standardizes and drops long entries") {
  auto corpus = data::synth_corpus(3, 6);
  const auto cfg = small_config();
  const auto prepared = train::prepare_data(corpus, cfg);
  const auto& stats = prepared.stats;
  std::vector<const data::DatasetEntry*> ptrs;
  for (const auto& e : prepared.train) ptrs.push_back(&e);
  std::mt19937_64 rng(0);
  const auto b = train::make_batch(ptrs, stats, data::DescriptionMode::EvalFirst, rng);

  std::size_t fmax = 0, tmax = 0;
  for (const auto* e : ptrs) {
    fmax = std::max(fmax, e->features.frames);
    tmax = std::max(tmax, e->descriptions.front().tokens.size());
  }
  REQUIRE(b.size == ptrs.size());
  CHECK(b.max_frames == fmax);
  CHECK(b.max_tokens == tmax);
  for (std::size_t i = 0; i < b.size; ++i) {
    const auto& e = *ptrs[i];
    CHECK(b.durations[i] == e.features.frames);
    CHECK(b.motion_mask.count(i) == e.features.frames);
    CHECK(b.text_mask.count(i) == e.descriptions.front().tokens.size());
    CHECK(b.ids[i] == e.id);
    for (std::size_t f = 0; f < fmax; ++f) {
      for (std::size_t c = 0; c < b.feature_dim; ++c) {
        const double got = b.features[(i * fmax + f) * b.feature_dim + c];
        const double want = f < e.features.frames ? (e.features.row(f)[c] - stats.mean[c]) / stats.std[c] : 0.0;
        CHECK(got == doctest::Approx(want).epsilon(1e-12).scale(1.0));
      }
    }
    for (std::size_t t = e.descriptions.front().tokens.size(); t < tmax; ++t)
      CHECK(b.tokens[i * tmax + t] == data::Vocabulary::kPad);
  }

  const std::size_t shortest = std::min_element(ptrs.begin(), ptrs.end(), [](auto* a, auto* c) {
                                 return a->features.frames < c->features.frames;
                               })[0]->features.frames;
  const auto limited = train::make_batch(ptrs, stats, data::DescriptionMode::EvalFirst, rng, shortest);
  for (auto d : limited.durations) CHECK(d <= shortest);
  CHECK_THROWS_AS(train::make_batch(ptrs, stats, data::DescriptionMode::EvalFirst, rng, shortest - 1),
                  InvalidArgument);
}

TEST_CASE("prepare_data uses the train split for statistics and drops long training entries") {
  auto corpus = data::synth_corpus(5, 20);
  auto cfg = small_config();
  const auto all = train::prepare_data(corpus, cfg);
  std::size_t n_train = 0, n_val = 0;
  for (const auto& e : corpus) {
    n_train += e.split == data::Split::Train;
    n_val += e.split == data::Split::Val;
  }
  CHECK(all.train.size() == n_train);
  CHECK(all.val.size() == n_val);

  std::vector<const motion::FeatureSequence*> feats;
  for (const auto& e : corpus)
    if (e.split == data::Split::Train) feats.push_back(&e.features);
  const auto oracle = motion::fit_standardization(feats);
  for (std::size_t c = 0; c < oracle.dim(); ++c) {
    CHECK(all.stats.mean[c] == static_cast<float>(oracle.mean[c]));
    CHECK(all.stats.std[c] == static_cast<float>(oracle.std[c]));
  }

  cfg.max_train_frames = 60;
  const auto cut = train::prepare_data(corpus, cfg);
  std::size_t longer = 0;
  for (const auto& e : corpus) longer += e.split == data::Split::Train && e.features.frames > 60;
  CHECK(cut.dropped_long == longer);
  CHECK(cut.train.size() == n_train - longer);
  for (const auto& e : cut.train) CHECK(e.features.frames <= 60);
}

TEST_CASE("training is reproducible and writes metrics and checkpoints") {
  const auto corpus = data::synth_corpus(1, 12);
  const auto cfg = small_config();
  const auto dir_a = scratch("a"), dir_b = scratch("b");
  const auto a = train::train(cfg, corpus, dir_a);
  const auto b = train::train(cfg, corpus, dir_b);
  REQUIRE(a.history.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(a.history[i].total == b.history[i].total);
    CHECK(a.history[i].val_recon == b.history[i].val_recon);
    CHECK(std::isfinite(a.history[i].val_recon));
  }
  const auto lines = read_lines(dir_a / "metrics.csv");
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "epoch,L_R,L_KL,L_E,total,val_L_R");
  CHECK(lines[1].rfind("1,", 0) == 0);
  CHECK(std::filesystem::exists(dir_a / "final.ckpt"));
  CHECK(std::filesystem::exists(dir_a / "best.ckpt"));
  CHECK(std::filesystem::exists(dir_a / "epoch_0001.ckpt"));
  CHECK(std::filesystem::exists(dir_a / "epoch_0002.ckpt"));
  CHECK(read_lines(dir_a / "metrics.csv") == read_lines(dir_b / "metrics.csv"));
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
}

TEST_CASE("checkpoint round trip is exact") {
  const auto corpus = data::synth_corpus(2, 10);
  train::Trainer t(small_config(), corpus);
  t.run_epoch();
  const auto dir = scratch("ck");
  const auto path = dir / "x.ckpt";
  train::save_checkpoint(path, t.checkpoint());
  const auto ck = train::load_checkpoint(path);

  CHECK(ck.epoch == 1);
  CHECK(ck.config.to_text() == t.config().to_text());
  CHECK(ck.vocab.words() == t.data().vocab.words());
  CHECK(ck.stats.mean == t.data().stats.mean);
  CHECK(ck.stats.std == t.data().stats.std);
  const auto orig = t.checkpoint();
  CHECK(ck.optimizer.step == orig.optimizer.step);
  const auto p0 = orig.model.parameters();
  const auto p1 = ck.model.parameters();
  REQUIRE(p0.size() == p1.size());
  for (std::size_t i = 0; i < p0.size(); ++i) {
    CHECK(p0[i].name == p1[i].name);
    CHECK(std::equal(p0[i].tensor.values().begin(), p0[i].tensor.values().end(), p1[i].tensor.values().begin()));
    CHECK(orig.optimizer.m[i] == ck.optimizer.m[i]);
    CHECK(orig.optimizer.v[i] == ck.optimizer.v[i]);
  }
  const double v0 = train::text_reconstruction_loss(orig.model, t.data().val, t.data().stats, 4);
  const double v1 = train::text_reconstruction_loss(ck.model, t.data().val, ck.stats, 4);
  CHECK(v0 == v1);

  std::ofstream(dir / "bad.ckpt") << "nonsense";
  CHECK_THROWS_AS(train::load_checkpoint(dir / "bad.ckpt"), DataError);
  CHECK_THROWS_AS(train::load_checkpoint(dir / "missing.ckpt"), DataError);
  {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    std::ofstream(dir / "short.ckpt", std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  }
  CHECK_THROWS_AS(train::load_checkpoint(dir / "short.ckpt"), DataError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("deterministic training never draws latent noise") {
  auto cfg = small_config();
  cfg.deterministic = true;
  train::Trainer t(cfg, data::synth_corpus(4, 10));
  const std::mt19937_64 before = t.z_rng();
  t.run_epoch();
  t.run_epoch();
  CHECK(t.z_rng() == before);

  train::Trainer s(small_config(), data::synth_corpus(4, 10));
  const std::mt19937_64 s_before = s.z_rng();
  s.run_epoch();
  CHECK_FALSE(s.z_rng() == s_before);
}

TEST_CASE("non-finite loss aborts and keeps the last good weights") {
  auto corpus = data::synth_corpus(6, 10);
  auto cfg = small_config();
  cfg.epochs = 3;
  cfg.lr = 1e30;
  cfg.weight_decay = 0.0;
  const auto dir = scratch("nan");
  CHECK_THROWS_AS(train::train(cfg, corpus, dir), NumericalError);
  CHECK(std::filesystem::exists(dir / "last_good.ckpt"));
  const auto ck = train::load_checkpoint(dir / "last_good.ckpt");
  for (const auto& p : ck.model.parameters())
    for (float v : p.tensor.values()) REQUIRE(std::isfinite(v));
  std::filesystem::remove_all(dir);
}

#include "temos/train/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "temos/errors.hpp"

namespace temos::train {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

template <typename U>
U parse_unsigned(const std::string& key, const std::string& v) {
  U out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw InvalidArgument("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw InvalidArgument("config: '" + key + "' expects a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InvalidArgument("config: '" + key + "' expects true/false, got '" + v + "'");
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs == 0 || batch_size == 0 || layers == 0 || heads == 0 || dim == 0 || ff_dim == 0 ||
      max_train_frames == 0) {
    throw InvalidArgument("config: epochs, batch_size, layers, heads, dim, ff_dim and max_train_frames must be positive");
  }
  if (!(lr > 0.0)) throw InvalidArgument("config: lr must be positive");
  if (weight_decay < 0.0 || lambda_kl < 0.0 || lambda_e < 0.0 || max_grad_norm < 0.0) {
    throw InvalidArgument("config: weight_decay, lambdas and max_grad_norm must be non-negative");
  }
  if (dropout < 0.0 || dropout >= 1.0) throw InvalidArgument("config: dropout must be in [0, 1)");
  model(2).validate();
}

model::LossConfig TrainConfig::loss() const {
  model::LossConfig l;
  l.lambda_kl = lambda_kl;
  l.lambda_e = lambda_e;
  l.cross_kl = cross_kl;
  l.prior_kl = prior_kl;
  l.embedding_loss = embedding_loss;
  l.motion_encoder = motion_encoder;
  return l;
}

model::ModelConfig TrainConfig::model(std::size_t vocab_size) const {
  model::ModelConfig m;
  m.feature_dim = data::feature_dim(codec);
  m.vocab_size = vocab_size;
  m.dim = dim;
  m.layers = layers;
  m.heads = heads;
  m.ff_dim = ff_dim;
  m.dropout = dropout;
  m.deterministic = deterministic;
  return m;
}

TrainConfig TrainConfig::parse(std::string_view text) {
  TrainConfig c;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string v = trim(std::string_view(line).substr(eq + 1));
    if (key == "epochs") c.epochs = parse_unsigned<std::size_t>(key, v);
    else if (key == "batch_size") c.batch_size = parse_unsigned<std::size_t>(key, v);
    else if (key == "lr") c.lr = parse_double(key, v);
    else if (key == "weight_decay") c.weight_decay = parse_double(key, v);
    else if (key == "lambda_kl") c.lambda_kl = parse_double(key, v);
    else if (key == "lambda_e") c.lambda_e = parse_double(key, v);
    else if (key == "layers") c.layers = parse_unsigned<std::size_t>(key, v);
    else if (key == "heads") c.heads = parse_unsigned<std::size_t>(key, v);
    else if (key == "dim") c.dim = parse_unsigned<std::size_t>(key, v);
    else if (key == "ff_dim") c.ff_dim = parse_unsigned<std::size_t>(key, v);
    else if (key == "dropout") c.dropout = parse_double(key, v);
    else if (key == "max_train_frames") c.max_train_frames = parse_unsigned<std::size_t>(key, v);
    else if (key == "seed") c.seed = parse_unsigned<std::uint64_t>(key, v);
    else if (key == "codec") c.codec = data::codec_from_string(v);
    else if (key == "deterministic") c.deterministic = parse_bool(key, v);
    else if (key == "checkpoint_every") c.checkpoint_every = parse_unsigned<std::size_t>(key, v);
    else if (key == "max_grad_norm") c.max_grad_norm = parse_double(key, v);
    else if (key == "cross_kl") c.cross_kl = parse_bool(key, v);
    else if (key == "prior_kl") c.prior_kl = parse_bool(key, v);
    else if (key == "embedding_loss") c.embedding_loss = parse_bool(key, v);
    else if (key == "motion_encoder") c.motion_encoder = parse_bool(key, v);
    else throw InvalidArgument("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::vector<std::pair<std::string, std::string>> TrainConfig::items() const {
  auto b = [](bool x) { return std::string(x ? "true" : "false"); };
  return {{"epochs", std::to_string(epochs)},
          {"batch_size", std::to_string(batch_size)},
          {"lr", fmt(lr)},
          {"weight_decay", fmt(weight_decay)},
          {"lambda_kl", fmt(lambda_kl)},
          {"lambda_e", fmt(lambda_e)},
          {"layers", std::to_string(layers)},
          {"heads", std::to_string(heads)},
          {"dim", std::to_string(dim)},
          {"ff_dim", std::to_string(ff_dim)},
          {"dropout", fmt(dropout)},
          {"max_train_frames", std::to_string(max_train_frames)},
          {"seed", std::to_string(seed)},
          {"codec", std::string(data::to_string(codec))},
          {"deterministic", b(deterministic)},
          {"checkpoint_every", std::to_string(checkpoint_every)},
          {"max_grad_norm", fmt(max_grad_norm)},
          {"cross_kl", b(cross_kl)},
          {"prior_kl", b(prior_kl)},
          {"embedding_loss", b(embedding_loss)},
          {"motion_encoder", b(motion_encoder)}};
}

std::string TrainConfig::to_text() const {
  std::string out;
  for (const auto& [k, v] : items()) out += k + " = " + v + "\n";
  return out;
}

}  // namespace temos::train

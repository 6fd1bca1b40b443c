#include <fstream>
#include <sstream>

#include "json.hpp"
#include "temos/errors.hpp"
#include "temos/motion/tmf.hpp"
#include "temos/train/trainer.hpp"

namespace temos::train {

namespace {

constexpr char kMagic[8] = {'T', 'E', 'M', 'O', 'S', 'C', 'K', '1'};
constexpr std::uint32_t kVersion = 1;

motion::TmfMatrix to_matrix(const nn::Shape& shape, std::span<const float> values) {
  motion::TmfMatrix m;
  m.rows = shape.size() >= 2 ? static_cast<std::uint32_t>(shape[0]) : 1u;
  m.cols = static_cast<std::uint32_t>(m.rows == 0 ? 0 : values.size() / m.rows);
  m.values.assign(values.begin(), values.end());
  return m;
}

void read_into(std::istream& in, std::span<float> dst, const std::string& what) {
  const auto m = motion::read_tmf(in);
  if (m.values.size() != dst.size()) {
    throw DataError("checkpoint: " + what + " holds " + std::to_string(m.values.size()) + " values, expected " +
                    std::to_string(dst.size()));
  }
  std::copy(m.values.begin(), m.values.end(), dst.begin());
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  const auto params = ck.model.parameters();
  nlohmann::json header;
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [k, v] : ck.config.items()) cfg[k] = v;
  header["config"] = cfg;
  header["vocab"] = ck.vocab.words();
  header["epoch"] = ck.epoch;
  header["best_val"] = std::isfinite(ck.best_val) ? nlohmann::json(ck.best_val) : nlohmann::json(nullptr);
  header["optimizer_step"] = ck.optimizer.step;
  header["stats_dim"] = ck.stats.dim();
  auto& plist = header["parameters"] = nlohmann::json::array();
  for (const auto& p : params) plist.push_back({{"name", p.name}, {"shape", p.tensor.shape()}});
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint " + path.string());
    out.write(kMagic, sizeof kMagic);
    motion::write_u32(out, kVersion);
    motion::write_u64(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& p : params) motion::write_tmf(out, to_matrix(p.tensor.shape(), p.tensor.values()));
    const bool has_moments = ck.optimizer.m.size() == params.size();
    for (const auto* moments : {&ck.optimizer.m, &ck.optimizer.v}) {
      for (std::size_t i = 0; i < params.size(); ++i) {
        const std::vector<float> zeros(params[i].tensor.numel(), 0.0f);
        motion::write_tmf(out, to_matrix(params[i].tensor.shape(), has_moments ? (*moments)[i] : zeros));
      }
    }
    motion::TmfMatrix s{2, static_cast<std::uint32_t>(ck.stats.dim()), {}};
    for (double v : ck.stats.mean) s.values.push_back(static_cast<float>(v));
    for (double v : ck.stats.std) s.values.push_back(static_cast<float>(v));
    motion::write_tmf(out, s);
    if (!out) throw DataError("failed writing checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || !std::equal(magic, magic + 8, kMagic)) throw DataError("not a checkpoint: " + path.string());
  try {
    const auto version = motion::read_u32(in);
    if (version != kVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
    const auto len = motion::read_u64(in);
    if (len > (1u << 28)) throw DataError("checkpoint header too large");
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    if (!in) throw DataError("truncated checkpoint header");
    const auto header = nlohmann::json::parse(text);

    Checkpoint ck;
    std::string cfg_text;
    for (const auto& [k, v] : header.at("config").items()) cfg_text += k + " = " + v.get<std::string>() + "\n";
    ck.config = TrainConfig::parse(cfg_text);
    ck.vocab = data::Vocabulary::from_words(header.at("vocab").get<std::vector<std::string>>());
    ck.epoch = header.at("epoch").get<std::size_t>();
    if (!header.at("best_val").is_null()) ck.best_val = header.at("best_val").get<double>();
    ck.model = Model(ck.config.model(ck.vocab.size()), 0);

    auto params = ck.model.parameters();
    const auto& plist = header.at("parameters");
    if (plist.size() != params.size()) {
      throw DataError("checkpoint has " + std::to_string(plist.size()) + " parameters, model expects " +
                      std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto name = plist[i].at("name").get<std::string>();
      const auto shape = plist[i].at("shape").get<nn::Shape>();
      if (name != params[i].name || shape != params[i].tensor.shape()) {
        throw DataError("checkpoint parameter " + name + " " + nn::shape_str(shape) + " does not match " +
                        params[i].name + " " + nn::shape_str(params[i].tensor.shape()));
      }
      read_into(in, params[i].tensor.mutable_values(), name);
    }
    ck.optimizer = nn::make_adamw_state(params, nn::AdamWOptions{ck.config.lr, 0.9, 0.999, 1e-8, ck.config.weight_decay});
    ck.optimizer.step = header.at("optimizer_step").get<std::size_t>();
    for (auto* moments : {&ck.optimizer.m, &ck.optimizer.v})
      for (std::size_t i = 0; i < params.size(); ++i) read_into(in, (*moments)[i], params[i].name + " moment");

    const auto s = motion::read_tmf(in);
    const auto p = header.at("stats_dim").get<std::size_t>();
    if (s.rows != 2 || s.cols != p) throw DataError("checkpoint statistics have the wrong shape");
    ck.stats.mean.assign(s.values.begin(), s.values.begin() + static_cast<std::ptrdiff_t>(p));
    ck.stats.std.assign(s.values.begin() + static_cast<std::ptrdiff_t>(p), s.values.end());
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint header: " + std::string(e.what()));
  } catch (const InvalidArgument& e) {
    throw DataError("checkpoint: " + std::string(e.what()));
  }
}

}  // namespace temos::train

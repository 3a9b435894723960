#include "egosearch/checkpoint.hpp"

#include <bit>
#include <fstream>

#include "egosearch/config.hpp"

namespace egosearch {

namespace {

constexpr const char* kMagic = "EGOSEARCH-CHECKPOINT";

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const SacAgent& agent) {
  auto& model = const_cast<SacAgent&>(agent).model();
  const auto params = model.all_params();
  nlohmann::json header;
  header["version"] = kCheckpointVersion;
  header["train"] = to_json(agent.train_config());
  header["episode"] = to_json(agent.episode_config());
  header["updates"] = agent.updates();
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto* p : params) {
    tensors.push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}});
  }
  header["tensors"] = tensors;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out << kMagic << '\n' << header.dump() << '\n';
  for (const auto* p : params) {
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(float)));
  }
  if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
}

std::unique_ptr<SacAgent> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint " + path.string());
  std::string magic, line;
  if (!std::getline(in, magic) || magic != kMagic) {
    throw CheckpointError(path.string() + " is not a checkpoint");
  }
  if (!std::getline(in, line)) throw CheckpointError("truncated checkpoint header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad checkpoint header: ") + e.what());
  }
  if (header.value("version", -1) != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version");
  }
  TrainConfig tc;
  EpisodeConfig ec;
  try {
    tc = train_config_from_json(header.at("train"));
    ec = episode_config_from_json(header.at("episode"));
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("bad checkpoint configs: ") + e.what());
  }
  auto agent = std::make_unique<SacAgent>(tc, ec, 0);
  const auto params = agent->model().all_params();
  const auto& tensors = header.at("tensors");
  if (tensors.size() != params.size()) throw CheckpointError("checkpoint tensor count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto* p = params[i];
    const auto& t = tensors[i];
    if (t.at("name").get<std::string>() != p->name || t.at("rows").get<Eigen::Index>() != p->value.rows() ||
        t.at("cols").get<Eigen::Index>() != p->value.cols()) {
      throw CheckpointError("checkpoint tensor '" + t.at("name").get<std::string>() +
                            "' does not match the network layout");
    }
    in.read(reinterpret_cast<char*>(p->value.data()),
            static_cast<std::streamsize>(p->value.size() * sizeof(float)));
    if (!in) throw CheckpointError("truncated checkpoint data");
  }
  if (in.peek() != std::char_traits<char>::eof()) throw CheckpointError("trailing bytes in checkpoint");
  return agent;
}

}  // namespace egosearch

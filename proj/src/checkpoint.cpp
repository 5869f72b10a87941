#include "tse/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace tse {

using nlohmann::json;

static const char kMagic[8] = {'T', 'S', 'E', 'C', 'K', 'P', 'T', '1'};

static json desc_to_json(const nn::NetDesc& d) {
  return json{{"net", d.net},         {"preset", d.preset},
              {"K_T", d.K_T},         {"K_X", d.K_X},
              {"L_T", d.L_T},         {"L_X", d.L_X},
              {"scale", d.scale},     {"kernel2d", d.kernel2d},
              {"stem_convs", d.stem_convs}};
}

static nn::NetDesc desc_from_json(const json& j) {
  nn::NetDesc d;
  d.net = j.at("net").get<std::string>();
  d.preset = j.at("preset").get<std::string>();
  d.K_T = j.at("K_T").get<int>();
  d.K_X = j.at("K_X").get<int>();
  d.L_T = j.at("L_T").get<int>();
  d.L_X = j.at("L_X").get<int>();
  d.scale = j.at("scale").get<int>();
  d.kernel2d = j.at("kernel2d").get<int>();
  d.stem_convs = j.at("stem_convs").get<int>();
  return d;
}

void save_checkpoint(const std::string& path, nn::Net<float>& net,
                     const CheckpointMeta& meta) {
  json h;
  h["desc"] = desc_to_json(net.desc());
  h["train"] = meta.train_info;
  h["trained_scenarios"] = meta.trained_scenarios;
  h["holdout"] = meta.holdout;
  h["seed"] = meta.seed;
  json tensors = json::array();
  for (auto* p : net.params())
    tensors.push_back(json{{"name", p->name}, {"shape", p->shape},
                           {"count", p->size()}});
  h["tensors"] = tensors;
  std::string hs = h.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write checkpoint '" + path + "'");
  f.write(kMagic, 8);
  uint32_t len = static_cast<uint32_t>(hs.size());
  f.write(reinterpret_cast<const char*>(&len), 4);
  f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (auto* p : net.params())
    f.write(reinterpret_cast<const char*>(p->w.data()),
            static_cast<std::streamsize>(p->size() * sizeof(float)));
  if (!f) throw ValidationError("write failed for checkpoint '" + path + "'");
}

std::unique_ptr<nn::Net<float>> load_checkpoint(const std::string& path,
                                                CheckpointMeta* meta) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open checkpoint '" + path + "'");
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kMagic, 8) != 0)
    throw ValidationError("'" + path + "' is not a checkpoint file");
  uint32_t len = 0;
  f.read(reinterpret_cast<char*>(&len), 4);
  std::string hs(len, '\0');
  f.read(hs.data(), len);
  if (!f) throw ValidationError("truncated checkpoint header in '" + path + "'");
  json h;
  try {
    h = json::parse(hs);
  } catch (const json::exception& e) {
    throw ValidationError("bad checkpoint header: " + std::string(e.what()));
  }

  nn::NetDesc desc = desc_from_json(h.at("desc"));
  auto net = nn::build_net<float>(desc);
  auto ps = net->params();
  const json& tensors = h.at("tensors");
  if (tensors.size() != ps.size())
    throw ValidationError("checkpoint tensor count does not match the network");
  for (size_t k = 0; k < ps.size(); ++k) {
    const json& t = tensors[k];
    if (t.at("name").get<std::string>() != ps[k]->name ||
        t.at("shape").get<std::vector<int>>() != ps[k]->shape)
      throw ValidationError("checkpoint tensor '" +
                            t.at("name").get<std::string>() +
                            "' does not match the network layout");
    f.read(reinterpret_cast<char*>(ps[k]->w.data()),
           static_cast<std::streamsize>(ps[k]->size() * sizeof(float)));
  }
  if (!f) throw ValidationError("truncated checkpoint tensors in '" + path + "'");
  char extra;
  if (f.read(&extra, 1))
    throw ValidationError("trailing bytes after checkpoint tensors in '" + path + "'");

  if (meta) {
    meta->desc = desc;
    meta->train_info = h.value("train", json::object());
    meta->trained_scenarios =
        h.value("trained_scenarios", std::vector<std::string>{});
    meta->holdout = h.value("holdout", std::vector<std::string>{});
    meta->seed = h.value("seed", uint64_t{0});
  }
  return net;
}

}  // namespace tse

#include "adsep/model/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "adsep/common/error.hpp"

namespace adsep::model::inline ADSEP_REAL_NS {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

namespace {

constexpr std::size_t kMagicSize = 8;
constexpr const char* kOptimPrefix = "optim.";

void append_tensors(json& index, std::vector<float>& payload, const graph::ParameterSet& set,
                    const std::string& prefix) {
  for (const auto& [name, t] : set) {
    index[prefix + name] = {{"dtype", "f32"},
                            {"shape", t.shape()},
                            {"offset", payload.size() * sizeof(float)}};
    for (double v : t.data()) payload.push_back(static_cast<float>(v));
  }
}

}  // namespace

void save_checkpoint(const fs::path& path, const Checkpoint& ckpt) {
  json index = json::object();
  std::vector<float> payload;
  append_tensors(index, payload, ckpt.params, "");
  append_tensors(index, payload, ckpt.optimizer_state, kOptimPrefix);
  json header = {{"model", to_json(ckpt.model)}, {"tensors", index}};
  if (!ckpt.train_state.is_null()) header["train_state"] = ckpt.train_state;
  const std::string text = header.dump();
  const std::uint64_t len = text.size();

  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint " + tmp.string());
    out.write(kCheckpointMagic, kMagicSize);
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(float)));
    out.flush();
    if (!out) throw DataError("failed writing checkpoint " + tmp.string());
  }
  fs::rename(tmp, path);
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  const std::string where = "checkpoint " + path.string() + ": ";
  char magic[kMagicSize];
  std::uint64_t len = 0;
  if (!in.read(magic, kMagicSize) || std::memcmp(magic, kCheckpointMagic, kMagicSize) != 0)
    throw DataError(where + "bad magic");
  if (!in.read(reinterpret_cast<char*>(&len), sizeof(len)) || len > (1ull << 32))
    throw DataError(where + "bad header length");
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len)))
    throw DataError(where + "truncated header");
  std::vector<char> payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  Checkpoint ckpt;
  try {
    const json header = json::parse(text);
    ckpt.model = model_config_from_json(header.at("model"));
    if (header.contains("train_state")) ckpt.train_state = header["train_state"];
    for (const auto& [name, entry] : header.at("tensors").items()) {
      if (entry.at("dtype") != "f32") throw DataError(where + "unsupported dtype for " + name);
      graph::Shape shape = entry.at("shape").get<graph::Shape>();
      const std::size_t offset = entry.at("offset").get<std::size_t>();
      const std::size_t count = graph::shape_size(shape);
      if (offset + count * sizeof(float) > payload.size())
        throw DataError(where + "truncated payload for " + name);
      std::vector<float> raw(count);
      std::memcpy(raw.data(), payload.data() + offset, count * sizeof(float));
      graph::Tensor t(std::move(shape), std::vector<double>(raw.begin(), raw.end()));
      if (name.rfind(kOptimPrefix, 0) == 0)
        ckpt.optimizer_state[name.substr(std::strlen(kOptimPrefix))] = std::move(t);
      else
        ckpt.params[name] = std::move(t);
    }
  } catch (const json::exception& e) {
    throw DataError(where + "malformed header: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(where + e.what());
  }
  return ckpt;
}

}  // namespace adsep::model::inline ADSEP_REAL_NS

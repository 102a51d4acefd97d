#pragma once

// Self-describing binary checkpoint: magic, a JSON header (caller metadata,
// tensor names and shapes, optimiser config), then the raw little-endian
// double payload. Binary because the big MLP would be a ~120 MB JSON file.
// Same values in -> same bytes out, so reruns can be diffed directly.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lobbench/adam.hpp"
#include "lobbench/autodiff.hpp"

namespace lobbench::ad {

inline constexpr char kCheckpointMagic[8] = {'L', 'O', 'B', 'C', 'K', 'P', 'T', '1'};

struct CheckpointData {
  nlohmann::ordered_json meta;  // caller-owned description (model kind, seeds, ...)
  std::vector<std::string> names;
  std::vector<Tensor> values;
  bool has_adam = false;
  std::int64_t adam_step = 0;
  AdamConfig adam_cfg;
  std::vector<Tensor> adam_m, adam_v;
};

namespace detail {

inline void write_tensor_payload(std::ofstream& out, const Tensor& t) {
  out.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
}

inline void read_tensor_payload(std::ifstream& in, Tensor& t) {
  in.read(reinterpret_cast<char*>(t.data()),
          static_cast<std::streamsize>(t.size() * sizeof(double)));
  if (!in) throw DataError("checkpoint: truncated tensor payload");
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const CheckpointData& ckpt) {
  if (ckpt.names.size() != ckpt.values.size())
    throw ConfigError("checkpoint: name/value count mismatch");
  if (ckpt.has_adam &&
      (ckpt.adam_m.size() != ckpt.values.size() || ckpt.adam_v.size() != ckpt.values.size()))
    throw ConfigError("checkpoint: adam moment count mismatch");

  nlohmann::ordered_json header;
  header["meta"] = ckpt.meta;
  auto& tensors = header["tensors"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < ckpt.names.size(); ++i) {
    nlohmann::ordered_json t;
    t["name"] = ckpt.names[i];
    t["shape"] = ckpt.values[i].shape();
    tensors.push_back(std::move(t));
  }
  header["adam"]["present"] = ckpt.has_adam;
  if (ckpt.has_adam) {
    header["adam"]["step_count"] = ckpt.adam_step;
    header["adam"]["lr"] = ckpt.adam_cfg.lr;
    header["adam"]["beta1"] = ckpt.adam_cfg.beta1;
    header["adam"]["beta2"] = ckpt.adam_cfg.beta2;
    header["adam"]["eps"] = ckpt.adam_cfg.eps;
  }
  const std::string header_str = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open checkpoint for write: " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const std::uint64_t len = header_str.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const auto& t : ckpt.values) detail::write_tensor_payload(out, t);
  if (ckpt.has_adam) {
    for (const auto& t : ckpt.adam_m) detail::write_tensor_payload(out, t);
    for (const auto& t : ckpt.adam_v) detail::write_tensor_payload(out, t);
  }
  if (!out) throw DataError("checkpoint write failed: " + path);
}

inline CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  char magic[sizeof(kCheckpointMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw DataError("checkpoint: bad magic in " + path);
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in) throw DataError("checkpoint: truncated header length");
  std::string header_str(len, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(len));
  if (!in) throw DataError("checkpoint: truncated header");
  const nlohmann::json header = nlohmann::json::parse(header_str);

  CheckpointData ckpt;
  ckpt.meta = header.at("meta");
  for (const auto& t : header.at("tensors")) {
    ckpt.names.push_back(t.at("name").get<std::string>());
    ckpt.values.emplace_back(t.at("shape").get<std::vector<std::int64_t>>());
  }
  for (auto& t : ckpt.values) detail::read_tensor_payload(in, t);
  ckpt.has_adam = header.at("adam").at("present").get<bool>();
  if (ckpt.has_adam) {
    ckpt.adam_step = header["adam"].at("step_count").get<std::int64_t>();
    ckpt.adam_cfg.lr = header["adam"].at("lr").get<double>();
    ckpt.adam_cfg.beta1 = header["adam"].at("beta1").get<double>();
    ckpt.adam_cfg.beta2 = header["adam"].at("beta2").get<double>();
    ckpt.adam_cfg.eps = header["adam"].at("eps").get<double>();
    for (const auto& t : ckpt.values) {
      ckpt.adam_m.emplace_back(t.shape());
      ckpt.adam_v.emplace_back(t.shape());
    }
    for (auto& t : ckpt.adam_m) detail::read_tensor_payload(in, t);
    for (auto& t : ckpt.adam_v) detail::read_tensor_payload(in, t);
  }
  return ckpt;
}

inline CheckpointData make_checkpoint(nlohmann::ordered_json meta,
                                      const std::vector<Var>& params, const Adam* adam) {
  CheckpointData ckpt;
  ckpt.meta = std::move(meta);
  for (const auto& p : params) {
    ckpt.names.push_back(p->name);
    ckpt.values.push_back(p->value);
  }
  if (adam) {
    ckpt.has_adam = true;
    ckpt.adam_step = adam->step_count();
    ckpt.adam_cfg = adam->config();
    ckpt.adam_m = adam->first_moments();
    ckpt.adam_v = adam->second_moments();
  }
  return ckpt;
}

// Copy checkpointed values back into live parameter nodes (and optimiser).
inline void restore_checkpoint(const CheckpointData& ckpt, const std::vector<Var>& params,
                               Adam* adam) {
  if (ckpt.values.size() != params.size())
    throw DataError("checkpoint restore: parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->name != ckpt.names[i])
      throw DataError("checkpoint restore: parameter name mismatch at index " +
                      std::to_string(i) + " (" + params[i]->name + " vs " + ckpt.names[i] + ")");
    if (!params[i]->value.same_shape(ckpt.values[i]))
      throw DataError("checkpoint restore: shape mismatch for " + ckpt.names[i]);
    params[i]->value = ckpt.values[i];
  }
  if (adam) {
    if (!ckpt.has_adam) throw DataError("checkpoint restore: no optimiser state stored");
    adam->restore(ckpt.adam_step, ckpt.adam_m, ckpt.adam_v, ckpt.adam_cfg);
  }
}

}  // namespace lobbench::ad

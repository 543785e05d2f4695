// Copyright 2026 The h2rat Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nn/checkpoint.hpp"

#include "common/error.hpp"

namespace h2r::nn {

using nlohmann::ordered_json;

std::string serialize_checkpoint(std::span<const Parameter* const> params,
                                 const CheckpointMetadata& metadata) {
  ordered_json doc;
  doc["metadata"] = {{"vocab_hash", metadata.vocab_hash},
                     {"config", metadata.config},
                     {"seed", metadata.seed},
                     {"epoch", metadata.epoch}};
  ordered_json tensors = ordered_json::object();
  for (const Parameter* p : params) {
    tensors[p->name] = {{"shape", p->value.shape()}, {"data", p->value.values()}};
  }
  doc["parameters"] = std::move(tensors);
  return doc.dump() + "\n";
}

Checkpoint parse_checkpoint(std::string_view text) {
  Checkpoint checkpoint;
  try {
    const ordered_json doc = ordered_json::parse(text);
    const auto& meta = doc.at("metadata");
    checkpoint.metadata.vocab_hash = meta.at("vocab_hash").get<std::string>();
    checkpoint.metadata.config = meta.at("config");
    checkpoint.metadata.seed = meta.at("seed").get<std::uint64_t>();
    checkpoint.metadata.epoch = meta.at("epoch").get<int>();
    for (const auto& [name, entry] : doc.at("parameters").items()) {
      Shape shape = entry.at("shape").get<Shape>();
      std::vector<double> data = entry.at("data").get<std::vector<double>>();
      checkpoint.tensors.emplace(name, Tensor(std::move(shape), std::move(data)));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kMalformedData, std::string("checkpoint: ") + e.what());
  } catch (const Error& e) {
    fail(ErrorCode::kMalformedData, std::string("checkpoint: ") + e.what());
  }
  return checkpoint;
}

void restore_parameters(const Checkpoint& checkpoint,
                        std::span<Parameter* const> params) {
  if (checkpoint.tensors.size() != params.size()) {
    fail(ErrorCode::kCheckpointMismatch,
         "checkpoint holds " + std::to_string(checkpoint.tensors.size()) +
             " tensors, model expects " + std::to_string(params.size()));
  }
  for (Parameter* p : params) {
    const auto it = checkpoint.tensors.find(p->name);
    if (it == checkpoint.tensors.end()) {
      fail(ErrorCode::kCheckpointMismatch, "checkpoint lacks " + p->name);
    }
    if (it->second.shape() != p->value.shape()) {
      fail(ErrorCode::kCheckpointMismatch,
           p->name + ": checkpoint shape " + shape_to_string(it->second.shape()) +
               ", model shape " + shape_to_string(p->value.shape()));
    }
    p->value = it->second;
    p->zero_grad();
  }
}

}  // namespace h2r::nn

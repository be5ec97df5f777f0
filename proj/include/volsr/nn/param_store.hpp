// Copyright 2026-present the volsr authors
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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "volsr/nn/tensor.hpp"

namespace volsr::nn {

/// Named learnable tensors in insertion order.
class ParamStore {
 public:
  /// Registers a parameter (forced to require gradients). Names are unique.
  Tensor& add(const std::string& name, Tensor t);

  const Tensor& at(const std::string& name) const;
  Tensor& at(const std::string& name);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t size() const { return items_.size(); }
  std::vector<std::pair<std::string, Tensor>>& items() { return items_; }
  const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }

  std::int64_t total_numel() const;
  void zero_grad();
  /// L2 norm over all parameter values.
  double norm() const;

  /// Deep copy. With `frozen`, the copies do not require gradients, which
  /// keeps a network's parameters out of another network's update.
  ParamStore clone(bool frozen = false) const;

  /// Parameters whose names start with `prefix`, with the prefix stripped.
  /// Shares storage with this store.
  ParamStore sub_store(const std::string& prefix) const;
  /// Inserts all of `other`'s parameters under `prefix`. Shares storage.
  void merge(const std::string& prefix, const ParamStore& other);

  friend bool operator==(const ParamStore& a, const ParamStore& b);

 private:
  std::vector<std::pair<std::string, Tensor>> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

void to_json(nlohmann::json& j, const AdamConfig& c);
void from_json(const nlohmann::json& j, AdamConfig& c);

/// First/second moment buffers, one per parameter in store order.
struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  explicit AdamState(AdamConfig cfg = {}) : config(cfg) {}
};

/// One bias-corrected Adam update from the accumulated gradients, which are
/// then zeroed. Parameters without a gradient buffer count as zero gradient.
void adam_step(ParamStore& params, AdamState& state);

/// Checkpoint container: "VSRCKPT\0", u32 LE manifest length, JSON manifest
/// {"params":[{"name","shape"}...], ...metadata}, then each parameter as raw
/// little-endian f64 in manifest order.
void save_checkpoint(const std::filesystem::path& path, const ParamStore& params, const nlohmann::json& metadata);

struct Checkpoint {
  ParamStore params;
  nlohmann::json metadata;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace volsr::nn

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

#include "volsr/nn/param_store.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "volsr/error.hpp"

namespace volsr::nn {

Tensor& ParamStore::add(const std::string& name, Tensor t) {
  if (contains(name)) throw ConfigError("duplicate parameter name: " + name);
  t.set_requires_grad(true);
  index_.emplace(name, items_.size());
  items_.emplace_back(name, std::move(t));
  return items_.back().second;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
  return items_[it->second].second;
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
  return items_[it->second].second;
}

std::int64_t ParamStore::total_numel() const {
  std::int64_t n = 0;
  for (const auto& [_, t] : items_) n += t.numel();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [_, t] : items_) t.zero_grad();
}

double ParamStore::norm() const {
  double s = 0.0;
  for (const auto& [_, t] : items_)
    for (double v : t.data()) s += v * v;
  return std::sqrt(s);
}

ParamStore ParamStore::clone(bool frozen) const {
  ParamStore out;
  for (const auto& [name, t] : items_) {
    out.index_.emplace(name, out.items_.size());
    out.items_.emplace_back(name, Tensor::from_data(t.shape(), {t.data().begin(), t.data().end()}, !frozen));
  }
  return out;
}

ParamStore ParamStore::sub_store(const std::string& prefix) const {
  ParamStore out;
  for (const auto& [name, t] : items_) {
    if (name.rfind(prefix, 0) == 0) {
      out.index_.emplace(name.substr(prefix.size()), out.items_.size());
      out.items_.emplace_back(name.substr(prefix.size()), t);
    }
  }
  return out;
}

void ParamStore::merge(const std::string& prefix, const ParamStore& other) {
  for (const auto& [name, t] : other.items_) {
    const std::string full = prefix + name;
    if (contains(full)) throw ConfigError("duplicate parameter name: " + full);
    index_.emplace(full, items_.size());
    items_.emplace_back(full, t);
  }
}

bool operator==(const ParamStore& a, const ParamStore& b) {
  if (a.items_.size() != b.items_.size()) return false;
  for (std::size_t i = 0; i < a.items_.size(); ++i) {
    const auto& [na, ta] = a.items_[i];
    const auto& [nb, tb] = b.items_[i];
    if (na != nb || ta.shape() != tb.shape()) return false;
    if (std::memcmp(ta.data().data(), tb.data().data(), ta.data().size_bytes()) != 0) return false;
  }
  return true;
}

void to_json(nlohmann::json& j, const AdamConfig& c) {
  j = {{"lr", c.lr}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"eps", c.eps}};
}

void from_json(const nlohmann::json& j, AdamConfig& c) {
  c.lr = j.value("lr", c.lr);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.eps = j.value("eps", c.eps);
}

void adam_step(ParamStore& params, AdamState& state) {
  auto& items = params.items();
  if (state.m.empty()) {
    for (const auto& [_, t] : items) {
      state.m.emplace_back(static_cast<std::size_t>(t.numel()), 0.0);
      state.v.emplace_back(static_cast<std::size_t>(t.numel()), 0.0);
    }
  }
  if (state.m.size() != items.size()) throw ShapeError("Adam state does not match the parameter store");
  ++state.step;
  const auto& c = state.config;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < items.size(); ++i) {
    Tensor& p = items[i].second;
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (static_cast<std::int64_t>(m.size()) != p.numel()) {
      throw ShapeError("Adam moment shape drifted for parameter " + items[i].first);
    }
    const auto g = p.grad();
    if (g.empty()) {
      // zero gradient: moments decay, parameters may still move by momentum
      for (std::size_t k = 0; k < m.size(); ++k) {
        m[k] *= c.beta1;
        v[k] *= c.beta2;
      }
    } else {
      for (std::size_t k = 0; k < m.size(); ++k) {
        m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
        v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
      }
    }
    auto data = p.mutable_data();
    for (std::size_t k = 0; k < m.size(); ++k) {
      const double mh = m[k] / bc1;
      const double vh = v[k] / bc2;
      data[k] -= c.lr * mh / (std::sqrt(vh) + c.eps);
    }
    p.zero_grad();
  }
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {
constexpr std::array<char, 8> kCkptMagic = {'V', 'S', 'R', 'C', 'K', 'P', 'T', '\0'};
}

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params, const nlohmann::json& metadata) {
  nlohmann::json manifest = metadata.is_object() ? metadata : nlohmann::json::object();
  manifest["params"] = nlohmann::json::array();
  for (const auto& [name, t] : params.items()) {
    manifest["params"].push_back({{"name", name}, {"shape", t.shape()}});
  }
  const std::string header = manifest.dump();
  const auto len = static_cast<std::uint32_t>(header.size());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  out.write(kCkptMagic.data(), kCkptMagic.size());
  out.write(reinterpret_cast<const char*>(&len), 4);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& [_, t] : params.items()) {
    out.write(reinterpret_cast<const char*>(t.data().data()), static_cast<std::streamsize>(t.data().size_bytes()));
  }
  if (!out) throw IoError("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFoundError("cannot open checkpoint: " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || !std::equal(kCkptMagic.begin(), kCkptMagic.end(), bytes.begin())) {
    throw MalformedHeaderError("not a checkpoint file: " + path.string());
  }
  std::uint32_t len = 0;
  std::memcpy(&len, bytes.data() + 8, 4);
  if (bytes.size() < 12 + static_cast<std::size_t>(len)) throw MalformedHeaderError("truncated checkpoint manifest");
  Checkpoint ck;
  try {
    ck.metadata = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + len);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedHeaderError(std::string("malformed checkpoint manifest: ") + e.what());
  }
  std::size_t offset = 12 + len;
  try {
    for (const auto& p : ck.metadata.at("params")) {
      const Shape shape = p.at("shape").get<Shape>();
      const auto n = static_cast<std::size_t>(numel(shape));
      if (offset + n * sizeof(double) > bytes.size()) throw PayloadLengthError("checkpoint payload is truncated");
      std::vector<double> data(n);
      std::memcpy(data.data(), bytes.data() + offset, n * sizeof(double));
      offset += n * sizeof(double);
      ck.params.add(p.at("name").get<std::string>(), Tensor::from_data(shape, std::move(data)));
    }
  } catch (const nlohmann::json::exception& e) {
    throw MalformedHeaderError(std::string("malformed checkpoint manifest: ") + e.what());
  }
  if (offset != bytes.size()) throw PayloadLengthError("checkpoint payload has trailing bytes");
  ck.metadata.erase("params");
  return ck;
}

}  // namespace volsr::nn

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

#include <string>

#include "volsr/nn/param_store.hpp"

namespace volsr::models {

/// Read-only window onto a ParamStore under a name prefix, so a block's
/// forward function can be written against short local names.
class ParamView {
 public:
  ParamView(const nn::ParamStore& store) : store_(&store) {}  // NOLINT(implicit)
  ParamView(const nn::ParamStore& store, std::string prefix) : store_(&store), prefix_(std::move(prefix)) {}

  const nn::Tensor& at(const std::string& name) const { return store_->at(prefix_ + name); }
  bool contains(const std::string& name) const { return store_->contains(prefix_ + name); }
  ParamView sub(const std::string& name) const { return ParamView(*store_, prefix_ + name + "."); }
  const std::string& prefix() const { return prefix_; }

 private:
  const nn::ParamStore* store_;
  std::string prefix_;
};

}  // namespace volsr::models

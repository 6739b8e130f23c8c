// Copyright 2026 The iotmesh Authors
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
// SPDX-License-Identifier: Apache-2.0

#include "iotmesh/adapters/binding.hpp"

namespace iotmesh {

std::string_view to_string(Protocol protocol) noexcept {
  return protocol == Protocol::PubSubWire ? "pubsub" : "request";
}

std::string_view to_string(Lifecycle state) noexcept {
  return state == Lifecycle::Running ? "running" : "stopped";
}

Binding& BindingSet::add(std::unique_ptr<Binding> binding) {
  if (!binding) throw_error(ErrorKind::ContractViolation, "null binding");
  if (find(binding->protocol())) {
    throw_error(ErrorKind::ContractViolation,
                "a " + std::string(to_string(binding->protocol())) +
                    " binding is already registered");
  }
  bindings_.push_back(std::move(binding));
  return *bindings_.back();
}

Binding* BindingSet::find(Protocol protocol) const {
  for (const auto& b : bindings_) {
    if (b->protocol() == protocol) return b.get();
  }
  return nullptr;
}

void BindingSet::start_all() {
  for (std::size_t i = 0; i < bindings_.size(); ++i) {
    try {
      bindings_[i]->start();
    } catch (...) {
      for (std::size_t j = i; j-- > 0;) bindings_[j]->stop();
      throw;
    }
  }
}

void BindingSet::stop_all() {
  for (auto it = bindings_.rbegin(); it != bindings_.rend(); ++it) (*it)->stop();
}

}  // namespace iotmesh

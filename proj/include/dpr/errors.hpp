/*
Copyright 2026 The DPR Simulation Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    https://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#pragma once

#include <stdexcept>
#include <string>

namespace dpr {

// Malformed or out-of-range input to a public operation.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// A metric whose denominator is empty (e.g. no ordered reviewer pairs).
class UndefinedMetricError : public std::domain_error {
 public:
  explicit UndefinedMetricError(const std::string& what)
      : std::domain_error(what) {}
};

// No assignment satisfies the constraints; `reviewer` is the one that could
// not be filled or repaired.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, std::size_t reviewer)
      : std::runtime_error(what), reviewer_(reviewer) {}
  std::size_t reviewer() const noexcept { return reviewer_; }

 private:
  std::size_t reviewer_;
};

}  // namespace dpr

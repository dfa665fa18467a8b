// Copyright 2026 The Authors.
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

#ifndef CROWDSENSE_ERRORS_HPP_
#define CROWDSENSE_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace crowdsense {

// The joint covariance could not be made positive definite, even with the
// largest allowed diagonal jitter.
class ModelDegenerateError : public std::runtime_error {
 public:
  ModelDegenerateError(const std::string& what, std::size_t site_a,
                       std::size_t site_b)
      : std::runtime_error(what), site_a_(site_a), site_b_(site_b) {}

  std::size_t site_a() const { return site_a_; }
  std::size_t site_b() const { return site_b_; }

 private:
  std::size_t site_a_;
  std::size_t site_b_;
};

// A covariance block needed by a query failed to factorize.
class NumericalDegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Experiment configuration failed validation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace crowdsense

#endif  // CROWDSENSE_ERRORS_HPP_

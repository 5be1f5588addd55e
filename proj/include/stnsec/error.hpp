// SPDX-License-Identifier: Apache-2.0
//
// stnsec: cognitive secure downlink scheduling for satellite-terrestrial networks
// Copyright (C) 2026 The stnsec authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef STNSEC_ERROR_HPP
#define STNSEC_ERROR_HPP

#include <stdexcept>
#include <string>

namespace stnsec {

// Argument outside the mathematical domain of a function (negative gain, NaN, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Tensor, plan or network dimensions that do not line up.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A search or buffer limit was exceeded.
class CapacityError : public std::length_error {
public:
    using std::length_error::length_error;
};

// Link-kind mismatch, e.g. asking a terrestrial link for its LoS phase.
class KindError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed or infeasible action handed to an environment or policy.
class ActionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Training loop aborted by a divergence or collapse detector.
class TrainingError : public std::runtime_error {
public:
    TrainingError(std::string stage, const std::string& what)
        : std::runtime_error("[" + stage + "] " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

// Malformed configuration, plan file or checkpoint.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace stnsec

#endif  // STNSEC_ERROR_HPP

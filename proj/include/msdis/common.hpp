/*
 * Copyright (c) 2026, the msdis authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>

namespace msdis {

using Complex = std::complex<double>;
using Vec2 = Eigen::Vector2d;
using VecC = Eigen::VectorXcd;
using MatC = Eigen::MatrixXcd;
using VecD = Eigen::VectorXd;
using MatD = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s

/// Bad arguments, bad configuration, out-of-range indices. CLI exit code 2.
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Numerical failure (singular covariance, degenerate scene). CLI exit code 3.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SingularCovarianceError : NumericalError {
    using NumericalError::NumericalError;
};

struct DegenerateSceneError : NumericalError {
    using NumericalError::NumericalError;
};

/// Non-fatal diagnostics (non-separable targets, empty mitigation ball, ...).
/// Tests swap the sink to capture messages; default goes to stderr.
using WarningSink = std::function<void(const std::string&)>;

inline WarningSink& warning_sink() {
    static WarningSink sink = [](const std::string& msg) { std::cerr << "[msdis] warning: " << msg << "\n"; };
    return sink;
}

inline void warn(const std::string& msg) {
    if (warning_sink()) warning_sink()(msg);
}

}  // namespace msdis

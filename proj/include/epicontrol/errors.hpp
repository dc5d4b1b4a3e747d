/*
 Copyright 2026 The epicontrol Authors

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

#ifndef EPICONTROL_ERRORS_HPP
#define EPICONTROL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace epicontrol {

enum class ErrorKind {
    invalid_argument,
    non_finite_state,
    out_of_range,
    grid_mismatch,
    probe_at_bound,
    division_by_zero,
    data,
    io,
    usage,
};

// Every library failure carries a kind so the CLI can map it onto an exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class NonFiniteStateError : public Error {
public:
    NonFiniteStateError(double t, const std::string& what)
        : Error(ErrorKind::non_finite_state, what), time_(t) {}

    /// First time at which a NaN/Inf was observed.
    [[nodiscard]] double time() const noexcept { return time_; }

private:
    double time_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string& what) {
    if (!condition) {
        fail(kind, what);
    }
}

} // namespace epicontrol

#endif

/**
 * Copyright 2026 The FLuID Simulator Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FLUID_ERRORS_H_
#define FLUID_ERRORS_H_

#include <stdexcept>
#include <string>
#include <utility>

namespace fluid {

// Base of every error raised by the simulator. The CLI maps ConfigError to
// exit code 2 and everything else to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define FLUID_DEFINE_ERROR(Name)         \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  }

FLUID_DEFINE_ERROR(DimensionError);
FLUID_DEFINE_ERROR(EmptyInputError);
FLUID_DEFINE_ERROR(ShapeError);
FLUID_DEFINE_ERROR(RateError);
FLUID_DEFINE_ERROR(AggregationError);
FLUID_DEFINE_ERROR(CalibrationError);
FLUID_DEFINE_ERROR(CapacityError);
FLUID_DEFINE_ERROR(DataError);
FLUID_DEFINE_ERROR(MeasurementError);
FLUID_DEFINE_ERROR(MetricError);
FLUID_DEFINE_ERROR(InfeasibleRateError);
FLUID_DEFINE_ERROR(SlackError);
FLUID_DEFINE_ERROR(IoError);

#undef FLUID_DEFINE_ERROR

class ConfigError : public Error {
 public:
  ConfigError(const std::string& message, int line = 0, std::string field = {})
      : Error(Format(message, line, field)), line_(line), field_(std::move(field)) {}

  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  static std::string Format(const std::string& message, int line,
                            const std::string& field) {
    std::string out;
    if (line > 0) out += "line " + std::to_string(line) + ": ";
    if (!field.empty()) out += field + ": ";
    return out + message;
  }

  int line_;
  std::string field_;
};

}  // namespace fluid

#endif  // FLUID_ERRORS_H_

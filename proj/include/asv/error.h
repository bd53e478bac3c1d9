// asv/error.h

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ASV_ERROR_H_
#define ASV_ERROR_H_

#include <stdexcept>
#include <string>

namespace asv {

// All failures carry a short machine-parseable class tag; the CLI prints
// "error-class: message" on one line and exits nonzero.
class Error : public std::runtime_error {
 public:
  Error(std::string error_class, const std::string &message)
      : std::runtime_error(error_class + ": " + message),
        error_class_(std::move(error_class)) {}

  const std::string &error_class() const { return error_class_; }

 private:
  std::string error_class_;
};

inline Error ArgumentError(const std::string &msg) { return Error("argument-error", msg); }
inline Error EmptyInputError(const std::string &msg) { return Error("empty-input-error", msg); }
inline Error DefinitenessError(const std::string &msg) { return Error("definiteness-error", msg); }
inline Error FormatError(const std::string &msg) { return Error("format-error", msg); }
inline Error TrainingError(const std::string &msg) { return Error("training-error", msg); }
inline Error BindingError(const std::string &msg) { return Error("binding-error", msg); }
inline Error ConfigError(const std::string &msg) { return Error("config-error", msg); }
inline Error IoError(const std::string &msg) { return Error("io-error", msg); }
inline Error MetricError(const std::string &msg) { return Error("metric-error", msg); }
inline Error ReceptiveFieldError(const std::string &msg) { return Error("receptive-field-error", msg); }
inline Error VersionError(const std::string &msg) { return Error("version-error", msg); }
inline Error CorruptArchiveError(const std::string &msg) { return Error("corrupt-archive-error", msg); }

}  // namespace asv

#endif  // ASV_ERROR_H_

// alignkit/error.hpp

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

#ifndef ALIGNKIT_ERROR_HPP_
#define ALIGNKIT_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace alignkit {

/// Base of every exception thrown by the library.  The CLI maps the
/// concrete subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data violates a documented precondition (bad indices, mismatched
/// files, unparsable records).
class MalformedInput : public Error {
 public:
  using Error::Error;
};

/// A metric is mathematically undefined for the given input
/// (empty sure set, zero variance).
class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or a capability the backend does not offer.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Scorer backend failed or spoke the protocol incorrectly.
class BackendError : public Error {
 public:
  using Error::Error;
};

class TimeoutError : public BackendError {
 public:
  using BackendError::BackendError;
};

/// Training could not proceed or diverged.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Least-squares fit failed (rank-deficient design).
class FitError : public Error {
 public:
  using Error::Error;
};

}  // namespace alignkit

#endif  // ALIGNKIT_ERROR_HPP_

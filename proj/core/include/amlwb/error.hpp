// Copyright 2026 The AML Workbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AMLWB_ERROR_HPP_
#define AMLWB_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace amlwb {

/// Base of every error raised by the workbench libraries.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point that should lie inside the unit ball does not.
class OutsideBallError : public Error {
 public:
  using Error::Error;
};

/// Distance gradient requested for coincident points.
class DegeneratePairError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A single input record violates its contract (bad date order, both ids
/// present, ...). The message carries the row context.
class MalformedRecordError : public Error {
 public:
  using Error::Error;
};

/// A table lacks a column required by an operation.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Input files or references could not be ingested.
class IngestionError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A pipeline stage was invoked without the artifacts it consumes.
class MissingInputError : public Error {
 public:
  using Error::Error;
};

}  // namespace amlwb

#endif  // AMLWB_ERROR_HPP_

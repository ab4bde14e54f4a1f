/*
 * Copyright 2026 The compfair Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef COMPFAIR_ERROR_HPP_
#define COMPFAIR_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace compfair {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor or batch shapes that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Out-of-range argument (sparsity, cluster count, proportions...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed dataset input: bad manifest row, undecodable image.
class LoadError : public Error {
 public:
  using Error::Error;
};

// A mask or codebook that does not describe the model it is applied to.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// Invalid compression step ordering.
class PlanError : public Error {
 public:
  using Error::Error;
};

class SplitError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss during training.
class TrainingError : public Error {
 public:
  using Error::Error;
};

// Corrupt or unsupported model file.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace compfair

#endif  // COMPFAIR_ERROR_HPP_

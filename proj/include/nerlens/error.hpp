// Copyright 2026 The nerlens Authors. All Rights Reserved.
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

// Exception types shared by every nerlens module.

#ifndef NERLENS_ERROR_HPP_
#define NERLENS_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nerlens {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An error tied to a 1-based line of some input file.
class LineError : public Error {
 public:
  LineError(const std::string& kind, std::size_t line, const std::string& what)
      : Error(kind + " at line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class MalformedLine : public LineError {
 public:
  MalformedLine(std::size_t line, const std::string& what)
      : LineError("MalformedLine", line, what) {}
};

class UnknownType : public Error {
 public:
  explicit UnknownType(const std::string& tag)
      : Error("UnknownType: '" + tag + "' is not in the label set") {}
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// Dimension error found while reading a file.
class DimensionMismatchAtLine : public DimensionMismatch {
 public:
  DimensionMismatchAtLine(std::size_t line, const std::string& what)
      : DimensionMismatch("DimensionMismatch at line " + std::to_string(line) +
                          ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ParseError : public LineError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : LineError("ParseError", line, what) {}
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace nerlens

#endif  // NERLENS_ERROR_HPP_

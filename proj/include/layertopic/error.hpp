#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace layertopic {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad pipeline configuration (too few layers, empty vocabulary, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Out-of-range numeric parameter (k >= n, n_components >= dim, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A single malformed input record; `row()` is 1-based including the header line.
class RecordError : public Error {
 public:
  RecordError(std::size_t row, const std::string& what)
      : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// I/O failure. `doc_index()` is set when the failure is tied to one dump record.
class IoError : public Error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  explicit IoError(const std::string& what, std::size_t doc_index = npos)
      : Error(doc_index == npos ? what
                                : "document " + std::to_string(doc_index) + ": " + what),
        doc_index_(doc_index) {}
  std::size_t doc_index() const noexcept { return doc_index_; }

 private:
  std::size_t doc_index_;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

class ReportError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace layertopic

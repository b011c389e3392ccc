#pragma once

#include <stdexcept>
#include <string>

namespace l0cert {

/// Arguments outside an operation's domain (k > d, alpha outside (0,1), ...).
class InvalidParams : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input width does not match what a model or encoder expects.
class ShapeMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exhaustive enumeration requested on an instance that is too large.
class InstanceTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Aggregation over an empty collection.
class EmptyResults : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent file contents.
class FormatError : public std::runtime_error {
 public:
  enum class Kind { kBadMagic, kTruncated, kCountMismatch, kUnsupportedVersion, kMalformed };

  FormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace l0cert

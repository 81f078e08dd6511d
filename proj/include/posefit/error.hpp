#pragma once

#include <stdexcept>
#include <string>

namespace posefit {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid skeleton document or structure. Carries the offending link and field.
class SkeletonError : public Error {
 public:
  SkeletonError(int link_id, std::string field, const std::string& what)
      : Error(format(link_id, field, what)), link_id_(link_id), field_(std::move(field)) {}

  /// -1 when the error is not attached to a single link.
  int link_id() const noexcept { return link_id_; }
  const std::string& field() const noexcept { return field_; }

 private:
  static std::string format(int link_id, const std::string& field, const std::string& what) {
    std::string prefix = link_id >= 0 ? "link " + std::to_string(link_id) + ": " : std::string{};
    if (!field.empty()) prefix += "'" + field + "': ";
    return prefix + what;
  }

  int link_id_;
  std::string field_;
};

/// Malformed or unreadable file (PGM, sidecar, xyz, pose file, manifest).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Input that violates an operation's precondition (dimension mismatch, non-finite value).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Optimizer configuration out of range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace posefit

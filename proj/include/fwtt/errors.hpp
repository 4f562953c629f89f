#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fwtt {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

/// Malformed arguments or violated preconditions.
class InvalidArgument : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "invalid_argument"; }
};

/// The observation pattern fails one or more of the combinatorial recovery
/// conditions. `conditions()` lists the failing condition identifiers
/// ("last_core_fibers", "penultimate_rows", "slice_rank", "slice_rows", "overlap_connectivity",
/// "row_coverage").
class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, std::vector<std::string> conditions)
      : Error(what), conditions_(std::move(conditions)) {}
  const char* kind() const noexcept override { return "validation"; }
  const std::vector<std::string>& conditions() const noexcept { return conditions_; }

 private:
  std::vector<std::string> conditions_;
};

/// A numerical identifiability check failed while completing: a column space
/// could not be pinned down, a slice system was rank deficient, or too few
/// fibers were observed for the last core. `stage()` names where.
class IdentifiabilityError : public Error {
 public:
  IdentifiabilityError(const std::string& what, std::string stage)
      : Error(what), stage_(std::move(stage)) {}
  const char* kind() const noexcept override { return "identifiability"; }
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Unreadable, truncated or inconsistent files.
class FormatError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "format"; }
};

}  // namespace fwtt

#pragma once

#include <stdexcept>
#include <string>

namespace wfl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration value violates a documented invariant. `field()` names it.
class InvalidConfig : public Error {
 public:
  InvalidConfig(std::string field, const std::string& why)
      : Error("invalid " + field + ": " + why), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class DegenerateConstants : public Error {
 public:
  using Error::Error;
};

/// Closed form requested for a device count it does not cover.
class UnsupportedN : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

class SlotCapExceeded : public Error {
 public:
  using Error::Error;
};

/// The telescoped three-device PMF divides by p_suc_2 - p_suc_1, which vanishes at p_tr = 0.5.
class SingularRate : public Error {
 public:
  using Error::Error;
};

class EmptyBatch : public Error {
 public:
  using Error::Error;
};

}  // namespace wfl

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace oscillab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidSignature : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

/// An angle (or a quantity derived from one) was requested where the action vanishes.
class ZeroActionError : public Error {
 public:
  explicit ZeroActionError(std::size_t index)
      : Error("action I_" + std::to_string(index + 1) + " is zero; angle undefined"),
        index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// A finite-difference stencil produced a non-finite value.
class StencilFailure : public Error {
 public:
  StencilFailure(std::size_t coordinate, double offset)
      : Error("non-finite evaluation in stencil at coordinate " + std::to_string(coordinate) +
              ", offset " + std::to_string(offset)),
        coordinate_(coordinate),
        offset_(offset) {}
  std::size_t coordinate() const noexcept { return coordinate_; }
  double offset() const noexcept { return offset_; }

 private:
  std::size_t coordinate_;
  double offset_;
};

class LimitExceeded : public Error {
 public:
  using Error::Error;
};

/// The input already lies on a singular plane (or its image at a pole).
class SingularInput : public Error {
 public:
  using Error::Error;
};

}  // namespace oscillab

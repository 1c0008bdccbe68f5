#pragma once

#include <stdexcept>
#include <string>

namespace patchattack {

// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class UnknownAdapter : public Error {
 public:
  using Error::Error;
};

class WeightsUnavailable : public Error {
 public:
  using Error::Error;
};

class MissingTexture : public Error {
 public:
  using Error::Error;
};

class InsufficientSamples : public Error {
 public:
  using Error::Error;
};

class DatasetUnavailable : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace patchattack

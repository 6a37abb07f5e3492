#pragma once

#include <stdexcept>
#include <string>

namespace gridrestore {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed instance document.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Well-formed document that violates a model invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Topology the engine cannot operate: a cycle with no switch to open, or an
/// island whose injections do not balance.
class TopologyError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent state update (bad action, storage bound breach, mismatched observation).
class DynamicsError : public Error {
 public:
  using Error::Error;
};

}  // namespace gridrestore

#pragma once

#include <stdexcept>
#include <string>

namespace rgrow {

// Bad caller input: flags, sizes, indices.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Operation called on an object in the wrong state (inactive cluster, missing ground truth).
class InvalidState : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed file contents.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sensor coincident with a source, zero-radius meshes and similar.
class DegenerateGeometry : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Internal invariant broken; indicates a bug rather than bad input.
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace rgrow

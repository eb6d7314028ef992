#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aipgame {

/// Malformed input file. Carries the byte offset at which parsing gave up.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t byte_offset)
      : std::runtime_error(message + " (byte " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}

  std::size_t byte_offset() const { return byte_offset_; }

 private:
  std::size_t byte_offset_ = 0;
};

/// Reference-data problem: missing, unreadable, or failing integrity checks.
class FixtureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace aipgame

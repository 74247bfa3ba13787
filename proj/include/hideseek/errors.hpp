#pragma once

#include <stdexcept>
#include <string>

namespace hideseek {

// Input or configuration values outside their allowed domain.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A fixed-width field cannot hold the requested count (e.g. > 20 agents).
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Caller broke an API contract: wrong buffer size, wrong action count, use after close.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Undecodable input bytes (PNG, JSON syntax).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace hideseek

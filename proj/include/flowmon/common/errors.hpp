#pragma once

#include <stdexcept>
#include <string>

namespace flowmon {

// Input that violates a data contract (malformed frame, shape mismatch, ...).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Invalid configuration or scenario parameters.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Wire protocol violation (malformed frame, unexpected frame type).
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Terminal authorization failure: unknown or revoked key.
class AuthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace flowmon

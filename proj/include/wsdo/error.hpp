#pragma once

#include <stdexcept>
#include <string>

namespace wsdo {

// Every failure the library raises derives from Error so callers (the CLI in
// particular) can map categories onto exit codes.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
  using Error::Error;
};

// More products than slots.
class CapacityError : public Error {
public:
  using Error::Error;
};

class DiscretizationError : public Error {
public:
  using Error::Error;
};

// A slot has no walkable cell next to its rack face.
class IsolationError : public Error {
public:
  using Error::Error;
};

class UnreachableError : public Error {
public:
  using Error::Error;
};

class InfeasibleError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

class ProtocolError : public Error {
public:
  using Error::Error;
};

class FramingError : public ProtocolError {
public:
  using ProtocolError::ProtocolError;
};

} // namespace wsdo

#pragma once

#include <stdexcept>
#include <string>

namespace lpcorp {

// Error categories map onto CLI exit codes: usage -> 2, data -> 3,
// transport/protocol -> 4.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class UsageError : public Error {
public:
  explicit UsageError(const std::string& what) : Error(what) {}
};

class DataError : public Error {
public:
  explicit DataError(const std::string& what) : Error(what) {}
};

class TransportError : public Error {
public:
  explicit TransportError(const std::string& what) : Error(what) {}
};

// Endpoint answered, but the body is not the expected chat-completions shape.
class ProtocolError : public Error {
public:
  explicit ProtocolError(const std::string& what) : Error(what) {}
};

}  // namespace lpcorp

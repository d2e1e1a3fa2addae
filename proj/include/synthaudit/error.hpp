#pragma once

#include <stdexcept>
#include <string>

namespace synthaudit {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data violates a documented precondition (bad record, empty corpus,
/// out-of-range parameter).
class InputError : public Error {
public:
    using Error::Error;
};

/// A file could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// A remote peer answered with something that does not follow the wire protocol.
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// A remote peer could not be reached after all retries.
class NetworkError : public Error {
public:
    using Error::Error;
};

} // namespace synthaudit

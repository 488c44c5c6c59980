#pragma once

#include <stdexcept>
#include <string>

namespace ddisac {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class LengthMismatch : public Error {
public:
    using Error::Error;
};

class InvalidRolloff : public Error {
public:
    using Error::Error;
};

class DelayOutOfRange : public Error {
public:
    using Error::Error;
};

class DopplerOutOfRange : public Error {
public:
    using Error::Error;
};

class AxisOutOfRange : public Error {
public:
    using Error::Error;
};

class MissingOrigin : public Error {
public:
    using Error::Error;
};

class WindowTooLarge : public Error {
public:
    using Error::Error;
};

/// Config or output-path problems surfaced by the bench layer.
class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace ddisac

#pragma once

#include <stdexcept>
#include <string>

namespace lesionsynth {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user-supplied configuration or arguments (CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Two volumes that must share a voxel grid do not.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// File system or file format failure.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace lesionsynth

#pragma once

#include <stdexcept>
#include <string>

namespace mesoray {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SingularMatrixError : Error {
    using Error::Error;
};

/// A record-level problem in a text input; `line` is 1-based.
struct ParseError : Error {
    ParseError(const std::string& what, int line)
        : Error(what + " (line " + std::to_string(line) + ")"), line(line) {}
    int line;
};

struct SchemaError : Error {
    SchemaError(const std::string& field_path, const std::string& what)
        : Error("scene schema error at '" + field_path + "': " + what), path(field_path) {}
    std::string path;
};

struct MissingFileError : Error {
    explicit MissingFileError(const std::string& file)
        : Error("missing file: " + file), path(file) {}
    std::string path;
};

struct UnsatisfiableError : Error {
    using Error::Error;
};

struct OutOfBoundsError : Error {
    using Error::Error;
};

struct DegenerateError : Error {
    using Error::Error;
};

}  // namespace mesoray

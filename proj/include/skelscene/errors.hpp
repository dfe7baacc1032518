#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace skelscene {

// Base of every error raised by the library. Callers that only need a
// diagnostic can catch this and print what().
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateFrame : public Error {
public:
    explicit DegenerateFrame(const std::string& reason,
                             std::optional<std::size_t> frame = std::nullopt)
        : Error(frame ? "degenerate local frame at frame " + std::to_string(*frame) + ": " + reason
                      : "degenerate local frame: " + reason),
          reason_(reason),
          frame_(frame) {}

    const std::string& reason() const noexcept { return reason_; }
    std::optional<std::size_t> frame() const noexcept { return frame_; }

private:
    std::string reason_;
    std::optional<std::size_t> frame_;
};

class SequenceTooShort : public Error {
public:
    using Error::Error;
};

class LengthMismatch : public Error {
public:
    using Error::Error;
};

class IntervalTooShort : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, std::size_t column, const std::string& reason)
        : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + reason),
          line_(line),
          column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class SplitError : public Error {
public:
    using Error::Error;
};

class WidthOverflow : public Error {
public:
    using Error::Error;
};

class ShapeMismatch : public Error {
public:
    using Error::Error;
};

class LabelOutOfRange : public Error {
public:
    using Error::Error;
};

class EmptyClass : public Error {
public:
    using Error::Error;
};

class DivergedLoss : public Error {
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

// Artifacts produced under different feature configurations were mixed.
class HashMismatch : public Error {
public:
    using Error::Error;
};

}  // namespace skelscene

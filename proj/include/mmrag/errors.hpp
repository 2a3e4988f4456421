#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mmrag {

enum class ErrorCode {
    Io = 1,
    Parse = 2,
    DateFormat = 3,
    Schema = 4,
    Dimension = 5,
    Format = 6,
    Provider = 7,
    FixtureMiss = 8,
    Alignment = 9,
    EmptyQuerySet = 10,
    Config = 11,
    InvalidArgument = 12,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& message) : Error(ErrorCode::Io, message) {}
};

// Raised when no well-formed filter dictionary can be located in a text.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t offset)
        : Error(ErrorCode::Parse, message + " (byte offset " + std::to_string(offset) + ")"),
          offset_(offset) {}

    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

class DateFormatError : public Error {
public:
    explicit DateFormatError(const std::string& text)
        : Error(ErrorCode::DateFormat, "unrecognized date layout: \"" + text + "\"") {}
};

class SchemaError : public Error {
public:
    SchemaError(std::size_t index, const std::string& field)
        : Error(ErrorCode::Schema,
                "record " + std::to_string(index) + ": missing or invalid field \"" + field + "\""),
          index_(index), field_(field) {}

    std::size_t index() const { return index_; }
    const std::string& field() const { return field_; }

private:
    std::size_t index_;
    std::string field_;
};

class DimensionMismatch : public Error {
public:
    DimensionMismatch(std::size_t expected, std::size_t got)
        : Error(ErrorCode::Dimension,
                "embedding dimension mismatch: expected " + std::to_string(expected) + ", got " +
                    std::to_string(got)),
          expected_(expected), got_(got) {}

    std::size_t expected() const { return expected_; }
    std::size_t got() const { return got_; }

private:
    std::size_t expected_;
    std::size_t got_;
};

class FormatError : public Error {
public:
    explicit FormatError(const std::string& message) : Error(ErrorCode::Format, message) {}
};

class ProviderError : public Error {
public:
    ProviderError(const std::string& message, bool retryable, int status = 0)
        : Error(ErrorCode::Provider, message), retryable_(retryable), status_(status) {}

    bool retryable() const { return retryable_; }
    int status() const { return status_; }

private:
    bool retryable_;
    int status_;
};

class FixtureMiss : public Error {
public:
    explicit FixtureMiss(const std::string& prompt_hash)
        : Error(ErrorCode::FixtureMiss, "no fixture for prompt sha256 " + prompt_hash),
          prompt_hash_(prompt_hash) {}

    const std::string& prompt_hash() const { return prompt_hash_; }

private:
    std::string prompt_hash_;
};

class AlignmentError : public Error {
public:
    explicit AlignmentError(const std::string& message) : Error(ErrorCode::Alignment, message) {}
};

class EmptyQuerySet : public Error {
public:
    EmptyQuerySet() : Error(ErrorCode::EmptyQuerySet, "no scoreable queries in the input set") {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& message) : Error(ErrorCode::Config, message) {}
};

} // namespace mmrag

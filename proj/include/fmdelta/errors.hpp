#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fmdelta {

/// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameters or misuse of the API (bad word size, index out of
/// range, odd packet counts, ...). Maps to CLI exit code 1.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Malformed or truncated compressed data. Carries the index of the record
/// that failed, when known. Maps to CLI exit code 2.
class CorruptStreamError : public Error {
public:
    CorruptStreamError(std::string msg, std::size_t record_index)
        : Error("record " + std::to_string(record_index) + ": " + std::move(msg)),
          record_index_(record_index) {}

    explicit CorruptStreamError(std::string msg)
        : Error(std::move(msg)), record_index_(kNoIndex) {}

    static constexpr std::size_t kNoIndex = static_cast<std::size_t>(-1);

    std::size_t record_index() const { return record_index_; }

private:
    std::size_t record_index_;
};

/// Frame parsing failure; names the protocol layer that rejected the bytes.
class FrameParseError : public Error {
public:
    FrameParseError(std::string layer, const std::string& msg)
        : Error(layer + ": " + msg), layer_(std::move(layer)) {}

    const std::string& layer() const { return layer_; }

private:
    std::string layer_;
};

/// Arena capacity exceeded. Maps to CLI exit code 3.
class CapacityError : public Error {
public:
    CapacityError(std::size_t required, std::size_t available)
        : Error("capacity exceeded: need " + std::to_string(required) +
                " bytes, have " + std::to_string(available)),
          required_(required), available_(available) {}

    std::size_t required() const { return required_; }
    std::size_t available() const { return available_; }

private:
    std::size_t required_;
    std::size_t available_;
};

/// An update request whose repatched record no longer matches the arena
/// contents it was prepared against.
class StaleRepatchError : public Error {
public:
    using Error::Error;
};

} // namespace fmdelta

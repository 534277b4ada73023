#pragma once

#include <stdexcept>
#include <string>

namespace aof {

// Base error for everything this library throws on its own behalf.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad configuration (missing keys, invalid values, unresolvable env vars).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

// Network failure that survived the retry policy.
class TransportError : public Error {
public:
    explicit TransportError(const std::string& what) : Error(what) {}
};

// A generator response with too few well-formed items. Consumes an attempt.
class ParseFailure : public Error {
public:
    ParseFailure(const std::string& what, size_t well_formed, size_t expected)
        : Error(what), well_formed(well_formed), expected(expected) {}
    size_t well_formed;
    size_t expected;
};

// Replay fixture ran out of recorded responses.
class FixtureError : public Error {
public:
    explicit FixtureError(const std::string& what) : Error(what) {}
};

} // namespace aof

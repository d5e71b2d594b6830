#pragma once

#include <stdexcept>
#include <string>

namespace lexrag {

/// Base class for every failure this library reports.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A chat or embedding request did not complete within its deadline.
class TimeoutError : public Error {
public:
    using Error::Error;
};

/// The configured HTTP endpoint could not be reached or answered with an error.
class EndpointUnavailableError : public Error {
public:
    using Error::Error;
};

/// A scripted transport ran out of canned responses for a tag.
class ScriptExhaustedError : public Error {
public:
    using Error::Error;
};

/// A model reply violated its required output format even after one re-ask.
class ParseFailureError : public Error {
public:
    using Error::Error;
};

/// A counting variant normalized to nothing.
class EmptyVariantError : public Error {
public:
    using Error::Error;
};

/// A dataset file could not be parsed or failed validation.
class DatasetError : public Error {
public:
    using Error::Error;
};

/// A configuration file or value is invalid.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace lexrag

#pragma once

#include <stdexcept>
#include <string>

namespace congen {

// Base type for all engine errors. Subtypes mirror the failure contracts of
// the public operations so callers can catch precisely.
struct Error : std::runtime_error {
    explicit Error(const std::string & msg) : std::runtime_error(msg) {}
};

// lm-backend
struct BackendUnavailable : Error {
    using Error::Error;
};
struct CapabilityError : Error {
    using Error::Error;
};
struct EncodingError : Error {
    using Error::Error;
};

// constraints
struct TaggerUnavailable : Error {
    using Error::Error;
};

// decoding
struct DegenerateDistribution : Error {
    using Error::Error;
};
struct VocabMismatch : Error {
    using Error::Error;
};
struct MissingPlaceholder : Error {
    using Error::Error;
};

// synthlabel
struct UnparseableLabel : Error {
    using Error::Error;
};
struct LabelRateError : Error {
    using Error::Error;
};
struct SchemaError : Error {
    using Error::Error;
};

// cli / harness
struct FormatError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};

} // namespace congen

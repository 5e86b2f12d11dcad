#pragma once

#include <stdexcept>
#include <string>

namespace gt {

// Base for every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A probability or other scalar outside its mathematical domain.
class DomainError : public Error {
public:
    using Error::Error;
};

// Bit-vectors of different population sizes combined.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Sensitivity/specificity pair that does not describe an informative test.
class InvalidParams : public Error {
public:
    using Error::Error;
};

// Observed results have zero probability under the model (noiseless edge).
class InconsistentEvidence : public Error {
public:
    using Error::Error;
};

// Population larger than exact enumeration supports.
class SizeError : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace gt

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace geopli {

// Base class for all library errors. Subclasses map onto the CLI's stable
// exit codes (see tools/geopli_main.cpp).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor/MLP shape violations.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Precondition violations on an operation's inputs.
class ContractError : public Error {
public:
    using Error::Error;
};

// Out-of-range index (segment ids, edge endpoints).
class IndexError : public Error {
public:
    using Error::Error;
};

// Malformed input file; message carries the line number.
class ParseError : public Error {
public:
    using Error::Error;
};

// Structurally valid input that violates a data invariant
// (atom-count drift, split leakage, missing label).
class IntegrityError : public Error {
public:
    using Error::Error;
};

// Filesystem failure.
class IoError : public Error {
public:
    using Error::Error;
};

// Non-finite value produced where finiteness is guaranteed.
class NumericError : public Error {
public:
    using Error::Error;
};

// Checkpoint load or weight-transfer shape mismatch.
class TransferError : public Error {
public:
    using Error::Error;
};

// Pocket crop found no protein atom in contact range.
class EmptyPocketError : public IntegrityError {
public:
    using IntegrityError::IntegrityError;
};

// Correlation requested on a zero-variance vector.
class UndefinedCorrelationError : public ContractError {
public:
    using ContractError::ContractError;
};

}  // namespace geopli

#pragma once

#include <stdexcept>
#include <string>

namespace cryptvault {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// cipher layer
class InvalidPadding : public Error {
public:
    InvalidPadding() : Error("invalid padding") {}
    explicit InvalidPadding(const std::string& what) : Error(what) {}
};

class MalformedCiphertext : public Error {
public:
    using Error::Error;
};

class UnsupportedAlgorithm : public Error {
public:
    using Error::Error;
};

// key envelopes and the key store
class BadLength : public Error {
public:
    using Error::Error;
};

class BadMagic : public Error {
public:
    using Error::Error;
};

class UnsupportedVersion : public Error {
public:
    using Error::Error;
};

class KeyNotFound : public Error {
public:
    using Error::Error;
};

// vault
class EntryNotFound : public Error {
public:
    using Error::Error;
};

class DuplicateName : public Error {
public:
    using Error::Error;
};

class IntegrityFailure : public Error {
public:
    using Error::Error;
};

class SeparationViolation : public Error {
public:
    using Error::Error;
};

// stats
class DegenerateInput : public Error {
public:
    using Error::Error;
};

// argument/precondition violations surfaced to callers
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// storage backends
class StorageError : public Error {
public:
    using Error::Error;
};

class StorageFull : public StorageError {
public:
    using StorageError::StorageError;
};

class PermissionDenied : public StorageError {
public:
    using StorageError::StorageError;
};

} // namespace cryptvault

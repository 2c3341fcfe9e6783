#pragma once

#include <stdexcept>
#include <string>

namespace misrep {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad orders, invalid model, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// The input data cannot support the requested computation.
class DataError : public Error {
public:
    using Error::Error;
};

/// A mixture component collapsed onto a point and restarts did not recover.
class DegenerateMixture : public Error {
public:
    using Error::Error;
};

/// The requested quantity is not identified by the data or the model.
class NonIdentifiable : public Error {
public:
    using Error::Error;
};

}  // namespace misrep

#pragma once

#include <stdexcept>
#include <string>

namespace splatfix {

// Bad input data: malformed files, inconsistent bundles, dimension mismatches.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad command-line or configuration usage.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace splatfix

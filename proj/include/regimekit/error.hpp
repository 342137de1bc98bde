#pragma once

#include <stdexcept>
#include <string>

namespace regimekit {

/// Base class for every analysis failure raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data. Carries the offending row/column when known.
class DataError : public Error {
public:
    explicit DataError(const std::string& what, long row = -1, std::string column = {})
        : Error(format(what, row, column)), row_(row), column_(std::move(column)) {}

    long row() const noexcept { return row_; }
    const std::string& column() const noexcept { return column_; }

private:
    static std::string format(const std::string& what, long row, const std::string& column) {
        std::string out = what;
        if (row >= 0) out += " (row " + std::to_string(row);
        if (!column.empty()) out += (row >= 0 ? ", column '" : " (column '") + column + "'";
        if (row >= 0 || !column.empty()) out += ")";
        return out;
    }

    long row_;
    std::string column_;
};

/// Singular systems, failed factorizations, underflow.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Requested model variant exists in the taxonomy but is not supported.
class NotImplementedError : public Error {
public:
    using Error::Error;
};

}  // namespace regimekit

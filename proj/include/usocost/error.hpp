#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace usocost {

// Input outside a function's mathematical domain (non-positive density,
// negative lifetime, empty sample, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed tabular input. Row is 1-based over data rows (header excluded);
// zero means the header itself.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t row, std::string column);

  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

// Invalid configuration document (scenario, profile, simulation config).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Operation rejected by the obligation ledger (non-owner trade, closed
// commitment, out-of-order settlement, ...).
class LedgerError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace usocost

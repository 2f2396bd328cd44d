#pragma once

#include <stdexcept>
#include <string>

namespace cmaudit {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file (protocol, score file, WAVE header, config).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Loudness cannot be measured: every block fell below the gates.
class UnmeasurableError : public Error {
 public:
  using Error::Error;
};

// Regression design matrix lacks full column rank.
class RankDeficiencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace cmaudit

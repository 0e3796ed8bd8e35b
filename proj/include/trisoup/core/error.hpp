#pragma once

#include <stdexcept>
#include <string>

namespace trisoup {

/// Bad user input: files, configs, command lines.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed file content; message carries file and line context.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Internal API misuse (shape mismatches, stale state). A bug, not bad input.
class ContractError : public std::logic_error {
 public:
  explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

#define TRISOUP_CHECK(cond, msg)                  \
  do {                                            \
    if (!(cond)) throw ::trisoup::ContractError(msg); \
  } while (0)

}  // namespace trisoup

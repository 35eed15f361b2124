#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace v2x {

// Base for every error the library raises on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input violates a documented invariant or precondition.
struct ValidationError : Error {
  using Error::Error;
};

// One rejected row/field in a parsed document.
struct ParseIssue {
  std::size_t row = 0;  // 1-based line number, 0 when not row-specific
  std::string column;
  std::string message;

  std::string describe() const {
    std::string out;
    if (row > 0) out += "row " + std::to_string(row) + ": ";
    if (!column.empty()) out += "column '" + column + "': ";
    return out + message;
  }
};

struct ParseError : ValidationError {
  explicit ParseError(std::vector<ParseIssue> issues)
      : ValidationError(summarize(issues)), issues_(std::move(issues)) {}

  const std::vector<ParseIssue>& issues() const noexcept { return issues_; }

 private:
  static std::string summarize(const std::vector<ParseIssue>& issues) {
    if (issues.empty()) return "parse error";
    std::string msg = issues.front().describe();
    if (issues.size() > 1)
      msg += " (+" + std::to_string(issues.size() - 1) + " more)";
    return msg;
  }

  std::vector<ParseIssue> issues_;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace v2x

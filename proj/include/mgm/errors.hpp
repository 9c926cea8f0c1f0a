#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mgm {

/// Base class of every error thrown by the library.
class error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class index_error : public error {
public:
  using error::error;
};

class feasibility_error : public error {
public:
  using error::error;
};

/// A vertex listed twice; a special case of an infeasible partition.
class duplication_error : public feasibility_error {
public:
  using feasibility_error::feasibility_error;
};

class reference_error : public error {
public:
  using error::error;
};

class overlap_error : public error {
public:
  using error::error;
};

class structure_error : public error {
public:
  using error::error;
};

class completeness_error : public error {
public:
  using error::error;
};

class argument_error : public error {
public:
  using error::error;
};

class parse_error : public error {
public:
  parse_error(std::size_t line, const std::string& what)
  : error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

}  // namespace mgm

#ifndef REACTSIM_ERRORS_HPP
#define REACTSIM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace reactsim {

// Invalid inputs to a simulation, sampling, training or metric operation.
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Unreadable files, malformed documents, unknown config keys.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace reactsim

#endif  // REACTSIM_ERRORS_HPP

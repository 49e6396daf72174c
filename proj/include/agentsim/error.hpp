#ifndef AGENTSIM__ERROR_HPP_
#define AGENTSIM__ERROR_HPP_

#include <stdexcept>
#include <string>

namespace agentsim
{
/// Base class of every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Input or argument violates a documented contract (schema, range, shape).
class ValidationError : public Error
{
public:
  using Error::Error;
};

/// A NaN or Inf appeared in a computation that must stay finite.
class NumericError : public Error
{
public:
  using Error::Error;
};

inline void require(bool condition, const std::string & message)
{
  if (!condition) {
    throw ValidationError(message);
  }
}
}  // namespace agentsim

#endif  // AGENTSIM__ERROR_HPP_

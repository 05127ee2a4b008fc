#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace gibbs {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid model, schedule, noise or command configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not produce a finite, trustworthy result.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A requested snapshot time or key is not available.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// A sample path left the divergence bound or produced a non-finite state.
class DivergenceError : public NumericError {
 public:
  DivergenceError(std::size_t path, double time, Eigen::VectorXd last_finite_state);

  std::size_t path() const { return path_; }
  double time() const { return time_; }
  const Eigen::VectorXd& last_finite_state() const { return last_state_; }

 private:
  std::size_t path_;
  double time_;
  Eigen::VectorXd last_state_;
};

}  // namespace gibbs

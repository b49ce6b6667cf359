#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace nes {

template <typename T>
using Vec2 = Eigen::Matrix<T, 2, 1>;

template <typename T>
using Mat2 = Eigen::Matrix<T, 2, 2>;

struct SingularHessian : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotHurwitz : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotConverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonMonotoneTime : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidMarket : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidParameters : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyLog : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// carries the simulation time at which the state left the admissible box
struct NumericOverflow : std::runtime_error {
  double time;
  explicit NumericOverflow(double t, const std::string& what)
      : std::runtime_error(what), time(t) {}
};

// structural problem in an input document (missing field, wrong type)
struct ParseError : std::runtime_error {
  std::string field;
  explicit ParseError(std::string f, const std::string& what)
      : std::runtime_error(what), field(std::move(f)) {}
};

// well-formed input whose values are out of range
struct ValidationError : std::runtime_error {
  std::string field;
  explicit ValidationError(std::string f, const std::string& what)
      : std::runtime_error(what), field(std::move(f)) {}
};

}  // namespace nes

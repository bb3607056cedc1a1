#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace isoyamabe {

/// A real function of the level parameter t with first and second derivatives.
///
/// Built-in analytic forms (constant, polynomial) differentiate exactly; tables
/// are interpolated by a not-a-knot cubic spline and differentiated through the
/// spline. Function curves wrap arbitrary callables over a declared domain and
/// are serialized by sampling.
class ScalarCurve {
 public:
  using Fn = std::function<double(double)>;

  enum class Kind { constant, polynomial, table, function };

  ScalarCurve();

  static ScalarCurve constant(double value);
  /// Coefficients in ascending powers of t.
  static ScalarCurve polynomial(std::vector<double> coeffs);
  /// Throws Errc::invalid_argument unless abscissae are strictly increasing
  /// and there are at least 8 samples.
  static ScalarCurve table(std::vector<double> t, std::vector<double> values);
  static ScalarCurve function(std::string label, double lo, double hi, Fn f, Fn df, Fn d2f);

  double operator()(double t) const;
  double derivative(double t) const;
  double second_derivative(double t) const;

  Kind kind() const;
  std::optional<double> constant_value() const;

  /// Table samples or function wrappers only cover a finite range.
  bool covers(double lo, double hi) const;

  /// Resamples any curve into a table with `samples` uniform abscissae.
  ScalarCurve sampled(double lo, double hi, int samples) const;

  /// Analytic kinds serialize as themselves; function curves become tables on [lo, hi].
  nlohmann::json to_json(double lo, double hi) const;
  static ScalarCurve from_json(const nlohmann::json& j);

 private:
  struct Constant {
    double value;
  };
  struct Polynomial {
    std::vector<double> coeffs;
  };
  struct Spline {
    std::vector<double> t, y, m;  // m: second derivatives at the knots
  };
  struct Function {
    std::string label;
    double lo, hi;
    Fn f, df, d2f;
  };
  using Impl = std::variant<Constant, Polynomial, Spline, Function>;

  explicit ScalarCurve(Impl impl);

  std::shared_ptr<const Impl> impl_;
};

}  // namespace isoyamabe

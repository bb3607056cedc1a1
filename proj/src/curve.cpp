#include "curve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "error.hpp"
#include "tridiagonal.hpp"

namespace isoyamabe {

namespace {

// Not-a-knot cubic spline second derivatives. The two end conditions are
// eliminated into the first and last interior rows so the system stays tridiagonal.
std::vector<double> not_a_knot_moments(const std::vector<double>& t, const std::vector<double>& y) {
  const std::size_t n = t.size();
  std::vector<double> h(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) h[i] = t[i + 1] - t[i];
  const std::size_t k = n - 2;  // unknowns m_1 .. m_{n-2}
  std::vector<double> lower(k - 1), diag(k), upper(k - 1), rhs(k);
  for (std::size_t r = 0; r < k; ++r) {
    const std::size_t i = r + 1;
    diag[r] = 2.0 * (h[i - 1] + h[i]);
    if (r > 0) lower[r - 1] = h[i - 1];
    if (r + 1 < k) upper[r] = h[i];
    rhs[r] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
  }
  // m_0 = ((h0 + h1) m_1 - h0 m_2) / h1
  diag[0] += h[0] * (h[0] + h[1]) / h[1];
  upper[0] -= h[0] * h[0] / h[1];
  // m_{n-1} = ((h_{n-2} + h_{n-3}) m_{n-2} - h_{n-2} m_{n-3}) / h_{n-3}
  const double ha = h[n - 3], hb = h[n - 2];
  diag[k - 1] += hb * (hb + ha) / ha;
  lower[k - 2] -= hb * hb / ha;
  const auto inner = solve_tridiagonal(lower, diag, upper, rhs);
  std::vector<double> m(n);
  std::copy(inner.begin(), inner.end(), m.begin() + 1);
  m[0] = ((h[0] + h[1]) * m[1] - h[0] * m[2]) / h[1];
  m[n - 1] = ((hb + ha) * m[n - 2] - hb * m[n - 3]) / ha;
  return m;
}

std::size_t spline_interval(const std::vector<double>& t, double x) {
  auto it = std::upper_bound(t.begin(), t.end(), x);
  std::size_t i = it == t.begin() ? 0 : static_cast<std::size_t>(it - t.begin()) - 1;
  return std::min(i, t.size() - 2);
}

}  // namespace

ScalarCurve::ScalarCurve() : ScalarCurve(Impl{Constant{0.0}}) {}

ScalarCurve::ScalarCurve(Impl impl) : impl_(std::make_shared<const Impl>(std::move(impl))) {}

ScalarCurve ScalarCurve::constant(double value) { return ScalarCurve(Impl{Constant{value}}); }

ScalarCurve ScalarCurve::polynomial(std::vector<double> coeffs) {
  require(!coeffs.empty(), Errc::invalid_argument, "polynomial curve needs at least one coefficient");
  return ScalarCurve(Impl{Polynomial{std::move(coeffs)}});
}

ScalarCurve ScalarCurve::table(std::vector<double> t, std::vector<double> values) {
  require(t.size() == values.size(), Errc::invalid_argument,
          "table curve: abscissae and values differ in length");
  require(t.size() >= 8, Errc::invalid_argument, "table curve: at least 8 samples required");
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    require(t[i + 1] > t[i], Errc::invalid_argument,
            "table curve: abscissae must be strictly increasing");
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    require(std::isfinite(t[i]) && std::isfinite(values[i]), Errc::invalid_argument,
            "table curve: non-finite sample");
  }
  auto m = not_a_knot_moments(t, values);
  return ScalarCurve(Impl{Spline{std::move(t), std::move(values), std::move(m)}});
}

ScalarCurve ScalarCurve::function(std::string label, double lo, double hi, Fn f, Fn df, Fn d2f) {
  return ScalarCurve(Impl{Function{std::move(label), lo, hi, std::move(f), std::move(df), std::move(d2f)}});
}

double ScalarCurve::operator()(double x) const {
  return std::visit(
      [x](const auto& c) -> double {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, Constant>) {
          return c.value;
        } else if constexpr (std::is_same_v<T, Polynomial>) {
          double v = 0.0;
          for (auto it = c.coeffs.rbegin(); it != c.coeffs.rend(); ++it) v = v * x + *it;
          return v;
        } else if constexpr (std::is_same_v<T, Spline>) {
          const std::size_t i = spline_interval(c.t, x);
          const double h = c.t[i + 1] - c.t[i], A = c.t[i + 1] - x, B = x - c.t[i];
          return c.m[i] * A * A * A / (6 * h) + c.m[i + 1] * B * B * B / (6 * h) +
                 (c.y[i] / h - c.m[i] * h / 6) * A + (c.y[i + 1] / h - c.m[i + 1] * h / 6) * B;
        } else {
          return c.f(x);
        }
      },
      *impl_);
}

double ScalarCurve::derivative(double x) const {
  return std::visit(
      [x](const auto& c) -> double {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, Constant>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, Polynomial>) {
          double v = 0.0;
          for (std::size_t k = c.coeffs.size(); k-- > 1;) v = v * x + static_cast<double>(k) * c.coeffs[k];
          return v;
        } else if constexpr (std::is_same_v<T, Spline>) {
          const std::size_t i = spline_interval(c.t, x);
          const double h = c.t[i + 1] - c.t[i], A = c.t[i + 1] - x, B = x - c.t[i];
          return -c.m[i] * A * A / (2 * h) + c.m[i + 1] * B * B / (2 * h) - (c.y[i] / h - c.m[i] * h / 6) +
                 (c.y[i + 1] / h - c.m[i + 1] * h / 6);
        } else {
          return c.df(x);
        }
      },
      *impl_);
}

double ScalarCurve::second_derivative(double x) const {
  return std::visit(
      [x](const auto& c) -> double {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, Constant>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, Polynomial>) {
          double v = 0.0;
          for (std::size_t k = c.coeffs.size(); k-- > 2;)
            v = v * x + static_cast<double>(k * (k - 1)) * c.coeffs[k];
          return v;
        } else if constexpr (std::is_same_v<T, Spline>) {
          const std::size_t i = spline_interval(c.t, x);
          const double h = c.t[i + 1] - c.t[i];
          return (c.m[i] * (c.t[i + 1] - x) + c.m[i + 1] * (x - c.t[i])) / h;
        } else {
          return c.d2f(x);
        }
      },
      *impl_);
}

ScalarCurve::Kind ScalarCurve::kind() const {
  switch (impl_->index()) {
    case 0: return Kind::constant;
    case 1: return Kind::polynomial;
    case 2: return Kind::table;
    default: return Kind::function;
  }
}

std::optional<double> ScalarCurve::constant_value() const {
  if (const auto* c = std::get_if<Constant>(impl_.get())) return c->value;
  if (const auto* p = std::get_if<Polynomial>(impl_.get())) {
    if (std::all_of(p->coeffs.begin() + 1, p->coeffs.end(), [](double v) { return v == 0.0; }))
      return p->coeffs.front();
  }
  return std::nullopt;
}

bool ScalarCurve::covers(double lo, double hi) const {
  if (const auto* s = std::get_if<Spline>(impl_.get())) {
    const double tol = 1e-12 * std::max(1.0, std::abs(s->t.back() - s->t.front()));
    return s->t.front() <= lo + tol && s->t.back() >= hi - tol;
  }
  if (const auto* f = std::get_if<Function>(impl_.get())) {
    const double tol = 1e-12 * std::max(1.0, std::abs(f->hi - f->lo));
    return f->lo <= lo + tol && f->hi >= hi - tol;
  }
  return true;
}

ScalarCurve ScalarCurve::sampled(double lo, double hi, int samples) const {
  require(samples >= 8, Errc::invalid_argument, "resampling needs at least 8 samples");
  std::vector<double> t(static_cast<std::size_t>(samples)), v(t.size());
  for (int i = 0; i < samples; ++i) {
    t[static_cast<std::size_t>(i)] = i + 1 == samples ? hi : lo + (hi - lo) * i / (samples - 1);
    v[static_cast<std::size_t>(i)] = (*this)(t[static_cast<std::size_t>(i)]);
  }
  return table(std::move(t), std::move(v));
}

nlohmann::json ScalarCurve::to_json(double lo, double hi) const {
  using nlohmann::json;
  if (const auto* c = std::get_if<Constant>(impl_.get())) return json{{"kind", "constant"}, {"value", c->value}};
  if (const auto* p = std::get_if<Polynomial>(impl_.get()))
    return json{{"kind", "polynomial"}, {"coeffs", p->coeffs}};
  if (const auto* s = std::get_if<Spline>(impl_.get()))
    return json{{"kind", "table"}, {"t", s->t}, {"values", s->y}};
  return sampled(lo, hi, 257).to_json(lo, hi);
}

ScalarCurve ScalarCurve::from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("kind"), Errc::invalid_argument, "curve: expected object with 'kind'");
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "constant") return constant(j.at("value").get<double>());
  if (kind == "polynomial") return polynomial(j.at("coeffs").get<std::vector<double>>());
  if (kind == "table")
    return table(j.at("t").get<std::vector<double>>(), j.at("values").get<std::vector<double>>());
  fail(Errc::invalid_argument, "curve: unknown kind '" + kind + "'");
}

}  // namespace isoyamabe

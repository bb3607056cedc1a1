#include "isoyamabe/isoyamabe.h"

#include <cmath>
#include <cstring>
#include <set>
#include <string>

#include "bifurcation.hpp"
#include "error.hpp"
#include "hanli.hpp"
#include "json.hpp"
#include "spectra.hpp"
#include "yamabe_solver.hpp"

using nlohmann::json;
using namespace isoyamabe;

struct iy_profile {
  Profile p;
};

namespace {

thread_local std::string g_last_error;

constexpr const char* kVersion = "0.3.0";

template <class F>
iy_status guard(F&& f) {
  g_last_error.clear();
  try {
    f();
    return IY_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    switch (e.code()) {
      case Errc::invalid_argument: return IY_ERR_INVALID_ARGUMENT;
      case Errc::domain: return IY_ERR_DOMAIN;
      case Errc::convergence: return IY_ERR_CONVERGENCE;
    }
    return IY_ERR_INTERNAL;
  } catch (const json::exception& e) {
    g_last_error = std::string("invalid JSON: ") + e.what();
    return IY_ERR_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return IY_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return IY_ERR_INTERNAL;
  }
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void emit(const json& j, char** out) { *out = dup(j.dump()); }

void need(const void* ptr, const char* what) {
  require(ptr != nullptr, Errc::invalid_argument, std::string(what) + " must not be NULL");
}

// Option object with a fixed key set; unknown keys are rejected.
class Options {
 public:
  Options(const char* text, std::set<std::string> allowed) {
    if (text && *text) j_ = json::parse(text);
    if (j_.is_null()) j_ = json::object();
    require(j_.is_object(), Errc::invalid_argument, "options must be a JSON object");
    for (const auto& [k, v] : j_.items())
      require(allowed.count(k) > 0, Errc::invalid_argument, "unknown option '" + k + "'");
  }
  bool has(const std::string& k) const { return j_.contains(k) && !j_.at(k).is_null(); }
  template <class T>
  T get(const std::string& k, T dflt) const {
    if (!has(k)) return dflt;
    try {
      return j_.at(k).get<T>();
    } catch (const json::exception&) {
      fail(Errc::invalid_argument, "option '" + k + "' has the wrong type");
    }
  }
  const json& raw(const std::string& k) const { return j_.at(k); }

 private:
  json j_;
};

int cells_option(const Options& o, int dflt) {
  const int m = o.get<int>("cells", dflt);
  require(m >= 8, Errc::invalid_argument, "cells must be >= 8");
  return m;
}

SolveOptions solve_options(const Options& o) {
  SolveOptions s;
  s.tol_interior = o.get<double>("tol_interior", s.tol_interior);
  s.tol_boundary = o.get<double>("tol_boundary", s.tol_boundary);
  s.max_iter = o.get<int>("max_iter", s.max_iter);
  // without a seed the flow starts from the constant function
  if (o.has("seed")) s.seed = o.get<std::uint64_t>("seed", 0);
  require(s.tol_interior > 0 && s.tol_boundary > 0, Errc::invalid_argument, "tolerances must be positive");
  return s;
}

json residual_json(const Residuals& r) {
  return {{"interior", r.interior}, {"boundary", r.boundary}, {"boundary_max", r.boundary_max}};
}

json log_json(const std::vector<IterationRecord>& log) {
  json a = json::array();
  for (const auto& e : log)
    a.push_back({e.iteration, e.value, e.residual_interior, e.residual_boundary, e.step});
  return a;
}

json grid_json(const AssembledForms& f, const std::vector<double>& x) { return {{"t", f.positions()}, {"u", x}}; }

json threshold_json(const Admissibility& a) {
  return {{"admissible", a.admissible},
          {"unrestricted", a.threshold.unrestricted},
          {"threshold", a.threshold.unrestricted ? json(nullptr) : json(a.threshold.value)},
          {"reason", a.reason}};
}

}  // namespace

extern "C" {

const char* iy_version(void) { return kVersion; }

const char* iy_last_error(void) { return g_last_error.c_str(); }

const char* iy_status_name(iy_status s) {
  switch (s) {
    case IY_OK: return "ok";
    case IY_ERR_INVALID_ARGUMENT: return "invalid argument";
    case IY_ERR_DOMAIN: return "domain error";
    case IY_ERR_CONVERGENCE: return "convergence failure";
    case IY_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void iy_string_free(char* s) { std::free(s); }

iy_status iy_profile_from_name(const char* spec, iy_profile** out) {
  return guard([&] {
    need(spec, "spec");
    need(out, "out");
    *out = new iy_profile{profile_from_name(spec)};
  });
}

iy_status iy_profile_from_json(const char* text, iy_profile** out) {
  return guard([&] {
    need(text, "json");
    need(out, "out");
    *out = new iy_profile{profile_from_json(json::parse(text))};
  });
}

iy_status iy_profile_product(const iy_profile* base, int n_factor, double s_h, double t, double factor_volume,
                             iy_profile** out) {
  return guard([&] {
    need(base, "base");
    need(out, "out");
    *out = new iy_profile{make_product(base->p, n_factor, s_h, t, factor_volume)};
  });
}

void iy_profile_destroy(iy_profile* p) { delete p; }

iy_status iy_profile_to_json(const iy_profile* p, char** out) {
  return guard([&] {
    need(p, "profile");
    need(out, "out");
    emit(profile_to_json(p->p), out);
  });
}

iy_status iy_profile_hash(const iy_profile* p, char** out) {
  return guard([&] {
    need(p, "profile");
    need(out, "out");
    *out = dup(profile_hash(p->p));
  });
}

iy_status iy_validate(const iy_profile* p, char** out) {
  return guard([&] {
    need(p, "profile");
    need(out, "out");
    const auto r = validate_profile(p->p);
    emit({{"name", p->p.name}, {"usable", r.usable()}, {"violations", r.violations}, {"notes", r.notes}}, out);
  });
}

iy_status iy_mean_curvature(const iy_profile* p, double t, double* out) {
  return guard([&] {
    need(p, "profile");
    need(out, "out");
    *out = mean_curvature_of_level(p->p, t);
  });
}

iy_status iy_geodesic_distance(const iy_profile* p, double t1, double t2, double* out) {
  return guard([&] {
    need(p, "profile");
    need(out, "out");
    *out = geodesic_distance(p->p, t1, t2);
  });
}

iy_status iy_spectrum(const iy_profile* p, const char* options, char** out) {
  return guard([&] {
    need(p, "profile");
    need(out, "out");
    const Options o(options, {"cells", "count"});
    const int cells = cells_option(o, 1000), count = o.get<int>("count", 4);
    require_usable(p->p);
    const auto r = neumann_spectrum(p->p, build_grid(p->p, cells), count);
    emit({{"cells", cells},
          {"eigenvalues", r.eigenvalues},
          {"extrapolated", r.extrapolated},
          {"error_estimate", r.error_estimate}},
         out);
  });
}

iy_status iy_probe(const iy_profile* p, const char* options, char** out) {
  return guard([&] {
    need(p, "profile");
    need(out, "out");
    const Options o(options, {"cells"});
    const int cells = cells_option(o, 512);
    require_usable(p->p);
    const auto r = conformal_eigen_probe(p->p, build_grid(p->p, cells));
    emit({{"cells", cells},
          {"lambda_dirichlet", r.lambda_dirichlet},
          {"lambda_steklov", r.lambda_steklov},
          {"lambda_robin", r.lambda_robin},
          {"steklov_degenerate", r.steklov_degenerate},
          {"finiteness_certified", r.finiteness_certified},
          {"possibly_unbounded", r.possibly_unbounded},
          {"sign", r.sign},
          {"scope", r.scope}},
         out);
  });
}

iy_status iy_yamabe(const iy_profile* p, const char* options, char** out) {
  return guard([&] {
    need(p, "profile");
    need(out, "out");
    const Options o(options, {"cells", "s", "mode", "seed", "tol_interior", "tol_boundary", "max_iter", "shoot",
                              "corollary", "restarts"});
    const auto& prof = p->p;
    require_usable(prof);
    const int cells = cells_option(o, 512);
    const auto grid = build_grid(prof, cells);
    const auto opt = solve_options(o);
    if (o.get<bool>("corollary", false)) {
      const auto c = constant_curvature_metrics(prof, grid, opt);
      emit({{"cells", cells},
            {"interior_value", c.interior.value},
            {"boundary_value", c.boundary.value},
            {"h1_scalar", c.h1_scalar},
            {"h1_scalar_dev", c.h1_scalar_dev},
            {"h1_boundary_max", c.h1_boundary_max},
            {"h2_scalar_max", c.h2_scalar_max},
            {"h2_mean_curvature", c.h2_mean_curvature},
            {"h2_boundary_dev", c.h2_boundary_dev},
            {"h2_volume", c.h2_volume},
            {"ok", c.ok}},
           out);
      return;
    }
    require_yamabe_dimension(prof.dim);
    const Mode mode = mode_from_string(o.get<std::string>("mode", "interior"));
    const double s = o.get<double>("s", mode == Mode::interior ? critical_p(prof.dim) : critical_p_boundary(prof.dim));
    const auto f = assemble(prof, grid);
    const auto r = minimize_quotient(prof, f, s, mode, opt);
    json j{{"cells", cells},
           {"mode", to_string(mode)},
           {"s", s},
           {"seed", opt.seed ? json(*opt.seed) : json(nullptr)},
           {"admissibility", threshold_json(check_subcritical(prof, s, mode))},
           {"value", r.value},
           {"lagrange_c", r.lagrange_c},
           {"constant_quotient", r.constant_quotient},
           {"residual", residual_json(r.residual)},
           {"iterations", r.iterations},
           {"converged", r.converged},
           {"minimizer", grid_json(f, r.x)},
           {"log_columns", {"iteration", "value", "residual_interior", "residual_boundary", "step"}},
           {"log", log_json(r.log)}};
    if (o.get<bool>("shoot", false)) {
      const auto& gf = r.minimizer;
      const double start = prof.is_focal(Side::left) ? gf.left : gf.right;
      const auto sh = shooting_solve(prof, s, r.lagrange_c, mode, start);
      const auto sampled = sh.sample(f);
      double diff = 0.0;
      for (std::size_t i = 0; i < sampled.size(); ++i) diff = std::max(diff, std::abs(sampled[i] - r.x[i]));
      j["shooting"] = {{"start_value", sh.start_value},
                       {"mismatch", sh.mismatch},
                       {"newton_iterations", sh.newton_iterations},
                       {"sup_diff", diff}};
    }
    const int restarts = o.get<int>("restarts", 0);
    if (restarts > 0) {
      // unit-volume comparison of seeded restarts against the first solve
      const double P = critical_p(prof.dim);
      auto unit = [&](std::vector<double> x) {
        const double k = std::pow(f.volume_power(x, P), -1.0 / P);
        for (auto& v : x) v *= k;
        return x;
      };
      const auto ref = unit(r.x);
      double worst = 0.0;
      json values = json::array();
      for (int k = 1; k <= restarts; ++k) {
        SolveOptions ok = opt;
        ok.seed = opt.seed.value_or(0) + static_cast<std::uint64_t>(k);
        ok.keep_log = false;
        const auto rk = minimize_quotient(prof, f, s, mode, ok);
        const auto xk = unit(rk.x);
        for (std::size_t i = 0; i < xk.size(); ++i) worst = std::max(worst, std::abs(xk[i] - ref[i]));
        values.push_back(rk.value);
      }
      j["restarts"] = {{"count", restarts}, {"values", values}, {"max_unit_volume_diff", worst}};
    }
    emit(j, out);
  });
}

iy_status iy_hanli(const iy_profile* p, const char* options, char** out) {
  return guard([&] {
    need(p, "profile");
    need(out, "out");
    const Options o(options, {"cells", "a", "b", "p", "q", "seed", "tol_interior", "tol_boundary", "max_iter", "path"});
    const auto& prof = p->p;
    require_usable(prof);
    const int cells = cells_option(o, 256);
    const auto f = assemble(prof, build_grid(prof, cells));
    const auto opt = solve_options(o);
    if (o.has("path")) {
      const auto path = o.raw("path").get<std::vector<std::pair<double, double>>>();
      require(!path.empty(), Errc::invalid_argument, "path must not be empty");
      json rows = json::array();
      for (const auto& s : c_curve(prof, f, path, opt))
        rows.push_back({{"a", s.a},
                        {"b", s.b},
                        {"value", s.value},
                        {"A", s.A},
                        {"c", s.c},
                        {"lower", s.lower},
                        {"upper", std::isnan(s.upper) ? json(nullptr) : json(s.upper)},
                        {"lower_ok", s.lower_ok},
                        {"upper_ok", s.upper_ok},
                        {"sandwich_ok", s.sandwich_ok},
                        {"residual", residual_json(s.residual)}});
      emit({{"cells", cells}, {"curve", rows}}, out);
      return;
    }
    const ConstraintSpec spec{o.get<double>("a", 1.0), o.get<double>("b", 0.0), o.get<double>("p", 0.0),
                              o.get<double>("q", 0.0)};
    const auto r = minimize_constrained(prof, f, spec, opt);
    emit({{"cells", cells},
          {"a", r.spec.a},
          {"b", r.spec.b},
          {"p", r.spec.p},
          {"q", r.spec.q},
          {"value", r.value},
          {"c1", r.c1},
          {"c2", r.c2},
          {"A", r.A},
          {"c_ab", r.c_ab},
          {"max_infeasibility", r.max_infeasibility},
          {"residual", residual_json(r.residual)},
          {"iterations", r.iterations},
          {"minimizer", grid_json(f, r.x)},
          {"log_columns", {"iteration", "value", "residual_interior", "residual_boundary", "step"}},
          {"log", log_json(r.log)}},
         out);
  });
}

iy_status iy_hanli_target(const iy_profile* p, const char* options, char** out) {
  return guard([&] {
    need(p, "profile");
    need(out, "out");
    const Options o(options, {"cells", "c", "tol", "seed", "tol_interior", "tol_boundary", "max_iter"});
    require(o.has("c"), Errc::invalid_argument, "target mean curvature 'c' is required");
    const auto& prof = p->p;
    require_usable(prof);
    const int cells = cells_option(o, 256);
    const auto f = assemble(prof, build_grid(prof, cells));
    auto opt = solve_options(o);
    opt.keep_log = false;
    const auto r = find_prescribed_mean_curvature(prof, f, o.get<double>("c", 0.0), o.get<double>("tol", 1e-9), opt);
    emit({{"cells", cells},
          {"target", o.get<double>("c", 0.0)},
          {"a", r.a},
          {"b", r.b},
          {"c", r.c},
          {"branch", r.branch},
          {"evaluations", r.evaluations},
          {"certificate", residual_json(r.certificate)},
          {"solution", grid_json(f, r.v)}},
         out);
  });
}

iy_status iy_bifurcate(const iy_profile* base, const char* options, char** out) {
  return guard([&] {
    need(base, "base");
    need(out, "out");
    const Options o(options, {"factor_dim", "factor_scalar", "factor_volume", "s", "modes", "r_max", "steps", "cells"});
    const auto& m = base->p;
    require_usable(m);
    const int nf = o.get<int>("factor_dim", 2);
    const double s_h = o.get<double>("factor_scalar", 1.0), vol = o.get<double>("factor_volume", 1.0);
    const int N = m.dim + nf;
    require(N >= 3, Errc::invalid_argument, "product dimension must be >= 3");
    const double pN = critical_p(N);
    const double s = o.get<double>("s", pN);
    const int modes = o.get<int>("modes", 1);
    const double r_max = o.get<double>("r_max", 0.05);
    const int steps = o.get<int>("steps", 20);
    const int cells = cells_option(o, 512);
    require(modes >= 1, Errc::invalid_argument, "modes must be >= 1");
    const auto sg = m.s_g.constant_value();
    require(sg.has_value(), Errc::domain, "base profile must have constant scalar curvature");

    const auto grid = build_grid(m, cells);
    const auto pts = bifurcation_points(m, grid, s, modes);
    std::vector<double> mus;
    for (const auto& b : pts) mus.push_back(b.mu);
    const auto times = product_bifurcation_times(m.dim, *sg, s_h, nf, mus);

    json jp = json::array(), jt = json::array(), jb = json::array();
    for (const auto& b : pts) jp.push_back({{"i", b.i}, {"mu", b.mu}, {"lambda", b.lambda}});
    for (const auto& t : times.times)
      jt.push_back({{"i", t.i}, {"mu", t.mu}, {"t", t.t}, {"lambda", t.lambda}, {"consistency", t.consistency}});
    json notices = times.notices;
    const bool critical = std::abs(s - pN) <= 1e-14 * pN;
    if (!critical) notices.push_back("s differs from p_N: branches are computed but not converted to metrics");
    for (const auto& t : times.times) {
      const auto prod = make_product(m, nf, s_h, t.t, vol);
      const auto f = assemble(prod, build_grid(prod, cells));
      const auto br = continue_branch(f, s, t.i, r_max, steps);
      json samples = json::array();
      // root of the branch on the trivial axis
      samples.push_back({{"r", 0.0},
                         {"lambda", br.lambda_i},
                         {"gamma", critical ? json(s_h / (conformal_a(N) * br.lambda_i - *sg)) : json(nullptr)},
                         {"distance_to_trivial", 0.0},
                         {"residual", 0.0},
                         {"certificate", nullptr}});
      for (const auto& smp : br.samples) {
        json row{{"r", smp.r},
                 {"lambda", smp.lambda},
                 {"gamma", nullptr},
                 {"distance_to_trivial", smp.distance_to_trivial},
                 {"residual", smp.residual},
                 {"certificate", nullptr}};
        if (critical) {
          try {
            const auto c = branch_to_metric(prod, smp, t.t);
            row["gamma"] = c.gamma;
            row["certificate"] = {{"ok", c.ok},
                                  {"trivial", c.trivial},
                                  {"note", c.note},
                                  {"scalar", c.scalar},
                                  {"scalar_dev", c.scalar_dev},
                                  {"boundary_max", c.boundary_max},
                                  {"lambda_check", c.lambda_check},
                                  {"gamma_offset", c.gamma_offset}};
          } catch (const Error& e) {
            row["certificate"] = {{"ok", false}, {"error", e.what()}};
          }
        }
        samples.push_back(row);
      }
      jb.push_back({{"i", t.i},
                    {"mu", br.mu},
                    {"lambda_i", br.lambda_i},
                    {"t_i", t.t},
                    {"v_max", br.v_max},
                    {"truncated", br.truncated},
                    {"diagnostic", br.diagnostic},
                    {"samples", samples}});
    }
    emit({{"base", m.name},
          {"factor_dim", nf},
          {"factor_scalar", s_h},
          {"product_dim", N},
          {"s", s},
          {"cells", cells},
          {"points", jp},
          {"times", jt},
          {"notices", notices},
          {"branches", jb}},
         out);
  });
}

}  // extern "C"

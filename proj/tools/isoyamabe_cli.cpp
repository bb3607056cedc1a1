// Command-line front end over the C API.
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "isoyamabe/isoyamabe.h"
#include "json.hpp"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0, kExitDomain = 1, kExitUsage = 2;

struct Failure {
  int code;
  std::string message;
};

struct UsageError {
  std::string message;
};

struct ProfileDeleter {
  void operator()(iy_profile* p) const { iy_profile_destroy(p); }
};
using ProfilePtr = std::unique_ptr<iy_profile, ProfileDeleter>;

void check(iy_status s, const std::string& what) {
  if (s != IY_OK) throw Failure{kExitDomain, what + ": " + iy_status_name(s) + ": " + iy_last_error()};
}

json take_json(char* s) {
  json j = json::parse(s);
  iy_string_free(s);
  return j;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(const json& v) {
  if (v.is_null()) return "nan";
  if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return fmt(v.get<double>());
  return v.get<std::string>();
}

// CSV with '#' header comments: one line per column giving its name and unit.
class Csv {
 public:
  Csv(std::string title, std::vector<std::pair<std::string, std::string>> cols)
      : title_(std::move(title)), cols_(std::move(cols)) {}
  void row(const std::vector<std::string>& cells) { rows_.push_back(cells); }
  std::string str() const {
    std::ostringstream os;
    os << "# isoyamabe " << iy_version() << " " << title_ << "\n";
    for (const auto& [name, doc] : cols_) os << "# " << name << ": " << doc << "\n";
    for (std::size_t i = 0; i < cols_.size(); ++i) os << (i ? "," : "") << cols_[i].first;
    os << "\n";
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << "\n";
    }
    return os.str();
  }

 private:
  std::string title_;
  std::vector<std::pair<std::string, std::string>> cols_;
  std::vector<std::vector<std::string>> rows_;
};

struct Common {
  std::string profile, profile_file, csv, record;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void add_common(CLI::App* sub, Common& c, bool needs_profile = true) {
  if (needs_profile) {
    sub->add_option("--profile", c.profile, "factory spec, e.g. hemisphere:3 or product:2:2:1:hemisphere:2");
    sub->add_option("--profile-file", c.profile_file, "profile JSON file");
  }
  sub->add_option("--csv", c.csv, "write CSV here instead of stdout");
  sub->add_option("--record", c.record, "RunRecord JSON path (default: <csv>.run.json, or stderr)");
  sub->add_option("--seed", c.seed, "random seed for restarts")->default_val(0);
}

ProfilePtr load_profile(const Common& c) {
  if (c.profile.empty() == c.profile_file.empty()) throw UsageError{"exactly one of --profile and --profile-file is required"};
  iy_profile* p = nullptr;
  if (!c.profile.empty()) {
    check(iy_profile_from_name(c.profile.c_str(), &p), "profile '" + c.profile + "'");
  } else {
    std::ifstream in(c.profile_file);
    if (!in) throw Failure{kExitDomain, "cannot read profile file '" + c.profile_file + "'"};
    std::stringstream ss;
    ss << in.rdbuf();
    check(iy_profile_from_json(ss.str().c_str(), &p), "profile file '" + c.profile_file + "'");
  }
  return ProfilePtr(p);
}

json profile_json(const iy_profile* p) {
  char* s = nullptr;
  check(iy_profile_to_json(p, &s), "profile");
  return take_json(s);
}

std::string profile_hash(const iy_profile* p) {
  char* s = nullptr;
  check(iy_profile_hash(p, &s), "profile");
  std::string h = s;
  iy_string_free(s);
  return h;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

struct Run {
  std::string command;
  std::vector<std::string> argv;
  Common common;
  json options = json::object();
  json report;
  std::string profile_name, hash;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  std::string started = utc_now();

  void finish(const Csv& csv) const {
    const std::string text = csv.str();
    if (common.csv.empty()) {
      std::cout << text;
      std::cout.flush();
    } else {
      std::ofstream out(common.csv);
      if (!out) throw Failure{kExitDomain, "cannot write '" + common.csv + "'"};
      out << text;
    }
    json rec{{"tool", "isoyamabe"},
             {"version", iy_version()},
             {"command", command},
             {"argv", argv},
             {"options", options},
             {"seed", common.seed},
             {"profile", profile_name},
             {"profile_hash", hash},
             {"started_at", started},
             {"wall_clock_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()},
             {"outputs", {{"csv", common.csv.empty() ? "stdout" : common.csv}, {"report", report}}}};
    std::string path = common.record;
    if (path.empty() && !common.csv.empty()) path = common.csv + ".run.json";
    if (path.empty()) {
      std::cerr << rec.dump() << "\n";
    } else {
      std::ofstream out(path);
      if (!out) throw Failure{kExitDomain, "cannot write '" + path + "'"};
      out << rec.dump(2) << "\n";
    }
  }
};

using ApiCall = iy_status (*)(const iy_profile*, const char*, char**);

json call(ApiCall f, const iy_profile* p, const json& options, const std::string& what) {
  char* out = nullptr;
  check(f(p, options.dump().c_str(), &out), what);
  return take_json(out);
}

Csv grid_csv(const std::string& title, const json& g, const std::string& ucol) {
  Csv csv(title, {{"t", "level parameter of the isoparametric function"}, {ucol, "value at the finite-volume unknown"}});
  const auto& t = g.at("t");
  const auto& u = g.at("u");
  for (std::size_t i = 0; i < t.size(); ++i) csv.row({fmt(t[i]), fmt(u[i])});
  return csv;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

unsigned worker_count(std::size_t jobs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("ISOYAMABE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw UsageError{"ISOYAMABE_THREADS must be a positive integer"};
    n = std::min<unsigned>(n, static_cast<unsigned>(v));
  }
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radial Yamabe-type problems on isoparametric manifolds"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(iy_version()));
  Run run;
  for (int i = 0; i < argc; ++i) run.argv.emplace_back(argv[i]);
  Common& c = run.common;

  auto* validate = app.add_subcommand("validate", "check profile invariants");
  add_common(validate, c);

  auto* curvature = app.add_subcommand("curvature", "mean curvature of level hypersurfaces");
  add_common(curvature, c);
  std::vector<double> ts;
  int samples = 0;
  curvature->add_option("--t", ts, "level parameters");
  curvature->add_option("--samples", samples, "uniform interior samples")->check(CLI::PositiveNumber);

  auto* distance = app.add_subcommand("distance", "geodesic distance between levels");
  add_common(distance, c);
  double t1 = 0.0, t2 = 0.0;
  distance->add_option("--t1", t1)->required();
  distance->add_option("--t2", t2)->required();

  int cells = 0, count = 4;
  auto* spectrum = app.add_subcommand("spectrum", "radial Neumann eigenvalues");
  add_common(spectrum, c);
  spectrum->add_option("--cells", cells)->default_val(1000);
  spectrum->add_option("--count", count)->default_val(4);

  auto* probe = app.add_subcommand("probe", "sign of the conformal eigenvalue problems");
  add_common(probe, c);
  probe->add_option("--cells", cells)->default_val(512);

  double s = 0.0, tol_i = 1e-6, tol_b = 1e-8;
  std::string mode = "interior";
  int max_iter = 100000, restarts = 0;
  bool shoot = false, corollary = false;
  auto* yamabe = app.add_subcommand("yamabe", "minimize the radial quotient");
  add_common(yamabe, c);
  yamabe->add_option("--s", s, "exponent (default: critical for the mode)");
  yamabe->add_option("--mode", mode)->check(CLI::IsMember({"interior", "boundary"}))->default_val("interior");
  yamabe->add_option("--cells", cells)->default_val(512);
  yamabe->add_option("--tol-interior", tol_i)->default_val(1e-6);
  yamabe->add_option("--tol-boundary", tol_b)->default_val(1e-8);
  yamabe->add_option("--max-iter", max_iter)->default_val(100000);
  yamabe->add_option("--restarts", restarts, "extra seeded restarts compared after unit volume")->default_val(0);
  yamabe->add_flag("--shoot", shoot, "cross-check with the shooting solver");
  yamabe->add_flag("--corollary", corollary, "constant scalar curvature and scalar-flat metrics");

  double a = 1.0, b = 0.0, p = 0.0, q = 0.0, target = 0.0, tol = 1e-9;
  std::string path;
  auto* hanli = app.add_subcommand("hanli", "constrained minimization with boundary weight");
  add_common(hanli, c);
  hanli->add_option("--a", a)->default_val(1.0);
  hanli->add_option("--b", b)->default_val(0.0);
  hanli->add_option("--p", p, "interior exponent (default critical)");
  hanli->add_option("--q", q, "boundary exponent (default critical)");
  auto* path_opt = hanli->add_option("--path", path, "comma-separated a:b samples for the c_{a,b} curve");
  auto* target_opt = hanli->add_option("--target", target, "find (a,b) with this boundary mean curvature");
  path_opt->excludes(target_opt);
  hanli->add_option("--tol", tol)->default_val(1e-9);
  hanli->add_option("--cells", cells)->default_val(256);

  int factor_dim = 2, modes = 1, steps = 20;
  double factor_scalar = 1.0, factor_volume = 1.0, r_max = 0.05;
  auto* bifurcate = app.add_subcommand("bifurcate", "bifurcation from product metrics");
  add_common(bifurcate, c);
  bifurcate->add_option("--factor-dim", factor_dim)->default_val(2);
  bifurcate->add_option("--factor-scalar", factor_scalar)->required();
  bifurcate->add_option("--factor-volume", factor_volume)->default_val(1.0);
  bifurcate->add_option("--s", s, "exponent (default p_{m+n})");
  bifurcate->add_option("--modes", modes)->default_val(1);
  bifurcate->add_option("--r-max", r_max)->default_val(0.05);
  bifurcate->add_option("--steps", steps)->default_val(20);
  bifurcate->add_option("--cells", cells)->default_val(512);

  std::string s_list = "", seed_list = "0";
  auto* sweep = app.add_subcommand("sweep", "parallel grid of seeded quotient minimizations");
  add_common(sweep, c);
  sweep->add_option("--s-values", s_list, "comma-separated exponents")->required();
  sweep->add_option("--seeds", seed_list, "comma-separated seeds")->default_val("0");
  sweep->add_option("--mode", mode)->check(CLI::IsMember({"interior", "boundary"}))->default_val("interior");
  sweep->add_option("--cells", cells)->default_val(256);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    run.command = sub->get_name();
    c.seed_given = sub->count("--seed") > 0;
    const auto prof = load_profile(c);
    run.profile_name = profile_json(prof.get()).at("name").get<std::string>();
    run.hash = profile_hash(prof.get());

    if (sub == validate) {
      char* out = nullptr;
      check(iy_validate(prof.get(), &out), "validate");
      run.report = take_json(out);
      Csv csv("validate", {{"kind", "violation or note"}, {"message", "invariant description"}});
      for (const auto& v : run.report.at("violations")) csv.row({"violation", "\"" + v.get<std::string>() + "\""});
      for (const auto& v : run.report.at("notes")) csv.row({"note", "\"" + v.get<std::string>() + "\""});
      run.finish(csv);
      if (!run.report.at("usable").get<bool>()) {
        std::cerr << "profile is not usable:";
        for (const auto& v : run.report.at("violations")) std::cerr << "\n  " << v.get<std::string>();
        std::cerr << "\n";
        return kExitDomain;
      }
      return kExitOk;
    }
    if (sub == curvature) {
      if (ts.empty() == (samples == 0)) throw UsageError{"exactly one of --t and --samples is required"};
      if (samples > 0) {
        const auto iv = profile_json(prof.get()).at("interval").get<std::vector<double>>();
        for (int i = 1; i <= samples; ++i) ts.push_back(iv[0] + (iv[1] - iv[0]) * i / (samples + 1.0));
      }
      Csv csv("curvature", {{"t", "level parameter"}, {"H", "mean curvature of the level w.r.t. grad f/|grad f| (1/length)"}});
      json vals = json::array();
      for (double t : ts) {
        double h = 0.0;
        check(iy_mean_curvature(prof.get(), t, &h), "curvature at t=" + fmt(t));
        csv.row({fmt(t), fmt(h)});
        vals.push_back({t, h});
      }
      run.options = {{"t", ts}};
      run.report = {{"values", vals}};
      run.finish(csv);
      return kExitOk;
    }
    if (sub == distance) {
      double d = 0.0;
      check(iy_geodesic_distance(prof.get(), t1, t2, &d), "distance");
      Csv csv("distance", {{"t1", "level parameter"}, {"t2", "level parameter"}, {"distance", "geodesic distance between the levels (length)"}});
      csv.row({fmt(t1), fmt(t2), fmt(d)});
      run.options = {{"t1", t1}, {"t2", t2}};
      run.report = {{"distance", d}};
      run.finish(csv);
      return kExitOk;
    }
    if (sub == spectrum) {
      run.options = {{"cells", cells}, {"count", count}};
      run.report = call(iy_spectrum, prof.get(), run.options, "spectrum");
      Csv csv("spectrum", {{"k", "eigenvalue index, 0 is the constant mode"},
                           {"mu", "eigenvalue on the grid (1/length^2)"},
                           {"mu_extrapolated", "Richardson value from the grid and its half grid (1/length^2)"},
                           {"error_estimate", "|mu - mu_half|/3, nan when the half grid is too coarse"}});
      const auto& r = run.report;
      for (std::size_t k = 0; k < r.at("eigenvalues").size(); ++k)
        csv.row({std::to_string(k), fmt(r["eigenvalues"][k]), fmt(r["extrapolated"][k]), fmt(r["error_estimate"][k])});
      run.finish(csv);
      return kExitOk;
    }
    if (sub == probe) {
      run.options = {{"cells", cells}};
      run.report = call(iy_probe, prof.get(), run.options, "probe");
      Csv csv("probe", {{"quantity", "probe output"}, {"value", "eigenvalue or flag"}});
      for (const char* k : {"lambda_dirichlet", "lambda_steklov", "lambda_robin", "steklov_degenerate",
                            "finiteness_certified", "possibly_unbounded", "sign", "scope"})
        csv.row({k, fmt(run.report.at(k))});
      run.finish(csv);
      return kExitOk;
    }
    if (sub == yamabe) {
      run.options = {{"cells", cells}, {"mode", mode}, {"tol_interior", tol_i}, {"tol_boundary", tol_b},
                     {"max_iter", max_iter}, {"shoot", shoot}, {"corollary", corollary}, {"restarts", restarts}};
      if (yamabe->count("--s")) run.options["s"] = s;
      if (c.seed_given || restarts > 0) run.options["seed"] = c.seed;
      run.report = call(iy_yamabe, prof.get(), run.options, "yamabe");
      if (corollary) {
        Csv csv("yamabe corollary", {{"quantity", "metric diagnostic"}, {"value", "dimensionless unless noted"}});
        for (auto it = run.report.begin(); it != run.report.end(); ++it) csv.row({it.key(), fmt(it.value())});
        run.finish(csv);
        return run.report.at("ok").get<bool>() ? kExitOk : kExitDomain;
      }
      run.finish(grid_csv("yamabe minimizer, unit L^s norm", run.report.at("minimizer"), "u"));
      return kExitOk;
    }
    if (sub == hanli) {
      run.options = {{"cells", cells}};
      if (c.seed_given) run.options["seed"] = c.seed;
      if (hanli->count("--target")) {
        run.options["c"] = target;
        run.options["tol"] = tol;
        run.report = call(iy_hanli_target, prof.get(), run.options, "hanli target");
        run.finish(grid_csv("prescribed boundary mean curvature solution v", run.report.at("solution"), "v"));
        return kExitOk;
      }
      if (!path.empty()) {
        json pts = json::array();
        for (const auto& item : split_list(path)) {
          const auto colon = item.find(':');
          if (colon == std::string::npos) throw UsageError{"--path items must look like a:b"};
          try {
            pts.push_back({std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
          } catch (const std::exception&) {
            throw UsageError{"--path item '" + item + "' is not numeric"};
          }
        }
        run.options["path"] = pts;
        run.report = call(iy_hanli, prof.get(), run.options, "hanli curve");
        Csv csv("hanli c_{a,b} curve",
                {{"a", "interior weight"}, {"b", "boundary weight"}, {"value", "constrained minimum Y^{a,b}"},
                 {"c", "boundary constant after normalizing the interior one to 1"},
                 {"lower", "lower bound on c"}, {"upper", "upper bound on c, nan for b <= 0"},
                 {"bounds_ok", "1 if c lies within the bounds"}, {"sandwich_ok", "1 if A lies in its admissible range"}});
        for (const auto& r : run.report.at("curve"))
          csv.row({fmt(r["a"]), fmt(r["b"]), fmt(r["value"]), fmt(r["c"]), fmt(r["lower"]), fmt(r["upper"]),
                   (r["lower_ok"].get<bool>() && r["upper_ok"].get<bool>()) ? "1" : "0", fmt(r["sandwich_ok"])});
        run.finish(csv);
        return kExitOk;
      }
      run.options["a"] = a;
      run.options["b"] = b;
      if (hanli->count("--p")) run.options["p"] = p;
      if (hanli->count("--q")) run.options["q"] = q;
      run.report = call(iy_hanli, prof.get(), run.options, "hanli");
      run.finish(grid_csv("constrained minimizer", run.report.at("minimizer"), "u"));
      return kExitOk;
    }
    if (sub == bifurcate) {
      run.options = {{"factor_dim", factor_dim}, {"factor_scalar", factor_scalar}, {"factor_volume", factor_volume},
                     {"modes", modes}, {"r_max", r_max}, {"steps", steps}, {"cells", cells}};
      if (bifurcate->count("--s")) run.options["s"] = s;
      run.report = call(iy_bifurcate, prof.get(), run.options, "bifurcate");
      Csv csv("bifurcate", {{"i", "branch index (Neumann eigenvalue mu_i)"},
                            {"t_i", "bifurcation time of the product metric g + t h"},
                            {"r", "branch parameter, coefficient of v_i in u - 1"},
                            {"lambda", "branch value of lambda"},
                            {"gamma", "product scale with lambda(gamma) = lambda, nan off the critical exponent"},
                            {"distance_to_trivial", "max |u - 1| over cells"},
                            {"residual", "weighted RMS of the discrete equation"},
                            {"certified", "1 if the conformal metric passed its checks, nan when not attempted"}});
      for (const auto& br : run.report.at("branches"))
        for (const auto& smp : br.at("samples")) {
          const auto& cert = smp.at("certificate");
          csv.row({fmt(br["i"]), fmt(br["t_i"]), fmt(smp["r"]), fmt(smp["lambda"]), fmt(smp["gamma"]),
                   fmt(smp["distance_to_trivial"]), fmt(smp["residual"]), cert.is_null() ? "nan" : fmt(cert["ok"])});
        }
      for (const auto& n : run.report.at("notices")) std::cerr << "notice: " << n.get<std::string>() << "\n";
      run.finish(csv);
      return kExitOk;
    }
    if (sub == sweep) {
      std::vector<double> svals;
      std::vector<std::uint64_t> seeds;
      try {
        for (const auto& v : split_list(s_list)) svals.push_back(std::stod(v));
        for (const auto& v : split_list(seed_list)) seeds.push_back(std::stoull(v));
      } catch (const std::exception&) {
        throw UsageError{"--s-values and --seeds must be comma-separated numbers"};
      }
      if (svals.empty() || seeds.empty()) throw UsageError{"sweep needs at least one exponent and one seed"};
      struct Job {
        double s;
        std::uint64_t seed;
        json result;
        std::string error;
      };
      std::vector<Job> jobs;
      for (double sv : svals)
        for (auto sd : seeds) jobs.push_back({sv, sd, nullptr, ""});
      const unsigned nthreads = worker_count(jobs.size());
      std::atomic<std::size_t> next{0};
      auto worker = [&] {
        for (std::size_t k = next++; k < jobs.size(); k = next++) {
          auto& j = jobs[k];
          const json opt{{"cells", cells}, {"mode", mode}, {"s", j.s}, {"seed", j.seed}};
          char* out = nullptr;
          if (iy_yamabe(prof.get(), opt.dump().c_str(), &out) == IY_OK) {
            j.result = take_json(out);
            j.result.erase("log");
            j.result.erase("minimizer");
          } else {
            j.error = iy_last_error();
          }
        }
      };
      std::vector<std::thread> pool;
      for (unsigned i = 0; i < nthreads; ++i) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
      run.options = {{"cells", cells}, {"mode", mode}, {"s_values", svals}, {"seeds", seeds}, {"threads", nthreads}};
      Csv csv("sweep", {{"s", "exponent"}, {"seed", "random start seed"}, {"value", "minimal quotient"},
                        {"lagrange_c", "Euler-Lagrange constant"}, {"residual_interior", "relative interior residual"},
                        {"residual_boundary", "relative boundary residual"}, {"iterations", "flow iterations"},
                        {"status", "ok or error (message in the RunRecord)"}});
      json rows = json::array();
      for (const auto& j : jobs) {
        if (j.error.empty()) {
          const auto& r = j.result;
          csv.row({fmt(j.s), std::to_string(j.seed), fmt(r["value"]), fmt(r["lagrange_c"]),
                   fmt(r["residual"]["interior"]), fmt(r["residual"]["boundary_max"]), fmt(r["iterations"]), "ok"});
          rows.push_back(r);
        } else {
          csv.row({fmt(j.s), std::to_string(j.seed), "nan", "nan", "nan", "nan", "nan", "error"});
          rows.push_back({{"s", j.s}, {"seed", j.seed}, {"error", j.error}});
        }
      }
      run.report = {{"jobs", rows}};
      run.finish(csv);
      return kExitOk;
    }
    throw UsageError{"unknown subcommand"};
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.message << "\n";
    return kExitUsage;
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  }
}

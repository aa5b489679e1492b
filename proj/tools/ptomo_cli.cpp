// Batch front-end for the ptomo library: field generation, forward transport,
// ray/S transforms, kernel checks, moments, gauge decomposition, sphere forms,
// and one-step linearized inversion.
//
// Conventions shared by every subcommand:
//   - options may come from --config <file.json>; command-line flags win
//   - every run is deterministic for a fixed config; sampling needs --seed
//   - primary outputs carry no timestamps (those go to the --log sidecar)
//   - exit codes: 0 ok, 2 numerical check failed, 3 usage, 4 I/O

#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ptomo/boundary_io.hpp"
#include "ptomo/decompose.hpp"
#include "ptomo/families.hpp"
#include "ptomo/forms.hpp"
#include "ptomo/geometry.hpp"
#include "ptomo/grid_io.hpp"
#include "ptomo/inversion.hpp"
#include "ptomo/moments.hpp"
#include "ptomo/saintvenant.hpp"
#include "ptomo/sphere_quadrature.hpp"
#include "ptomo/transport.hpp"
#include "ptomo/xray.hpp"

using nlohmann::json;
using namespace ptomo;

namespace {

// ---------------------------------------------------------------- plumbing

// Post-parse view of one subcommand: config file keys fill in anything the
// command line left untouched, so flags always override the document.
struct ConfigView {
  CLI::App* cmd = nullptr;
  json cfg = json::object();

  void load(const std::string& path) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path + " for reading");
    cfg = json::parse(in);
    if (!cfg.is_object()) throw std::invalid_argument("config must be a JSON object");
  }

  static std::string key(const std::string& flag) { return flag.substr(2); }

  bool have(const std::string& flag) const {
    return cmd->count(flag) > 0 || cfg.contains(key(flag));
  }

  template <class T>
  void fill(const std::string& flag, T& var) const {
    if (cmd->count(flag) == 0 && cfg.contains(key(flag))) var = cfg.at(key(flag)).get<T>();
  }
};

void require_value(const char* flag, const std::string& value) {
  if (value.empty()) throw std::invalid_argument(std::string(flag) + " is required");
}

// Timestamps live here and only here.
void append_log(const std::string& path, const std::string& line) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  std::time_t t = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  out << stamp << ' ' << line << '\n';
}

void write_report(const std::string& path, const json& report) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << report.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path);
  std::printf("wrote %s\n", path.c_str());
}

// One comparison row: every reported example value travels with its target
// and the tolerance it was judged against.
json check_row(const std::string& name, double value, double target, double tolerance) {
  const bool pass = std::abs(value - target) <= tolerance;
  std::printf("%s %s: value %.17g target %.17g tolerance %g\n", pass ? "[pass]" : "[FAIL]",
              name.c_str(), value, target, tolerance);
  return json{{"name", name},   {"value", value}, {"target", target},
              {"tolerance", tolerance}, {"pass", pass}};
}

bool all_pass(const json& rows) {
  for (const auto& r : rows)
    if (r.contains("pass") && !r.at("pass").get<bool>()) return false;
  return true;
}

json cplx_json(cplx z) { return json::array({z.real(), z.imag()}); }

// ------------------------------------------------------------ field source

// A field comes either from a PTF1 grid file or from an analytic family.
struct FieldSource {
  std::string file;
  std::string family;
  int degree = 2;
  double envelope = 1.0;
  double amplitude = 1.0;
  bool complex_coeffs = false;
  std::uint64_t field_seed = 0;
  std::string id_override;

  void add_options(CLI::App* cmd) {
    cmd->add_option("--field-file", file, "read the field from a PTF1 grid file");
    cmd->add_option("--family", family,
                    "analytic family: zero, symmetric, skew, kernel-v, potential, lambda-identity");
    cmd->add_option("--degree", degree, "polynomial degree for the random families");
    cmd->add_option("--envelope", envelope, "Gaussian envelope rate a in exp(-a r^2)");
    cmd->add_option("--amplitude", amplitude, "scale applied to the family coefficients");
    cmd->add_flag("--complex", complex_coeffs, "draw complex coefficients where allowed");
    cmd->add_option("--field-seed", field_seed, "seed for the random families (defaults to --seed)");
    cmd->add_option("--field-id", id_override, "identifier stored in output headers");
  }

  void merge(const ConfigView& cv) {
    cv.fill("--field-file", file);
    cv.fill("--family", family);
    cv.fill("--degree", degree);
    cv.fill("--envelope", envelope);
    cv.fill("--amplitude", amplitude);
    cv.fill("--complex", complex_coeffs);
    cv.fill("--field-seed", field_seed);
    cv.fill("--field-id", id_override);
  }
};

struct BuiltField {
  std::unique_ptr<MatrixField> field;
  std::string id;
};

BuiltField build_field(const FieldSource& src, const ConfigView& cv, std::uint64_t run_seed,
                       bool have_run_seed) {
  BuiltField out;
  if (!src.file.empty() && !src.family.empty())
    throw std::invalid_argument("choose either --field-file or --family, not both");
  if (!src.file.empty()) {
    out.field = std::make_unique<GridField>(read_grid_field(src.file));
    out.id = src.id_override.empty() ? "ptf:" + file_checksum(src.file) : src.id_override;
    return out;
  }
  if (src.family.empty()) throw std::invalid_argument("one of --field-file or --family is required");

  const bool random_family =
      src.family == "symmetric" || src.family == "skew" || src.family == "kernel-v";
  std::uint64_t seed = 0;
  if (random_family) {
    if (cv.have("--field-seed"))
      seed = src.field_seed;
    else if (have_run_seed)
      seed = run_seed;
    else
      throw std::invalid_argument("--seed or --field-seed is required for random field families");
  }
  FamilyParams prm;
  prm.degree = src.degree;
  prm.envelope = src.envelope;
  prm.amplitude = src.amplitude;
  prm.complex_coeffs = src.complex_coeffs;

  if (src.family == "zero") {
    out.field = std::make_unique<GaussPolyMatrixField>(zero_field(3));
  } else if (src.family == "symmetric") {
    out.field = std::make_unique<GaussPolyMatrixField>(random_symmetric_field(seed, prm));
  } else if (src.family == "skew") {
    out.field = std::make_unique<GaussPolyMatrixField>(random_skew_hermitian_field(seed, prm));
  } else if (src.family == "kernel-v") {
    out.field = std::make_unique<GaussPolyMatrixField>(random_kernel_field(seed, prm));
  } else if (src.family == "potential") {
    out.field = std::make_unique<CallableField>(potential_field(lambda_flat_ball()));
  } else if (src.family == "lambda-identity") {
    out.field =
        std::make_unique<GaussPolyMatrixField>(gaussian_identity_field(src.amplitude, src.envelope));
  } else {
    throw std::invalid_argument("unknown field family: " + src.family);
  }
  if (!src.id_override.empty())
    out.id = src.id_override;
  else
    out.id = random_family ? src.family + "-" + std::to_string(seed) : src.family;
  return out;
}

// --------------------------------------------------------------- gen-field

struct GenFieldOpts {
  FieldSource src;
  int grid_m = 33;
  double grid_half = 1.0;
  std::uint64_t seed = 0;
  std::string out, report, config, log;
};

void add_gen_field(CLI::App& app, int& rc) {
  auto opts = std::make_shared<GenFieldOpts>();
  CLI::App* cmd = app.add_subcommand("gen-field", "sample an analytic field family to a PTF1 grid");
  opts->src.add_options(cmd);
  cmd->add_option("--grid-m", opts->grid_m, "nodes per axis");
  cmd->add_option("--grid-half", opts->grid_half, "grid cube half-width");
  cmd->add_option("--seed", opts->seed, "seed for the random families");
  cmd->add_option("--out", opts->out, "output PTF1 path");
  cmd->add_option("--report", opts->report, "optional JSON report path");
  cmd->add_option("--config", opts->config, "JSON config; flags override its keys");
  cmd->add_option("--log", opts->log, "sidecar log receiving timestamps");
  cmd->callback([opts, cmd, &rc] {
    ConfigView cv{cmd, json::object()};
    cv.load(opts->config);
    opts->src.merge(cv);
    cv.fill("--grid-m", opts->grid_m);
    cv.fill("--grid-half", opts->grid_half);
    cv.fill("--seed", opts->seed);
    cv.fill("--out", opts->out);
    cv.fill("--report", opts->report);
    cv.fill("--log", opts->log);
    require_value("--out", opts->out);

    BuiltField bf = build_field(opts->src, cv, opts->seed, cv.have("--seed"));
    const GridSpec spec = GridSpec::centered_cube(opts->grid_m, opts->grid_half);
    const GridField g = GridField::sample(*bf.field, spec);
    write_grid_field(opts->out, g);
    const std::string sum = file_checksum(opts->out);
    std::printf("wrote %s nodes %zu n %d symmetry %s checksum %s\n", opts->out.c_str(),
                spec.node_count(), g.dim(), to_string(g.symmetry()), sum.c_str());

    json report{{"command", "gen-field"},
                {"field_id", bf.id},
                {"grid", {{"m", opts->grid_m}, {"half", opts->grid_half}, {"spacing", spec.spacing}}},
                {"n", g.dim()},
                {"symmetry", to_string(g.symmetry())},
                {"out", opts->out},
                {"checksum", sum}};
    write_report(opts->report, report);
    append_log(opts->log, "gen-field wrote " + opts->out);
    rc = 0;
  });
}

// ----------------------------------------------------------------- forward

struct ForwardOpts {
  FieldSource src;
  int rays = 100;
  std::uint64_t seed = 0;
  double step = 0.0;
  int threads = 1;
  double ball_radius = 1.0;
  std::string out, report, config, log;
};

void add_forward(CLI::App& app, int& rc) {
  auto opts = std::make_shared<ForwardOpts>();
  CLI::App* cmd =
      app.add_subcommand("forward", "solve the transport equation over sampled boundary rays");
  opts->src.add_options(cmd);
  cmd->add_option("--rays", opts->rays, "number of inward boundary rays");
  cmd->add_option("--seed", opts->seed, "ray sampling seed");
  cmd->add_option("--step", opts->step, "integration step (0 = automatic)");
  cmd->add_option("--threads", opts->threads, "worker cap");
  cmd->add_option("--ball-radius", opts->ball_radius, "domain ball radius");
  cmd->add_option("--out", opts->out, "output boundary data path");
  cmd->add_option("--report", opts->report, "optional JSON report path");
  cmd->add_option("--config", opts->config, "JSON config; flags override its keys");
  cmd->add_option("--log", opts->log, "sidecar log receiving timestamps");
  cmd->callback([opts, cmd, &rc] {
    ConfigView cv{cmd, json::object()};
    cv.load(opts->config);
    opts->src.merge(cv);
    cv.fill("--rays", opts->rays);
    cv.fill("--seed", opts->seed);
    cv.fill("--step", opts->step);
    cv.fill("--threads", opts->threads);
    cv.fill("--ball-radius", opts->ball_radius);
    cv.fill("--out", opts->out);
    cv.fill("--report", opts->report);
    cv.fill("--log", opts->log);
    require_value("--out", opts->out);
    if (!cv.have("--seed")) throw std::invalid_argument("--seed is required for ray sampling");

    BuiltField bf = build_field(opts->src, cv, opts->seed, true);
    const BallDomain ball(Vec(3), opts->ball_radius);
    const std::vector<Ray> rays = sample_inward_boundary(ball, opts->rays, opts->seed);
    const BoundaryDataSet data = forward_data(*bf.field, rays, opts->step, opts->threads, bf.id);
    write_boundary_data(opts->out, data);
    const std::string sum = file_checksum(opts->out);
    const std::size_t failed = data.failed_count();
    std::printf("wrote %s records %zu failed %zu checksum %s\n", opts->out.c_str(),
                data.records.size(), failed, sum.c_str());

    json report{{"command", "forward"},   {"field_id", bf.id},
                {"rays", opts->rays},     {"seed", opts->seed},
                {"step", opts->step},     {"ball_radius", opts->ball_radius},
                {"records", data.records.size()}, {"failed", failed},
                {"out", opts->out},       {"checksum", sum}};
    write_report(opts->report, report);
    append_log(opts->log, "forward wrote " + opts->out);
    if (!data.records.empty() && failed == data.records.size()) {
      std::fprintf(stderr, "error: every ray integration failed\n");
      rc = 2;
    }
  });
}

// ---------------------------------------------------------- linear-forward

struct LinearForwardOpts {
  std::string phi1, phi2, out, report, config, log;
};

void add_linear_forward(CLI::App& app, int& rc) {
  auto opts = std::make_shared<LinearForwardOpts>();
  CLI::App* cmd = app.add_subcommand(
      "linear-forward", "form linearized data inv(Phi1) Phi2 - E from two transport data sets");
  cmd->add_option("--phi1", opts->phi1, "background boundary data");
  cmd->add_option("--phi2", opts->phi2, "perturbed boundary data");
  cmd->add_option("--out", opts->out, "output boundary data path");
  cmd->add_option("--report", opts->report, "optional JSON report path");
  cmd->add_option("--config", opts->config, "JSON config; flags override its keys");
  cmd->add_option("--log", opts->log, "sidecar log receiving timestamps");
  cmd->callback([opts, cmd, &rc] {
    ConfigView cv{cmd, json::object()};
    cv.load(opts->config);
    cv.fill("--phi1", opts->phi1);
    cv.fill("--phi2", opts->phi2);
    cv.fill("--out", opts->out);
    cv.fill("--report", opts->report);
    cv.fill("--log", opts->log);
    require_value("--phi1", opts->phi1);
    require_value("--phi2", opts->phi2);
    require_value("--out", opts->out);

    const BoundaryDataSet phi1 = read_boundary_data(opts->phi1);
    const BoundaryDataSet phi2 = read_boundary_data(opts->phi2);
    const BoundaryDataSet lin = linearized_data(phi1, phi2);
    write_boundary_data(opts->out, lin);
    const std::string sum = file_checksum(opts->out);
    const std::size_t failed = lin.failed_count();
    std::printf("wrote %s records %zu failed %zu checksum %s\n", opts->out.c_str(),
                lin.records.size(), failed, sum.c_str());

    json report{{"command", "linear-forward"}, {"field_id", lin.field_id},
                {"records", lin.records.size()}, {"failed", failed},
                {"out", opts->out},            {"checksum", sum}};
    write_report(opts->report, report);
    append_log(opts->log, "linear-forward wrote " + opts->out);
    if (!lin.records.empty() && failed == lin.records.size()) {
      std::fprintf(stderr, "error: every linearized record failed\n");
      rc = 2;
    }
  });
}

// ------------------------------------------------------------------- sdata

struct SdataOpts {
  FieldSource src;
  int lines = 200;
  std::uint64_t seed = 0;
  double support_radius = 1.0;
  int intervals = kDefaultLineIntervals;
  std::string out, report, config, log;
};

void add_sdata(CLI::App& app, int& rc) {
  auto opts = std::make_shared<SdataOpts>();
  CLI::App* cmd =
      app.add_subcommand("sdata", "tabulate the S and ray transforms over sampled lines");
  opts->src.add_options(cmd);
  cmd->add_option("--lines", opts->lines, "number of sampled lines");
  cmd->add_option("--seed", opts->seed, "line sampling seed");
  cmd->add_option("--support-radius", opts->support_radius, "radius the field support fits in");
  cmd->add_option("--intervals", opts->intervals, "Simpson intervals per line");
  cmd->add_option("--out", opts->out, "output CSV path");
  cmd->add_option("--report", opts->report, "optional JSON report path");
  cmd->add_option("--config", opts->config, "JSON config; flags override its keys");
  cmd->add_option("--log", opts->log, "sidecar log receiving timestamps");
  cmd->callback([opts, cmd, &rc] {
    ConfigView cv{cmd, json::object()};
    cv.load(opts->config);
    opts->src.merge(cv);
    cv.fill("--lines", opts->lines);
    cv.fill("--seed", opts->seed);
    cv.fill("--support-radius", opts->support_radius);
    cv.fill("--intervals", opts->intervals);
    cv.fill("--out", opts->out);
    cv.fill("--report", opts->report);
    cv.fill("--log", opts->log);
    require_value("--out", opts->out);
    if (!cv.have("--seed")) throw std::invalid_argument("--seed is required for line sampling");

    BuiltField bf = build_field(opts->src, cv, opts->seed, true);
    const std::vector<TangentLine> lines =
        tangent_bundle_lines(opts->lines, opts->support_radius, opts->seed);
    const std::vector<SinogramRow> rows =
        sinogram(*bf.field, lines, opts->support_radius, opts->intervals);
    write_sinogram_csv(rows, opts->out);
    const std::string sum = file_checksum(opts->out);
    std::printf("wrote %s lines %zu checksum %s\n", opts->out.c_str(), rows.size(), sum.c_str());

    json report{{"command", "sdata"},       {"field_id", bf.id},
                {"lines", opts->lines},     {"seed", opts->seed},
                {"support_radius", opts->support_radius}, {"intervals", opts->intervals},
                {"out", opts->out},         {"checksum", sum}};
    write_report(opts->report, report);
    append_log(opts->log, "sdata wrote " + opts->out);
    rc = 0;
  });
}

// ------------------------------------------------------------ kernel-check

struct KernelCheckOpts {
  FieldSource src;
  std::string route = "both";
  int points = 200;
  std::uint64_t seed = 0;
  double ball_radius = 1.0;
  double tolerance = 1e-10;
  int fourier_m = 64;
  double fourier_half = 8.0;
  double fourier_tol = 1e-6;
  std::string expect = "none";
  std::string report, config, log;
};

void add_kernel_check(CLI::App& app, int& rc) {
  auto opts = std::make_shared<KernelCheckOpts>();
  CLI::App* cmd = app.add_subcommand(
      "kernel-check", "test the pointwise and Fourier kernel conditions for a symmetric field");
  opts->src.add_options(cmd);
  cmd->add_option("--route", opts->route, "space, fourier, or both");
  cmd->add_option("--points", opts->points, "sample points for the space route");
  cmd->add_option("--seed", opts->seed, "point sampling seed (space route)");
  cmd->add_option("--ball-radius", opts->ball_radius, "ball the space points are drawn from");
  cmd->add_option("--tolerance", opts->tolerance, "space route tolerance, relative to field scale");
  cmd->add_option("--fourier-m", opts->fourier_m, "Fourier grid nodes per axis (power of two)");
  cmd->add_option("--fourier-half", opts->fourier_half, "Fourier box half-width");
  cmd->add_option("--fourier-tol", opts->fourier_tol, "Fourier route tolerance");
  cmd->add_option("--expect", opts->expect, "in-kernel, not-in-kernel, or none");
  cmd->add_option("--report", opts->report, "optional JSON report path");
  cmd->add_option("--config", opts->config, "JSON config; flags override its keys");
  cmd->add_option("--log", opts->log, "sidecar log receiving timestamps");
  cmd->callback([opts, cmd, &rc] {
    ConfigView cv{cmd, json::object()};
    cv.load(opts->config);
    opts->src.merge(cv);
    cv.fill("--route", opts->route);
    cv.fill("--points", opts->points);
    cv.fill("--seed", opts->seed);
    cv.fill("--ball-radius", opts->ball_radius);
    cv.fill("--tolerance", opts->tolerance);
    cv.fill("--fourier-m", opts->fourier_m);
    cv.fill("--fourier-half", opts->fourier_half);
    cv.fill("--fourier-tol", opts->fourier_tol);
    cv.fill("--expect", opts->expect);
    cv.fill("--report", opts->report);
    cv.fill("--log", opts->log);
    if (opts->route != "space" && opts->route != "fourier" && opts->route != "both")
      throw std::invalid_argument("--route must be space, fourier, or both");
    if (opts->expect != "in-kernel" && opts->expect != "not-in-kernel" && opts->expect != "none")
      throw std::invalid_argument("--expect must be in-kernel, not-in-kernel, or none");

    BuiltField bf = build_field(opts->src, cv, opts->seed, cv.have("--seed"));
    KernelReport rep;
    rep.field_id = bf.id;

    if (opts->route != "fourier") {
      if (bf.field->has_derivatives()) {
        if (!cv.have("--seed"))
          throw std::invalid_argument("--seed is required for space route point sampling");
        Rng rng(opts->seed);
        std::vector<Vec> points;
        points.reserve(static_cast<size_t>(opts->points));
        for (int i = 0; i < opts->points; ++i)
          points.push_back(rng.unit_sphere(3).vec() *
                           (opts->ball_radius * std::cbrt(rng.uniform())));
        rep.space = kernel_residuals(*bf.field, points, opts->tolerance);
        rep.space_available = true;
      } else if (opts->route == "space") {
        throw std::invalid_argument(
            "the space route needs analytic derivatives; use --family or --route fourier");
      }
    }
    if (opts->route != "space") {
      rep.fourier = fourier_residuals(*bf.field, opts->fourier_m, opts->fourier_half,
                                      opts->fourier_tol);
      rep.fourier_available = true;
    }
    if (!rep.space_available && !rep.fourier_available)
      throw std::invalid_argument("no kernel route applies to this field");

    auto route_json = [](const std::array<double, 6>& max_abs, double scale, double tol,
                         bool reduced, bool full) {
      return json{{"max_abs", max_abs}, {"scale", scale},        {"tolerance", tol},
                  {"reduced_verdict", reduced}, {"full_verdict", full}};
    };
    json report{{"command", "kernel-check"}, {"field_id", bf.id}, {"route", opts->route}};
    bool in_kernel = true;
    if (rep.space_available) {
      const auto& s = rep.space;
      const double worst = *std::max_element(s.max_abs.begin(), s.max_abs.end());
      std::printf("space route: points %zu max residual %.17g scale %.17g tolerance %g verdict %s\n",
                  s.points.size(), worst, s.scale, s.tolerance,
                  s.full_verdict ? "in-kernel" : "not-in-kernel");
      json row = route_json(s.max_abs, s.scale, s.tolerance, s.reduced_verdict, s.full_verdict);
      row["points"] = s.points.size();
      row["available"] = true;
      report["space"] = row;
      in_kernel = in_kernel && s.full_verdict;
    } else {
      report["space"] = json{{"available", false}};
    }
    if (rep.fourier_available) {
      const auto& q = rep.fourier;
      const double worst = *std::max_element(q.max_abs.begin(), q.max_abs.end());
      std::printf(
          "fourier route: grid %d box half %g max residual %.17g scale %.17g tolerance %g "
          "verdict %s boundary warning %s\n",
          q.grid, q.box_half, worst, q.scale, q.tolerance,
          q.full_verdict ? "in-kernel" : "not-in-kernel", q.boundary_warning ? "yes" : "no");
      json row = route_json(q.max_abs, q.scale, q.tolerance, q.reduced_verdict, q.full_verdict);
      row["grid"] = q.grid;
      row["box_half"] = q.box_half;
      row["boundary_magnitude"] = q.boundary_magnitude;
      row["field_magnitude"] = q.field_magnitude;
      row["boundary_warning"] = q.boundary_warning;
      row["available"] = true;
      report["fourier"] = row;
      in_kernel = in_kernel && q.full_verdict;
    } else {
      report["fourier"] = json{{"available", false}};
    }

    const std::string verdict = in_kernel ? "in-kernel" : "not-in-kernel";
    report["verdict"] = verdict;
    report["expect"] = opts->expect;
    bool pass = true;
    if (opts->expect != "none") pass = verdict == opts->expect;
    report["pass"] = pass;
    std::printf("verdict %s expect %s %s\n", verdict.c_str(), opts->expect.c_str(),
                pass ? "[pass]" : "[FAIL]");
    write_report(opts->report, report);
    append_log(opts->log, "kernel-check verdict " + verdict);
    rc = pass ? 0 : 2;
  });
}

// ----------------------------------------------------------------- moments

struct MomentsOpts {
  FieldSource src;
  int max_order = 2;
  double box_half = 1.0;
  int intervals = 128;
  std::uint64_t seed = 0;
  std::string out, report, config, log;
};

void add_moments(CLI::App& app, int& rc) {
  auto opts = std::make_shared<MomentsOpts>();
  CLI::App* cmd =
      app.add_subcommand("moments", "integral moments of a symmetric field with kernel fit");
  opts->src.add_options(cmd);
  cmd->add_option("--max-order", opts->max_order, "highest moment order (0..4)");
  cmd->add_option("--box-half", opts->box_half, "integration cube half-width");
  cmd->add_option("--intervals", opts->intervals, "Simpson intervals per axis");
  cmd->add_option("--seed", opts->seed, "seed for random field families");
  cmd->add_option("--out", opts->out, "output CSV path");
  cmd->add_option("--report", opts->report, "optional JSON report path");
  cmd->add_option("--config", opts->config, "JSON config; flags override its keys");
  cmd->add_option("--log", opts->log, "sidecar log receiving timestamps");
  cmd->callback([opts, cmd, &rc] {
    ConfigView cv{cmd, json::object()};
    cv.load(opts->config);
    opts->src.merge(cv);
    cv.fill("--max-order", opts->max_order);
    cv.fill("--box-half", opts->box_half);
    cv.fill("--intervals", opts->intervals);
    cv.fill("--seed", opts->seed);
    cv.fill("--out", opts->out);
    cv.fill("--report", opts->report);
    cv.fill("--log", opts->log);
    require_value("--out", opts->out);

    BuiltField bf = build_field(opts->src, cv, opts->seed, cv.have("--seed"));
    const MomentTable t = moments(*bf.field, opts->max_order, opts->box_half, opts->intervals);
    write_moments_csv(t, opts->out);
    const std::string sum = file_checksum(opts->out);
    std::printf("wrote %s rows %zu scale %.17g checksum %s\n", opts->out.c_str(), t.rows.size(),
                t.scale, sum.c_str());

    json report{{"command", "moments"},   {"field_id", bf.id},
                {"max_order", opts->max_order}, {"box_half", opts->box_half},
                {"intervals", t.intervals},     {"rows", t.rows.size()},
                {"scale", t.scale},       {"out", opts->out},
                {"checksum", sum}};

    const ZeroOrderCheck z = zero_order_recovery_check(t);
    const bool zero_data = z.status == ZeroOrderCheck::Status::Pass;
    std::printf("zero-order moments: max |mu| %.17g scale %.17g tolerance %g %s\n", z.max_abs,
                z.scale, z.tolerance, zero_data ? "consistent with zero data" : "nonzero");
    report["zero_order"] = json{{"max_abs", z.max_abs},
                                {"scale", z.scale},
                                {"tolerance", z.tolerance},
                                {"consistent_with_zero_data", zero_data}};

    if (opts->max_order >= 1) {
      double combo_max = 0.0;
      for (const FirstOrderCombo& c : first_order_combos(t))
        combo_max = std::max(combo_max, std::abs(c.value));
      std::printf("first-order combos: max |value| %.17g of scale %.17g\n", combo_max, t.scale);
      report["first_order_combos_max"] = combo_max;

      const KernelMomentFit fit = kernel_moment_fit(t);
      double cross_max = 0.0;
      for (const cplx& c : fit.cross) cross_max = std::max(cross_max, std::abs(c));
      std::printf("kernel moment fit: residual %.17g cross max %.17g scale %.17g\n", fit.residual,
                  cross_max, fit.scale);
      report["kernel_fit"] = json{{"a", json::array({cplx_json(fit.a[0]), cplx_json(fit.a[1]),
                                                     cplx_json(fit.a[2])})},
                                  {"residual", fit.residual},
                                  {"cross_max", cross_max},
                                  {"scale", fit.scale}};
    }
    write_report(opts->report, report);
    append_log(opts->log, "moments wrote " + opts->out);
    rc = 0;
  });
}

// --------------------------------------------------------------- decompose

struct DecomposeCliOpts {
  FieldSource src;
  int grid_m = 33;
  double grid_half = 1.0;
  double ball_radius = 1.0;
  double cg_tol = 1e-10;
  int cg_max_iter = 20000;
  std::uint64_t seed = 0;
  std::string out_lambda, out_tilde, report, config, log;
};

void add_decompose(CLI::App& app, int& rc) {
  auto opts = std::make_shared<DecomposeCliOpts>();
  CLI::App* cmd = app.add_subcommand(
      "decompose", "split a skew-Hermitian field into a potential part and a remainder");
  opts->src.add_options(cmd);
  cmd->add_option("--grid-m", opts->grid_m, "nodes per axis");
  cmd->add_option("--grid-half", opts->grid_half, "grid cube half-width");
  cmd->add_option("--ball-radius", opts->ball_radius, "Dirichlet ball radius");
  cmd->add_option("--cg-tol", opts->cg_tol, "CG relative residual target");
  cmd->add_option("--cg-max-iter", opts->cg_max_iter, "CG iteration cap");
  cmd->add_option("--seed", opts->seed, "seed for random field families");
  cmd->add_option("--out-lambda", opts->out_lambda, "output PTF1 path for the scalar potential");
  cmd->add_option("--out-tilde", opts->out_tilde, "output PTF1 path for the remainder field");
  cmd->add_option("--report", opts->report, "optional JSON report path");
  cmd->add_option("--config", opts->config, "JSON config; flags override its keys");
  cmd->add_option("--log", opts->log, "sidecar log receiving timestamps");
  cmd->callback([opts, cmd, &rc] {
    ConfigView cv{cmd, json::object()};
    cv.load(opts->config);
    opts->src.merge(cv);
    cv.fill("--grid-m", opts->grid_m);
    cv.fill("--grid-half", opts->grid_half);
    cv.fill("--ball-radius", opts->ball_radius);
    cv.fill("--cg-tol", opts->cg_tol);
    cv.fill("--cg-max-iter", opts->cg_max_iter);
    cv.fill("--seed", opts->seed);
    cv.fill("--out-lambda", opts->out_lambda);
    cv.fill("--out-tilde", opts->out_tilde);
    cv.fill("--report", opts->report);
    cv.fill("--log", opts->log);

    BuiltField bf = build_field(opts->src, cv, opts->seed, cv.have("--seed"));
    const GridSpec spec = GridSpec::centered_cube(opts->grid_m, opts->grid_half);
    const BallDomain ball(Vec(3), opts->ball_radius);
    DecomposeOptions dopt;
    dopt.cg_tolerance = opts->cg_tol;
    dopt.cg_max_iterations = opts->cg_max_iter;
    const DecomposeResult r = decompose(*bf.field, spec, ball, dopt);
    std::printf("cg iterations %d converged %s relative residual %.17g\n", r.cg_iterations,
                r.converged ? "yes" : "no", r.cg_relative_residual);
    std::printf("lambda max |.| %.17g\n", r.lambda.max_abs());

    json report{{"command", "decompose"},
                {"field_id", bf.id},
                {"grid", {{"m", opts->grid_m}, {"half", opts->grid_half}, {"spacing", spec.spacing}}},
                {"ball_radius", opts->ball_radius},
                {"cg_iterations", r.cg_iterations},
                {"cg_relative_residual", r.cg_relative_residual},
                {"converged", r.converged},
                {"lambda_max_abs", r.lambda.max_abs()}};
    if (!opts->out_lambda.empty()) {
      const GridField lam(1, SymmetryClass::General, spec, r.lambda.values);
      write_grid_field(opts->out_lambda, lam);
      const std::string sum = file_checksum(opts->out_lambda);
      std::printf("wrote %s checksum %s\n", opts->out_lambda.c_str(), sum.c_str());
      report["out_lambda"] = json{{"path", opts->out_lambda}, {"checksum", sum}};
    }
    if (!opts->out_tilde.empty()) {
      write_grid_field(opts->out_tilde, r.tilde);
      const std::string sum = file_checksum(opts->out_tilde);
      std::printf("wrote %s checksum %s\n", opts->out_tilde.c_str(), sum.c_str());
      report["out_tilde"] = json{{"path", opts->out_tilde}, {"checksum", sum}};
    }
    write_report(opts->report, report);
    append_log(opts->log, "decompose finished");
    rc = 0;
  });
}

// ------------------------------------------------------------------- forms

struct FormsOpts {
  int n = 3;
  std::string cls = "skew";
  int quad_degree = 8;
  double tolerance = 1e-10;
  std::string report, config, log;
};

void add_forms(CLI::App& app, int& rc) {
  auto opts = std::make_shared<FormsOpts>();
  CLI::App* cmd = app.add_subcommand(
      "forms", "sphere-averaged quadratic form constants and positivity spectrum");
  cmd->add_option("--n", opts->n, "space dimension (3 or 4)");
  cmd->add_option("--class", opts->cls, "tensor class: symmetric, skew, general");
  cmd->add_option("--quad-degree", opts->quad_degree, "sphere quadrature exactness degree");
  cmd->add_option("--tolerance", opts->tolerance, "tolerance for the constant checks");
  cmd->add_option("--report", opts->report, "optional JSON report path");
  cmd->add_option("--config", opts->config, "JSON config; flags override its keys");
  cmd->add_option("--log", opts->log, "sidecar log receiving timestamps");
  cmd->callback([opts, cmd, &rc] {
    ConfigView cv{cmd, json::object()};
    cv.load(opts->config);
    cv.fill("--n", opts->n);
    cv.fill("--class", opts->cls);
    cv.fill("--quad-degree", opts->quad_degree);
    cv.fill("--tolerance", opts->tolerance);
    cv.fill("--report", opts->report);
    cv.fill("--log", opts->log);
    if (opts->n != 3 && opts->n != 4) throw std::invalid_argument("--n must be 3 or 4");

    SymmetryClass cls;
    if (opts->cls == "symmetric")
      cls = SymmetryClass::Symmetric;
    else if (opts->cls == "skew")
      cls = SymmetryClass::SkewHermitian;
    else if (opts->cls == "general")
      cls = SymmetryClass::General;
    else
      throw std::invalid_argument("--class must be symmetric, skew, or general");

    // Rayleigh quotient edges of B/(omega |f|^2) per class. The skew classes
    // sit at (n^2 - 3n - 2)/n exactly; the symmetric spectrum is a traceless
    // plateau plus one trace line; general is the union of the two blocks.
    double target_min = 0.0, target_max = 0.0;
    bool expect_positive = false;
    const double skew_c = (double(opts->n) * opts->n - 3.0 * opts->n - 2.0) / opts->n;
    if (cls == SymmetryClass::Symmetric) {
      target_min = opts->n == 3 ? 2.0 / 15.0 : 13.0 / 12.0;
      target_max = opts->n == 3 ? 4.0 / 3.0 : 9.0 / 4.0;
      expect_positive = true;
    } else if (cls == SymmetryClass::SkewHermitian) {
      target_min = target_max = skew_c;
      expect_positive = skew_c > 0.0;
    } else {
      target_min = std::min(skew_c, opts->n == 3 ? 2.0 / 15.0 : 13.0 / 12.0);
      target_max = std::max(skew_c, opts->n == 3 ? 4.0 / 3.0 : 9.0 / 4.0);
      expect_positive = target_min > 0.0;
    }

    const SphereQuadrature quad = sphere_quadrature(opts->n, opts->quad_degree);
    const PositivityScan scan = positivity_scan(opts->n, cls, quad);

    std::printf("quotients:");
    for (double q : scan.quotients) std::printf(" %.17g", q);
    std::printf("\n");

    json rows = json::array();
    rows.push_back(check_row("b-min-quotient", scan.min_quotient, target_min, opts->tolerance));
    rows.push_back(check_row("b-max-quotient", scan.quotients.back(), target_max, opts->tolerance));
    if (cls == SymmetryClass::SkewHermitian) {
      double spread = 0.0;
      for (double q : scan.quotients) spread = std::max(spread, std::abs(q - skew_c));
      rows.push_back(check_row("b-skew-spread", spread, 0.0, opts->tolerance));
    }
    const bool positive = scan.min_quotient > 0.0;
    std::printf("%s b-positivity: min quotient %.17g expected %s\n",
                positive == expect_positive ? "[pass]" : "[FAIL]", scan.min_quotient,
                expect_positive ? "positive" : "negative");
    json pos_row{{"name", "b-positivity"},
                 {"value", scan.min_quotient},
                 {"expected_sign", expect_positive ? "positive" : "negative"},
                 {"pass", positive == expect_positive}};
    rows.push_back(pos_row);

    if (opts->n == 3 && cls == SymmetryClass::SkewHermitian) {
      // Q/(omega |f|^2) = 1/3 on real skew tensors; probed on the elementary
      // rotations, their pairwise sums, and the identity normalization Q(I).
      const double omega = sphere_surface_measure(3);
      auto elementary = [](int i, int j) {
        CMat m(3);
        const double r = 1.0 / std::sqrt(2.0);
        m(i, j) = r;
        m(j, i) = -r;
        return m;
      };
      const CMat e01 = elementary(0, 1), e02 = elementary(0, 2), e12 = elementary(1, 2);
      const CMat pairs[3] = {e01, e02, e12};
      double worst = 0.0;
      for (const CMat& m : pairs)
        worst = std::max(worst, std::abs(form_Q(m, quad).value / omega - 1.0 / 3.0));
      for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b) {
          CMat s = pairs[a];
          s += pairs[b];
          worst = std::max(worst, std::abs(form_Q(s, quad).value / (omega * 2.0) - 1.0 / 3.0));
        }
      rows.push_back(check_row("q-skew-quotient-deviation", worst, 0.0, opts->tolerance));
      rows.push_back(check_row("q-identity", form_Q(CMat::identity(3), quad).value / omega, 1.0,
                               opts->tolerance));
    }

    json report{{"command", "forms"},
                {"n", opts->n},
                {"class", opts->cls},
                {"quadrature", quad.tag},
                {"basis_dim", scan.basis_dim},
                {"quotients", scan.quotients},
                {"checks", rows}};
    write_report(opts->report, report);
    append_log(opts->log, "forms finished");
    rc = all_pass(rows) ? 0 : 2;
  });
}

// ------------------------------------------------------------------ invert

struct InvertOpts {
  std::string phi1, phi2;
  int grid_m = 9;
  double grid_half = 1.0;
  double ball_radius = 1.0;
  std::string cls = "symmetric";
  double lambda_reg = 1e-4;
  double step = 0.0;
  double tol = 1e-8;
  int max_iter = 2000;
  double memory_gb = 3.0;
  int threads = 1;
  std::string truth;
  double max_error = -1.0;
  std::string out, report, config, log;
};

void add_invert(CLI::App& app, int& rc) {
  auto opts = std::make_shared<InvertOpts>();
  CLI::App* cmd = app.add_subcommand(
      "invert", "one linearization step: recover a voxel field from two transport data sets");
  cmd->add_option("--phi1", opts->phi1, "background boundary data");
  cmd->add_option("--phi2", opts->phi2, "perturbed boundary data");
  cmd->add_option("--grid-m", opts->grid_m, "voxel nodes per axis");
  cmd->add_option("--grid-half", opts->grid_half, "voxel cube half-width");
  cmd->add_option("--ball-radius", opts->ball_radius, "ball used for the gauge-aware comparison");
  cmd->add_option("--class", opts->cls, "unknown class: symmetric, skew-hermitian, general");
  cmd->add_option("--lambda-reg", opts->lambda_reg, "Tikhonov weight");
  cmd->add_option("--step", opts->step, "assembly chord step (0 = automatic)");
  cmd->add_option("--tol", opts->tol, "CGLS relative tolerance");
  cmd->add_option("--max-iter", opts->max_iter, "CGLS iteration cap");
  cmd->add_option("--memory-limit-gb", opts->memory_gb, "operator memory guard");
  cmd->add_option("--threads", opts->threads, "worker cap");
  cmd->add_option("--truth", opts->truth, "optional PTF1 truth field for an error report");
  cmd->add_option("--max-error", opts->max_error,
                  "fail (exit 2) if the truth comparison exceeds this");
  cmd->add_option("--out", opts->out, "output PTF1 path for the estimate");
  cmd->add_option("--report", opts->report, "optional JSON report path");
  cmd->add_option("--config", opts->config, "JSON config; flags override its keys");
  cmd->add_option("--log", opts->log, "sidecar log receiving timestamps");
  cmd->callback([opts, cmd, &rc] {
    ConfigView cv{cmd, json::object()};
    cv.load(opts->config);
    cv.fill("--phi1", opts->phi1);
    cv.fill("--phi2", opts->phi2);
    cv.fill("--grid-m", opts->grid_m);
    cv.fill("--grid-half", opts->grid_half);
    cv.fill("--ball-radius", opts->ball_radius);
    cv.fill("--class", opts->cls);
    cv.fill("--lambda-reg", opts->lambda_reg);
    cv.fill("--step", opts->step);
    cv.fill("--tol", opts->tol);
    cv.fill("--max-iter", opts->max_iter);
    cv.fill("--memory-limit-gb", opts->memory_gb);
    cv.fill("--threads", opts->threads);
    cv.fill("--truth", opts->truth);
    cv.fill("--max-error", opts->max_error);
    cv.fill("--out", opts->out);
    cv.fill("--report", opts->report);
    cv.fill("--log", opts->log);
    require_value("--phi1", opts->phi1);
    require_value("--phi2", opts->phi2);
    require_value("--out", opts->out);

    UnknownClass cls;
    if (opts->cls == "symmetric")
      cls = UnknownClass::RealSymmetric;
    else if (opts->cls == "skew-hermitian" || opts->cls == "skew")
      cls = UnknownClass::SkewHermitian;
    else if (opts->cls == "general")
      cls = UnknownClass::GeneralComplex;
    else
      throw std::invalid_argument("--class must be symmetric, skew-hermitian, or general");

    const BoundaryDataSet phi1 = read_boundary_data(opts->phi1);
    const BoundaryDataSet phi2 = read_boundary_data(opts->phi2);
    ReconstructConfig cfg;
    cfg.grid = GridSpec::centered_cube(opts->grid_m, opts->grid_half);
    cfg.cls = cls;
    cfg.lambda_reg = opts->lambda_reg;
    cfg.step = opts->step;
    cfg.tolerance = opts->tol;
    cfg.max_iterations = opts->max_iter;
    cfg.memory_limit_bytes = opts->memory_gb * 1e9;
    cfg.threads = opts->threads;
    const NonlinearReconstruction rec = reconstruct_nonlinear(phi1, phi2, cfg);

    write_grid_field(opts->out, rec.estimate);
    const std::string sum = file_checksum(opts->out);
    std::printf("rays used %zu dropped %zu\n", rec.rays_used, rec.rays_dropped);
    std::printf("cgls iterations %d converged %s\n", rec.solve.iterations,
                rec.solve.converged ? "yes" : "no");
    const double misfit0 =
        rec.solve.misfit_history.empty() ? 0.0 : rec.solve.misfit_history.front();
    std::printf("data misfit first %.17g last %.17g solution norm %.17g\n", misfit0,
                rec.solve.data_misfit, rec.solve.solution_norm);
    std::printf("wrote %s checksum %s\n", opts->out.c_str(), sum.c_str());

    json report{{"command", "invert"},
                {"class", to_string(cls)},
                {"grid", {{"m", opts->grid_m}, {"half", opts->grid_half}}},
                {"lambda_reg", opts->lambda_reg},
                {"rays_used", rec.rays_used},
                {"rays_dropped", rec.rays_dropped},
                {"iterations", rec.solve.iterations},
                {"converged", rec.solve.converged},
                {"misfit_first", misfit0},
                {"misfit_last", rec.solve.data_misfit},
                {"solution_norm", rec.solve.solution_norm},
                {"out", opts->out},
                {"checksum", sum}};

    bool pass = true;
    if (rec.rays_used == 0) {
      std::fprintf(stderr, "error: no usable rays in the linearized data\n");
      pass = false;
    }
    if (!opts->truth.empty()) {
      const GridField truth = read_grid_field(opts->truth);
      const BallDomain ball(Vec(3), opts->ball_radius);
      const ClosedPartError err =
          closed_part_relative_error(truth, rec.estimate, cfg.grid, ball);
      std::printf("closed part relative error %.17g (truth norm %.17g estimate norm %.17g)\n",
                  err.relative_error, err.truth_norm, err.estimate_norm);
      json row{{"name", "closed-part-relative-error"},
               {"value", err.relative_error},
               {"truth_norm", err.truth_norm},
               {"estimate_norm", err.estimate_norm}};
      if (opts->max_error >= 0.0) {
        const bool ok = err.relative_error <= opts->max_error;
        row["target"] = opts->max_error;
        row["pass"] = ok;
        std::printf("%s closed-part error %.17g against limit %.17g\n", ok ? "[pass]" : "[FAIL]",
                    err.relative_error, opts->max_error);
        pass = pass && ok;
      }
      report["truth_comparison"] = row;
    }
    report["pass"] = pass;
    write_report(opts->report, report);
    append_log(opts->log, "invert wrote " + opts->out);
    rc = pass ? 0 : 2;
  });
}

// -------------------------------------------------------------------- rays

struct RaysOpts {
  int count = 100;
  std::uint64_t seed = 0;
  double ball_radius = 1.0;
  std::string out, config, log;
};

void add_rays(CLI::App& app, int& rc) {
  auto opts = std::make_shared<RaysOpts>();
  CLI::App* cmd = app.add_subcommand("rays", "sample inward boundary rays to a CSV table");
  cmd->add_option("--count", opts->count, "number of rays");
  cmd->add_option("--seed", opts->seed, "sampling seed");
  cmd->add_option("--ball-radius", opts->ball_radius, "domain ball radius");
  cmd->add_option("--out", opts->out, "output CSV path");
  cmd->add_option("--config", opts->config, "JSON config; flags override its keys");
  cmd->add_option("--log", opts->log, "sidecar log receiving timestamps");
  cmd->callback([opts, cmd, &rc] {
    ConfigView cv{cmd, json::object()};
    cv.load(opts->config);
    cv.fill("--count", opts->count);
    cv.fill("--seed", opts->seed);
    cv.fill("--ball-radius", opts->ball_radius);
    cv.fill("--out", opts->out);
    cv.fill("--log", opts->log);
    require_value("--out", opts->out);
    if (!cv.have("--seed")) throw std::invalid_argument("--seed is required for ray sampling");

    const BallDomain ball(Vec(3), opts->ball_radius);
    const std::vector<Ray> rays = sample_inward_boundary(ball, opts->count, opts->seed);
    write_rays_csv(rays, opts->out);
    std::printf("wrote %s rays %zu checksum %s\n", opts->out.c_str(), rays.size(),
                file_checksum(opts->out).c_str());
    append_log(opts->log, "rays wrote " + opts->out);
    rc = 0;
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"transport, transforms, and inversion for matrix-valued polarization fields"};
  app.require_subcommand(1);
  int rc = 0;
  add_gen_field(app, rc);
  add_forward(app, rc);
  add_linear_forward(app, rc);
  add_sdata(app, rc);
  add_kernel_check(app, rc);
  add_moments(app, rc);
  add_decompose(app, rc);
  add_forms(app, rc);
  add_invert(app, rc);
  add_rays(app, rc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::out_of_range& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::runtime_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    const std::string msg = e.what();
    if (msg.rfind("decompose:", 0) == 0) return 2;   // numerical stall
    if (msg.rfind("assemble:", 0) == 0) return 3;    // problem size vs configured limit
    return 4;
  }
  return rc;
}

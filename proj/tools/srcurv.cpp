// srcurv: geodesics, flags, Young diagrams, Jacobi fields and canonical
// curvature of sub-Riemannian structures from the command line.
//
// Exit codes: 0 success or passing verdict, 2 failing verdict, 1 usage or
// computation error.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "report.hpp"
#include "srcurv/builtins.hpp"
#include "srcurv/curvature.hpp"
#include "srcurv/flag.hpp"

namespace {

using namespace srcurv;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using report::json;

constexpr int kExitFail = 2;
constexpr int kExitError = 1;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string builtin;
  std::string structure_file;
  double radius = 1.0;
  std::string x0, p0;
  double horizon = 1.0;
  double tol = 0.0;  // 0 keeps each check's default
  double c = 2.0;
  std::string frame_file;
  std::string format;
  std::string out;
  std::uint64_t seed = 1;
  int samples = 0;
  int order = 0;
  std::string extension = "tube";
  std::string v0;
  std::string rows;
  std::string curvature_file;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  try {
    return report::split_numbers(text, ',');
  } catch (const std::exception&) {
    throw UsageError(std::string("--") + what + " expects comma separated decimal numbers, got '" + text + "'");
  }
}

std::vector<int> parse_rows(const std::string& text) {
  std::vector<int> rows;
  for (double v : parse_list(text, "young"))
    if (v != std::floor(v) || v < 1) throw UsageError("diagram rows must be positive integers");
    else rows.push_back(static_cast<int>(v));
  return rows;
}

VectorXd to_vector(const std::vector<double>& v) { return Eigen::Map<const VectorXd>(v.data(), v.size()); }

/// Structure, initial covector and derived objects for one run.
struct Setup {
  SRStructure structure;
  std::shared_ptr<const PhaseFlow> flow;
  PhasePoint l0;
  std::string source;
};

Setup load(const RunConfig& cfg) {
  if (cfg.builtin.empty() == cfg.structure_file.empty())
    throw UsageError("give exactly one of --builtin NAME or --structure FILE");
  if (!(cfg.horizon > 0.0)) throw UsageError("--T must be positive");
  if (cfg.tol < 0.0) throw UsageError("--tol must be positive");
  Setup s;
  std::vector<double> x0, p0;
  if (!cfg.builtin.empty()) {
    auto b = find_builtin(cfg.builtin, cfg.radius);
    if (!b) {
      std::string known;
      for (const auto& n : builtin_names()) known += " " + n;
      throw UsageError("unknown builtin '" + cfg.builtin + "'; known:" + known);
    }
    s.structure = b->structure;
    x0 = b->x0;
    p0 = b->p0;
    s.source = b->name;
  } else {
    s.structure = parse_structure(read_file(cfg.structure_file));
    s.source = cfg.structure_file;
    if (cfg.x0.empty() || cfg.p0.empty()) throw UsageError("--structure needs --x0 and --p0");
  }
  if (!cfg.x0.empty()) x0 = parse_list(cfg.x0, "x0");
  if (!cfg.p0.empty()) p0 = parse_list(cfg.p0, "p0");
  if (x0.size() != s.structure.dim() || p0.size() != s.structure.dim())
    throw UsageError("--x0 and --p0 need " + std::to_string(s.structure.dim()) + " components");
  s.flow = std::make_shared<const PhaseFlow>(s.structure);
  s.l0 = PhasePoint{to_vector(x0), to_vector(p0)};
  return s;
}

DarbouxFrameField load_frame(const RunConfig& cfg, const Setup& s) {
  if (!cfg.frame_file.empty()) return user_frame(s.flow, read_file(cfg.frame_file), s.l0);
  if (s.structure.is_riemannian()) return riemannian_canonical_frame(s.flow, s.l0);
  throw UsageError("structure is not Riemannian; pass a canonical frame with --frame FILE");
}

std::vector<double> uniform(double horizon, int count) {
  if (count < 2) throw UsageError("--samples must be at least 2");
  std::vector<double> t;
  for (int k = 0; k < count; ++k) t.push_back(horizon * k / (count - 1));
  return t;
}

std::string format_of(const RunConfig& cfg, const std::string& fallback) {
  std::string f = cfg.format.empty() ? fallback : cfg.format;
  if (f != "json" && f != "csv") throw UsageError("--format must be json or csv");
  return f;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string list_text(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

// Verdict bookkeeping shared by the check subcommands. max_violation is the
// largest value/threshold ratio, so anything above 1 fails.
struct Verdict {
  json details = json::array();
  double max_violation = 0.0;
  bool pass = true;

  void add(const std::string& name, double value, double threshold, json extra = json::object()) {
    bool ok = std::isfinite(value) && value <= threshold;
    extra["check"] = name;
    extra["value"] = value;
    extra["threshold"] = threshold;
    extra["pass"] = ok;
    details.push_back(std::move(extra));
    if (std::isfinite(value)) max_violation = std::max(max_violation, value / threshold);
    pass = pass && ok;
  }

  int finish(const RunConfig& cfg, json head) {
    head["verdict"] = pass ? "pass" : "fail";
    head["max_violation"] = max_violation;
    head["details"] = details;
    report::emit(dump(head), cfg.out);
    for (const auto& d : details)
      std::cerr << (d["pass"].get<bool>() ? "  ok    " : "  FAIL  ") << d["check"].get<std::string>() << " = "
                << d["value"].get<double>() << " (<= " << d["threshold"].get<double>() << ")\n";
    std::cerr << (pass ? "verdict: pass\n" : "verdict: fail\n");
    return pass ? 0 : kExitFail;
  }
};

double tol_or(const RunConfig& cfg, double fallback) { return cfg.tol > 0.0 ? cfg.tol : fallback; }

// ---- subcommands ----

int run_geodesic(const RunConfig& cfg) {
  Setup s = load(cfg);
  const auto n = s.flow->n();
  Tolerance tol;
  if (cfg.tol > 0.0) tol = {cfg.tol, cfg.tol};
  auto times = uniform(cfg.horizon, cfg.samples ? cfg.samples : 101);
  Extremal e = integrate_extremal(s.flow, s.l0, cfg.horizon, tol, times);
  std::vector<VectorXd> zs;
  for (double t : times) zs.push_back(e.interpolate(t));
  std::cerr << "geodesic on " << s.source << ": " << e.times().size() << " nodes, |H drift| = "
            << e.max_hamiltonian_drift() << "\n";
  if (format_of(cfg, "csv") == "csv") {
    std::vector<std::string> header{"t"};
    for (Eigen::Index i = 1; i <= n; ++i) header.push_back("x" + std::to_string(i));
    for (Eigen::Index i = 1; i <= n; ++i) header.push_back("p" + std::to_string(i));
    report::Csv csv(header);
    for (std::size_t k = 0; k < times.size(); ++k) {
      std::vector<double> row{times[k]};
      for (Eigen::Index i = 0; i < n; ++i) row.push_back(zs[k](n + i));
      for (Eigen::Index i = 0; i < n; ++i) row.push_back(zs[k](i));
      csv.row(row);
    }
    report::emit(csv.str(), cfg.out);
  } else {
    json x = json::array(), p = json::array();
    for (const auto& z : zs) {
      x.push_back(report::vector(z.tail(n)));
      p.push_back(report::vector(z.head(n)));
    }
    report::emit(dump({{"structure", s.source},
                       {"vars", s.structure.chart.names()},
                       {"t", times},
                       {"x", x},
                       {"p", p},
                       {"hamiltonian_drift", e.max_hamiltonian_drift()}}),
                 cfg.out);
  }
  return 0;
}

ExtensionKind extension_of(const RunConfig& cfg) {
  if (cfg.extension == "tube") return ExtensionKind::Tube;
  if (cfg.extension == "oblique") return ExtensionKind::Oblique;
  throw UsageError("--extension must be tube or oblique");
}

GeodesicClass classify(const RunConfig& cfg, const Setup& s) {
  Extremal e = integrate_extremal(s.flow, s.l0, cfg.horizon);
  int order = cfg.order ? cfg.order : static_cast<int>(s.flow->n());
  return classify_geodesic(e, chebyshev_times(cfg.horizon, cfg.samples ? cfg.samples : 17), order, extension_of(cfg));
}

int run_flag(const RunConfig& cfg) {
  Setup s = load(cfg);
  format_of(cfg, "json");
  GeodesicClass c = classify(cfg, s);
  json samples = json::array();
  for (const auto& f : c.samples)
    samples.push_back({{"t", f.t}, {"dims", f.dims}, {"step", f.step}, {"filtration_residual", f.filtration_residual}});
  std::cerr << "growth vector (" << list_text(c.growth_vector) << ")" << (c.ample ? ", ample" : ", not ample")
            << (c.equiregular ? ", equiregular" : ", not equiregular") << "\n";
  report::emit(dump({{"structure", s.source},
                     {"extension", cfg.extension},
                     {"growth_vector", c.growth_vector},
                     {"ample", c.ample},
                     {"equiregular", c.equiregular},
                     {"samples", samples}}),
               cfg.out);
  return 0;
}

int run_young(const RunConfig& cfg) {
  format_of(cfg, "json");
  std::optional<YoungDiagram> y;
  json head = json::object();
  if (!cfg.rows.empty()) {
    y = YoungDiagram::from_rows(parse_rows(cfg.rows));
  } else {
    Setup s = load(cfg);
    GeodesicClass c = classify(cfg, s);
    head["structure"] = s.source;
    head["growth_vector"] = c.growth_vector;
    y = young_diagram(c);
  }
  CMatrices cm = build_C_matrices(*y);
  KalmanReport k = kalman_rank_check(*y);
  json levels = json::array(), superboxes = json::array();
  for (const auto& l : y->levels()) levels.push_back({{"length", l.length}, {"rows", l.rows}});
  for (const auto& sb : y->superboxes()) {
    std::vector<std::string> labels;
    for (int b : sb.boxes) labels.push_back(YoungDiagram::box_label(y->boxes()[b]));
    superboxes.push_back({{"level", sb.level}, {"column", sb.col}, {"boxes", labels}});
  }
  head["rows"] = y->rows();
  head["levels"] = levels;
  head["superboxes"] = superboxes;
  head["C1"] = report::matrix(cm.c1);
  head["C2"] = report::matrix(cm.c2);
  head["kalman_rank"] = k.rank;
  head["kalman_literal_rank"] = k.literal_rank;
  std::cerr << y->ascii();
  report::emit(dump(head), cfg.out);
  return 0;
}

int run_jacobi(const RunConfig& cfg) {
  Setup s = load(cfg);
  const auto n = s.flow->n();
  VectorXd v0 = VectorXd::Zero(2 * n);
  if (cfg.v0.empty()) {
    v0(0) = 1.0;
  } else {
    auto v = parse_list(cfg.v0, "v0");
    if (static_cast<Eigen::Index>(v.size()) != 2 * n)
      throw UsageError("--v0 needs " + std::to_string(2 * n) + " components (dp then dx)");
    v0 = to_vector(v);
  }
  auto times = uniform(cfg.horizon, cfg.samples ? cfg.samples : 101);
  Extremal e = integrate_extremal(s.flow, s.l0, cfg.horizon, {}, times);
  std::vector<double> conj = conjugate_time_scan(e);
  std::vector<VectorXd> values;
  for (double t : times) values.push_back(e.propagator_at(t) * v0);
  std::cerr << "conjugate times:";
  for (double t : conj) std::cerr << " " << t;
  std::cerr << (conj.empty() ? " none\n" : "\n");
  if (format_of(cfg, "csv") == "csv") {
    std::vector<std::string> header{"t"};
    for (Eigen::Index i = 1; i <= n; ++i) header.push_back("J_p" + std::to_string(i));
    for (Eigen::Index i = 1; i <= n; ++i) header.push_back("J_x" + std::to_string(i));
    report::Csv csv(header);
    for (std::size_t k = 0; k < times.size(); ++k) {
      std::vector<double> row{times[k]};
      row.insert(row.end(), values[k].data(), values[k].data() + values[k].size());
      csv.row(row);
    }
    report::emit(csv.str(), cfg.out);
  } else {
    json vals = json::array();
    for (const auto& v : values) vals.push_back(report::vector(v));
    report::emit(dump({{"structure", s.source}, {"t", times}, {"J", vals}, {"conjugate_times", conj}}), cfg.out);
  }
  return 0;
}

int run_curvature(const RunConfig& cfg) {
  Setup s = load(cfg);
  DarbouxFrameField fr = load_frame(cfg, s);
  auto times = uniform(cfg.horizon, cfg.samples ? cfg.samples : 21);
  StructuralMatrices m = extract_structural_matrices(fr, times);
  std::cerr << "frame: " << fr.provenance << ", diagram rows (" << list_text(fr.young.rows())
            << "), max Darboux residual " << m.max_darboux << "\n";
  if (format_of(cfg, "csv") == "csv") {
    report::Csv csv(report::curvature_header(fr.young));
    for (const auto& x : m.samples) csv.row(report::curvature_row(x.t, x.r));
    report::emit(csv.str(), cfg.out);
  } else {
    json samples = json::array();
    for (const auto& x : m.samples)
      samples.push_back({{"t", x.t}, {"R", report::matrix(x.r)}, {"C1", report::matrix(x.c1)}, {"C2", report::matrix(x.c2)}});
    report::emit(dump({{"structure", s.source},
                       {"frame", fr.provenance},
                       {"rows", fr.young.rows()},
                       {"max_darboux", m.max_darboux},
                       {"samples", samples}}),
                 cfg.out);
  }
  return 0;
}

int run_check_normal(const RunConfig& cfg) {
  if (cfg.curvature_file.empty() || cfg.rows.empty()) throw UsageError("check normal needs --curvature FILE and --young ROWS");
  YoungDiagram y = YoungDiagram::from_rows(parse_rows(cfg.rows));
  std::ifstream in(cfg.curvature_file);
  if (!in) throw UsageError("cannot read " + cfg.curvature_file);
  auto mats = report::read_curvature(in);
  const double tol = tol_or(cfg, 1e-6);
  Verdict v;
  for (const auto& tm : mats) {
    NormalConditionReport rep = check_normal(tm.r, y, tol);
    auto add = [&](const char* rule, const std::vector<NormalViolation>& list) {
      for (const auto& x : list)
        v.add(rule, x.magnitude, tol,
              {{"t", tm.t},
               {"first", YoungDiagram::box_label(x.first)},
               {"second", YoungDiagram::box_label(x.second)}});
    };
    add("symmetry", rep.symmetry);
    add("partial_skew_symmetry", rep.skew);
    add("vanishing_equal_rows", rep.equal_rows);
    add("vanishing_longer_row", rep.longer_row);
    v.max_violation = std::max(v.max_violation, rep.max_violation / tol);
  }
  return v.finish(cfg, {{"check", "normal"}, {"rows", y.rows()}, {"tolerance", tol}, {"matrices", mats.size()}});
}

int run_check_homogeneity(const RunConfig& cfg) {
  Setup s = load(cfg);
  if (!(cfg.c > 0.0)) throw UsageError("--c must be positive");
  Verdict v;
  const double tol = tol_or(cfg, 1e-6);
  auto flow_rep = check_flow_homogeneity(*s.flow, s.l0, cfg.c, cfg.horizon);
  v.add("flow_homogeneity", flow_rep.residual, tol, {{"c", cfg.c}});
  if (s.structure.is_riemannian() || !cfg.frame_file.empty()) {
    DarbouxFrameField fr = load_frame(cfg, s);
    DarbouxFrameField scaled = rescale_frame(fr, cfg.c);
    auto times = uniform(cfg.horizon, cfg.samples ? cfg.samples : 6);
    StructuralReport rep = verify_structural_equations(scaled, times);
    v.add("rescaled_darboux", rep.matrices.max_darboux, 1e-7);
    v.add("rescaled_c_constant", rep.c_deviation, 1e-6);
    v.add("rescaled_structural", rep.max_residual(), 1e-6);
    std::vector<double> back;
    for (double t : times) back.push_back(cfg.c * t);
    auto orig = fr.states(back);
    double worst = 0.0;
    for (std::size_t k = 0; k < orig.size(); ++k) {
      MatrixXd r = structural_sample(fr, orig[k]).r;
      for (Eigen::Index a = 0; a < r.rows(); ++a)
        for (Eigen::Index b = 0; b < r.cols(); ++b) {
          double expected = std::pow(cfg.c, fr.young.boxes()[a].col + fr.young.boxes()[b].col) * r(a, b);
          worst = std::max(worst, std::abs(rep.matrices.samples[k].r(a, b) - expected) / (1.0 + std::abs(expected)));
        }
    }
    v.add("curvature_degree_law", worst, 1e-5, {{"frame", fr.provenance}});
  }
  return v.finish(cfg, {{"check", "homogeneity"}, {"structure", s.source}, {"c", cfg.c}, {"T", cfg.horizon}});
}

int run_check_darboux(const RunConfig& cfg) {
  Setup s = load(cfg);
  DarbouxFrameField fr = load_frame(cfg, s);
  StructuralReport rep = verify_structural_equations(fr, uniform(cfg.horizon, cfg.samples ? cfg.samples : 20));
  Verdict v;
  v.add("darboux", rep.matrices.max_darboux, tol_or(cfg, 1e-7));
  v.add("vertical_E", rep.matrices.max_vertical, 1e-12);
  v.add("c_matrices", rep.c_deviation, 1e-6);
  v.add("structural_equations", rep.max_residual(), 1e-6);
  v.add("r_symmetry", rep.matrices.max_r_asymmetry, 1e-6);
  return v.finish(cfg, {{"check", "darboux"}, {"structure", s.source}, {"frame", fr.provenance}, {"rows", fr.young.rows()}});
}

int run_check_euler(const RunConfig& cfg) {
  Setup s = load(cfg);
  DarbouxFrameField fr = load_frame(cfg, s);
  EulerReport rep = euler_decomposition_check(fr, uniform(cfg.horizon, cfg.samples ? cfg.samples : 9));
  const double tol = tol_or(cfg, 1e-6);
  Verdict v;
  v.add("euler_bracket", rep.euler_bracket, tol);
  v.add("long_row_coefficients", rep.long_row_coefficients, tol);
  v.add("coefficient_variation", rep.coefficient_variation, tol);
  v.add("hamiltonian_vertical", rep.hamiltonian_vertical, 1e-7);
  v.add("hamiltonian_in_span", rep.hamiltonian_in_span, 1e-7);
  return v.finish(cfg, {{"check", "euler"},
                        {"structure", s.source},
                        {"frame", fr.provenance},
                        {"coefficients_t0", report::vector(rep.coefficients.front())}});
}

int run_check_ehresmann(const RunConfig& cfg) {
  Setup s = load(cfg);
  const auto n = s.flow->n();
  EhresmannConnection conn = !cfg.frame_file.empty()
                                 ? EhresmannConnection::from_frame(s.flow, parse_frame_document(read_file(cfg.frame_file), s.flow->chart()))
                                 : s.structure.is_riemannian()
                                       ? EhresmannConnection::riemannian(s.flow)
                                       : throw UsageError("structure is not Riemannian; pass a frame family with --frame FILE");
  std::optional<LeviCivita> lc;
  if (s.structure.is_riemannian()) lc.emplace(s.structure);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Chart& ch = s.structure.chart;
  auto constant = [&](const VectorXd& v) {
    std::vector<Expression> comps;
    for (double x : v) comps.emplace_back(x);
    return VectorField(ch, comps);
  };
  const double tol = tol_or(cfg, 1e-5);
  double identity = 0.0, oracle = 0.0, hamilton = 0.0, antisym = 0.0, vertical = 0.0;
  const int count = cfg.samples ? cfg.samples : 20;
  for (int k = 0; k < count; ++k) {
    VectorXd x0 = s.l0.x, p = s.l0.p, xv(n), yv(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      x0(i) += 0.1 * u(rng);
      p(i) += 0.3 * u(rng);
      xv(i) = u(rng);
      yv(i) = u(rng);
    }
    std::vector<Expression> section;
    for (double q : p) section.emplace_back(q);
    auto smp = canonical_curvature_via_connection(conn, section, constant(xv), constant(yv), x0);
    identity = std::max(identity, std::abs(smp.connection - smp.canonical));
    vertical = std::max(vertical, smp.verticality);
    if (lc) oracle = std::max(oracle, std::abs(smp.canonical - riemannian_curvature_oracle(*lc, x0, p, xv, yv)));
    VectorXd z(2 * n);
    z << p, x0;
    hamilton = std::max(hamilton, std::abs(hamiltonian_along_lift(conn, constant(xv), z)));
    antisym = std::max(antisym, (ehresmann_curvature(conn, constant(xv), constant(yv), z) +
                                 ehresmann_curvature(conn, constant(yv), constant(xv), z))
                                    .cwiseAbs()
                                    .maxCoeff());
  }
  Verdict v;
  v.add("curvature_identity", identity, tol);
  if (lc) v.add("levi_civita_oracle", oracle, tol);
  v.add("hamiltonian_horizontal", hamilton, 1e-8);
  v.add("antisymmetry", antisym, 1e-8);
  v.add("verticality", vertical, 1e-7);
  return v.finish(cfg, {{"check", "ehresmann"},
                        {"structure", s.source},
                        {"connection", conn.provenance()},
                        {"samples", count},
                        {"seed", cfg.seed}});
}

void add_structure_options(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--builtin", cfg.builtin, "built-in structure (euclidean1..4, sphere, hyperbolic, heisenberg)");
  sub->add_option("--structure", cfg.structure_file, "structure file");
  sub->add_option("--radius", cfg.radius, "sphere radius for --builtin sphere")->check(CLI::PositiveNumber);
  sub->add_option("--x0", cfg.x0, "initial point a,b,...");
  sub->add_option("--p0", cfg.p0, "initial covector a,b,...");
  sub->add_option("--T", cfg.horizon, "time horizon");
  sub->add_option("--tol", cfg.tol, "tolerance override");
  sub->add_option("--samples", cfg.samples, "number of sample times");
  sub->add_option("--out", cfg.out, "output path (default stdout)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"srcurv: sub-Riemannian geodesics, Jacobi fields and canonical curvature"};
  app.require_subcommand(1);
  RunConfig cfg;
  int (*action)(const RunConfig&) = nullptr;

  auto on = [&](CLI::App* sub, int (*fn)(const RunConfig&)) { sub->callback([&action, fn] { action = fn; }); };

  auto* geodesic = app.add_subcommand("geodesic", "integrate an extremal, write the trajectory");
  add_structure_options(geodesic, cfg);
  geodesic->add_option("--format", cfg.format, "csv (default) or json");
  on(geodesic, run_geodesic);

  auto* flag = app.add_subcommand("flag", "growth vector of the geodesic flag");
  add_structure_options(flag, cfg);
  flag->add_option("--order", cfg.order, "maximal derivative order (default n)");
  flag->add_option("--extension", cfg.extension, "admissible extension: tube or oblique");
  flag->add_option("--format", cfg.format, "json");
  on(flag, run_flag);

  auto* young = app.add_subcommand("young", "Young diagram, C1, C2 and the Kalman rank");
  add_structure_options(young, cfg);
  young->add_option("--rows", cfg.rows, "build the diagram from row lengths instead of a geodesic");
  young->add_option("--order", cfg.order, "maximal derivative order (default n)");
  young->add_option("--extension", cfg.extension, "admissible extension: tube or oblique");
  young->add_option("--format", cfg.format, "json");
  on(young, run_young);

  auto* jacobi = app.add_subcommand("jacobi", "Jacobi field and conjugate-time scan");
  add_structure_options(jacobi, cfg);
  jacobi->add_option("--v0", cfg.v0, "initial Jacobi vector, 2n components (dp then dx)");
  jacobi->add_option("--format", cfg.format, "csv (default) or json");
  on(jacobi, run_jacobi);

  auto* curvature = app.add_subcommand("curvature", "curvature matrix R(t) of a canonical frame");
  add_structure_options(curvature, cfg);
  curvature->add_option("--frame", cfg.frame_file, "canonical frame file (required off the Riemannian case)");
  curvature->add_option("--format", cfg.format, "csv (default) or json");
  on(curvature, run_curvature);

  auto* check = app.add_subcommand("check", "verdict checks (exit 0 pass, 2 fail)");
  check->require_subcommand(1);
  auto* normal = check->add_subcommand("normal", "normal conditions of a curvature matrix");
  normal->add_option("--curvature", cfg.curvature_file, "curvature CSV or plain matrix")->required();
  normal->add_option("--young", cfg.rows, "diagram row lengths, e.g. 2,1")->required();
  normal->add_option("--tol", cfg.tol, "tolerance (default 1e-6)");
  normal->add_option("--out", cfg.out, "output path (default stdout)");
  on(normal, run_check_normal);

  auto* homogeneity = check->add_subcommand("homogeneity", "flow and curvature homogeneity under dilation");
  add_structure_options(homogeneity, cfg);
  homogeneity->add_option("--c", cfg.c, "dilation factor (default 2)");
  homogeneity->add_option("--frame", cfg.frame_file, "canonical frame file");
  on(homogeneity, run_check_homogeneity);

  auto* darboux = check->add_subcommand("darboux", "Darboux relations and structural equations of a frame");
  add_structure_options(darboux, cfg);
  darboux->add_option("--frame", cfg.frame_file, "canonical frame file");
  on(darboux, run_check_darboux);

  auto* euler = check->add_subcommand("euler", "Euler field decomposition in a canonical frame");
  add_structure_options(euler, cfg);
  euler->add_option("--frame", cfg.frame_file, "canonical frame file");
  on(euler, run_check_euler);

  auto* ehresmann = check->add_subcommand("ehresmann", "curvature identity of the canonical connection");
  add_structure_options(ehresmann, cfg);
  ehresmann->add_option("--frame", cfg.frame_file, "canonical frame file defining the connection");
  ehresmann->add_option("--seed", cfg.seed, "seed for the random covectors and fields");
  on(ehresmann, run_check_ehresmann);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }
  try {
    return action(cfg);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
  } catch (const IntegrationError& e) {
    std::cerr << "integration error: " << e.what() << "\n";
  } catch (const IndeterminateRank& e) {
    std::cerr << "indeterminate rank: " << e.what() << "\n";
  } catch (const ConnectionDomainError& e) {
    std::cerr << "outside the connection's domain: " << e.what() << "\n";
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return kExitError;
}

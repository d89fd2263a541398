#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "parser.hpp"
#include "vector_field.hpp"

namespace srcurv {

/// A sub-Riemannian structure in one chart: the frame is declared orthonormal.
struct SRStructure {
  Chart chart;
  std::vector<std::string> field_names;
  std::vector<VectorField> frame;

  std::size_t dim() const { return chart.dim(); }
  std::size_t rank() const { return frame.size(); }
  bool is_riemannian() const { return rank() == dim(); }

  /// n x k matrix whose columns are the frame fields at `x`.
  Eigen::MatrixXd frame_matrix(std::span<const double> x) const { return FieldBundle(chart, frame)(x); }
};

inline SRStructure parse_structure(std::string_view text) {
  auto doc = parse_structure_document(text);
  return SRStructure{std::move(doc.chart), std::move(doc.field_names), std::move(doc.fields)};
}

inline std::string to_text(const SRStructure& s) {
  std::string out = "dim " + std::to_string(s.dim()) + "\nvars";
  for (const auto& v : s.chart.names()) out += " " + v;
  out += "\n";
  for (std::size_t a = 0; a < s.rank(); ++a) {
    out += "field " + s.field_names[a] + " :";
    for (std::size_t j = 0; j < s.dim(); ++j) out += (j ? ", " : " ") + to_string(s.frame[a][j]);
    out += "\n";
  }
  return out;
}

/// Frame fields must be linearly independent where the structure is used.
inline bool frame_independent_at(const SRStructure& s, std::span<const double> x, double rtol = 1e-10) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(s.frame_matrix(x));
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || !std::isfinite(sv(0)) || sv(0) == 0.0) return false;
  return sv(sv.size() - 1) > rtol * sv(0);
}

/// Momentum coordinate name paired with chart variable `v`.
inline std::string momentum_name(const std::string& v) { return "p_" + v; }

/// Chart on T*M with coordinates ordered (p_1..p_n, x_1..x_n).
inline Chart phase_chart(const Chart& base) {
  std::vector<std::string> names;
  for (const auto& v : base.names()) names.push_back(momentum_name(v));
  for (const auto& v : base.names()) {
    if (std::find(names.begin(), names.end(), v) != names.end())
      throw std::invalid_argument("chart variable '" + v + "' collides with a momentum name");
    names.push_back(v);
  }
  return Chart(std::move(names));
}

}  // namespace srcurv

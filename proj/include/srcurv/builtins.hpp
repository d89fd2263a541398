#pragma once

#include <optional>
#include <string>
#include <vector>

#include "structure.hpp"

namespace srcurv {

/// A named structure together with a reasonable starting covector.
struct Builtin {
  std::string name;
  std::string text;
  SRStructure structure;
  std::vector<double> x0;
  std::vector<double> p0;
};

inline std::string euclidean_text(int n) {
  static const char* names[] = {"x1", "x2", "x3", "x4"};
  std::string t = "dim " + std::to_string(n) + "\nvars";
  for (int i = 0; i < n; ++i) t += std::string(" ") + names[i];
  t += "\n";
  for (int a = 0; a < n; ++a) {
    t += "field X" + std::to_string(a + 1) + " :";
    for (int j = 0; j < n; ++j) t += std::string(j ? ", " : " ") + (a == j ? "1" : "0");
    t += "\n";
  }
  return t;
}

/// Round sphere in longitude/latitude coordinates; regular away from the poles.
inline std::string sphere_text(double radius) {
  std::string r = format_number(radius);
  return "# round sphere of radius " + r + ", (longitude, latitude)\n"
         "dim 2\nvars phi theta\n"
         "field X1 : 1/(" + r + "*cos(theta)), 0\n"
         "field X2 : 0, 1/" + r + "\n";
}

inline std::string hyperbolic_text() {
  return "# upper half-plane, curvature -1\n"
         "dim 2\nvars x y\n"
         "field X1 : y, 0\n"
         "field X2 : 0, y\n";
}

inline std::string heisenberg_text() {
  return "# Heisenberg group\n"
         "dim 3\nvars x y z\n"
         "field X1 : 1, 0, -y/2\n"
         "field X2 : 0, 1, x/2\n";
}

inline Builtin make_builtin(const std::string& name, std::string text, std::vector<double> x0,
                            std::vector<double> p0) {
  SRStructure s = parse_structure(text);
  return Builtin{name, std::move(text), std::move(s), std::move(x0), std::move(p0)};
}

/// Names: euclidean1..euclidean4 (alias "euclidean" = euclidean2), sphere,
/// hyperbolic, heisenberg.
inline std::optional<Builtin> find_builtin(const std::string& name, double sphere_radius = 1.0) {
  if (name == "euclidean") return find_builtin("euclidean2");
  if (name.rfind("euclidean", 0) == 0 && name.size() == 10) {
    int n = name[9] - '0';
    if (n < 1 || n > 4) return std::nullopt;
    std::vector<double> x0(n, 0.0), p0(n, 0.0);
    p0[0] = 1.0;
    return make_builtin(name, euclidean_text(n), x0, p0);
  }
  if (name == "sphere") return make_builtin(name, sphere_text(sphere_radius), {0.0, 0.0}, {sphere_radius, 0.0});
  if (name == "hyperbolic") return make_builtin(name, hyperbolic_text(), {0.0, 1.0}, {1.0, 0.0});
  if (name == "heisenberg") return make_builtin(name, heisenberg_text(), {0.0, 0.0, 0.0}, {1.0, 0.0, 1.0});
  return std::nullopt;
}

inline std::vector<std::string> builtin_names() {
  return {"euclidean1", "euclidean2", "euclidean3", "euclidean4", "sphere", "hyperbolic", "heisenberg"};
}

}  // namespace srcurv

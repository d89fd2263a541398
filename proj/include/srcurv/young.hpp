#pragma once

// Young diagrams of geodesic flags: rows, levels, superboxes and the constant
// matrices of the normal-form Jacobi equation.

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace srcurv {

/// Box (a, i): row a, position i, both 1-based.
struct Box {
  int row;
  int col;
  bool operator==(const Box&) const = default;
};

/// Maximal group of rows with equal length.
struct Level {
  int length;
  std::vector<int> rows;  // 1-based
  int size() const { return static_cast<int>(rows.size()); }
};

/// Column i of one level. |alpha| is the column index.
struct Superbox {
  int level;               // index into levels()
  int col;                 // 1-based
  std::vector<int> boxes;  // indices into boxes()
  int size() const { return static_cast<int>(boxes.size()); }
};

class YoungDiagram {
 public:
  YoungDiagram() = default;

  /// Rows must be positive and nonincreasing.
  static YoungDiagram from_rows(std::vector<int> rows) {
    if (rows.empty()) throw std::invalid_argument("Young diagram needs at least one row");
    for (std::size_t a = 0; a < rows.size(); ++a) {
      if (rows[a] < 1) throw std::invalid_argument("row lengths must be positive");
      if (a > 0 && rows[a] > rows[a - 1]) throw std::invalid_argument("row lengths must be nonincreasing");
    }
    YoungDiagram y;
    y.rows_ = std::move(rows);
    y.build();
    return y;
  }

  /// Diagram with columns of lengths d_1 >= d_2 >= ... >= d_m.
  static YoungDiagram from_columns(const std::vector<int>& cols) {
    if (cols.empty()) throw std::invalid_argument("Young diagram needs at least one column");
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (cols[i] < 1) throw std::invalid_argument("column lengths must be positive");
      if (i > 0 && cols[i] > cols[i - 1])
        throw std::invalid_argument("flag increments are not nonincreasing (d_" + std::to_string(i + 1) + " = " +
                                    std::to_string(cols[i]) + " > d_" + std::to_string(i) + " = " +
                                    std::to_string(cols[i - 1]) + ")");
    }
    return from_rows(conjugate(cols));
  }

  /// Diagram of a growth vector (dim D^1, ..., dim D^m): columns are its increments.
  static YoungDiagram from_growth_vector(const std::vector<int>& growth) {
    if (growth.empty()) throw std::invalid_argument("empty growth vector");
    std::vector<int> d;
    for (std::size_t i = 0; i < growth.size(); ++i) {
      int inc = growth[i] - (i ? growth[i - 1] : 0);
      if (inc <= 0) throw std::invalid_argument("growth vector must be strictly increasing");
      d.push_back(inc);
    }
    return from_columns(d);
  }

  /// Conjugate partition.
  static std::vector<int> conjugate(const std::vector<int>& parts) {
    std::vector<int> out;
    if (parts.empty()) return out;
    int longest = *std::max_element(parts.begin(), parts.end());
    for (int i = 1; i <= longest; ++i)
      out.push_back(static_cast<int>(std::count_if(parts.begin(), parts.end(), [i](int p) { return p >= i; })));
    return out;
  }

  int n() const { return n_; }
  int k() const { return static_cast<int>(rows_.size()); }
  const std::vector<int>& rows() const { return rows_; }
  std::vector<int> columns() const { return conjugate(rows_); }
  int row_length(int a) const { return rows_.at(a - 1); }

  /// Boxes in lexicographic order (a = 1..k, i = 1..n_a).
  const std::vector<Box>& boxes() const { return boxes_; }
  int index(int a, int i) const {
    if (a < 1 || a > k() || i < 1 || i > rows_[a - 1]) throw std::out_of_range("box outside the diagram");
    return offsets_[a - 1] + i - 1;
  }
  int index(Box b) const { return index(b.row, b.col); }

  const std::vector<Level>& levels() const { return levels_; }
  const std::vector<Superbox>& superboxes() const { return superboxes_; }

  /// Boxes ai and bj share a superbox iff i = j and n_a = n_b.
  bool same_superbox(Box x, Box y) const { return x.col == y.col && row_length(x.row) == row_length(y.row); }

  bool operator==(const YoungDiagram& o) const { return rows_ == o.rows_; }

  std::string ascii() const {
    std::string out;
    for (int len : rows_) out += std::string(static_cast<std::size_t>(len), '#') + "\n";
    return out;
  }

  static std::string box_label(Box b) { return std::to_string(b.row) + std::to_string(b.col); }

 private:
  void build() {
    n_ = std::accumulate(rows_.begin(), rows_.end(), 0);
    offsets_.clear();
    boxes_.clear();
    for (int a = 1; a <= k(); ++a) {
      offsets_.push_back(static_cast<int>(boxes_.size()));
      for (int i = 1; i <= rows_[a - 1]; ++i) boxes_.push_back({a, i});
    }
    levels_.clear();
    for (int a = 1; a <= k(); ++a) {
      if (levels_.empty() || levels_.back().length != rows_[a - 1]) levels_.push_back({rows_[a - 1], {}});
      levels_.back().rows.push_back(a);
    }
    superboxes_.clear();
    for (std::size_t l = 0; l < levels_.size(); ++l)
      for (int i = 1; i <= levels_[l].length; ++i) {
        Superbox s{static_cast<int>(l), i, {}};
        for (int a : levels_[l].rows) s.boxes.push_back(index(a, i));
        superboxes_.push_back(std::move(s));
      }
  }

  std::vector<int> rows_;
  int n_ = 0;
  std::vector<int> offsets_;
  std::vector<Box> boxes_;
  std::vector<Level> levels_;
  std::vector<Superbox> superboxes_;
};

struct CMatrices {
  Eigen::MatrixXd c1;
  Eigen::MatrixXd c2;
};

/// [C1]_{ai,bj} = delta_ab delta_{i,j-1}, [C2]_{ai,bj} = delta_ab delta_i1 delta_j1.
inline CMatrices build_C_matrices(const YoungDiagram& y) {
  const int n = y.n();
  CMatrices c{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
  for (int a = 1; a <= y.k(); ++a) {
    c.c2(y.index(a, 1), y.index(a, 1)) = 1.0;
    for (int i = 1; i < y.row_length(a); ++i) c.c1(y.index(a, i), y.index(a, i + 1)) = 1.0;
  }
  return c;
}

/// rank [B, AB, ..., A^{n-1} B].
inline int controllability_rank(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double rtol = 1e-10) {
  const auto n = a.rows();
  Eigen::MatrixXd k(n, n * b.cols());
  Eigen::MatrixXd block = b;
  for (Eigen::Index i = 0; i < n; ++i) {
    k.middleCols(i * b.cols(), b.cols()) = block;
    block = a * block;
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(k);
  lu.setThreshold(rtol);
  return static_cast<int>(lu.rank());
}

struct KalmanReport {
  int n = 0;
  int rank = 0;          // pair (A, B) = (C1^T, C2) of the coordinate Jacobi equation
  int literal_rank = 0;  // rank{C2, C1 C2, ..., C1^{n-1} C2} taken verbatim
  std::vector<int> block_ranks;
  std::vector<int> literal_block_ranks;
  bool controllable() const { return rank == n; }
};

inline KalmanReport kalman_rank_check(const YoungDiagram& y) {
  CMatrices c = build_C_matrices(y);
  KalmanReport r;
  r.n = y.n();
  r.rank = controllability_rank(c.c1.transpose(), c.c2);
  r.literal_rank = controllability_rank(c.c1, c.c2);
  for (int len : y.rows()) {
    CMatrices blk = build_C_matrices(YoungDiagram::from_rows({len}));
    r.block_ranks.push_back(controllability_rank(blk.c1.transpose(), blk.c2));
    r.literal_block_ranks.push_back(controllability_rank(blk.c1, blk.c2));
  }
  return r;
}

/// All partitions of n, each nonincreasing, in reverse lexicographic order.
inline std::vector<std::vector<int>> partitions(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  auto rec = [&](auto&& self, int left, int max_part) -> void {
    if (left == 0) {
      out.push_back(cur);
      return;
    }
    for (int p = std::min(left, max_part); p >= 1; --p) {
      cur.push_back(p);
      self(self, left - p, p);
      cur.pop_back();
    }
  };
  if (n >= 1) rec(rec, n, n);
  return out;
}

/// Canonical Ricci curvature of a superbox: partial trace of R over its boxes.
inline double ricci(const Eigen::MatrixXd& r, const YoungDiagram& y, int superbox) {
  if (r.rows() != y.n() || r.cols() != y.n()) throw std::invalid_argument("curvature matrix does not match the diagram");
  if (superbox < 0 || superbox >= static_cast<int>(y.superboxes().size())) throw std::out_of_range("invalid superbox");
  double tr = 0.0;
  for (int b : y.superboxes()[superbox].boxes) tr += r(b, b);
  return tr;
}

}  // namespace srcurv

#include "pfaffian.hpp"

#include <algorithm>

namespace fb {
namespace pfaffian {

namespace {

// State-vector column map, 1-based: col 1 = Z, col i+1 = d_i (i = 1..d+1),
// col i+d+2 = d_i^2 (i = 1..d). Helpers below take 1-based rows/columns and
// silently drop assignments whose target column does not exist.
class Acc {
 public:
  Acc(Matrix& m) : m_(m) {}
  void add(int row1, int col1, double v) {
    if (row1 < 1 || row1 > m_.rows() || col1 < 1 || col1 > m_.cols()) return;
    m_(row1 - 1, col1 - 1) += v;
  }

 private:
  Matrix& m_;
};

// Accumulator into pair-indexed columns; drops pairs with repeated index.
class PairAcc {
 public:
  PairAcc(Matrix& m, const PairIndex& pi) : m_(m), pi_(pi) {}
  void add(int row1, int i, int j, double v) {
    if (i == j) return;
    m_(row1 - 1, pi_.index(i, j)) += v;
  }

 private:
  Matrix& m_;
  const PairIndex& pi_;
};

// Accumulator into triple-indexed columns; sorts and drops absent triples.
class TripleAcc {
 public:
  TripleAcc(Matrix& m, const TripleIndex& ti) : m_(m), ti_(ti) {}
  void add(int row1, int a, int b, int c, double v) {
    int pos = ti_.index_of(a, b, c);
    if (pos < 0) return;
    m_(row1 - 1, pos) += v;
  }

 private:
  Matrix& m_;
  const TripleIndex& ti_;
};

}  // namespace

std::pair<int, int> PairIndex::pair_at(int pos) const {
  for (int i = 1; i <= d_; ++i) {
    int row_len = d_ + 1 - i;
    if (pos < row_len) return {i, i + 1 + pos};
    pos -= row_len;
  }
  fail(ErrorCode::InvalidArgument, "pair position out of range");
}

TripleIndex::TripleIndex(int d) : d_(d) {
  int n = d + 1;
  lookup_.assign((n + 1) * (n + 1) * (n + 1), -1);
  for (int i = 1; i <= d; ++i)
    for (int j = i; j <= d; ++j)
      for (int k = j; k <= n; ++k) {
        int pos = static_cast<int>(triples_.size());
        triples_.push_back({i, j, k});
        lookup_[(i * (n + 1) + j) * (n + 1) + k] = pos;
      }
}

int TripleIndex::index_of(int a, int b, int c) const {
  int n = d_ + 1;
  if (a < 1 || b < 1 || c < 1 || a > n || b > n || c > n) return -1;
  if (a > b) std::swap(a, b);
  if (b > c) std::swap(b, c);
  if (a > b) std::swap(a, b);
  return lookup_[(a * (n + 1) + b) * (n + 1) + c];
}

// ---------------------------------------------------------------------------
// P2, Q2: the mixed second derivatives d_i d_j (i<j) in terms of the state.
// Row (i,j):
//   P2[(i,j),(i,j)] += 2(x_jj - x_ii)
//   P2[(i,j),{i,q}] += x_jq     for q != i,j
//   P2[(i,j),{j,q}] += -x_iq    for q != i,j
//   Q2 row, j <= d : y_j at d_i, -y_i at d_j, x_ij at d_i^2, -x_ij at d_j^2
//   Q2 row, j = d+1: y_j at d_i, -y_i at d_j, x_ij at d_i^2,
//                    -r^2 x_ij at Z, +x_ij at every d_l^2 (l = 1..d)
// (The second branch is the first with d_{d+1}^2 eliminated through the
// sphere relation sum_k d_k^2 = r^2 Z.)
// ---------------------------------------------------------------------------
SecondFactors build_p2_q2(const FullParams& p) {
  int d = p.d;
  int n = 2 * d + 2;
  PairIndex pi(d);
  int np = pi.size();
  SecondFactors sf;
  sf.p2 = Matrix::Zero(np, np);
  sf.q2 = Matrix::Zero(np, n);
  Acc q2(sf.q2);
  PairAcc p2(sf.p2, pi);
  double r2 = p.r * p.r;
  for (int row = 0; row < np; ++row) {
    auto [i, j] = pi.pair_at(row);
    int row1 = row + 1;
    p2.add(row1, i, j, 2.0 * (p.xc(j, j) - p.xc(i, i)));
    for (int q = 1; q <= d + 1; ++q) {
      if (q == i || q == j) continue;
      p2.add(row1, i, q, p.xc(j, q));
      p2.add(row1, j, q, -p.xc(i, q));
    }
    q2.add(row1, i + 1, p.y[j - 1]);
    q2.add(row1, j + 1, -p.y[i - 1]);
    q2.add(row1, i + d + 2, p.xc(i, j));
    if (j <= d) {
      q2.add(row1, j + d + 2, -p.xc(i, j));
    } else {
      q2.add(row1, 1, -r2 * p.xc(i, d + 1));
      for (int l = 1; l <= d; ++l) q2.add(row1, l + d + 2, p.xc(i, d + 1));
    }
  }
  return sf;
}

// ---------------------------------------------------------------------------
// P3, Q3, R3: the third derivatives d_i d_j d_k (i<=j<=k<=d+1, j<=d) in terms
// of the mixed block F2 and the state F. Rows split into three shapes.
// ---------------------------------------------------------------------------
ThirdFactors build_p3_q3_r3(const FullParams& p) {
  int d = p.d;
  int n = 2 * d + 2;
  PairIndex pi(d);
  TripleIndex ti(d);
  int m = ti.size();
  ThirdFactors tf;
  tf.p3 = Matrix::Zero(m, m);
  tf.q3 = Matrix::Zero(m, pi.size());
  tf.r3 = Matrix::Zero(m, n);
  TripleAcc p3(tf.p3, ti);
  PairAcc q3(tf.q3, pi);
  Acc r3(tf.r3);
  double r2 = p.r * p.r;
  for (int row = 0; row < m; ++row) {
    auto [i, j, k] = ti.triple_at(row);
    int row1 = row + 1;
    if (j < k) {
      // Shape i <= j < k <= d+1.
      double dk = (k == d + 1) ? 1.0 : 0.0;
      p3.add(row1, i, j, j, (dk + 1.0) * p.xc(j, k));
      p3.add(row1, i, j, k, 2.0 * (p.xc(k, k) - p.xc(j, j)));
      p3.add(row1, i, k, k, (dk - 1.0) * p.xc(j, k));
      for (int l = 1; l <= d + 1; ++l) {
        if (l == j || l == k) continue;
        p3.add(row1, i, j, l, p.xc(k, l));
        p3.add(row1, i, k, l, -p.xc(j, l));
        if (k == d + 1) p3.add(row1, i, l, l, p.xc(j, k));
      }
      if (i < j) q3.add(row1, i, j, p.y[k - 1]);
      q3.add(row1, i, k, -p.y[j - 1]);
      if (k == d + 1) r3.add(row1, i + 1, -p.xc(j, k) * r2);
      if (i == j) {
        r3.add(row1, k + 1, -1.0);
        r3.add(row1, i + d + 2, p.y[k - 1]);
      }
    } else if (i < j) {
      // Shape i < j = k <= d.
      p3.add(row1, i, i, j, p.xc(i, j));
      p3.add(row1, i, j, j, 2.0 * (p.xc(j, j) - p.xc(i, i)));
      p3.add(row1, j, j, j, -p.xc(i, j));
      for (int l = 1; l <= d + 1; ++l) {
        if (l == i || l == j) continue;
        p3.add(row1, i, j, l, p.xc(j, l));
        p3.add(row1, j, j, l, -p.xc(i, l));
      }
      q3.add(row1, i, j, p.y[j - 1]);
      r3.add(row1, j + d + 2, -p.y[i - 1]);
      r3.add(row1, i + 1, 1.0);
    } else {
      // Shape i = j = k <= d, from the (i,d+1) pair relation with d_{d+1}^2
      // eliminated through the sphere relation.
      for (int s = 1; s <= d; ++s) {
        p3.add(row1, i, s, d + 1, p.xc(s, d + 1));
        p3.add(row1, i, s, s, -2.0 * (p.xc(d + 1, d + 1) - p.xc(i, i)));
        for (int l = 1; l <= d + 1; ++l) {
          if (l == i) continue;
          p3.add(row1, l, s, s, p.xc(i, l));
        }
      }
      q3.add(row1, i, d + 1, p.y[d]);
      r3.add(row1, 1, -p.y[i - 1] * r2);
      r3.add(row1, i + 1, 2.0 * (p.xc(d + 1, d + 1) - p.xc(i, i)) * r2 + 1.0);
      for (int l = 1; l <= d + 1; ++l) {
        if (l == i) continue;
        r3.add(row1, l + 1, -p.xc(i, l) * r2);
      }
      for (int l = 1; l <= d; ++l) r3.add(row1, l + d + 2, p.y[i - 1]);
    }
  }
  return tf;
}

// ---------------------------------------------------------------------------
// A, B, C, E for direction i: A dF/dy_i = B F + C F2 + E F3.
// ---------------------------------------------------------------------------
DirectionFactors build_abce(const FullParams& p, int dir) {
  int d = p.d;
  int i = dir;
  require(i >= 1 && i <= d + 1, ErrorCode::InvalidArgument,
          "direction out of range");
  int n = 2 * d + 2;
  PairIndex pi(d);
  TripleIndex ti(d);
  DirectionFactors f;
  f.a = Matrix::Zero(n, n);
  f.b = Matrix::Zero(n, n);
  f.c = Matrix::Zero(n, pi.size());
  f.e = Matrix::Zero(n, ti.size());
  Acc a(f.a), b(f.b);
  PairAcc c(f.c, pi);
  TripleAcc e(f.e, ti);
  double r2 = p.r * p.r;

  // Row 1: dZ/dy_i = d_i Z.
  a.add(1, 1, 1.0);
  b.add(1, i + 1, 1.0);

  // Row i+1: d_i d_i.
  if (i <= d) {
    a.add(i + 1, i + 1, 1.0);
    b.add(i + 1, i + d + 2, 1.0);
  } else {
    // d_{d+1}^2 through the sphere relation.
    a.add(d + 2, d + 2, 1.0);
    b.add(d + 2, 1, r2);
    for (int k = 1; k <= d; ++k) b.add(d + 2, k + d + 2, -1.0);
  }

  // Rows j+1 (1 <= j <= d, j != i): pair relation for {i,j}.
  for (int j = 1; j <= d; ++j) {
    if (j == i) continue;
    a.add(j + 1, i + 1, p.xc(i, j));
    a.add(j + 1, j + 1, 2.0 * (p.xc(j, j) - p.xc(i, i)));
    for (int k = 1; k <= d + 1; ++k) {
      if (k == i || k == j) continue;
      a.add(j + 1, k + 1, p.xc(k, j));
      c.add(j + 1, j, k, p.xc(i, k));
    }
    b.add(j + 1, j + 1, p.y[i - 1]);
    b.add(j + 1, i + 1, -p.y[j - 1]);
    b.add(j + 1, j + d + 2, p.xc(i, j));
  }

  // Row d+2 for i <= d: pair relation for {i,d+1} with d_{d+1}^2 eliminated.
  if (i <= d) {
    a.add(d + 2, i + 1, p.xc(i, d + 1));
    a.add(d + 2, d + 2, 2.0 * (p.xc(d + 1, d + 1) - p.xc(i, i)));
    for (int k = 1; k <= d; ++k) {
      if (k == i) continue;
      a.add(d + 2, k + 1, p.xc(k, d + 1));
      c.add(d + 2, k, d + 1, p.xc(i, k));
    }
    b.add(d + 2, 1, p.xc(i, d + 1) * r2);
    b.add(d + 2, d + 2, p.y[i - 1]);
    b.add(d + 2, i + 1, -p.y[d]);
    for (int l = 1; l <= d; ++l) b.add(d + 2, l + d + 2, -p.xc(i, d + 1));
  }

  // Rows j+d+2 (1 <= j <= d, j != i).
  for (int j = 1; j <= d; ++j) {
    if (j == i) continue;
    if (i <= d) {
      a.add(j + d + 2, j + d + 2, -2.0 * (p.xc(j, j) - p.xc(i, i)));
      b.add(j + d + 2, i + 1, 1.0);
      b.add(j + d + 2, j + d + 2, -p.y[i - 1]);
      c.add(j + d + 2, i, j, p.y[j - 1]);
      e.add(j + d + 2, i, i, j, p.xc(i, j));
      e.add(j + d + 2, j, j, j, -p.xc(i, j));
      for (int k = 1; k <= d + 1; ++k) {
        if (k == i || k == j) continue;
        e.add(j + d + 2, i, j, k, p.xc(k, j));
        e.add(j + d + 2, j, j, k, -p.xc(i, k));
      }
    } else {
      // i = d+1: the d_{d+1}^2 d_j term re-expressed via the sphere relation.
      a.add(j + d + 2, j + d + 2, -2.0 * (p.xc(j, j) - p.xc(d + 1, d + 1)));
      b.add(j + d + 2, j + 1, p.xc(d + 1, j) * r2);
      b.add(j + d + 2, d + 2, 1.0);
      b.add(j + d + 2, j + d + 2, -p.y[d]);
      c.add(j + d + 2, j, d + 1, p.y[j - 1]);
      e.add(j + d + 2, j, j, j, -2.0 * p.xc(i, j));
      for (int k = 1; k <= d; ++k) {
        if (k == j) continue;
        e.add(j + d + 2, i, j, k, p.xc(k, j));
        e.add(j + d + 2, j, j, k, -p.xc(i, k));
        e.add(j + d + 2, j, k, k, -p.xc(i, j));
      }
    }
  }

  // Row i+d+2 (i <= d): d_i d_i^2 = d_i^3.
  if (i <= d) {
    a.add(i + d + 2, i + d + 2, 1.0);
    e.add(i + d + 2, i, i, i, 1.0);
  }
  return f;
}

FactoredPfaffian factored_pfaffian(const FullParams& p, int dir) {
  return FactoredPfaffian{build_abce(p, dir), build_p2_q2(p),
                          build_p3_q3_r3(p)};
}

// ---------------------------------------------------------------------------
// PfaffianPoint
// ---------------------------------------------------------------------------
PfaffianPoint::PfaffianPoint(const FullParams& p) : p_(p), n_(2 * p.d + 2) {
  p_.validate();
  sf_ = build_p2_q2(p_);
  tf_ = build_p3_q3_r3(p_);
  lu_p2_ = CheckedLu(sf_.p2, "P2");
  lu_p3_ = CheckedLu(tf_.p3, "P3");
  w2_ = lu_p2_.solve(sf_.q2);
  w3_ = lu_p3_.solve(Matrix(tf_.q3 * w2_ - tf_.r3));
  int nd = p_.d + 1;
  dirs_.resize(nd);
  lu_a_.resize(nd);
  h_.resize(nd);
  have_dir_.assign(nd, 0);
  u2_.resize(nd);
  v3_.resize(nd);
  have_u2_.assign(nd, 0);
  have_v3_.assign(nd, 0);
}

void PfaffianPoint::ensure_direction(int i) {
  require(i >= 1 && i <= p_.d + 1, ErrorCode::InvalidArgument,
          "direction out of range");
  if (have_dir_[i - 1]) return;
  DirectionFactors f = build_abce(p_, i);
  lu_a_[i - 1] = CheckedLu(f.a, "A");
  Matrix rhs = f.b - f.c * w2_ + f.e * w3_;
  h_[i - 1] = lu_a_[i - 1].solve(rhs);
  dirs_[i - 1] = std::move(f);
  have_dir_[i - 1] = 1;
}

const Matrix& PfaffianPoint::h(int i) {
  ensure_direction(i);
  return h_[i - 1];
}

// Derivatives of the affine-in-y builder matrices with respect to y_j are
// obtained by differencing the builder at y = e_j against y = 0. Every entry
// is either independent of y or a plain +-y_k term, so the difference is
// exact in floating point.
namespace {
// Parameter copies at y = e_j and y = 0; builder differences between the two
// give exact d/dy_j matrices because every builder entry is affine in y with
// no coefficient mixing x and y.
std::pair<FullParams, FullParams> y_probe(const FullParams& p, int j) {
  FullParams p0 = p;
  std::fill(p0.y.begin(), p0.y.end(), 0.0);
  FullParams pe = p0;
  pe.y[j - 1] = 1.0;
  return {pe, p0};
}
}  // namespace

const Matrix& PfaffianPoint::u2(int j) {
  if (!have_u2_[j - 1]) {
    auto [pe, p0] = y_probe(p_, j);
    Matrix dq2 = build_p2_q2(pe).q2 - build_p2_q2(p0).q2;
    u2_[j - 1] = lu_p2_.solve(dq2);
    have_u2_[j - 1] = 1;
  }
  return u2_[j - 1];
}

const Matrix& PfaffianPoint::v3(int j) {
  if (!have_v3_[j - 1]) {
    auto [pe, p0] = y_probe(p_, j);
    ThirdFactors te = build_p3_q3_r3(pe);
    ThirdFactors t0 = build_p3_q3_r3(p0);
    v3_[j - 1] = lu_p3_.solve(Matrix((te.q3 - t0.q3) * w2_ +
                                     tf_.q3 * u2(j) - (te.r3 - t0.r3)));
    have_v3_[j - 1] = 1;
  }
  return v3_[j - 1];
}

Matrix PfaffianPoint::h_dy(int i, int j) {
  ensure_direction(i);
  require(j >= 1 && j <= p_.d + 1, ErrorCode::InvalidArgument,
          "derivative direction out of range");
  auto [pe, p0] = y_probe(p_, j);
  DirectionFactors fe = build_abce(pe, i);
  DirectionFactors f0 = build_abce(p0, i);
  Matrix rhs = (fe.b - f0.b) - (fe.c - f0.c) * w2_ -
               dirs_[i - 1].c * u2(j) + dirs_[i - 1].e * v3(j);
  return lu_a_[i - 1].solve(rhs);
}

Matrix PfaffianPoint::h_x(int i, int j) {
  if (i > j) std::swap(i, j);
  return h_dy(i, j) + h(i) * h(j);
}

// Radial direction. Scaling each y_i by r and each x_ij by r^2 multiplies the
// exponent by a common factor, giving the homogeneity relation
//   r dZ/dr = 2 sum_{i<=j} x_ij d_i d_j Z + sum_i y_i d_i Z + d Z.
// Applying a monomial derivative d^alpha to it commutes up to [d^alpha, y_i]
// terms that contribute |alpha| extra copies of the entry itself, hence the
// per-entry degree offsets (0 for Z, 1 for d_i, 2 for d_i^2).
Matrix PfaffianPoint::h_r() {
  int d = p_.d;
  Matrix acc = Matrix::Zero(n_, n_);
  for (int i = 1; i <= d + 1; ++i)
    for (int j = i; j <= d + 1; ++j) acc += 2.0 * p_.xc(i, j) * h_x(i, j);
  for (int i = 1; i <= d + 1; ++i) acc += p_.y[i - 1] * h(i);
  for (int k = 0; k < n_; ++k) {
    double degree = (k == 0) ? 0.0 : (k <= d + 1 ? 1.0 : 2.0);
    acc(k, k) += d + degree;
  }
  return acc / p_.r;
}

Vector PfaffianPoint::mixed_second(const StateVector& f) {
  require(f.d == p_.d, ErrorCode::InvalidArgument, "state dimension mismatch");
  Eigen::Map<const Vector> fv(f.entries.data(), n_);
  return -(w2_ * fv);
}

Matrix PfaffianPoint::generator(const std::vector<double>& dx_ut,
                                const std::vector<double>& dy) {
  int d = p_.d;
  require(static_cast<int>(dx_ut.size()) == ut_size(d) &&
              static_cast<int>(dy.size()) == d + 1,
          ErrorCode::InvalidArgument, "generator coefficient size mismatch");
  Matrix acc = Matrix::Zero(n_, n_);
  for (int i = 1; i <= d + 1; ++i) {
    if (dy[i - 1] != 0.0) acc += dy[i - 1] * h(i);
    for (int j = i; j <= d + 1; ++j) {
      double c = dx_ut[ut_index(i, j, d)];
      if (c != 0.0) acc += c * h_x(i, j);
    }
  }
  return acc;
}

Matrix h_matrix(const FullParams& p, int dir) {
  PfaffianPoint pt(p);
  return pt.h(dir);
}
Matrix h_matrix_dy(const FullParams& p, int i, int j) {
  PfaffianPoint pt(p);
  return pt.h_dy(i, j);
}
Matrix h_matrix_x(const FullParams& p, int i, int j) {
  PfaffianPoint pt(p);
  return pt.h_x(i, j);
}
Matrix h_matrix_r(const FullParams& p) {
  PfaffianPoint pt(p);
  return pt.h_r();
}
Vector mixed_second(const FullParams& p, const StateVector& f) {
  PfaffianPoint pt(p);
  return pt.mixed_second(f);
}

}  // namespace pfaffian
}  // namespace fb

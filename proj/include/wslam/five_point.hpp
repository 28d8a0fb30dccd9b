#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "wslam/essential.hpp"
#include "wslam/types.hpp"

namespace wslam {
namespace detail {

// Polynomial machinery for the five-point solver. Candidate essential
// matrices are E = x*E1 + y*E2 + z*E3 + E4 over the 4-dim nullspace of the
// epipolar constraints; entries of E are degree-1 polynomials in (x, y, z)
// and the ten algebraic constraints (det(E) = 0 and the trace constraint
// 2*E*E^T*E - tr(E*E^T)*E = 0) are degree-3.
//
// Degree-1 monomials: [x, y, z, 1]
// Degree-2 monomials: [x2, xy, xz, y2, yz, z2, x, y, z, 1]
// Degree-3 monomials: [x3, x2y, x2z, xy2, xyz, xz2, y3, y2z, yz2, z3,
//                      x2, xy, xz, y2, yz, z2, x, y, z, 1]
using Poly1 = Eigen::Matrix<double, 4, 1>;
using Poly2 = Eigen::Matrix<double, 10, 1>;
using Poly3 = Eigen::Matrix<double, 20, 1>;

inline Poly2 mul11(const Poly1& a, const Poly1& b) {
  // index map for (deg1 x deg1) -> deg2
  static constexpr int idx[4][4] = {
      {0, 1, 2, 6},
      {1, 3, 4, 7},
      {2, 4, 5, 8},
      {6, 7, 8, 9},
  };
  Poly2 out = Poly2::Zero();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out(idx[i][j]) += a(i) * b(j);
  return out;
}

inline Poly3 mul21(const Poly2& q, const Poly1& l) {
  // index map for (deg2 x deg1) -> deg3
  static constexpr int idx[10][4] = {
      {0, 1, 2, 10},    // x2 * {x,y,z,1}
      {1, 3, 4, 11},    // xy
      {2, 4, 5, 12},    // xz
      {3, 6, 7, 13},    // y2
      {4, 7, 8, 14},    // yz
      {5, 8, 9, 15},    // z2
      {10, 11, 12, 16}, // x
      {11, 13, 14, 17}, // y
      {12, 14, 15, 18}, // z
      {16, 17, 18, 19}, // 1
  };
  Poly3 out = Poly3::Zero();
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 4; ++j) out(idx[i][j]) += q(i) * l(j);
  return out;
}

}  // namespace detail

// Five-point minimal solver (Stewenius-style action matrix). Takes exactly
// five (or more; only constraints are stacked) normalized correspondences
// and returns all real essential-matrix candidates.
inline std::vector<Mat3> solve_essential_five_point(const std::vector<Correspondence>& corrs) {
  using namespace detail;
  const int n = static_cast<int>(corrs.size());
  if (n < 5) throw DegenerateConfiguration("five_point: needs >= 5 correspondences");

  MatX Q(n, 9);
  for (int i = 0; i < n; ++i) {
    const Vec3 a(corrs[i].x0.x(), corrs[i].x0.y(), 1.0);
    const Vec3 b(corrs[i].x1.x(), corrs[i].x1.y(), 1.0);
    // coefficient of E(r,c) is b(r) * a(c), stacked row-major
    Q.row(i) << b.x() * a.x(), b.x() * a.y(), b.x(),
                b.y() * a.x(), b.y() * a.y(), b.y(),
                a.x(), a.y(), 1.0;
  }
  Eigen::JacobiSVD<MatX> svd(Q, Eigen::ComputeFullV);
  std::array<Mat3, 4> basis;
  for (int k = 0; k < 4; ++k) {
    const VecX e = svd.matrixV().col(5 + k);
    basis[k] << e(0), e(1), e(2), e(3), e(4), e(5), e(6), e(7), e(8);
  }

  // E(i,j) as a degree-1 polynomial over (x, y, z, 1).
  Poly1 Ep[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      Ep[i][j] = Poly1(basis[0](i, j), basis[1](i, j), basis[2](i, j), basis[3](i, j));

  Eigen::Matrix<double, 10, 20> C;
  // Row 0: det(E) = 0.
  {
    const Poly2 m01 = mul11(Ep[1][1], Ep[2][2]) - mul11(Ep[1][2], Ep[2][1]);
    const Poly2 m02 = mul11(Ep[1][0], Ep[2][2]) - mul11(Ep[1][2], Ep[2][0]);
    const Poly2 m03 = mul11(Ep[1][0], Ep[2][1]) - mul11(Ep[1][1], Ep[2][0]);
    const Poly3 det = mul21(m01, Ep[0][0]) - mul21(m02, Ep[0][1]) + mul21(m03, Ep[0][2]);
    C.row(0) = det.transpose();
  }
  // Rows 1..9: 2*E*E^T*E - tr(E*E^T)*E = 0.
  Poly2 EEt[3][3];
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) {
      Poly2 acc = Poly2::Zero();
      for (int j = 0; j < 3; ++j) acc += mul11(Ep[i][j], Ep[k][j]);
      EEt[i][k] = acc;
    }
  const Poly2 tr = EEt[0][0] + EEt[1][1] + EEt[2][2];
  int row = 1;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Poly3 acc = Poly3::Zero();
      for (int k = 0; k < 3; ++k) acc += mul21(EEt[i][k] * 2.0, Ep[k][j]);
      acc -= mul21(tr, Ep[i][j]);
      C.row(row++) = acc.transpose();
    }

  // Reduce: every degree-3 monomial becomes a combination of the 10 basis
  // monomials [x2, xy, xz, y2, yz, z2, x, y, z, 1].
  const Eigen::Matrix<double, 10, 10> C3 = C.leftCols<10>();
  Eigen::FullPivLU<Eigen::Matrix<double, 10, 10>> lu(C3);
  if (!lu.isInvertible())
    throw DegenerateConfiguration("five_point: degenerate minimal sample");
  const Eigen::Matrix<double, 10, 10> G = lu.solve(C.rightCols<10>());

  // Action matrix for multiplication by z in the quotient ring.
  Eigen::Matrix<double, 10, 10> Az = Eigen::Matrix<double, 10, 10>::Zero();
  Az.row(0) = -G.row(2);  // z * x2  = x2z
  Az.row(1) = -G.row(4);  // z * xy  = xyz
  Az.row(2) = -G.row(5);  // z * xz  = xz2
  Az.row(3) = -G.row(7);  // z * y2  = y2z
  Az.row(4) = -G.row(8);  // z * yz  = yz2
  Az.row(5) = -G.row(9);  // z * z2  = z3
  Az(6, 2) = 1.0;         // z * x   = xz
  Az(7, 4) = 1.0;         // z * y   = yz
  Az(8, 5) = 1.0;         // z * z   = z2
  Az(9, 8) = 1.0;         // z * 1   = z

  Eigen::EigenSolver<Eigen::Matrix<double, 10, 10>> eig(Az, true);
  std::vector<Mat3> out;
  for (int k = 0; k < 10; ++k) {
    if (std::abs(eig.eigenvalues()(k).imag()) > 1e-8 * (1.0 + std::abs(eig.eigenvalues()(k).real())))
      continue;
    const auto v = eig.eigenvectors().col(k);
    if (std::abs(v(9).real()) < 1e-12) continue;
    const double x = (v(6) / v(9)).real();
    const double y = (v(7) / v(9)).real();
    const double z = (v(8) / v(9)).real();
    Mat3 E = x * basis[0] + y * basis[1] + z * basis[2] + basis[3];
    const double scale = E.norm();
    if (scale < 1e-12 || !E.allFinite()) continue;
    out.push_back(project_to_essential(E / scale));
  }
  return out;
}

}  // namespace wslam

#pragma once

// Building blocks of the S-procedure LMIs shared by the robust schemes.

#include "secrate/hermitian.hpp"

namespace secrate::lmi {

// [I; h], (N+1) x N.
inline CMatrix lifted(const CRowVector& h) {
  const auto n = h.size();
  CMatrix l = CMatrix::Zero(n + 1, n);
  l.topRows(n).setIdentity();
  l.row(n) = h;
  return l;
}

// diag(top I, bottom) of size N+1.
inline CMatrix border(int n, double top, double bottom) {
  CMatrix d = CMatrix::Zero(n + 1, n + 1);
  d.topLeftCorner(n, n).setIdentity();
  d *= top;
  d(n, n) = bottom;
  return d;
}

// e e^T for the last coordinate of a d x d block, times c.
inline CMatrix corner(int d, double c) {
  CMatrix e = CMatrix::Zero(d, d);
  e(d - 1, d - 1) = c;
  return e;
}

}  // namespace secrate::lmi

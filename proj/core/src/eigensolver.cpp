#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "cvsc/error.hpp"
#include "cvsc/smallsignal.hpp"

namespace cvsc::smallsignal {

namespace {

double norm1(const Eigen::MatrixXd& a) {
  double n = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) n = std::max(n, a.col(j).cwiseAbs().sum());
  return n;
}

double sign_of(double a, double b) { return b >= 0.0 ? std::abs(a) : -std::abs(a); }

}  // namespace

Eigen::VectorXd balance(Eigen::MatrixXd& a) {
  constexpr double radix = 2.0;
  constexpr double sqrdx = radix * radix;
  const Eigen::Index n = a.rows();
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(n);
  bool done = false;
  while (!done) {
    done = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      double r = 0.0, c = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(a(j, i));
        r += std::abs(a(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix;
      double f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= radix;
        c *= sqrdx;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= sqrdx;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        scale(i) *= f;
        a.row(i) /= f;
        a.col(i) *= f;
      }
    }
  }
  return scale;
}

void hessenberg(Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index k = 0; k + 2 < n; ++k) {
    const Eigen::Index m = n - k - 1;
    Eigen::VectorXd v = a.col(k).tail(m);
    const double xnorm = v.norm();
    if (xnorm == 0.0) continue;
    const double alpha = -sign_of(xnorm, v(0));
    v(0) -= alpha;
    const double vnorm = v.norm();
    if (vnorm == 0.0) continue;
    v /= vnorm;
    // Left: rows k+1.., columns k..
    Eigen::RowVectorXd w = v.transpose() * a.bottomRightCorner(m, n - k);
    a.bottomRightCorner(m, n - k).noalias() -= 2.0 * v * w;
    // Right: all rows, columns k+1..
    Eigen::VectorXd u = a.rightCols(m) * v;
    a.rightCols(m).noalias() -= 2.0 * u * v.transpose();
    a(k + 1, k) = alpha;
    a.col(k).tail(m - 1).setZero();
  }
}

Eigen::VectorXcd hessenberg_eigenvalues(Eigen::MatrixXd& a, int max_sweeps) {
  const int n = static_cast<int>(a.rows());
  Eigen::VectorXcd wri(n);
  const double eps = std::numeric_limits<double>::epsilon();
  double anorm = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(a(i, j));
  }
  int nn = n - 1;
  double t = 0.0;
  while (nn >= 0) {
    int its = 0;
    int l;
    do {
      for (l = nn; l > 0; --l) {
        double s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
        if (s == 0.0) s = anorm;
        if (std::abs(a(l, l - 1)) <= eps * s) {
          a(l, l - 1) = 0.0;
          break;
        }
      }
      double x = a(nn, nn);
      if (l == nn) {
        wri(nn--) = x + t;
      } else {
        double y = a(nn - 1, nn - 1);
        double w = a(nn, nn - 1) * a(nn - 1, nn);
        if (l == nn - 1) {
          const double p = 0.5 * (y - x);
          const double q = p * p + w;
          double z = std::sqrt(std::abs(q));
          x += t;
          if (q >= 0.0) {
            z = p + sign_of(z, p);
            wri(nn - 1) = wri(nn) = x + z;
            if (z != 0.0) wri(nn) = x - w / z;
          } else {
            wri(nn) = complex(x + p, -z);
            wri(nn - 1) = std::conj(wri(nn));
          }
          nn -= 2;
        } else {
          if (its == max_sweeps) throw EigenError("QR iteration did not converge");
          if (its > 0 && its % 10 == 0) {
            // Exceptional shift.
            t += x;
            for (int i = 0; i <= nn; ++i) a(i, i) -= x;
            const double s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
            y = x = 0.75 * s;
            w = -0.4375 * s * s;
          }
          ++its;
          int m;
          double p = 0.0, q = 0.0, r = 0.0, z;
          for (m = nn - 2; m >= l; --m) {
            z = a(m, m);
            r = x - z;
            double s = y - z;
            p = (r * s - w) / a(m + 1, m) + a(m, m + 1);
            q = a(m + 1, m + 1) - z - r - s;
            r = a(m + 2, m + 1);
            s = std::abs(p) + std::abs(q) + std::abs(r);
            p /= s;
            q /= s;
            r /= s;
            if (m == l) break;
            const double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
            const double v = std::abs(p) * (std::abs(a(m - 1, m - 1)) + std::abs(z) + std::abs(a(m + 1, m + 1)));
            if (u <= eps * v) break;
          }
          for (int i = m; i < nn - 1; ++i) {
            a(i + 2, i) = 0.0;
            if (i != m) a(i + 2, i - 1) = 0.0;
          }
          for (int k = m; k < nn; ++k) {
            if (k != m) {
              p = a(k, k - 1);
              q = a(k + 1, k - 1);
              r = 0.0;
              if (k + 1 != nn) r = a(k + 2, k - 1);
              x = std::abs(p) + std::abs(q) + std::abs(r);
              if (x != 0.0) {
                p /= x;
                q /= x;
                r /= x;
              }
            }
            const double s = sign_of(std::sqrt(p * p + q * q + r * r), p);
            if (s == 0.0) continue;
            if (k == m) {
              if (l != m) a(k, k - 1) = -a(k, k - 1);
            } else {
              a(k, k - 1) = -s * x;
            }
            p += s;
            x = p / s;
            y = q / s;
            z = r / s;
            q /= p;
            r /= p;
            for (int j = k; j <= nn; ++j) {
              p = a(k, j) + q * a(k + 1, j);
              if (k + 1 != nn) {
                p += r * a(k + 2, j);
                a(k + 2, j) -= p * z;
              }
              a(k + 1, j) -= p * y;
              a(k, j) -= p * x;
            }
            const int mmin = nn < k + 3 ? nn : k + 3;
            for (int i = l; i <= mmin; ++i) {
              p = x * a(i, k) + y * a(i, k + 1);
              if (k + 1 != nn) {
                p += z * a(i, k + 2);
                a(i, k + 2) -= p * r;
              }
              a(i, k + 1) -= p * q;
              a(i, k) -= p;
            }
          }
        }
      }
    } while (l + 1 < nn);
  }
  return wri;
}

Eigen::VectorXcd eigenvalues(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw EigenError("matrix is not square");
  if (!a.allFinite()) throw EigenError("matrix has non-finite entries");
  Eigen::MatrixXd h = a;
  balance(h);
  hessenberg(h);
  return hessenberg_eigenvalues(h);
}

namespace {

// Inverse iteration on (m - mu I) with vectors kept orthogonal to `against`.
Eigen::VectorXcd inverse_iteration(const Eigen::MatrixXd& m, complex lambda, double anorm,
                                   const std::vector<Eigen::VectorXcd>& against, std::mt19937& rng) {
  const Eigen::Index n = m.rows();
  const double shift_size = std::max(anorm, 1.0) * 1e-13;
  const complex mu = lambda + complex(shift_size, 0.0);
  Eigen::MatrixXcd shifted = m.cast<complex>();
  shifted.diagonal().array() -= mu;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(shifted);

  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXcd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = dist(rng);
  auto orthogonalize = [&](Eigen::VectorXcd& z) {
    for (const auto& q : against) z -= q.dot(z) * q;
  };
  orthogonalize(v);
  v.normalize();
  for (int it = 0; it < 6; ++it) {
    Eigen::VectorXcd z = lu.solve(v);
    if (!z.allFinite()) {
      // Exactly singular pivot: fall back to a slightly larger shift.
      shifted.diagonal().array() -= complex(shift_size, 0.0);
      lu.compute(shifted);
      z = lu.solve(v);
    }
    orthogonalize(z);
    const double zn = z.norm();
    if (zn == 0.0 || !std::isfinite(zn)) break;
    v = z / zn;
    const double res = (m.cast<complex>() * v - lambda * v).norm();
    if (res <= 1e-14 * std::max(anorm, 1.0) && it >= 1) break;
  }
  // Fix the phase: largest component real and positive.
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  const complex ph = std::abs(v(imax)) > 0.0 ? std::conj(v(imax)) / std::abs(v(imax)) : complex(1.0, 0.0);
  v *= ph;
  if (lambda.imag() == 0.0) v = v.real().cast<complex>();
  return v;
}

}  // namespace

EigenDecomposition eig_nonsymmetric(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw EigenError("matrix is not square");
  if (!a.allFinite()) throw EigenError("matrix has non-finite entries");
  const Eigen::Index n = a.rows();
  EigenDecomposition out;
  if (n == 0) return out;

  Eigen::MatrixXd b = a;
  const Eigen::VectorXd d = balance(b);
  Eigen::MatrixXd h = b;
  hessenberg(h);
  out.values = hessenberg_eigenvalues(h);

  const double bnorm = norm1(b);
  const double cluster_tol = 1e-10 * std::max(bnorm, 1.0);
  const Eigen::MatrixXd bt = b.transpose();
  std::mt19937 rng(20240531u);

  Eigen::MatrixXcd rb(n, n), lb(n, n);  // balanced right (columns) / left (columns, transposed later)
  std::vector<bool> done(n, false);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (done[k]) continue;
    const complex lam = out.values(k);
    if (lam.imag() < 0.0) {
      // Partner with positive imaginary part is computed first when present.
      Eigen::Index partner = -1;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!done[j] && j != k && out.values(j) == std::conj(lam)) partner = j;
      }
      if (partner >= 0) {
        std::swap(out.values(k), out.values(partner));
      }
    }
    const complex lk = out.values(k);
    std::vector<Eigen::VectorXcd> prev_r, prev_l;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (done[j] && std::abs(out.values(j) - lk) <= cluster_tol) {
        prev_r.push_back(rb.col(j).normalized());
        prev_l.push_back(lb.col(j).normalized());
      }
    }
    rb.col(k) = inverse_iteration(b, lk, bnorm, prev_r, rng);
    lb.col(k) = inverse_iteration(bt, lk, bnorm, prev_l, rng);
    done[k] = true;
    if (lk.imag() > 0.0) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!done[j] && out.values(j) == std::conj(lk)) {
          rb.col(j) = rb.col(k).conjugate();
          lb.col(j) = lb.col(k).conjugate();
          done[j] = true;
          break;
        }
      }
    }
  }

  // Back to the original coordinates.
  out.right = d.cast<complex>().asDiagonal() * rb;
  Eigen::MatrixXcd left = (lb.transpose()) * d.cwiseInverse().cast<complex>().asDiagonal();
  for (Eigen::Index k = 0; k < n; ++k) out.right.col(k).normalize();

  // Biorthonormalize within clusters of (numerically) equal eigenvalues.
  std::vector<bool> seen(n, false);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (seen[k]) continue;
    std::vector<Eigen::Index> cl;
    for (Eigen::Index j = k; j < n; ++j) {
      if (!seen[j] && std::abs(out.values(j) - out.values(k)) <= cluster_tol) {
        cl.push_back(j);
        seen[j] = true;
      }
    }
    const Eigen::Index c = static_cast<Eigen::Index>(cl.size());
    Eigen::MatrixXcd lc(c, n), rc(n, c);
    for (Eigen::Index i = 0; i < c; ++i) {
      lc.row(i) = left.row(cl[i]);
      rc.col(i) = out.right.col(cl[i]);
    }
    const Eigen::MatrixXcd m = lc * rc;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    const auto sv = svd.singularValues();
    double lnorm = 0.0;
    for (Eigen::Index i = 0; i < c; ++i) lnorm = std::max(lnorm, lc.row(i).norm());
    if (sv(c - 1) <= 1e-12 * sv(0) || sv(c - 1) <= 1e-14 * lnorm) out.reliable = false;
    if (sv(c - 1) > 0.0) {
      const Eigen::MatrixXcd fixed = m.fullPivLu().solve(lc);
      for (Eigen::Index i = 0; i < c; ++i) left.row(cl[i]) = fixed.row(i);
    }
  }
  out.left = left;

  const double anorm = std::max(norm1(a), std::numeric_limits<double>::min());
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::VectorXcd r = out.right.col(k);
    const double res = (a.cast<complex>() * r - out.values(k) * r).norm() / (anorm * r.norm());
    out.max_residual = std::max(out.max_residual, res);
  }
  if (!(out.max_residual < 1e-8)) {
    throw EigenError("eigenvector residual " + std::to_string(out.max_residual) + " exceeds 1e-8");
  }
  return out;
}

Participation participation_factors(const Eigen::MatrixXcd& right, const Eigen::MatrixXcd& left) {
  const Eigen::Index n = right.rows();
  const Eigen::Index nm = right.cols();
  if (left.rows() != nm || left.cols() != n) throw EigenError("eigenvector shapes do not match");
  Participation p;
  p.factors.resize(n, nm);
  p.dominant.resize(nm);
  for (Eigen::Index k = 0; k < nm; ++k) {
    const double norm_lr = std::abs(left.row(k).transpose().cwiseProduct(right.col(k)).sum());
    if (!(std::abs(norm_lr - 1.0) < 1e-6)) p.reliable = false;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      p.factors(i, k) = std::abs(left(k, i) * right(i, k));
      sum += p.factors(i, k);
    }
    if (!(sum > 0.0) || !std::isfinite(sum)) {
      p.reliable = false;
      p.factors.col(k).setConstant(1.0 / static_cast<double>(n));
    } else {
      p.factors.col(k) /= sum;
    }
    Eigen::Index imax = 0;
    p.factors.col(k).maxCoeff(&imax);
    p.dominant[k] = static_cast<int>(imax);
  }
  return p;
}

}  // namespace cvsc::smallsignal

#include "hypo/nilapprox.hpp"

#include <cmath>

namespace hypo {

namespace {

using PolyMatrix = std::vector<std::vector<RealPolynomial>>;

RealPolynomial truncate(const RealPolynomial& p, const std::vector<int>& weights, int max_weight) {
  return p.truncated(weights, max_weight);
}

PolyMatrix matmul(const PolyMatrix& a, const PolyMatrix& b, const std::vector<int>& w, int W) {
  const std::size_t n = a.size(), k = b.size(), m = b[0].size();
  const int nv = static_cast<int>(w.size());
  PolyMatrix c(n, std::vector<RealPolynomial>(m, RealPolynomial(nv)));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < k; ++l) {
      if (a[i][l].is_zero()) continue;
      for (std::size_t j = 0; j < m; ++j)
        if (!b[l][j].is_zero()) c[i][j] += mul_truncated(a[i][l], b[l][j], w, W);
    }
  return c;
}

PolyMatrix constant_matrix(const Eigen::MatrixXd& a, int nv) {
  PolyMatrix c(a.rows(), std::vector<RealPolynomial>(a.cols(), RealPolynomial(nv)));
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      if (a(i, j) != 0) c[i][j] = RealPolynomial::constant(nv, a(i, j));
  return c;
}

/// (I + M)^{-1} for M without constant terms, truncated at weight W.
PolyMatrix neumann_inverse(const PolyMatrix& M, const std::vector<int>& w, int W) {
  const std::size_t n = M.size();
  const int nv = static_cast<int>(w.size());
  PolyMatrix sum = constant_matrix(Eigen::MatrixXd::Identity(n, n), nv);
  PolyMatrix power = sum;
  for (int k = 1; k <= W; ++k) {
    power = matmul(power, M, w, W);
    bool all_zero = true;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (power[i][j].is_zero()) continue;
        all_zero = false;
        if (k % 2)
          sum[i][j] -= power[i][j];
        else
          sum[i][j] += power[i][j];
      }
    if (all_zero) break;
  }
  return sum;
}

RealPolynomial compose_truncated(const RealPolynomial& f, const std::vector<RealPolynomial>& images,
                                 const std::vector<int>& w, int W) {
  const int nv = static_cast<int>(w.size());
  RealPolynomial out(nv);
  std::vector<std::vector<RealPolynomial>> powers(images.size());
  for (const auto& [e, c] : f.terms()) {
    RealPolynomial term = RealPolynomial::constant(nv, c);
    for (std::size_t i = 0; i < images.size() && !term.is_zero(); ++i) {
      if (e[i] == 0) continue;
      auto& pw = powers[i];
      if (pw.empty()) pw.push_back(RealPolynomial::constant(nv, 1.0));
      while (static_cast<int>(pw.size()) <= e[i]) pw.push_back(mul_truncated(pw.back(), images[i], w, W));
      term = mul_truncated(term, pw[e[i]], w, W);
    }
    out += term;
  }
  return out;
}

}  // namespace

RealPolynomial mul_truncated(const RealPolynomial& a, const RealPolynomial& b, const std::vector<int>& weights,
                             int max_weight) {
  RealPolynomial r(a.nvars());
  Exponents e(a.nvars());
  for (const auto& [ea, ca] : a.terms()) {
    const int wa = weighted_degree_of(ea, weights);
    if (wa > max_weight) continue;
    for (const auto& [eb, cb] : b.terms()) {
      if (wa + weighted_degree_of(eb, weights) > max_weight) continue;
      for (int i = 0; i < a.nvars(); ++i) e[i] = ea[i] + eb[i];
      r.add_term(e, ca * cb);
    }
  }
  return r;
}

ThetaChart::ThetaChart(const std::vector<PolyVectorField>& fields, int m, std::vector<double> y,
                       std::vector<double> base_point, NewtonOptions newton)
    : fields_(fields),
      alg_(static_cast<int>(fields.size()), m),
      y_(std::move(y)),
      base_(std::move(base_point)),
      newton_(newton),
      flow_(lyndon_frame(fields, m)) {
  const int P = fields[0].p(), q = fields[0].q();
  if (P != alg_.dim())
    throw PreconditionError("Θ chart needs p = dim g_{d,m} (lift the system first): p = " + std::to_string(P) +
                            ", dim = " + std::to_string(alg_.dim()));
  if (static_cast<int>(y_.size()) != q || static_cast<int>(base_.size()) != P)
    throw PreconditionError("Θ chart: base point or parameter has the wrong size");
  std::vector<int> keep(P + q, -1);
  for (int i = 0; i < P; ++i) keep[i] = i;
  for (const auto& f : frame())
    for (int i = 0; i < P; ++i) {
      RealPolynomial c = f.component(i).cast<double>();
      for (int j = 0; j < q; ++j) c = c.substitute(P + j, y_[j]);
      frame_at_y_.push_back(c.remap(keep, P));
    }
  if (flow_.is_exact()) {
    const auto& polys = flow_.polynomials();
    flow_jac_poly_.assign(P, {});
    for (int i = 0; i < P; ++i)
      for (int k = 0; k < P; ++k) flow_jac_poly_[i].push_back(polys[i].derivative(P + k).cast<double>());
  }
  const double det = frame_matrix(base_).determinant();
  if (!(std::abs(det) > 1e-12)) throw PreconditionError("frame is degenerate at the base point (system not free)");
}

std::vector<double> ThetaChart::flow_from(const std::vector<double>& x, const std::vector<double>& u) const {
  return flow_(u, x, y_);
}

Eigen::MatrixXd ThetaChart::frame_matrix(const std::vector<double>& x) const {
  const int P = dim();
  Eigen::MatrixXd F(P, P);
  for (int k = 0; k < P; ++k)
    for (int i = 0; i < P; ++i) F(i, k) = frame_at_y_[k * P + i].evaluate(x);
  return F;
}

Eigen::MatrixXd ThetaChart::flow_jacobian(const std::vector<double>& x, const std::vector<double>& u) const {
  const int P = dim();
  Eigen::MatrixXd J(P, P);
  if (!flow_jac_poly_.empty()) {
    std::vector<double> args = x;
    args.insert(args.end(), u.begin(), u.end());
    args.insert(args.end(), y_.begin(), y_.end());
    for (int i = 0; i < P; ++i)
      for (int k = 0; k < P; ++k) J(i, k) = flow_jac_poly_[i][k].evaluate(args);
    return J;
  }
  for (int k = 0; k < P; ++k) {
    const double h = 1e-5 * std::max(1.0, std::abs(u[k]));
    std::vector<double> up = u, um = u;
    up[k] += h;
    um[k] -= h;
    auto fp = flow_from(x, up), fm = flow_from(x, um);
    for (int i = 0; i < P; ++i) J(i, k) = (fp[i] - fm[i]) / (2 * h);
  }
  return J;
}

std::vector<double> ThetaChart::theta(const std::vector<double>& x, const std::vector<double>& x1) const {
  const int P = dim();
  if (static_cast<int>(x.size()) != P || static_cast<int>(x1.size()) != P)
    throw PreconditionError("theta: points have the wrong size");
  Eigen::VectorXd d(P);
  double scale = 1;
  for (int i = 0; i < P; ++i) {
    d(i) = x1[i] - x[i];
    scale = std::max(scale, std::abs(x1[i]));
  }
  Eigen::VectorXd u = frame_matrix(x).fullPivLu().solve(d);
  auto residual = [&](const Eigen::VectorXd& v) {
    auto end = flow_from(x, std::vector<double>(v.data(), v.data() + P));
    Eigen::VectorXd r(P);
    for (int i = 0; i < P; ++i) r(i) = end[i] - x1[i];
    return r;
  };
  Eigen::VectorXd r = residual(u);
  for (int it = 0; it < newton_.max_iter; ++it) {
    if (r.lpNorm<Eigen::Infinity>() <= newton_.tol * scale) return std::vector<double>(u.data(), u.data() + P);
    Eigen::MatrixXd J = flow_jacobian(x, std::vector<double>(u.data(), u.data() + P));
    Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
    if (!lu.isInvertible()) throw NumericalError("theta: singular flow Jacobian");
    Eigen::VectorXd step = lu.solve(r);
    double damping = 1;
    bool improved = false;
    for (int h = 0; h < 30; ++h) {
      Eigen::VectorXd trial = u - damping * step;
      Eigen::VectorXd rt;
      try {
        rt = residual(trial);
      } catch (const NumericalError&) {
        damping *= 0.5;
        continue;
      }
      if (rt.norm() < r.norm()) {
        u = trial;
        r = rt;
        improved = true;
        break;
      }
      damping *= 0.5;
    }
    if (!improved) break;
  }
  if (r.lpNorm<Eigen::Infinity>() <= newton_.tol * scale) return std::vector<double>(u.data(), u.data() + P);
  throw NumericalError("theta: Newton did not converge (residual " + std::to_string(r.lpNorm<Eigen::Infinity>()) +
                       ")");
}

double ThetaChart::rho(const std::vector<double>& x, const std::vector<double>& x1) const {
  return alg_.homogeneous_norm(theta(x, x1));
}

double ThetaChart::volume_density(const std::vector<double>& x) const {
  return 1.0 / std::abs(frame_matrix(x).determinant());
}

std::vector<RealPolynomial> ThetaChart::flow_series(const std::vector<double>& x, int max_weight) const {
  const int P = dim();
  const auto& w = alg_.weights();
  if (flow_.is_exact()) {
    // Substitute x0 and y into the exact polynomials; keep u.
    std::vector<int> keep(P + P + y_.size(), -1);
    for (int k = 0; k < P; ++k) keep[P + k] = k;
    std::vector<RealPolynomial> out;
    for (const auto& poly : flow_.polynomials()) {
      RealPolynomial c = poly.cast<double>();
      for (int i = 0; i < P; ++i) c = c.substitute(i, x[i]);
      for (std::size_t j = 0; j < y_.size(); ++j) c = c.substitute(2 * P + j, y_[j]);
      out.push_back(truncate(c.remap(keep, P), w, max_weight));
    }
    return out;
  }
  // Lie series: Φ^i(u) = Σ_n (Z^n x_i)(x0) / n!, Z = Σ u_k X̃_k; variables (x, u).
  const int nv = 2 * P;
  std::vector<int> wv(nv, 0);
  for (int k = 0; k < P; ++k) wv[P + k] = w[k];
  std::vector<int> to_xu(P);
  for (int i = 0; i < P; ++i) to_xu[i] = i;
  std::vector<std::vector<RealPolynomial>> Z(P);  // Z[l] = Σ_k u_k F_k^l
  for (int l = 0; l < P; ++l) {
    RealPolynomial acc(nv);
    for (int k = 0; k < P; ++k)
      acc += RealPolynomial::variable(nv, P + k) * frame_at_y_[k * P + l].remap(to_xu, nv);
    Z[l] = {acc};
  }
  std::vector<int> keep(nv, -1);
  for (int k = 0; k < P; ++k) keep[P + k] = k;
  std::vector<RealPolynomial> out;
  for (int i = 0; i < P; ++i) {
    RealPolynomial g = RealPolynomial::variable(nv, i);
    RealPolynomial sum = RealPolynomial::constant(P, x[i]);
    double fact = 1;
    for (int n = 1; n <= max_weight; ++n) {
      RealPolynomial next(nv);
      for (int l = 0; l < P; ++l) {
        RealPolynomial dg = g.derivative(l);
        if (!dg.is_zero()) next += mul_truncated(Z[l][0], dg, wv, max_weight);
      }
      g = std::move(next);
      if (g.is_zero()) break;
      fact *= n;
      RealPolynomial at = g;
      for (int v = 0; v < P; ++v) at = at.substitute(v, x[v]);
      sum += at.remap(keep, P) * (1.0 / fact);
    }
    out.push_back(std::move(sum));
  }
  return out;
}

LocalDegreeReport pushforward_expansion(const ThetaChart& chart, int j, int max_weight, double threshold) {
  const auto& alg = chart.algebra();
  const int P = chart.dim();
  const int m = alg.m();
  if (j < 0 || j >= alg.d()) throw PreconditionError("pushforward_expansion: field index out of range");
  if (max_weight < 0 || max_weight > m + 2) throw PreconditionError("pushforward_expansion needs max_weight <= m + 2");
  const std::vector<int>& w = alg.weights();
  const int W = max_weight;
  const auto& x0 = chart.base_point();

  // Differentiation lowers weight by at most m, so the flow is needed to weight W + m.
  std::vector<RealPolynomial> phi = chart.flow_series(x0, W + m);
  for (auto& c : phi) c = c.truncated(w, W + m);

  Eigen::MatrixXd A0 = chart.frame_matrix(x0);
  Eigen::MatrixXd A0inv = A0.inverse();
  PolyMatrix D(P, std::vector<RealPolynomial>(P, RealPolynomial(P)));
  for (int i = 0; i < P; ++i)
    for (int r = 0; r < P; ++r) D[i][r] = phi[i].derivative(r).truncated(w, W);
  // M = A0^{-1} (DΦ - A0).
  PolyMatrix Dminus = D;
  for (int i = 0; i < P; ++i)
    for (int r = 0; r < P; ++r) Dminus[i][r] -= RealPolynomial::constant(P, A0(i, r));
  for (auto& row : Dminus)
    for (auto& e : row) {
      // Drop rounding-level constants so the Neumann series terminates by weight.
      RealPolynomial clean(P);
      for (const auto& [ex, c] : e.terms())
        if (degree_of(ex) > 0) clean.add_term(ex, c);
      e = clean;
    }
  PolyMatrix M = matmul(constant_matrix(A0inv, P), Dminus, w, W);
  PolyMatrix DphiInv = matmul(neumann_inverse(M, w, W), constant_matrix(A0inv, P), w, W);

  // X̃_j(Φ(u)).
  const auto& frame = chart.frame();
  std::vector<RealPolynomial> Xj;
  {
    const int q = frame[0].q();
    std::vector<int> keep(P + q, -1);
    for (int i = 0; i < P; ++i) keep[i] = i;
    for (int i = 0; i < P; ++i) {
      RealPolynomial c = frame[j].component(i).cast<double>();
      for (int yj = 0; yj < q; ++yj) c = c.substitute(P + yj, chart.y()[yj]);
      Xj.push_back(compose_truncated(c.remap(keep, P), phi, w, W));
    }
  }
  std::vector<RealPolynomial> V(P, RealPolynomial(P));
  for (int r = 0; r < P; ++r)
    for (int i = 0; i < P; ++i) V[r] += mul_truncated(DphiInv[r][i], Xj[i], w, W);

  // Coefficients in the left-invariant frame: c = Wl(u)^{-1} V with Wl(0) = I.
  const auto& Y = alg.left_invariant_fields();
  PolyMatrix Wn(P, std::vector<RealPolynomial>(P, RealPolynomial(P)));
  for (int k = 0; k < P; ++k)
    for (int r = 0; r < P; ++r) {
      RealPolynomial c = Y[k][r].cast<double>();
      if (r == k) c -= RealPolynomial::constant(P, 1.0);
      Wn[r][k] = c.truncated(w, W);
    }
  PolyMatrix Winv = neumann_inverse(Wn, w, W);

  LocalDegreeReport rep;
  rep.j = j;
  rep.max_weight = W;
  for (int k = 0; k < P; ++k) {
    RealPolynomial c(P);
    for (int r = 0; r < P; ++r) c += mul_truncated(Winv[k][r], V[r], w, W);
    rep.expansion.push_back(c);
    RealPolynomial rem = c;
    if (k == j) rem -= RealPolynomial::constant(P, 1.0);
    for (const auto& [e, coeff] : rem.terms()) {
      const int wt = weighted_degree_of(e, w);
      rep.max_remainder = std::max(rep.max_remainder, std::abs(coeff));
      if (wt < w[k]) {
        rep.max_violation = std::max(rep.max_violation, std::abs(coeff));
        if (std::abs(coeff) > threshold) rep.violations.push_back({k, wt, coeff});
      }
    }
  }
  return rep;
}

nlohmann::json LocalDegreeReport::to_json() const {
  nlohmann::json v = nlohmann::json::array();
  for (const auto& x : violations) v.push_back({x.basis_index, x.weight, x.coeff});
  return {{"j", j}, {"max_weight", max_weight}, {"violations", v}, {"max_violation", max_violation}};
}

}  // namespace hypo

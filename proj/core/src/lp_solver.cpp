#include "dcra/lp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <ostream>
#include <stdexcept>
#include <string>

namespace dcra::lp {

std::size_t LpProgram::add_column(double objective, std::vector<Entry> entries) {
  std::map<std::size_t, double> merged;
  for (const auto& e : entries) {
    if (e.row >= rows()) throw std::out_of_range("column entry row " + std::to_string(e.row) + " out of range");
    merged[e.row] += e.value;
  }
  std::vector<Entry> col;
  col.reserve(merged.size());
  for (const auto& [row, value] : merged)
    if (value != 0.0) col.push_back({row, value});
  objective_.push_back(objective);
  columns_.push_back(std::move(col));
  return columns_.size() - 1;
}

LpProgram LpProgram::from_dense(const std::vector<std::vector<double>>& a, const std::vector<double>& b,
                                const std::vector<double>& c) {
  LpProgram p(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) p.set_rhs(i, b[i]);
  if (a.size() != b.size()) throw std::invalid_argument("from_dense: row count mismatch");
  for (std::size_t j = 0; j < c.size(); ++j) {
    std::vector<Entry> col;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].size() != c.size()) throw std::invalid_argument("from_dense: column count mismatch");
      if (a[i][j] != 0.0) col.push_back({i, a[i][j]});
    }
    p.add_column(c[j], std::move(col));
  }
  return p;
}

void LpProgram::validate() const {
  if (columns_.size() != objective_.size()) throw std::invalid_argument("objective/column count mismatch");
  for (double v : rhs_)
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite right-hand side");
  for (double v : objective_)
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite objective coefficient");
  for (const auto& col : columns_)
    for (const auto& e : col)
      if (e.row >= rows() || !std::isfinite(e.value)) throw std::invalid_argument("bad constraint entry");
}

double LpProgram::residual(const std::vector<double>& x) const {
  if (x.size() != cols()) throw std::invalid_argument("residual: wrong solution length");
  std::vector<double> ax(rows(), 0.0);
  for (std::size_t j = 0; j < cols(); ++j)
    for (const auto& e : columns_[j]) ax[e.row] += e.value * x[j];
  double worst = 0.0;
  for (std::size_t i = 0; i < rows(); ++i) worst = std::max(worst, std::abs(ax[i] - rhs_[i]));
  return worst;
}

std::string_view to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "OPTIMAL";
    case Status::Infeasible: return "INFEASIBLE";
    case Status::Unbounded: return "UNBOUNDED";
    case Status::IterationLimit: return "ITERATION_LIMIT";
  }
  return "?";
}

namespace {

class RevisedSimplex {
 public:
  RevisedSimplex(const LpProgram& p, const SolverOptions& opt)
      : opt_(opt), m_(p.rows()), n_(p.cols()), b_(p.rhs()), cols_(n_ + m_), cost_(n_ + m_, 0.0) {
    // Flip rows with negative rhs so the all-artificial basis starts feasible.
    std::vector<double> sign(m_, 1.0);
    for (std::size_t i = 0; i < m_; ++i)
      if (b_[i] < 0.0) {
        sign[i] = -1.0;
        b_[i] = -b_[i];
      }
    for (std::size_t j = 0; j < n_; ++j) {
      cols_[j] = p.column(j);
      for (auto& e : cols_[j]) e.value *= sign[e.row];
    }
    for (std::size_t i = 0; i < m_; ++i) cols_[n_ + i] = {{i, 1.0}};
    row_sign_ = sign;
    c_orig_ = p.objective();
    b_norm_ = 0.0;
    for (double v : b_) b_norm_ = std::max(b_norm_, std::abs(v));

    basis_.resize(m_);
    in_basis_.assign(n_ + m_, false);
    for (std::size_t i = 0; i < m_; ++i) {
      basis_[i] = n_ + i;
      in_basis_[n_ + i] = true;
    }
    binv_.assign(m_ * m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) binv_[i * m_ + i] = 1.0;
    xb_ = b_;
  }

  LpSolution run() {
    LpSolution sol;
    // Solve with every lower bound relaxed to -e_j (e_j small, pseudo-random), i.e. the
    // right-hand side b + A e. The shifted program has no degenerate vertices in practice,
    // which keeps the zero-rhs rows from stalling the pivoting rules.
    std::vector<double> b_true(m_);
    for (std::size_t i = 0; i < m_; ++i) b_true[i] = row_sign_[i] * b_[i];
    if (opt_.perturbation > 0.0) {
      std::mt19937_64 gen(0x5eed);
      std::uniform_real_distribution<double> u(1.0, 2.0);
      const double scale = opt_.perturbation * (1.0 + b_norm_);
      for (std::size_t j = 0; j < n_; ++j) {
        const double e = scale * u(gen);
        for (const auto& entry : cols_[j]) b_[entry.row] += entry.value * e;
      }
      for (std::size_t i = 0; i < m_; ++i) {
        if (b_[i] < 0.0) {
          // Keep the all-artificial start feasible.
          b_[i] = -b_[i];
          flip_row(i);
        }
      }
      xb_ = b_;
    }

    // Phase 1: maximize -(sum of artificials).
    for (std::size_t j = 0; j < n_ + m_; ++j) cost_[j] = j < n_ ? 0.0 : -1.0;
    Status st = iterate(sol);
    if (st == Status::IterationLimit) return finish(sol, st);
    check_accuracy();
    double infeas = 0.0;
    for (std::size_t i = 0; i < m_; ++i)
      if (basis_[i] >= n_) infeas += std::max(0.0, xb_[i]);
    if (infeas > opt_.feasibility_tol * (1.0 + b_norm_)) return finish(sol, Status::Infeasible);

    drive_out_artificials();

    for (std::size_t j = 0; j < n_ + m_; ++j) cost_[j] = j < n_ ? c_orig_[j] : 0.0;
    st = iterate(sol);
    if (st != Status::Optimal || opt_.perturbation <= 0.0) return finish(sol, st);

    // Remove the shift: the basis stays dual feasible, so dual simplex pivots restore
    // primal feasibility; a final primal pass mops up roundoff in the reduced costs.
    for (std::size_t i = 0; i < m_; ++i) b_[i] = row_sign_[i] * b_true[i];
    check_accuracy();
    st = dual_cleanup(sol);
    if (st != Status::Optimal) return finish(sol, st);
    st = iterate(sol);
    return finish(sol, st);
  }

 private:
  bool artificial(std::size_t j) const { return j >= n_; }

  // The basis inverse is stored column-major: entry (i, k) lives at binv_[k * m_ + i].
  void compute_duals(std::vector<double>& pi) const {
    cb_.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) cb_[i] = cost_[basis_[i]];
    pi.assign(m_, 0.0);
    for (std::size_t k = 0; k < m_; ++k) {
      const double* col = &binv_[k * m_];
      double v = 0.0;
      for (std::size_t i = 0; i < m_; ++i) v += cb_[i] * col[i];
      pi[k] = v;
    }
  }

  double reduced_cost(std::size_t j, const std::vector<double>& pi) const {
    double d = cost_[j];
    for (const auto& e : cols_[j]) d -= pi[e.row] * e.value;
    return d;
  }

  void ftran(std::size_t j, std::vector<double>& w) const {
    w.assign(m_, 0.0);
    for (const auto& e : cols_[j]) {
      const double* col = &binv_[e.row * m_];
      for (std::size_t i = 0; i < m_; ++i) w[i] += col[i] * e.value;
    }
  }

  void pivot(std::size_t r, std::size_t entering, const std::vector<double>& w, double theta) {
    for (std::size_t i = 0; i < m_; ++i) xb_[i] -= theta * w[i];
    xb_[r] = theta;
    const double inv = 1.0 / w[r];
    for (std::size_t k = 0; k < m_; ++k) {
      double* col = &binv_[k * m_];
      const double piv = col[r] * inv;
      if (piv != 0.0)
        for (std::size_t i = 0; i < m_; ++i) col[i] -= w[i] * piv;
      col[r] = piv;
    }
    in_basis_[basis_[r]] = false;
    basis_[r] = entering;
    in_basis_[entering] = true;
    if (++since_refactor_ >= opt_.refactor_every) check_accuracy();
  }

  // Recomputes the basic values from the current inverse; a fresh factorization is only
  // paid for when B * (B^-1 b) misses b by more than the refactor tolerance.
  void check_accuracy() {
    since_refactor_ = 0;
    std::vector<double> x(m_, 0.0), r(b_);
    for (std::size_t k = 0; k < m_; ++k) {
      if (b_[k] == 0.0) continue;
      const double* col = &binv_[k * m_];
      for (std::size_t i = 0; i < m_; ++i) x[i] += col[i] * b_[k];
    }
    for (std::size_t i = 0; i < m_; ++i)
      for (const auto& e : cols_[basis_[i]]) r[e.row] -= e.value * x[i];
    double worst = 0.0;
    for (double v : r) worst = std::max(worst, std::abs(v));
    if (worst > opt_.refactor_tol * (1.0 + b_norm_)) {
      refactor();
      return;
    }
    // One step of iterative refinement.
    for (std::size_t k = 0; k < m_; ++k) {
      if (r[k] == 0.0) continue;
      const double* col = &binv_[k * m_];
      for (std::size_t i = 0; i < m_; ++i) x[i] += col[i] * r[k];
    }
    xb_ = std::move(x);
  }

  // Rebuilds the basis inverse by Gauss-Jordan elimination with partial pivoting.
  void refactor() {
    since_refactor_ = 0;
    std::vector<double> bmat(m_ * m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i)
      for (const auto& e : cols_[basis_[i]]) bmat[e.row * m_ + i] = e.value;
    std::vector<double> inv(m_ * m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) inv[i * m_ + i] = 1.0;
    for (std::size_t col = 0; col < m_; ++col) {
      std::size_t piv = col;
      double best = std::abs(bmat[col * m_ + col]);
      for (std::size_t r = col + 1; r < m_; ++r) {
        const double v = std::abs(bmat[r * m_ + col]);
        if (v > best) {
          best = v;
          piv = r;
        }
      }
      if (best < 1e-13) throw std::runtime_error("simplex: singular basis during refactorization");
      if (piv != col) {
        for (std::size_t k = 0; k < m_; ++k) {
          std::swap(bmat[piv * m_ + k], bmat[col * m_ + k]);
          std::swap(inv[piv * m_ + k], inv[col * m_ + k]);
        }
      }
      const double d = 1.0 / bmat[col * m_ + col];
      for (std::size_t k = 0; k < m_; ++k) {
        bmat[col * m_ + k] *= d;
        inv[col * m_ + k] *= d;
      }
      for (std::size_t r = 0; r < m_; ++r) {
        if (r == col) continue;
        const double f = bmat[r * m_ + col];
        if (f == 0.0) continue;
        for (std::size_t k = 0; k < m_; ++k) {
          bmat[r * m_ + k] -= f * bmat[col * m_ + k];
          inv[r * m_ + k] -= f * inv[col * m_ + k];
        }
      }
    }
    // inv is row-major here; transpose into column-major storage.
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t k = 0; k < m_; ++k) binv_[k * m_ + i] = inv[i * m_ + k];
    for (std::size_t i = 0; i < m_; ++i) {
      double v = 0.0;
      const double* row = &inv[i * m_];
      for (std::size_t k = 0; k < m_; ++k) v += row[k] * b_[k];
      xb_[i] = v;
    }
  }

  // Negates row i of the structural columns (artificials stay +1) before any pivoting.
  void flip_row(std::size_t i) {
    row_sign_[i] = -row_sign_[i];
    for (std::size_t j = 0; j < n_; ++j)
      for (auto& e : cols_[j])
        if (e.row == i) e.value = -e.value;
  }

  // Dual simplex from a dual-feasible basis: the most negative basic structural leaves,
  // the entering column keeps every reduced cost non-positive.
  Status dual_cleanup(LpSolution& sol) {
    std::vector<double> pi, w, row(m_);
    while (true) {
      if (sol.iterations >= opt_.max_iterations) return Status::IterationLimit;
      std::size_t r = m_;
      double worst = -opt_.negativity_tol;
      for (std::size_t i = 0; i < m_; ++i) {
        if (fixed_artificial(i)) continue;
        if (xb_[i] < worst) {
          worst = xb_[i];
          r = i;
        }
      }
      if (r == m_) return Status::Optimal;
      compute_duals(pi);
      for (std::size_t k = 0; k < m_; ++k) row[k] = binv_[k * m_ + r];
      std::size_t entering = n_;
      double best_ratio = std::numeric_limits<double>::infinity();
      double best_alpha = 0.0;
      for (std::size_t j = 0; j < n_; ++j) {
        if (in_basis_[j]) continue;
        double alpha = 0.0;
        for (const auto& e : cols_[j]) alpha += row[e.row] * e.value;
        if (alpha >= -opt_.pivot_tol) continue;
        const double ratio = std::max(0.0, -reduced_cost(j, pi)) / -alpha;
        if (ratio < best_ratio - 1e-12 || (ratio <= best_ratio + 1e-12 && -alpha > best_alpha)) {
          best_ratio = std::min(best_ratio, ratio);
          best_alpha = -alpha;
          entering = j;
        }
      }
      if (entering == n_) return Status::Infeasible;
      ftran(entering, w);
      pivot(r, entering, w, xb_[r] / w[r]);
      ++sol.iterations;
    }
  }

  bool fixed_artificial(std::size_t i) const { return artificial(basis_[i]) && cost_[basis_[i]] == 0.0; }

  // Candidate rows for leaving the basis. Artificials still basic in phase 2 sit on rows
  // that drive-out found redundant; their entries are roundoff, so they never block.
  bool blocking(std::size_t i, const std::vector<double>& w, double tol) const {
    return !fixed_artificial(i) && w[i] > tol;
  }

  double pivot_tolerance(const std::vector<double>& w) const {
    double wmax = 0.0;
    for (double v : w) wmax = std::max(wmax, std::abs(v));
    return std::max(opt_.pivot_tol, 1e-9 * wmax);
  }

  // Two-pass Harris test: bound the step with a relaxed tolerance, then take the largest
  // pivot among the rows that block within that bound.
  std::size_t ratio_test_harris(const std::vector<double>& w) const {
    const double tol = pivot_tolerance(w);
    double bound = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m_; ++i) {
      if (!blocking(i, w, tol)) continue;
      const double r = (std::max(0.0, xb_[i]) + opt_.feasibility_tol) / w[i];
      bound = std::min(bound, r);
    }
    std::size_t leave = m_;
    double best = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (!blocking(i, w, tol)) continue;
      const double r = std::max(0.0, xb_[i]) / w[i];
      if (r <= bound && std::abs(w[i]) > best) {
        best = std::abs(w[i]);
        leave = i;
      }
    }
    return leave;
  }

  // Textbook minimum ratio with ties broken by the smallest variable index.
  std::size_t ratio_test_bland(const std::vector<double>& w) const {
    const double tol = pivot_tolerance(w);
    std::size_t leave = m_;
    double theta = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m_; ++i) {
      if (!blocking(i, w, tol)) continue;
      const double r = std::max(0.0, xb_[i]) / w[i];
      if (leave == m_ || r < theta - 1e-12 || (r <= theta + 1e-12 && basis_[i] < basis_[leave])) {
        leave = i;
        theta = std::min(theta, r);
      }
    }
    return leave;
  }

  Status iterate(LpSolution& sol) {
    std::vector<double> pi, w;
    std::size_t degenerate_run = 0;
    bool bland = false;
    while (true) {
      if (sol.iterations >= opt_.max_iterations) return Status::IterationLimit;
      compute_duals(pi);

      std::size_t entering = n_ + m_;
      double best = opt_.optimality_tol;
      for (std::size_t j = 0; j < n_; ++j) {
        if (in_basis_[j]) continue;
        const double d = reduced_cost(j, pi);
        if (d > best) {
          entering = j;
          best = d;
          if (bland) break;
        }
      }
      if (entering == n_ + m_) return Status::Optimal;

      ftran(entering, w);
      const std::size_t leave = bland ? ratio_test_bland(w) : ratio_test_harris(w);
      if (leave == m_) return Status::Unbounded;
      const double theta = std::max(0.0, xb_[leave]) / w[leave];

      if (theta <= opt_.feasibility_tol) {
        if (++degenerate_run >= opt_.degenerate_switch) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }
      if (bland) ++sol.bland_pivots;
      pivot(leave, entering, w, theta);
      ++sol.iterations;
    }
  }

  // Swaps zero-valued artificials out of the basis wherever some structural column has a
  // nonzero entry in their row; the rest belong to redundant rows and stay at zero.
  void drive_out_artificials() {
    std::vector<double> w;
    for (std::size_t r = 0; r < m_; ++r) {
      if (!artificial(basis_[r])) continue;
      row_.resize(m_);
      for (std::size_t k = 0; k < m_; ++k) row_[k] = binv_[k * m_ + r];
      const double* row = row_.data();
      std::size_t best_j = n_;
      double best_v = 1e-7;
      for (std::size_t j = 0; j < n_; ++j) {
        if (in_basis_[j]) continue;
        double v = 0.0;
        for (const auto& e : cols_[j]) v += row[e.row] * e.value;
        if (std::abs(v) > best_v) {
          best_v = std::abs(v);
          best_j = j;
        }
      }
      if (best_j == n_) continue;
      ftran(best_j, w);
      pivot(r, best_j, w, std::max(0.0, xb_[r]) / w[r]);
    }
  }

  LpSolution& finish(LpSolution& sol, Status st) {
    sol.status = st;
    check_accuracy();
    sol.x.assign(n_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] >= n_) continue;
      double v = xb_[i];
      if (v < 0.0 && v > -opt_.feasibility_tol) v = 0.0;
      sol.x[basis_[i]] = v;
    }
    sol.objective = 0.0;
    for (std::size_t j = 0; j < n_; ++j) sol.objective += c_orig_[j] * sol.x[j];
    compute_duals(sol.duals);
    // Duals were computed against sign-flipped rows; map them back.
    for (std::size_t i = 0; i < m_; ++i) sol.duals[i] *= row_sign_[i];
    return sol;
  }

  SolverOptions opt_;
  std::size_t m_, n_;
  std::vector<double> b_;
  std::vector<std::vector<Entry>> cols_;
  std::vector<double> cost_;
  std::vector<double> c_orig_;
  double b_norm_ = 0.0;
  std::vector<std::size_t> basis_;
  std::vector<bool> in_basis_;
  std::vector<double> binv_;
  std::vector<double> xb_;
  std::size_t since_refactor_ = 0;
  std::vector<double> row_sign_;
  mutable std::vector<double> cb_;
  std::vector<double> row_;
};

}  // namespace

LpSolution solve(const LpProgram& program, const SolverOptions& options) {
  program.validate();
  RevisedSimplex simplex(program, options);
  LpSolution sol = simplex.run();
  sol.residual = program.residual(sol.x);
  return sol;
}

void write_text(std::ostream& out, const LpProgram& program) {
  const auto old = out.precision(17);
  out << program.rows() << ' ' << program.cols() << '\n';
  for (std::size_t j = 0; j < program.cols(); ++j) out << (j ? " " : "") << program.objective()[j];
  out << '\n';
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(program.rows());
  for (std::size_t j = 0; j < program.cols(); ++j)
    for (const auto& e : program.column(j)) rows[e.row].emplace_back(j, e.value);
  for (std::size_t i = 0; i < program.rows(); ++i) {
    out << program.rhs()[i] << " |";
    for (const auto& [j, v] : rows[i]) out << ' ' << j << ':' << v;
    out << '\n';
  }
  out.precision(old);
}

}  // namespace dcra::lp

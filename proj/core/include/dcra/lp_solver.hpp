#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <utility>
#include <vector>

namespace dcra::lp {

struct Entry {
  std::size_t row;
  double value;
};

/// maximize c'x  subject to  A x = b,  x >= 0.  A is stored column-wise.
class LpProgram {
 public:
  explicit LpProgram(std::size_t rows = 0) : rhs_(rows, 0.0) {}

  /// Appends a column; entries with the same row are summed, zeros dropped.
  std::size_t add_column(double objective, std::vector<Entry> entries);
  void set_rhs(std::size_t row, double value) { rhs_.at(row) = value; }

  static LpProgram from_dense(const std::vector<std::vector<double>>& a, const std::vector<double>& b,
                              const std::vector<double>& c);

  std::size_t rows() const { return rhs_.size(); }
  std::size_t cols() const { return objective_.size(); }
  const std::vector<double>& objective() const { return objective_; }
  const std::vector<double>& rhs() const { return rhs_; }
  const std::vector<Entry>& column(std::size_t j) const { return columns_[j]; }

  /// Throws std::invalid_argument on inconsistent dimensions or non-finite data.
  void validate() const;

  /// max |A x - b| over rows.
  double residual(const std::vector<double>& x) const;

 private:
  std::vector<double> objective_;
  std::vector<double> rhs_;
  std::vector<std::vector<Entry>> columns_;
};

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

std::string_view to_string(Status s);

struct LpSolution {
  Status status = Status::Infeasible;
  std::vector<double> x;
  double objective = 0.0;
  std::vector<double> duals;  // row multipliers of the final basis
  double residual = 0.0;
  std::size_t iterations = 0;
  std::size_t bland_pivots = 0;
};

struct SolverOptions {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-7;
  // Basic variables below -negativity_tol are repaired before an OPTIMAL return.
  double negativity_tol = 1e-13;
  // Relative size of the random lower-bound shift used against degeneracy; 0 disables it.
  double perturbation = 1e-6;
  // Consecutive degenerate pivots before switching to Bland's rule.
  std::size_t degenerate_switch = 50;
  // Pivots between accuracy checks of the basis inverse; a check that misses by more
  // than refactor_tol (relative to the rhs) rebuilds the inverse from scratch.
  std::size_t refactor_every = 100;
  double refactor_tol = 1e-11;
  std::size_t max_iterations = 1'000'000;
};

/// Two-phase revised simplex. Deterministic for a fixed program and options.
LpSolution solve(const LpProgram& program, const SolverOptions& options = {});

/// Fixed-layout text export: a header line "rows cols", then the objective, then one line
/// per row "rhs | col:value ...", in column order.
void write_text(std::ostream& out, const LpProgram& program);

}  // namespace dcra::lp

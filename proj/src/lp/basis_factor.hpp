#pragma once

#include <vector>

namespace evagg::lp {

// Sparse LU factorization of the simplex basis with product-form updates.
//
// Columns are supplied as sparse (row, value) lists. Pivots are taken from
// column and row singletons first, then by a Markowitz search with
// threshold partial pivoting on what is left. The solves skip zero entries,
// so sparse right-hand sides stay cheap.
class BasisFactor {
 public:
  struct SparseColumn {
    std::vector<int> rows;
    std::vector<double> values;
  };

  // Returns false when the basis matrix is (numerically) singular. The
  // positions left without a pivot and the rows left uncovered are then
  // available for repair, in matching order.
  bool factorize(int m, const std::vector<SparseColumn>& columns);
  const std::vector<int>& deficient_positions() const { return bad_positions_; }
  const std::vector<int>& deficient_rows() const { return bad_rows_; }

  // v <- B^{-1} v   (row space in, basis-position space out)
  void ftran(std::vector<double>& v) const;
  // v <- B^{-T} v   (basis-position space in, row space out)
  void btran(std::vector<double>& v) const;

  // Replaces the column at `position` given alpha = B^{-1} a_new.
  void update(int position, const std::vector<double>& alpha);

  int num_updates() const { return static_cast<int>(etas_.size()); }
  std::size_t eta_nonzeros() const { return eta_nonzeros_; }
  std::size_t lu_nonzeros() const { return l_value_.size() + u_value_.size(); }

 private:
  struct Eta {
    int position;
    double pivot;
    std::vector<int> index;
    std::vector<double> value;
  };

  int m_ = 0;
  // Pivot k eliminates row prow_[k] with basis column pcol_[k].
  std::vector<int> prow_, pcol_;
  std::vector<double> pivot_;
  // L as row operations: for pivot k, v[l_index] -= l_value * v[prow_[k]].
  std::vector<int> l_start_, l_index_;
  std::vector<double> l_value_;
  // U off-diagonal entries by pivot row (columns of later pivots) ...
  std::vector<int> u_start_, u_index_;
  std::vector<double> u_value_;
  // ... and the same entries by pivot column (rows of earlier pivots).
  std::vector<int> uc_start_, uc_index_;
  std::vector<double> uc_value_;

  std::vector<int> bad_positions_, bad_rows_;
  std::vector<Eta> etas_;
  std::size_t eta_nonzeros_ = 0;
  mutable std::vector<double> work_;
};

}  // namespace evagg::lp

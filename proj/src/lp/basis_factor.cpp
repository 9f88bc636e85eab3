#include "lp/basis_factor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace evagg::lp {
namespace {

constexpr double kZeroPivot = 1e-11;
constexpr double kThreshold = 0.01;  // relative to the column max
constexpr double kDrop = 1e-14;

struct Entry {
  int row;
  double value;
};

// Active submatrix during elimination.
struct Active {
  std::vector<std::vector<Entry>> cols;  // by basis position
  std::vector<std::vector<int>> rows;    // column pattern per row
  std::vector<char> row_done, col_done;

  int find(int c, int r) const {
    const auto& col = cols[c];
    for (int k = 0; k < static_cast<int>(col.size()); ++k) {
      if (col[k].row == r) return k;
    }
    return -1;
  }
  void erase_from_col(int c, int r) {
    auto& col = cols[c];
    for (std::size_t k = 0; k < col.size(); ++k) {
      if (col[k].row == r) {
        col[k] = col.back();
        col.pop_back();
        return;
      }
    }
  }
  void erase_from_row(int r, int c) {
    auto& row = rows[r];
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (row[k] == c) {
        row[k] = row.back();
        row.pop_back();
        return;
      }
    }
  }
  double col_max(int c) const {
    double mx = 0.0;
    for (const Entry& e : cols[c]) mx = std::max(mx, std::abs(e.value));
    return mx;
  }
};

}  // namespace

bool BasisFactor::factorize(int m, const std::vector<SparseColumn>& columns) {
  m_ = m;
  etas_.clear();
  eta_nonzeros_ = 0;
  work_.assign(m, 0.0);
  prow_.clear();
  pcol_.clear();
  pivot_.clear();
  l_start_.assign(1, 0);
  l_index_.clear();
  l_value_.clear();
  u_start_.assign(1, 0);
  u_index_.clear();
  u_value_.clear();
  bad_positions_.clear();
  bad_rows_.clear();

  Active a;
  a.cols.assign(m, {});
  a.rows.assign(m, {});
  a.row_done.assign(m, 0);
  a.col_done.assign(m, 0);
  for (int c = 0; c < m; ++c) {
    const auto& col = columns[c];
    for (std::size_t k = 0; k < col.rows.size(); ++k) {
      if (col.values[k] == 0.0) continue;
      a.cols[c].push_back({col.rows[k], col.values[k]});
      a.rows[col.rows[k]].push_back(c);
    }
  }

  std::vector<Entry> urow;  // (column, value) of the pivot row
  auto eliminate = [&](int r, int c) {
    const int kc = a.find(c, r);
    const double piv = a.cols[c][kc].value;
    prow_.push_back(r);
    pcol_.push_back(c);
    pivot_.push_back(piv);

    urow.clear();
    for (int j : a.rows[r]) {
      if (j == c) continue;
      const int k = a.find(j, r);
      urow.push_back({j, a.cols[j][k].value});
      a.erase_from_col(j, r);
    }
    for (const Entry& e : urow) {
      u_index_.push_back(e.row);
      u_value_.push_back(e.value);
    }
    u_start_.push_back(static_cast<int>(u_index_.size()));

    for (const Entry& e : a.cols[c]) {
      if (e.row == r) continue;
      const double l = e.value / piv;
      l_index_.push_back(e.row);
      l_value_.push_back(l);
      a.erase_from_row(e.row, c);
      for (const Entry& u : urow) {
        const int j = u.row;
        const int k = a.find(j, e.row);
        if (k >= 0) {
          a.cols[j][k].value -= l * u.value;
          if (std::abs(a.cols[j][k].value) < kDrop) {
            a.cols[j][k] = a.cols[j].back();
            a.cols[j].pop_back();
            a.erase_from_row(e.row, j);
          }
        } else {
          a.cols[j].push_back({e.row, -l * u.value});
          a.rows[e.row].push_back(j);
        }
      }
    }
    l_start_.push_back(static_cast<int>(l_index_.size()));
    a.cols[c].clear();
    a.rows[r].clear();
    a.row_done[r] = 1;
    a.col_done[c] = 1;
  };

  // Singleton passes: column singletons need no elimination at all, row
  // singletons produce only L entries. Repeat until neither applies.
  std::vector<int> queue;
  bool progress = true;
  while (progress) {
    progress = false;
    queue.clear();
    for (int c = 0; c < m; ++c) {
      if (!a.col_done[c] && a.cols[c].size() == 1) queue.push_back(c);
    }
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const int c = queue[q];
      if (a.col_done[c] || a.cols[c].size() != 1) continue;
      const Entry e = a.cols[c][0];
      if (std::abs(e.value) < kZeroPivot) continue;
      // Removing the row may create new column singletons.
      std::vector<int> touched = a.rows[e.row];
      eliminate(e.row, c);
      progress = true;
      for (int j : touched) {
        if (!a.col_done[j] && a.cols[j].size() == 1) queue.push_back(j);
      }
    }
    queue.clear();
    for (int r = 0; r < m; ++r) {
      if (!a.row_done[r] && a.rows[r].size() == 1) queue.push_back(r);
    }
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const int r = queue[q];
      if (a.row_done[r] || a.rows[r].size() != 1) continue;
      const int c = a.rows[r][0];
      const int k = a.find(c, r);
      const double v = std::abs(a.cols[c][k].value);
      if (v < kZeroPivot || v < kThreshold * a.col_max(c)) continue;
      std::vector<int> touched;
      for (const Entry& e : a.cols[c]) touched.push_back(e.row);
      eliminate(r, c);
      progress = true;
      for (int i : touched) {
        if (!a.row_done[i] && a.rows[i].size() == 1) queue.push_back(i);
      }
    }
  }

  // Markowitz on the remaining bump, columns kept in lists by count.
  std::vector<int> head(m + 2, -1), next(m, -1), prev(m, -1), in_list(m, -1);
  auto unlink = [&](int c) {
    if (in_list[c] < 0) return;
    if (prev[c] >= 0) next[prev[c]] = next[c]; else head[in_list[c]] = next[c];
    if (next[c] >= 0) prev[next[c]] = prev[c];
    in_list[c] = -1;
  };
  auto link = [&](int c) {
    const int k = std::min(static_cast<int>(a.cols[c].size()), m + 1);
    in_list[c] = k;
    prev[c] = -1;
    next[c] = head[k];
    if (head[k] >= 0) prev[head[k]] = c;
    head[k] = c;
  };
  int remaining = 0;
  for (int c = 0; c < m; ++c) {
    if (!a.col_done[c]) {
      link(c);
      ++remaining;
    }
  }
  constexpr int kSearchColumns = 4;
  while (remaining > 0) {
    long best_cost = std::numeric_limits<long>::max();
    int best_r = -1, best_c = -1;
    double best_val = 0.0;
    int searched = 0;
    for (int k = 1; k <= m + 1 && searched < kSearchColumns; ++k) {
      for (int c = head[k]; c >= 0 && searched < kSearchColumns; c = next[c]) {
        const double mx = a.col_max(c);
        if (mx < kZeroPivot) continue;
        bool found = false;
        for (const Entry& e : a.cols[c]) {
          const double v = std::abs(e.value);
          if (v < kThreshold * mx || v < kZeroPivot) continue;
          found = true;
          const long cost =
              static_cast<long>(k - 1) * (static_cast<long>(a.rows[e.row].size()) - 1);
          if (cost < best_cost || (cost == best_cost && v > best_val)) {
            best_cost = cost;
            best_r = e.row;
            best_c = c;
            best_val = v;
          }
        }
        if (found) ++searched;
      }
    }
    if (best_c < 0) break;
    std::vector<int> changed = a.rows[best_r];
    unlink(best_c);
    eliminate(best_r, best_c);
    --remaining;
    for (int j : changed) {
      if (j == best_c || a.col_done[j]) continue;
      unlink(j);
      link(j);
    }
  }

  if (static_cast<int>(prow_.size()) < m) {
    for (int c = 0; c < m; ++c) {
      if (!a.col_done[c]) bad_positions_.push_back(c);
    }
    for (int r = 0; r < m; ++r) {
      if (!a.row_done[r]) bad_rows_.push_back(r);
    }
    return false;
  }

  // Column copy of U: entries of pivot column pcol_[k] in earlier pivot rows.
  std::vector<int> order(m);
  for (int k = 0; k < m; ++k) order[pcol_[k]] = k;
  std::vector<int> count(m + 1, 0);
  for (int k = 0; k < m; ++k) {
    for (int p = u_start_[k]; p < u_start_[k + 1]; ++p) {
      ++count[order[u_index_[p]] + 1];
    }
  }
  uc_start_.assign(m + 1, 0);
  for (int k = 0; k < m; ++k) uc_start_[k + 1] = uc_start_[k] + count[k + 1];
  uc_index_.assign(u_index_.size(), 0);
  uc_value_.assign(u_index_.size(), 0.0);
  std::vector<int> fill(uc_start_.begin(), uc_start_.end() - 1);
  for (int k = 0; k < m; ++k) {
    for (int p = u_start_[k]; p < u_start_[k + 1]; ++p) {
      const int kk = order[u_index_[p]];
      uc_index_[fill[kk]] = prow_[k];
      uc_value_[fill[kk]++] = u_value_[p];
    }
  }
  return true;
}

void BasisFactor::ftran(std::vector<double>& v) const {
  for (int k = 0; k < m_; ++k) {
    const double x = v[prow_[k]];
    if (x == 0.0) continue;
    for (int p = l_start_[k]; p < l_start_[k + 1]; ++p) {
      v[l_index_[p]] -= l_value_[p] * x;
    }
  }
  for (int k = m_ - 1; k >= 0; --k) {
    const double b = v[prow_[k]];
    if (b == 0.0) {
      work_[pcol_[k]] = 0.0;
      continue;
    }
    const double z = b / pivot_[k];
    work_[pcol_[k]] = z;
    for (int p = uc_start_[k]; p < uc_start_[k + 1]; ++p) {
      v[uc_index_[p]] -= uc_value_[p] * z;
    }
  }
  v.swap(work_);
  for (const Eta& eta : etas_) {
    const double vr = v[eta.position] / eta.pivot;
    v[eta.position] = vr;
    if (vr == 0.0) continue;
    for (std::size_t k = 0; k < eta.index.size(); ++k) {
      v[eta.index[k]] -= eta.value[k] * vr;
    }
  }
}

void BasisFactor::btran(std::vector<double>& v) const {
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    double acc = v[it->position];
    for (std::size_t k = 0; k < it->index.size(); ++k) {
      acc -= it->value[k] * v[it->index[k]];
    }
    v[it->position] = acc / it->pivot;
  }
  for (int k = 0; k < m_; ++k) {
    const double c = v[pcol_[k]];
    if (c == 0.0) {
      work_[prow_[k]] = 0.0;
      continue;
    }
    const double z = c / pivot_[k];
    work_[prow_[k]] = z;
    for (int p = u_start_[k]; p < u_start_[k + 1]; ++p) {
      v[u_index_[p]] -= u_value_[p] * z;
    }
  }
  v.swap(work_);
  for (int k = m_ - 1; k >= 0; --k) {
    double acc = 0.0;
    for (int p = l_start_[k]; p < l_start_[k + 1]; ++p) {
      acc += l_value_[p] * v[l_index_[p]];
    }
    v[prow_[k]] -= acc;
  }
}

void BasisFactor::update(int position, const std::vector<double>& alpha) {
  Eta eta;
  eta.position = position;
  eta.pivot = alpha[position];
  for (int i = 0; i < m_; ++i) {
    if (i == position) continue;
    if (std::abs(alpha[i]) > 1e-14) {
      eta.index.push_back(i);
      eta.value.push_back(alpha[i]);
    }
  }
  eta_nonzeros_ += eta.index.size();
  etas_.push_back(std::move(eta));
}

}  // namespace evagg::lp

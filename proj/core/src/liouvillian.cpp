#include "thermnet/dynamics/liouvillian.hpp"

#include <algorithm>
#include <unordered_map>

#include "thermnet/error.hpp"

namespace thermnet::dynamics {
namespace {

// Maps (row, col) to the position inside a sector.
class ElementIndex {
 public:
  ElementIndex(int n, const Sector& s) : n_(n) {
    const std::size_t count = s.rows.size();
    dense_ = static_cast<long>(n) * n <= (1L << 25);
    if (dense_) {
      table_.assign(static_cast<std::size_t>(n) * n, -1);
      for (std::size_t p = 0; p < count; ++p) table_[key(s.rows[p], s.cols[p])] = static_cast<int>(p);
    } else {
      map_.reserve(count);
      for (std::size_t p = 0; p < count; ++p) map_[key(s.rows[p], s.cols[p])] = static_cast<int>(p);
    }
  }

  int operator()(int i, int j) const {
    if (dense_) return table_[key(i, j)];
    const auto it = map_.find(key(i, j));
    return it == map_.end() ? -1 : it->second;
  }

 private:
  std::size_t key(int i, int j) const { return static_cast<std::size_t>(i) * n_ + j; }

  int n_;
  bool dense_;
  std::vector<int> table_;
  std::unordered_map<std::size_t, int> map_;
};

}  // namespace

bool Liouvillian::charges_consistent(const SparseOp& h, std::span<const SparseOp> collapse_ops,
                                     const std::vector<int>& q) {
  if (q.size() != static_cast<std::size_t>(h.rows())) return false;
  for (int r = 0; r < h.outerSize(); ++r)
    for (SparseOp::InnerIterator it(h, r); it; ++it)
      if (q[r] != q[it.col()]) return false;
  for (const auto& l : collapse_ops) {
    bool seen = false;
    int shift = 0;
    for (int r = 0; r < l.outerSize(); ++r) {
      for (SparseOp::InnerIterator it(l, r); it; ++it) {
        const int d = q[r] - q[it.col()];
        if (!seen) {
          shift = d;
          seen = true;
        } else if (d != shift) {
          return false;
        }
      }
    }
  }
  return true;
}

std::vector<int> Liouvillian::orders_present(const DensityMatrix& rho, const std::vector<int>& q) {
  std::vector<int> orders{0};
  if (q.size() != static_cast<std::size_t>(rho.rows())) return orders;
  for (Eigen::Index i = 0; i < rho.rows(); ++i) {
    for (Eigen::Index j = 0; j < rho.cols(); ++j) {
      if (rho(i, j) == Complex{}) continue;
      const int c = std::abs(q[i] - q[j]);
      if (std::find(orders.begin(), orders.end(), c) == orders.end()) orders.push_back(c);
    }
  }
  std::sort(orders.begin(), orders.end());
  return orders;
}

Liouvillian::Liouvillian(const SparseOp& h, std::span<const SparseOp> collapse_ops,
                         std::vector<int> charges, std::vector<int> orders)
    : dim_(static_cast<int>(h.rows())) {
  if (h.rows() != h.cols()) throw InvalidArgument("Hamiltonian must be square");
  for (const auto& l : collapse_ops)
    if (l.rows() != h.rows() || l.cols() != h.cols())
      throw InvalidArgument("collapse operator dimension mismatch");

  sectored_ = !charges.empty() && charges_consistent(h, collapse_ops, charges);
  if (sectored_) charges_ = std::move(charges);

  SparseOp k = Complex{0.0, -1.0} * h;
  for (const auto& l : collapse_ops) k -= 0.5 * SparseOp(adjoint(l) * l);
  k.makeCompressed();

  if (!sectored_) {
    Sector s;
    s.rows.reserve(static_cast<std::size_t>(dim_) * dim_);
    for (int i = 0; i < dim_; ++i) {
      for (int j = 0; j < dim_; ++j) {
        if (i == j) s.diagonal.push_back(static_cast<int>(s.rows.size()));
        s.rows.push_back(i);
        s.cols.push_back(j);
      }
    }
    build_sector(s, k, collapse_ops);
    sectors_.push_back(std::move(s));
    return;
  }

  std::vector<int> wanted{0};
  for (const int c : orders) {
    if (c < 0) throw InvalidArgument("coherence orders must be non-negative");
    if (std::find(wanted.begin(), wanted.end(), c) == wanted.end()) wanted.push_back(c);
  }
  std::sort(wanted.begin(), wanted.end());
  for (const int c : wanted) {
    Sector s;
    s.order = c;
    for (int i = 0; i < dim_; ++i) {
      for (int j = 0; j < dim_; ++j) {
        if (charges_[i] - charges_[j] != c) continue;
        if (i == j) s.diagonal.push_back(static_cast<int>(s.rows.size()));
        s.rows.push_back(i);
        s.cols.push_back(j);
      }
    }
    if (s.rows.empty()) continue;
    build_sector(s, k, collapse_ops);
    sectors_.push_back(std::move(s));
  }
}

void Liouvillian::build_sector(Sector& s, const SparseOp& k,
                               std::span<const SparseOp> collapse_ops) const {
  const ElementIndex pos(dim_, s);
  const auto n_el = s.rows.size();
  std::vector<Eigen::Triplet<Complex>> t;
  t.reserve(n_el * (6 + 2 * collapse_ops.size()));

  for (std::size_t p = 0; p < n_el; ++p) {
    const int i = s.rows[p];
    const int j = s.cols[p];
    const int row = static_cast<int>(p);
    // K rho
    for (SparseOp::InnerIterator it(k, i); it; ++it) {
      const int q = pos(static_cast<int>(it.col()), j);
      if (q >= 0) t.emplace_back(row, q, it.value());
    }
    // rho K^dagger
    for (SparseOp::InnerIterator it(k, j); it; ++it) {
      const int q = pos(i, static_cast<int>(it.col()));
      if (q >= 0) t.emplace_back(row, q, std::conj(it.value()));
    }
    // L rho L^dagger
    for (const auto& l : collapse_ops) {
      for (SparseOp::InnerIterator a(l, i); a; ++a) {
        for (SparseOp::InnerIterator b(l, j); b; ++b) {
          const int q = pos(static_cast<int>(a.col()), static_cast<int>(b.col()));
          if (q >= 0) t.emplace_back(row, q, a.value() * std::conj(b.value()));
        }
      }
    }
  }
  s.generator.resize(static_cast<Eigen::Index>(n_el), static_cast<Eigen::Index>(n_el));
  s.generator.setFromTriplets(t.begin(), t.end());
  s.generator.makeCompressed();
}

std::size_t Liouvillian::element_count() const {
  std::size_t n = 0;
  for (const auto& s : sectors_) n += s.rows.size();
  return n;
}

SectorState Liouvillian::pack(const DensityMatrix& rho) const {
  if (rho.rows() != dim_ || rho.cols() != dim_) throw InvalidArgument("density matrix dimension mismatch");
  SectorState out;
  out.reserve(sectors_.size());
  for (const auto& s : sectors_) {
    Eigen::VectorXcd v(static_cast<Eigen::Index>(s.rows.size()));
    for (std::size_t p = 0; p < s.rows.size(); ++p) v[static_cast<Eigen::Index>(p)] = rho(s.rows[p], s.cols[p]);
    out.push_back(std::move(v));
  }
  return out;
}

DensityMatrix Liouvillian::unpack(const SectorState& state) const {
  DensityMatrix rho = DensityMatrix::Zero(dim_, dim_);
  for (std::size_t k = 0; k < sectors_.size(); ++k) {
    const auto& s = sectors_[k];
    const auto& v = state[k];
    for (std::size_t p = 0; p < s.rows.size(); ++p) {
      const Complex x = v[static_cast<Eigen::Index>(p)];
      rho(s.rows[p], s.cols[p]) = x;
      if (sectored_ && s.order > 0) rho(s.cols[p], s.rows[p]) = std::conj(x);
    }
  }
  return rho;
}

void Liouvillian::apply(const SectorState& in, SectorState& out) const {
  out.resize(sectors_.size());
  for (std::size_t k = 0; k < sectors_.size(); ++k) out[k].noalias() = sectors_[k].generator * in[k];
}

Complex Liouvillian::trace(const SectorState& state) const {
  Complex tr{0.0, 0.0};
  const auto& s = sectors_.front();
  for (const int p : s.diagonal) tr += state.front()[p];
  return tr;
}

DensityMatrix Liouvillian::apply(const DensityMatrix& rho) const {
  SectorState out;
  apply(pack(rho), out);
  return unpack(out);
}

}  // namespace thermnet::dynamics

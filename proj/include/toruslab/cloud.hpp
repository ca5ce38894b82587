#pragma once

// Weighted floating point clouds on T^d with a bin index for radius queries.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "toruslab/walk.hpp"

namespace toruslab {

struct WeightedCloud {
  std::size_t dim = 0;
  DVec coords;   // size() * dim
  DVec weights;

  std::size_t size() const noexcept { return weights.size(); }
  const double* point(std::size_t i) const { return coords.data() + i * dim; }
  double total_mass() const {
    double s = 0;
    for (double w : weights) s += w;
    return s;
  }
};

inline WeightedCloud to_cloud(const FiniteMeasure& m) {
  WeightedCloud c;
  c.dim = m.dim();
  for (std::size_t i = 0; i < m.size(); ++i) {
    DVec p = m.point(i).to_doubles();
    c.coords.insert(c.coords.end(), p.begin(), p.end());
    c.weights.push_back(m.weight(i));
  }
  return c;
}

// Equal weights 1/N; identical points are merged so heavy atoms stay cheap to query.
inline WeightedCloud to_cloud(const EmpiricalSample& s) {
  WeightedCloud c;
  c.dim = s.dim;
  const std::size_t n = s.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(s.point(a), s.point(a) + s.dim, s.point(b), s.point(b) + s.dim);
  });
  const double w = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double* p = s.point(order[k]);
    if (k > 0 && std::equal(p, p + s.dim, s.point(order[k - 1]))) {
      c.weights.back() += w;
      continue;
    }
    c.coords.insert(c.coords.end(), p, p + s.dim);
    c.weights.push_back(w);
  }
  return c;
}

// Uniform bins of side 1/m >= radius, so a closed ball of that radius meets only the
// 3^d neighbourhood of its centre's bin.
class BinIndex {
 public:
  BinIndex(const WeightedCloud& c, double radius) : cloud_(&c) {
    m_ = radius > 0 ? static_cast<std::uint64_t>(std::floor(1.0 / radius)) : 1u << 20;
    m_ = std::clamp<std::uint64_t>(m_, 1, std::uint64_t(1) << 20);
    for (std::size_t i = 0; i < c.size(); ++i) bins_[key_of(c.point(i))].push_back(i);
  }

  std::uint64_t per_axis() const noexcept { return m_; }
  double side() const noexcept { return 1.0 / static_cast<double>(m_); }
  const std::unordered_map<std::uint64_t, std::vector<std::size_t>>& bins() const noexcept { return bins_; }

  std::vector<std::uint64_t> cell_of(const double* p) const {
    std::vector<std::uint64_t> cell(cloud_->dim);
    for (std::size_t k = 0; k < cloud_->dim; ++k)
      cell[k] = std::min<std::uint64_t>(static_cast<std::uint64_t>(p[k] * static_cast<double>(m_)), m_ - 1);
    return cell;
  }

  std::uint64_t key(const std::vector<std::uint64_t>& cell) const {
    std::uint64_t k = 0;
    for (auto v : cell) k = k * m_ + v;
    return k;
  }

  std::vector<std::uint64_t> cell_from_key(std::uint64_t key) const {
    std::vector<std::uint64_t> cell(cloud_->dim);
    for (std::size_t k = cloud_->dim; k-- > 0;) {
      cell[k] = key % m_;
      key /= m_;
    }
    return cell;
  }

  std::uint64_t key_of(const double* p) const { return key(cell_of(p)); }

  // Distinct keys of the 3^d block around a cell.
  std::vector<std::uint64_t> neighbourhood(const std::vector<std::uint64_t>& cell) const {
    const std::size_t d = cloud_->dim;
    std::vector<std::uint64_t> out;
    std::vector<int> off(d, -1);
    for (;;) {
      std::vector<std::uint64_t> c(d);
      for (std::size_t k = 0; k < d; ++k)
        c[k] = (cell[k] + m_ + static_cast<std::uint64_t>(static_cast<std::int64_t>(off[k]) + static_cast<std::int64_t>(m_))) % m_;
      out.push_back(key(c));
      std::size_t k = 0;
      while (k < d && ++off[k] == 2) off[k++] = -1;
      if (k == d) break;
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  // Mass of the closed ball B(y, radius); radius must not exceed the bin side.
  double ball_mass(const double* y, double radius) const {
    double s = 0;
    for (auto k : neighbourhood(cell_of(y))) {
      auto it = bins_.find(k);
      if (it == bins_.end()) continue;
      for (auto i : it->second)
        if (torus_distance(y, cloud_->point(i), cloud_->dim) <= radius) s += cloud_->weights[i];
    }
    return s;
  }

  double bin_mass(std::uint64_t key) const {
    auto it = bins_.find(key);
    if (it == bins_.end()) return 0;
    double s = 0;
    for (auto i : it->second) s += cloud_->weights[i];
    return s;
  }

 private:
  const WeightedCloud* cloud_;
  std::uint64_t m_ = 1;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> bins_;
};

}  // namespace toruslab

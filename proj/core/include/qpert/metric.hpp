#pragma once

#include <mutex>
#include <unordered_map>

#include "qpert/model.hpp"

namespace qpert {

/// Cluster metrics on a volume.
///
/// `connect(I)` is d_I, the length of a minimal connected lattice graph
/// containing I.  `connect_to(J, I)` is d_{J;I}, the minimal length of a graph
/// linking every site of J to some site of I.  Both are exact rectilinear
/// Steiner values (Dreyfus-Wagner over the Hanan grid) up to
/// `exact_limit` terminals, and l1 minimum-spanning-tree lengths beyond.
/// Results are memoized; the object is safe to share between threads.
class ClusterMetric {
 public:
  explicit ClusterMetric(const Volume& volume, int exact_limit = 8);

  int connect(SiteMask sites) const;
  int connect_to(SiteMask j, SiteMask i) const;

  const Volume& volume() const { return volume_; }

 private:
  int compute(SiteMask terminals, SiteMask anchor) const;

  const Volume& volume_;
  int exact_limit_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<SiteMask, int> cache_;
  mutable std::unordered_map<SiteMask, std::unordered_map<SiteMask, int>> rel_cache_;
};

/// Brute-force Steiner length: shortest connected subgraph of the grid graph
/// on the bounding box of `points` containing all of them (open boundary,
/// nu <= 2, small boxes only).  Test oracle.
int steiner_bruteforce(const std::vector<Coord>& points, int nu);

}  // namespace qpert

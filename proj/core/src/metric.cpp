#include "qpert/metric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

namespace qpert {

namespace {

constexpr int kInf = std::numeric_limits<int>::max() / 4;

int lattice_distance(const Coord& a, const Coord& b, const Volume& vol) {
  int s = 0;
  for (int ax = 0; ax < vol.nu(); ++ax) {
    int d = std::abs(a[ax] - b[ax]);
    if (vol.boundary() == Boundary::periodic) d = std::min(d, vol.extent()[ax] - d);
    s += d;
  }
  return s;
}

std::vector<Coord> coords_of(SiteMask m, const Volume& vol) {
  std::vector<Coord> out;
  while (m) {
    out.push_back(vol.site(lowest_site(m)));
    m &= m - 1;
  }
  return out;
}

// Prim on terminals plus an optional contracted anchor node.
int mst_length(const std::vector<Coord>& terms, const std::vector<Coord>& anchor, const Volume& vol) {
  const int n = static_cast<int>(terms.size()) + (anchor.empty() ? 0 : 1);
  if (n <= 1) return 0;
  auto dist = [&](int a, int b) {
    const int na = static_cast<int>(terms.size());
    if (a == na || b == na) {
      const Coord& t = terms[a == na ? b : a];
      int best = kInf;
      for (const auto& c : anchor) best = std::min(best, lattice_distance(t, c, vol));
      return best;
    }
    return lattice_distance(terms[a], terms[b], vol);
  };
  std::vector<int> key(n, kInf);
  std::vector<char> in(n, 0);
  key[0] = 0;
  int total = 0;
  for (int it = 0; it < n; ++it) {
    int u = -1;
    for (int v = 0; v < n; ++v)
      if (!in[v] && (u < 0 || key[v] < key[u])) u = v;
    in[u] = 1;
    total += key[u];
    for (int v = 0; v < n; ++v)
      if (!in[v]) key[v] = std::min(key[v], dist(u, v));
  }
  return total;
}

// Dreyfus-Wagner over the Hanan grid of `terms` (and `anchor` coordinates).
int steiner_length(const std::vector<Coord>& terms, const std::vector<Coord>& anchor,
                   const Volume& vol) {
  const int k = static_cast<int>(terms.size());
  std::vector<std::vector<int>> axis_vals(vol.nu());
  for (int ax = 0; ax < vol.nu(); ++ax) {
    std::set<int> vals;
    for (const auto& c : terms) vals.insert(c[ax]);
    for (const auto& c : anchor) vals.insert(c[ax]);
    axis_vals[ax].assign(vals.begin(), vals.end());
  }
  std::vector<Coord> nodes{Coord{0, 0, 0}};
  for (int ax = 0; ax < vol.nu(); ++ax) {
    std::vector<Coord> next;
    for (const auto& base : nodes)
      for (int v : axis_vals[ax]) {
        Coord c = base;
        c[ax] = v;
        next.push_back(c);
      }
    nodes = std::move(next);
  }
  const int nv = static_cast<int>(nodes.size());
  std::vector<int> dist(static_cast<std::size_t>(nv) * nv);
  for (int a = 0; a < nv; ++a)
    for (int b = 0; b < nv; ++b) dist[a * nv + b] = lattice_distance(nodes[a], nodes[b], vol);

  // terminals in DP: all of them when anchored, else all but the root
  const bool anchored = !anchor.empty();
  const int kt = anchored ? k : k - 1;
  std::vector<int> term_node(k);
  for (int i = 0; i < k; ++i)
    for (int a = 0; a < nv; ++a)
      if (lattice_distance(nodes[a], terms[i], vol) == 0) {
        term_node[i] = a;
        break;
      }

  const int full = (1 << kt) - 1;
  std::vector<int> dp(static_cast<std::size_t>(full + 1) * nv, kInf);
  auto at = [&](int s, int v) -> int& { return dp[static_cast<std::size_t>(s) * nv + v]; };
  for (int i = 0; i < kt; ++i)
    for (int v = 0; v < nv; ++v) at(1 << i, v) = dist[term_node[i] * nv + v];

  std::vector<int> g(nv);
  for (int s = 1; s <= full; ++s) {
    if ((s & (s - 1)) == 0) continue;
    for (int u = 0; u < nv; ++u) {
      int best = kInf;
      for (int sub = (s - 1) & s; sub > 0; sub = (sub - 1) & s) {
        if (sub < (s ^ sub)) continue;  // each split once
        best = std::min(best, at(sub, u) + at(s ^ sub, u));
      }
      g[u] = best;
    }
    for (int v = 0; v < nv; ++v) {
      int best = kInf;
      for (int u = 0; u < nv; ++u) best = std::min(best, g[u] + dist[u * nv + v]);
      at(s, v) = best;
    }
  }

  if (!anchored) return at(full, term_node[k - 1]);
  int best = kInf;
  for (int v = 0; v < nv; ++v) {
    int da = kInf;
    for (const auto& c : anchor) da = std::min(da, lattice_distance(nodes[v], c, vol));
    best = std::min(best, at(full, v) + da);
  }
  return best;
}

}  // namespace

ClusterMetric::ClusterMetric(const Volume& volume, int exact_limit)
    : volume_(volume), exact_limit_(exact_limit) {}

int ClusterMetric::compute(SiteMask terminals, SiteMask anchor) const {
  const auto terms = coords_of(terminals & ~anchor, volume_);
  const auto anc = coords_of(anchor, volume_);
  const int k = static_cast<int>(terms.size());
  if (k == 0) return 0;
  if (anc.empty() && k == 1) return 0;
  const int nt = k + static_cast<int>(anc.size());
  const double hanan = std::pow(static_cast<double>(nt), volume_.nu());
  const int kt = anc.empty() ? k - 1 : k;
  const double cost = std::pow(3.0, kt) * hanan + std::pow(2.0, kt) * hanan * hanan;
  if (k <= exact_limit_ && cost < 2e7) return steiner_length(terms, anc, volume_);
  return mst_length(terms, anc, volume_);
}

int ClusterMetric::connect(SiteMask sites) const {
  {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(sites);
    if (it != cache_.end()) return it->second;
  }
  const int v = compute(sites, 0);
  std::lock_guard lock(mutex_);
  cache_.emplace(sites, v);
  return v;
}

int ClusterMetric::connect_to(SiteMask j, SiteMask i) const {
  if (i == 0) return connect(j);
  {
    std::lock_guard lock(mutex_);
    auto it = rel_cache_.find(i);
    if (it != rel_cache_.end()) {
      auto jt = it->second.find(j);
      if (jt != it->second.end()) return jt->second;
    }
  }
  const int v = compute(j, i);
  std::lock_guard lock(mutex_);
  rel_cache_[i].emplace(j, v);
  return v;
}

int steiner_bruteforce(const std::vector<Coord>& points, int nu) {
  if (points.size() <= 1) return 0;
  Coord lo = points[0], hi = points[0];
  for (const auto& p : points)
    for (int a = 0; a < nu; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  const int w = hi[0] - lo[0] + 1;
  const int h = nu > 1 ? hi[1] - lo[1] + 1 : 1;
  const int cells = w * h;
  if (cells > 24) throw CapacityError("steiner_bruteforce: bounding box too large");
  auto cell_of = [&](const Coord& p) { return (p[0] - lo[0]) + w * (nu > 1 ? p[1] - lo[1] : 0); };
  unsigned required = 0;
  for (const auto& p : points) required |= 1u << cell_of(p);
  int best = kInf;
  for (unsigned s = 0; s < (1u << cells); ++s) {
    if ((s & required) != required) continue;
    const int cnt = __builtin_popcount(s);
    if (cnt - 1 >= best) continue;
    // flood fill connectivity
    unsigned seen = 1u << __builtin_ctz(s);
    unsigned frontier = seen;
    while (frontier) {
      unsigned next = 0;
      for (unsigned f = frontier; f; f &= f - 1) {
        const int c = __builtin_ctz(f);
        const int x = c % w, y = c / w;
        const int nb[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
        for (auto& q : nb) {
          if (q[0] < 0 || q[0] >= w || q[1] < 0 || q[1] >= h) continue;
          const unsigned bit = 1u << (q[0] + w * q[1]);
          if ((s & bit) && !(seen & bit)) next |= bit;
        }
      }
      seen |= next;
      frontier = next;
    }
    if (seen == s) best = cnt - 1;
  }
  return best;
}

}  // namespace qpert

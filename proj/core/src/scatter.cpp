#include "qpert/scatter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "qpert/oracle.hpp"

namespace qpert {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void prune(Collection& c) {
  for (auto it = c.entries.begin(); it != c.entries.end();)
    it = it->second.norm() < kPruneThreshold ? c.entries.erase(it) : std::next(it);
}

}  // namespace

Profile profile_from_string(const std::string& s) {
  if (s == "raised_cosine") return Profile::raised_cosine;
  if (s == "bump") return Profile::bump;
  if (s == "indicator") return Profile::indicator;
  throw Error("unknown packet profile '" + s + "' (raised_cosine, bump, indicator)");
}

std::string to_string(Profile p) {
  switch (p) {
    case Profile::raised_cosine: return "raised_cosine";
    case Profile::bump: return "bump";
    case Profile::indicator: return "indicator";
  }
  return "?";
}

std::vector<int> WavePacket::support(double threshold) const {
  std::vector<int> s;
  for (int j = 0; j < grid(); ++j)
    if (std::abs(vf(j)) > threshold) s.push_back(j);
  return s;
}

WavePacket make_packet(const PacketSpec& spec, int grid) {
  const double width = spec.p_hi - spec.p_lo;
  if (grid < 8) throw Error("make_packet: grid must have at least 8 points");
  if (!(width > 0) || width > 1) throw Error("make_packet: need 0 < p_hi - p_lo <= 1");
  if (spec.smoothness < 0) throw Error("make_packet: smoothness must be >= 0");
  WavePacket f;
  f.center = spec.center;
  f.vf = CVector::Zero(grid);
  for (int j = 0; j < grid; ++j) {
    double d = std::fmod(static_cast<double>(j) / grid - spec.p_lo, 1.0);
    if (d < 0) d += 1.0;
    if (d >= width) continue;
    const double u = 2.0 * d / width - 1.0;
    double v = 0.0;
    switch (spec.profile) {
      case Profile::raised_cosine: v = std::pow(0.5 * (1.0 + std::cos(std::numbers::pi * u)), spec.smoothness); break;
      case Profile::bump: v = std::abs(u) < 1 ? std::exp(1.0 - 1.0 / (1.0 - u * u)) : 0.0; break;
      case Profile::indicator: v = 1.0; break;
    }
    f.vf(j) = v;
  }
  const double n2 = f.vf.squaredNorm() / grid;
  if (!(n2 > 0)) throw Error("make_packet: momentum window contains no grid point");
  f.vf /= std::sqrt(n2);
  return f;
}

Complex packet_inner(const WavePacket& f, const WavePacket& g) {
  if (f.grid() != g.grid()) throw Error("packet_inner: grids differ");
  Complex s{};
  for (int j = 0; j < f.grid(); ++j)
    s += std::conj(f.vf(j)) * g.vf(j) * std::polar(1.0, kTwoPi * (f.center - g.center) * f.p(j));
  return s / static_cast<double>(f.grid());
}

std::vector<double> velocity_set(const WavePacket& f, const Dispersion& m) {
  std::vector<double> v;
  for (int j : f.support()) v.push_back(m.velocity(f.p(j)));
  return v;
}

FockVector FockVector::product(std::vector<WavePacket> packets) {
  FockVector f;
  f.terms.push_back({Complex{1.0, 0.0}, std::move(packets)});
  return f;
}

int FockVector::n_max() const {
  int n = 0;
  for (const auto& t : terms) n = std::max(n, static_cast<int>(t.packets.size()));
  return n;
}

Admissibility admissible(const FockVector& fock, const Dispersion& m) {
  Admissibility a;
  a.margin = std::numeric_limits<double>::infinity();
  for (const auto& term : fock.terms) {
    std::vector<std::vector<double>> vs;
    for (const auto& f : term.packets) vs.push_back(velocity_set(f, m));
    for (std::size_t k = 0; k < vs.size(); ++k)
      for (std::size_t l = k + 1; l < vs.size(); ++l)
        for (double x : vs[k])
          for (double y : vs[l]) a.margin = std::min(a.margin, std::abs(x - y));
  }
  a.ok = !(a.margin <= 0.0);
  return a;
}

CVector packet_amplitudes(const WavePacket& f, double t, const Dispersion& m,
                          const std::vector<double>& xs) {
  const int M = f.grid();
  std::vector<Complex> w(M);
  for (int j = 0; j < M; ++j) w[j] = f.vf(j) * std::polar(1.0, -t * m(f.p(j)));
  CVector a(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = xs[i] - f.center;
    Complex s{};
    for (int j = 0; j < M; ++j) s += w[j] * std::polar(1.0, -kTwoPi * r * f.p(j));
    a(static_cast<Eigen::Index>(i)) = s / static_cast<double>(M);
  }
  return a;
}

void check_aliasing(const WavePacket& f, double t, const Dispersion& m, double tol) {
  const double edge = f.center + f.grid() / 2;
  const CVector a = packet_amplitudes(f, t, m, {edge, edge - 1, edge + 1});
  if (a.cwiseAbs().maxCoeff() > tol) throw Error("packet aliasing: enlarge volume or grid");
}

FockVector free_evolve(const FockVector& fock, double t, const Dispersion& m) {
  FockVector out = fock;
  for (auto& term : out.terms)
    for (auto& f : term.packets)
      for (int j = 0; j < f.grid(); ++j) f.vf(j) *= std::polar(1.0, -t * m(f.p(j)));
  return out;
}

FockVector shift(const FockVector& fock, double x) {
  FockVector out = fock;
  for (auto& term : out.terms)
    for (auto& f : term.packets)
      for (int j = 0; j < f.grid(); ++j) f.vf(j) *= std::polar(1.0, kTwoPi * x * f.p(j));
  return out;
}

Complex permanent(const CMatrix& mat) {
  const int n = static_cast<int>(mat.rows());
  if (n == 0) return 1.0;
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  Complex s{};
  do {
    Complex p{1.0, 0.0};
    for (int i = 0; i < n; ++i) p *= mat(i, perm[i]);
    s += p;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return s;
}

Complex fock_inner(const FockVector& a, const FockVector& b) {
  Complex s{};
  for (const auto& ta : a.terms)
    for (const auto& tb : b.terms) {
      if (ta.packets.size() != tb.packets.size()) continue;
      const auto n = static_cast<Eigen::Index>(ta.packets.size());
      CMatrix g(n, n);
      for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index l = 0; l < n; ++l) g(k, l) = packet_inner(ta.packets[k], tb.packets[l]);
      s += std::conj(ta.coefficient) * tb.coefficient * permanent(g);
    }
  return s;
}

ConeReport cone_decay_check(const WavePacket& f, const Dispersion& m, double factor,
                            const std::vector<double>& times, int a) {
  ConeReport rep;
  const auto vs = velocity_set(f, m);
  if (vs.empty()) throw Error("cone_decay_check: empty packet support");
  const auto [lo_it, hi_it] = std::minmax_element(vs.begin(), vs.end());
  const double mid = 0.5 * (*lo_it + *hi_it), half = 0.5 * (*hi_it - *lo_it);
  rep.cone_lo = mid - factor * half;
  rep.cone_hi = mid + factor * half;
  const int M = f.grid();
  std::vector<double> xs;
  for (int r = -M / 2; r < M / 2; ++r) xs.push_back(f.center + r);
  for (double t : times) {
    const CVector amp = packet_amplitudes(f, t, m, xs);
    double c = 0.0, mass = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double r = xs[i] - f.center;
      if (r > t * rep.cone_lo && r < t * rep.cone_hi) continue;
      const double v = std::abs(amp(static_cast<Eigen::Index>(i)));
      c = std::max(c, v * std::pow(1.0 + std::abs(r) + std::abs(t), a));
      mass += v * v;
    }
    rep.times.push_back(t);
    rep.constants.push_back(c);
    rep.outside_mass.push_back(mass);
  }
  rep.pass = true;
  for (std::size_t i = 1; i < rep.constants.size(); ++i)
    if (rep.constants[i] > rep.constants[i - 1] * (1 + 1e-9)) rep.pass = false;
  return rep;
}

double centroid(const WavePacket& f, double t, const Dispersion& m) {
  const int M = f.grid();
  std::vector<double> xs;
  for (int r = -M / 2; r < M / 2; ++r) xs.push_back(f.center + r);
  const CVector a = packet_amplitudes(f, t, m, xs);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double w = std::norm(a(static_cast<Eigen::Index>(i)));
    num += (xs[i] - f.center) * w;
    den += w;
  }
  return num / den;
}

double packet_width(const WavePacket& f, const Dispersion& m) {
  const int M = f.grid();
  std::vector<double> xs;
  for (int r = -M / 2; r < M / 2; ++r) xs.push_back(f.center + r);
  const CVector a = packet_amplitudes(f, 0.0, m, xs);
  double s0 = 0, s1 = 0, s2 = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double w = std::norm(a(static_cast<Eigen::Index>(i)));
    const double r = xs[i] - f.center;
    s0 += w, s1 += r * w, s2 += r * r * w;
  }
  const double mean = s1 / s0;
  return 2.0 * std::sqrt(std::max(0.0, s2 / s0 - mean * mean));
}

double time_budget(const FockVector& fock, const Dispersion& m, int nsites) {
  double width = 0.0, vmax = 0.0;
  for (const auto& term : fock.terms)
    for (const auto& f : term.packets) {
      width = std::max(width, packet_width(f, m));
      for (double v : velocity_set(f, m)) vmax = std::max(vmax, std::abs(v));
    }
  if (vmax == 0.0) return std::numeric_limits<double>::infinity();
  return (0.5 * nsites - width) / vmax;
}

std::vector<Collection> transplant_basis(const Collection& xi0, const Volume& src, int src_site,
                                         const ClusterSpace& dst) {
  const Volume& dv = dst.volume();
  std::vector<Collection> out;
  for (int x = 0; x < dv.size(); ++x) {
    Collection c = remap_collection(xi0, dst, [&](int s) -> std::optional<int> {
      const Coord d = src.displacement(src_site, s);
      Coord target = dv.site(x);
      for (int ax = 0; ax < kMaxDim; ++ax) target[ax] += d[ax];
      return dv.index_of(target);
    });
    truncate(c, dst);
    out.push_back(std::move(c));
  }
  return out;
}

ScatterContext::ScatterContext(GroundFrame f, SparseMatrix ham, std::vector<Collection> basis,
                               Dispersion disp)
    : frame(std::move(f)), h(std::move(ham)), xi(std::move(basis)), m(std::move(disp)) {
  if (!frame.space) throw Error("ScatterContext: frame without cluster space");
  if (static_cast<int>(xi.size()) != frame.space->volume().size())
    throw Error("ScatterContext: need one basis collection per site");
  omega = exp_apply(frame.gs, *frame.space);
  omega_norm2 = omega.squaredNorm();
}

CVector product_map_T(const ScatterContext& ctx, const std::vector<WavePacket>& packets) {
  const int n = static_cast<int>(packets.size());
  if (n > 3) throw Error("product_map_T: at most 3 particles are supported");
  const auto& space = ctx.space();
  const int ns = space.volume().size();
  std::vector<double> xs(ns);
  for (int s = 0; s < ns; ++s) xs[s] = space.volume().site(s)[0];

  std::vector<CVector> amp;
  std::vector<Collection> cre;
  for (const auto& f : packets) {
    amp.push_back(packet_amplitudes(f, 0.0, ctx.m, xs));
    Collection c;
    for (int s = 0; s < ns; ++s) {
      const Complex a = amp.back()(s);
      if (std::abs(a) < 1e-300) continue;
      c += a * ctx.xi[s];
    }
    prune(c);
    cre.push_back(std::move(c));
  }
  auto apply_chain = [&](const std::vector<int>& which, CVector v) {
    for (int k : which) v = creation_sum_apply(cre[k], v, space);
    return v;
  };
  if (n == 0) return ctx.omega;
  std::vector<int> all(n);
  for (int k = 0; k < n; ++k) all[k] = k;
  CVector out = apply_chain(all, ctx.omega);
  if (n == 1) return out;

  // coincident sites: weight sqrt(prod m!) instead of 1
  auto pair_sum = [&](int k, int l, const CVector& base) {
    CVector acc = CVector::Zero(base.size());
    for (int s = 0; s < ns; ++s) {
      const Complex w = amp[k](s) * amp[l](s);
      if (std::abs(w) < 1e-15) continue;
      acc += w * creation_sum_apply(ctx.xi[s], creation_sum_apply(ctx.xi[s], base, space), space);
    }
    return acc;
  };
  if (n == 2) {
    out += (std::sqrt(2.0) - 1.0) * pair_sum(0, 1, ctx.omega);
    return out;
  }
  CVector triple = CVector::Zero(out.size());
  for (int s = 0; s < ns; ++s) {
    const Complex w = amp[0](s) * amp[1](s) * amp[2](s);
    if (std::abs(w) < 1e-15) continue;
    CVector v = ctx.omega;
    for (int r = 0; r < 3; ++r) v = creation_sum_apply(ctx.xi[s], v, space);
    triple += w * v;
  }
  CVector pairs = pair_sum(0, 1, apply_chain({2}, ctx.omega)) +
                  pair_sum(0, 2, apply_chain({1}, ctx.omega)) +
                  pair_sum(1, 2, apply_chain({0}, ctx.omega));
  out += (std::sqrt(2.0) - 1.0) * (pairs - 3.0 * triple) + (std::sqrt(6.0) - 1.0) * triple;
  return out;
}

CVector product_map_T(const ScatterContext& ctx, const FockVector& fock) {
  CVector out = CVector::Zero(ctx.omega.size());
  for (const auto& term : fock.terms) out += term.coefficient * product_map_T(ctx, term.packets);
  return out;
}

FockVector free_hamiltonian(const FockVector& fock, const Dispersion& m) {
  FockVector out;
  for (const auto& term : fock.terms)
    for (std::size_t k = 0; k < term.packets.size(); ++k) {
      FockTerm t = term;
      auto& f = t.packets[k];
      for (int j = 0; j < f.grid(); ++j) f.vf(j) *= m(f.p(j));
      out.terms.push_back(std::move(t));
    }
  return out;
}

double cook_integrand(const ScatterContext& ctx, const FockVector& fock, double t) {
  const FockVector ft = free_evolve(fock, t, ctx.m);
  const CVector x = product_map_T(ctx, ft);
  const CVector y = product_map_T(ctx, free_hamiltonian(ft, ctx.m));
  const CVector r = ctx.h * x - ctx.frame.energy * x - y;
  return r.norm() / std::sqrt(ctx.omega_norm2);
}

std::vector<OverlapRow> isometry_scan(const ScatterContext& ctx, const FockVector& f1,
                                      const FockVector& f2, const std::vector<double>& times) {
  const Complex target = fock_inner(f1, f2);
  std::vector<OverlapRow> rows;
  for (double t : times) {
    const CVector a = product_map_T(ctx, free_evolve(f1, t, ctx.m));
    const CVector b = product_map_T(ctx, free_evolve(f2, t, ctx.m));
    rows.push_back({t, a.dot(b) / ctx.omega_norm2, target});
  }
  return rows;
}

double dynamics_residual(const ScatterContext& ctx, const FockVector& fock, double t) {
  const CVector x0 = product_map_T(ctx, fock);
  const CVector xt = evolve_reference(ctx.h, x0, t) * std::polar(1.0, ctx.frame.energy * t);
  const CVector ref = product_map_T(ctx, free_evolve(fock, t, ctx.m));
  return (xt - ref).norm() / std::sqrt(ctx.omega_norm2);
}

}  // namespace qpert

#pragma once

#include <string>
#include <vector>

#include "qpert/oneparticle.hpp"

namespace qpert {

enum class Profile { raised_cosine, bump, indicator };

Profile profile_from_string(const std::string& s);
std::string to_string(Profile p);

/// Momentum window [p_lo, p_hi] (may extend past 1, read modulo 1) and lattice centre.
/// raised_cosine: ((1 + cos pi u) / 2)^smoothness; bump: exp(1 - 1/(1 - u^2)); u in (-1, 1).
struct PacketSpec {
  double p_lo = 0.2;
  double p_hi = 0.3;
  Profile profile = Profile::raised_cosine;
  int smoothness = 2;
  int center = 0;
};

/// Momentum samples Vf(p_j), p_j = j/M, with (1/M) sum |Vf|^2 = 1 after make_packet.
struct WavePacket {
  CVector vf;
  int center = 0;

  int grid() const { return static_cast<int>(vf.size()); }
  double p(int j) const { return static_cast<double>(j) / grid(); }
  /// Grid indices with |Vf| above `threshold`.
  std::vector<int> support(double threshold = 1e-10) const;
};

WavePacket make_packet(const PacketSpec& spec, int grid);

/// (1/M) sum conj(Vf) Vg, shift phases included.
Complex packet_inner(const WavePacket& f, const WavePacket& g);

/// Group velocities -m'(p)/(2 pi) over the support.
std::vector<double> velocity_set(const WavePacket& f, const Dispersion& m);

struct FockTerm {
  Complex coefficient{1.0, 0.0};
  std::vector<WavePacket> packets;
};

struct FockVector {
  std::vector<FockTerm> terms;
  static FockVector product(std::vector<WavePacket> packets);
  int n_max() const;
};

struct Admissibility {
  bool ok = true;
  double margin = 0.0;  // smallest distance between velocity sets of distinct packets
};

Admissibility admissible(const FockVector& fock, const Dispersion& m);

/// a_x(t) = (1/M) sum_j e^{-i t m(p_j)} Vf_j e^{-2 pi i (x - center) p_j} at the coordinates `xs`.
CVector packet_amplitudes(const WavePacket& f, double t, const Dispersion& m,
                          const std::vector<double>& xs);

/// Throws "enlarge volume or grid" when |a_x| at the grid period edge exceeds `tol`.
void check_aliasing(const WavePacket& f, double t, const Dispersion& m, double tol = 1e-8);

/// Multiplies every profile by e^{-i t m(p)}.
FockVector free_evolve(const FockVector& fock, double t, const Dispersion& m);
/// Lattice translation by +x: every profile is multiplied by e^{2 pi i x p}.
FockVector shift(const FockVector& fock, double x);
/// Fock inner product: permanent of packet overlaps for equal particle numbers.
Complex fock_inner(const FockVector& a, const FockVector& b);
Complex permanent(const CMatrix& m);

struct ConeReport {
  std::vector<double> times;
  std::vector<double> constants;      // max_{x outside t O} |a_x(t)| (1+|x|+|t|)^a
  std::vector<double> outside_mass;   // sum_{x outside t O} |a_x(t)|^2
  double cone_lo = 0.0, cone_hi = 0.0;
  bool pass = false;                  // constants non-increasing in t
};

/// Cone O = velocity interval of f scaled by `factor` about its midpoint;
/// x is measured from the packet centre over |x| <= half the grid.
ConeReport cone_decay_check(const WavePacket& f, const Dispersion& m, double factor,
                            const std::vector<double>& times, int a);

/// Amplitude-weighted mean position (relative to the centre) of f at time t.
double centroid(const WavePacket& f, double t, const Dispersion& m);

/// Transplants a one-particle collection centred at `src_site` of `src` to every
/// site of `dst`; clusters leaving the destination volume are dropped.
std::vector<Collection> transplant_basis(const Collection& xi0, const Volume& src, int src_site,
                                         const ClusterSpace& dst);

/// Ground frame, Hamiltonian and one-particle collections on a scattering volume.
struct ScatterContext {
  GroundFrame frame;
  SparseMatrix h;
  std::vector<Collection> xi;  // per site of the volume
  Dispersion m;
  CVector omega;               // exp_apply(frame.gs)
  double omega_norm2 = 1.0;

  ScatterContext(GroundFrame f, SparseMatrix ham, std::vector<Collection> basis, Dispersion disp);
  const ClusterSpace& space() const { return *frame.space; }
};

/// T applied to one product term (n <= 3), coincidence weights sqrt(prod m!) included.
CVector product_map_T(const ScatterContext& ctx, const std::vector<WavePacket>& packets);
CVector product_map_T(const ScatterContext& ctx, const FockVector& fock);

/// H_f fock: sum over factors of the packet multiplied by m(p).
FockVector free_hamiltonian(const FockVector& fock, const Dispersion& m);

/// ||(H - E) T f_t - T H_f f_t|| / ||Omega-tilde||, f_t = free_evolve(fock, t).
double cook_integrand(const ScatterContext& ctx, const FockVector& fock, double t);

struct OverlapRow {
  double t = 0.0;
  Complex overlap;
  Complex target;
};

/// <T f1_t, T f2_t> / ||Omega-tilde||^2 against the permanent target.
std::vector<OverlapRow> isometry_scan(const ScatterContext& ctx, const FockVector& f1,
                                      const FockVector& f2, const std::vector<double>& times);

/// 2 x RMS spatial width of f at t = 0.
double packet_width(const WavePacket& f, const Dispersion& m);

/// Largest t allowed before the packets reach the volume edge: (N/2 - width) / max |v|.
double time_budget(const FockVector& fock, const Dispersion& m, int nsites);

/// ||e^{-it(H-E)} T f_0 - T f_t|| / ||Omega-tilde|| by Chebyshev propagation.
double dynamics_residual(const ScatterContext& ctx, const FockVector& fock, double t);

}  // namespace qpert

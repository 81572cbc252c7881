#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <numbers>
#include <thread>

#include "pipelines.hpp"
#include "qpert/oracle.hpp"
#include "qpert/scatter.hpp"

namespace qpert::cli {

namespace {

Volume particle_volume(const Config& cfg) {
  if (cfg.has("scatter.basis_sites"))
    return Volume::chain(cfg.integer("scatter.basis_sites", 0), Boundary::periodic);
  return build_volume(cfg);
}

int ring_length(const Volume& v) {
  return v.boundary() == Boundary::periodic && v.nu() == 1 ? v.size() : 0;
}

/// Ground frame, renormalized operator, orthonormal basis and hoppings on the
/// one-particle volume (a periodic ring when scatter.basis_sites is set).
struct ParticleStage {
  Model model;
  Volume vol;
  Hamiltonian ham;
  std::unique_ptr<RenormOperator> op;
  OneParticleBasis basis;
  Hoppings hop;
  int center = 0;
  std::size_t center_index = 0;

  explicit ParticleStage(const RunContext& ctx)
      : model(build_model(ctx.cfg)), vol(particle_volume(ctx.cfg)), ham(assemble_hamiltonian(vol, model)) {
    if (vol.nu() != 1) throw ModelError("one-particle pipelines support chains only");
    const auto space = ClusterSpace::create(vol, model, build_truncation(ctx.cfg));
    const auto gs = solve_ground_state(space, ham.full, build_gs_options(ctx.cfg));
    op = std::make_unique<RenormOperator>(gs.frame, ham, model.lambda(), ctx.cfg.num("renorm.c2", 2.5));
    ProjectionOptions po;
    po.contour = build_contour(ctx.cfg, model);
    po.resolvent = build_resolvent_options(ctx.cfg);
    po.threads = ctx.threads;
    const auto window = default_window(vol, ctx.cfg.integer("dispersion.window_margin", 0));
    const int fallback = vol.boundary() == Boundary::periodic ? window.front() : window[window.size() / 2];
    center = ctx.cfg.integer("hoppings.center", fallback);
    basis = build_basis(*op, window, po);
    hop = hopping_amplitudes(*op, basis, center);
    center_index = static_cast<std::size_t>(std::find(window.begin(), window.end(), center) - window.begin());
  }

  Dispersion dispersion() const { return Dispersion(hop, ring_length(vol)); }
};

bool is_tfi_chain(const Config& cfg) {
  return cfg.has("preset") && cfg.str("preset") == "tfi" && cfg.integer("nu", 1) == 1;
}

PacketSpec packet_spec(const std::vector<double>& window, const std::string& profile, int smoothness,
                       int center, const std::string& key) {
  if (window.size() != 2 || !(window[1] > window[0])) throw Error(key + " needs an increasing pair [lo, hi]");
  PacketSpec s;
  s.p_lo = window[0];
  s.p_hi = window[1];
  s.profile = profile_from_string(profile);
  s.smoothness = smoothness;
  s.center = center;
  return s;
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers; results are stored by index.
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, std::min<int>(threads, static_cast<int>(n))));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i; (i = next++) < n;) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

int run_hoppings(const RunContext& ctx) {
  const ParticleStage st(ctx);
  const double lambda = st.model.lambda();
  const auto& h = st.hop;
  CsvFile f(ctx, "hoppings.csv",
            {{"ring", fmt(ring_length(st.vol))},
             {"center", fmt(st.center)},
             {"slope", fmt(h.slope)},
             {"intercept", fmt(h.intercept)},
             {"r2", fmt(h.r2)},
             {"hermitian_defect", fmt(h.hermitian_defect)},
             {"remainder_norm", fmt(st.basis.remainder_norm)},
             {"remainder_epsilon", fmt(st.basis.remainder_epsilon)}},
            {"y", "re_t", "im_t"});
  for (std::size_t i = 0; i < h.y.size(); ++i) f.row({fmt(h.y[i]), fmt(h.t[i].real()), fmt(h.t[i].imag())});

  // |G - delta| along the row of the centre, worst case per distance
  std::map<int, double> dev;
  const auto ic = static_cast<Eigen::Index>(st.center_index);
  for (std::size_t j = 0; j < st.basis.window.size(); ++j) {
    const int r = std::abs(st.vol.displacement(st.center, st.basis.window[j])[0]);
    const Complex g = st.basis.gram(ic, static_cast<Eigen::Index>(j)) - (j == st.center_index ? 1.0 : 0.0);
    dev[r] = std::max(dev[r], std::abs(g));
  }
  CsvFile gf(ctx, "gram.csv", {}, {"r", "deviation", "bound"});
  Checks checks;
  double prev = INFINITY;
  bool monotone = true;
  for (const auto& [r, d] : dev) {
    const double bound = std::pow(5.0 * lambda, r);
    gf.row({fmt(r), fmt(d), fmt(bound)});
    if (r <= 4) {
      monotone = monotone && d < prev;
      prev = d;
      if (r >= 1) checks.add("gram_bound_r" + std::to_string(r), d, "<=", bound);
    }
  }
  checks.add_flag("gram_monotone_r0_4", monotone);

  std::ofstream coll(ctx.out / "xi.coll");
  if (!coll) throw Error("cannot write xi.coll");
  write_collection(coll, st.basis.xi[st.center_index]);

  checks.add("hermitian_defect", h.hermitian_defect, "<=", 1e-8);
  checks.add("hopping_slope", h.slope, "<", 0.0);
  checks.add("hopping_r2", h.r2, ">=", 0.95);
  return checks.finish(ctx);
}

int run_dispersion(const RunContext& ctx) {
  const ParticleStage st(ctx);
  const Dispersion m = st.dispersion();
  const double lambda = st.model.lambda(), mu = st.model.mu();
  const auto samples = sample_dispersion(m, ctx.cfg.integer("dispersion.grid", 64), 1e-8);
  CsvFile f(ctx, "dispersion.csv", {{"ring", fmt(ring_length(st.vol))}}, {"p", "m", "dm_dp", "velocity"});
  for (const auto& s : samples) f.row({fmt(s.p), fmt(s.m), fmt(s.dm_dp), fmt(s.velocity)});

  Checks checks;
  if (is_tfi_chain(ctx.cfg)) {
    double err = 0.0;
    for (int j = 0; j <= 1000; ++j) {
      const double p = j / 1000.0;
      const double exact = std::sqrt(1 + 4 * lambda * lambda - 4 * lambda * std::cos(2 * std::numbers::pi * p));
      err = std::max(err, std::abs(m(p) - exact));
    }
    checks.add("closed_form_error", err, "<=", 1e-2);
    checks.add("m0_error", std::abs(m(0.0) - (1 - 2 * lambda)), "<=", 1e-2);
    checks.add("m_half_error", std::abs(m(0.5) - (1 + 2 * lambda)), "<=", 1e-2);
  }
  if (ring_length(st.vol) > 0) {
    const double c2 = ctx.cfg.num("renorm.c2", 2.5);
    const double pad = 1e-9;
    const BandResult band =
        momentum_band(st.vol, st.model, mu * (1 - c2 * lambda) - pad, mu * (1 + c2 * lambda) + pad);
    const auto low = band.lowest();
    CsvFile bf(ctx, "band.csv", {{"ground", fmt(band.ground)}}, {"j", "k", "m", "ed"});
    double err = 0.0;
    const int n = st.vol.size();
    for (int j = 0; j < n; ++j) {
      const double k = static_cast<double>(j) / n;
      bf.row({fmt(j), fmt(k), fmt(m(k)), fmt(low[j])});
      err = std::isnan(low[j]) ? INFINITY : std::max(err, std::abs(m(k) - low[j]));
    }
    checks.add("ed_band_error", err, "<=", 1e-2);
    checks.add("ed_band_count", static_cast<double>(band.count()), ">=", n);
  }
  if (ctx.cfg.has("cone.times")) {
    const auto spec = packet_spec(ctx.cfg.list("cone.window", {0.2, 0.3}), ctx.cfg.str("cone.profile", "raised_cosine"),
                                  ctx.cfg.integer("cone.smoothness", 2), 0, "cone.window");
    const WavePacket p = make_packet(spec, ctx.cfg.integer("cone.grid", 256));
    const ConeReport rep = cone_decay_check(p, m, ctx.cfg.num("cone.factor", 1.5), ctx.cfg.list("cone.times"),
                                            ctx.cfg.integer("cone.power", 4));
    CsvFile cf(ctx, "cone.csv", {{"cone_lo", fmt(rep.cone_lo)}, {"cone_hi", fmt(rep.cone_hi)}},
               {"t", "constant", "outside_mass"});
    for (std::size_t i = 0; i < rep.times.size(); ++i)
      cf.row({fmt(rep.times[i]), fmt(rep.constants[i]), fmt(rep.outside_mass[i])});
    checks.add_flag("cone_single_constant", rep.pass);
  }
  return checks.finish(ctx);
}

int run_scatter(const RunContext& ctx) {
  const auto hop_path = ctx.out / "hoppings.csv";
  const auto xi_path = ctx.out / "xi.coll";
  std::vector<std::string> missing;
  if (!std::filesystem::exists(hop_path)) missing.push_back("hoppings.csv");
  if (!std::filesystem::exists(xi_path)) missing.push_back("xi.coll");
  if (!missing.empty()) {
    std::string names;
    for (const auto& s : missing) names += (names.empty() ? "" : ", ") + s;
    throw Error("scatter: missing prerequisite artifact(s) in '" + ctx.out.string() + "': " + names +
                " (run `qpert hoppings` with the same --out first)");
  }
  const int ring = std::stoi(read_csv_meta(hop_path, "ring").empty() ? "0" : read_csv_meta(hop_path, "ring"));
  if (ring <= 0) throw Error("scatter: hoppings.csv must come from a periodic ring");
  if (ctx.cfg.has("scatter.basis_sites") && ctx.cfg.integer("scatter.basis_sites", 0) != ring)
    throw Error("scatter: hoppings.csv was computed on a ring of " + std::to_string(ring) +
                " sites, config says scatter.basis_sites = " + ctx.cfg.str("scatter.basis_sites"));
  const int src_center = std::stoi(read_csv_meta(hop_path, "center"));
  Hoppings hop;
  for (const auto& r : read_csv_rows(hop_path)) {
    if (r.size() != 3) throw Error("scatter: malformed hoppings.csv row");
    hop.y.push_back(std::stoi(r[0]));
    hop.t.emplace_back(std::stod(r[1]), std::stod(r[2]));
  }
  const Dispersion m(hop, ring);
  std::ifstream xin(xi_path);
  const Collection xi0 = read_collection(xin);

  const Model model = build_model(ctx.cfg);
  const Volume vol = build_volume(ctx.cfg);
  if (vol.nu() != 1) throw ModelError("scatter supports chains only");
  const Hamiltonian ham = assemble_hamiltonian(vol, model);
  const auto space = ClusterSpace::create(vol, model, build_truncation(ctx.cfg));
  const auto gs = solve_ground_state(space, ham.full, build_gs_options(ctx.cfg));
  const Volume src = Volume::chain(ring, Boundary::periodic);
  const ScatterContext sc(gs.frame, ham.full, transplant_basis(xi0, src, src_center, *space), m);

  const int grid = ctx.cfg.integer("scatter.grid", 256);
  const auto centers = ctx.cfg.list("scatter.centers", {static_cast<double>(vol.size() / 2)});
  const std::string profile = ctx.cfg.str("scatter.profile", "raised_cosine");
  const int smooth = ctx.cfg.integer("scatter.smoothness", 2);
  std::vector<WavePacket> packets;
  for (const char* key : {"scatter.p1", "scatter.p2", "scatter.p3"}) {
    if (!ctx.cfg.has(key)) break;
    const std::size_t i = packets.size();
    if (i >= centers.size()) throw Error("scatter.centers needs one centre per packet");
    packets.push_back(make_packet(packet_spec(ctx.cfg.list(key), profile, smooth, static_cast<int>(centers[i]), key), grid));
  }
  if (packets.empty()) throw Error("scatter: at least scatter.p1 is required");
  const FockVector fock = FockVector::product(packets);
  const Admissibility adm = admissible(fock, m);
  if (!adm.ok) throw Error("scatter: packets are not admissible (velocity sets overlap)");
  const double budget = time_budget(fock, m, vol.size());
  const auto times = ctx.cfg.list("scatter.times", {0.0, 5.0, 10.0, 15.0});
  for (double t : times)
    if (std::abs(t) > budget)
      throw Error("scatter: t = " + fmt(t) + " exceeds the time budget " + fmt(budget) +
                  " (enlarge the volume or narrow the packets)");
  const bool has_mismatch = packets.size() >= 2;
  const FockVector fewer =
      FockVector::product(std::vector<WavePacket>(packets.begin(), packets.end() - (has_mismatch ? 1 : 0)));
  const bool propagate = ctx.cfg.boolean("scatter.propagate", false);
  const double iso_tol = ctx.cfg.num("scatter.iso_tol", 0.05);

  struct Row {
    double cook = 0, mismatch = 0, residual = NAN;
    OverlapRow iso;
  };
  std::vector<Row> rows(times.size());
  parallel_for(times.size(), ctx.threads, [&](std::size_t i) {
    const double t = times[i];
    rows[i].cook = cook_integrand(sc, fock, t);
    rows[i].iso = isometry_scan(sc, fock, fock, {t})[0];
    if (has_mismatch) rows[i].mismatch = std::abs(isometry_scan(sc, fewer, fock, {t})[0].overlap);
    if (propagate) rows[i].residual = dynamics_residual(sc, fock, t);
  });

  CsvFile f(ctx, "scatter.csv",
            {{"particles", fmt(packets.size())},
             {"admissibility_margin", fmt(adm.margin)},
             {"time_budget", fmt(budget)},
             {"packet_width", fmt(packet_width(packets[0], m))},
             {"ground_energy", fmt(gs.frame.energy)}},
            {"t", "cook", "overlap_re", "overlap_im", "target_re", "target_im", "iso_gap", "mismatch",
             "dynamics_residual", "iso_pass", "mismatch_pass"});
  for (std::size_t i = 0; i < times.size(); ++i) {
    const auto& r = rows[i];
    const double gap = std::abs(r.iso.overlap - r.iso.target);
    f.row({fmt(times[i]), fmt(r.cook), fmt(r.iso.overlap.real()), fmt(r.iso.overlap.imag()),
           fmt(r.iso.target.real()), fmt(r.iso.target.imag()), fmt(gap), fmt(r.mismatch), fmt(r.residual),
           gap <= iso_tol ? "pass" : "FAIL", r.mismatch <= iso_tol ? "pass" : "FAIL"});
  }
  Checks checks;
  if (times.size() >= 2)
    checks.add("cook_ratio", rows.back().cook / rows.front().cook, "<=", ctx.cfg.num("scatter.cook_ratio", 0.1));
  checks.add("isometry_gap", std::abs(rows.back().iso.overlap - rows.back().iso.target), "<=", iso_tol);
  if (has_mismatch) checks.add("mismatch_overlap", rows.back().mismatch, "<=", iso_tol);
  return checks.finish(ctx);
}

}  // namespace qpert::cli

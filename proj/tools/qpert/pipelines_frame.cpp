#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>

#include "pipelines.hpp"
#include "qpert/oracle.hpp"

namespace qpert::cli {

namespace {

constexpr std::size_t kDenseLimit = std::size_t{1} << 13;

Eigenpairs lowest_levels(const SparseMatrix& h, int k, std::uint64_t seed, bool vectors) {
  if (static_cast<std::size_t>(h.rows()) <= kDenseLimit) {
    Eigenpairs e = dense_spectrum(h, vectors);
    if (k > 0 && k < e.values.size()) {
      e.values.conservativeResize(k);
      if (vectors) e.vectors.conservativeResize(Eigen::NoChange, k);
    }
    return e;
  }
  LanczosOptions opt;
  opt.seed = seed;
  return extremal_eigs(h, std::max(k, 1), opt);
}

}  // namespace

int run_validate(const RunContext& ctx) {
  const auto [site, pert] = build_model_parts(ctx.cfg);
  const double margin = ctx.cfg.num("validate.margin", 2.0);
  const ValidationReport r = validate_model(site, pert, margin);
  CsvFile f(ctx, "validate.csv", {}, {"quantity", "value"});
  f.row({"lambda", fmt(r.strength)});
  f.row({"mu", fmt(site.mu)});
  f.row({"gap", fmt(r.gap)});
  f.row({"hermitian", r.hermitian ? "true" : "false"});
  f.row({"symmetry_defect", fmt(r.symmetry_defect)});
  f.row({"ground_residual", fmt(r.ground_residual)});
  f.row({"mu_isolation", fmt(r.mu_isolation)});
  f.row({"perturbation_defect", fmt(r.pert_defect)});
  std::cout << "gap = " << fmt(r.gap) << ", lambda = " << fmt(r.strength) << "\n";
  Checks checks;
  checks.add_flag("local_hermitian", r.hermitian);
  checks.add_flag("omega_ground", r.ground_ok);
  checks.add_flag("local_gap", r.gap_ok);
  checks.add_flag("mu_eigenvalue", r.mu_eigen_ok);
  checks.add_flag("mu_nondegenerate", r.mu_nondegenerate);
  checks.add_flag("mu_isolated", r.mu_isolated);
  checks.add_flag("perturbation_hermitian", r.pert_hermitian);
  for (const auto& msg : r.failures) std::cerr << "validate: " << msg << "\n";
  return checks.finish(ctx);
}

int run_solve_gs(const RunContext& ctx) {
  const Model model = build_model(ctx.cfg);
  const Volume vol = build_volume(ctx.cfg);
  const Hamiltonian ham = assemble_hamiltonian(vol, model);
  const auto space = ClusterSpace::create(vol, model, build_truncation(ctx.cfg));
  const GroundStateResult res = solve_ground_state(space, ham.full, build_gs_options(ctx.cfg));
  const auto& d = res.diag;
  const double lambda = model.lambda();

  Meta meta = {{"energy", fmt(res.frame.energy)},
               {"iterations", fmt(d.iterations)},
               {"final_damping", fmt(d.final_damping)},
               {"epsilon", fmt(d.epsilon)},
               {"weighted_bound", fmt(d.weighted_bound)},
               {"clusters", fmt(res.frame.gs.size())}};
  Checks checks;
  checks.add("epsilon_over_lambda", lambda > 0 ? d.epsilon / lambda : 0.0, "<=", 5.0);
  if (ham.space.dim() <= (std::size_t{1} << 20)) {
    const Eigenpairs ed = lowest_levels(ham.full, 1, ctx.seed, true);
    const CVector psi = ground_vector(res.frame);
    const double err = std::abs(res.frame.energy - ed.values(0));
    const double fid = std::norm(ed.vectors.col(0).dot(psi));
    meta.push_back({"ed_energy", fmt(ed.values(0))});
    meta.push_back({"fidelity", fmt(fid)});
    checks.add("energy_error", err, "<=", 1e-3);
    checks.add("fidelity", fid, ">=", 1.0 - 1e-4);
  }
  CsvFile f(ctx, "gs.csv", meta, {"iteration", "update_norm", "contraction_ratio", "energy"});
  for (std::size_t i = 0; i < d.update_norms.size(); ++i) {
    const double ratio = i >= 1 && i - 1 < d.contraction_ratios.size() ? d.contraction_ratios[i - 1] : NAN;
    const double e = i < d.energies.size() ? d.energies[i] : NAN;
    f.row({fmt(i + 1), fmt(d.update_norms[i]), fmt(ratio), fmt(e)});
  }
  std::ofstream coll(ctx.out / "gs.coll");
  if (!coll) throw Error("cannot write gs.coll");
  write_collection(coll, res.frame.gs);
  std::cout << "E = " << fmt(res.frame.energy) << " after " << d.iterations << " iterations, epsilon = "
            << fmt(d.epsilon) << "\n";
  return checks.finish(ctx);
}

int run_spectrum_check(const RunContext& ctx) {
  const Model model = build_model(ctx.cfg);
  const Volume vol = build_volume(ctx.cfg);
  const Hamiltonian ham = assemble_hamiltonian(vol, model);
  const Eigenpairs ed = lowest_levels(ham.full, ctx.cfg.integer("spectrum.k", 0), ctx.seed, false);
  std::vector<double> shifted(static_cast<std::size_t>(ed.values.size()));
  for (Eigen::Index i = 0; i < ed.values.size(); ++i) shifted[i] = ed.values(i) - ed.values(0);
  const double lambda = model.lambda();
  const double c2 = ctx.cfg.num("renorm.c2", 2.5);
  const LocalizationReport rep = localization_fit(shifted, model.energies(), vol.size(), lambda);

  CsvFile f(ctx, "spectrum.csv", {{"fitted_c2", fmt(rep.c2)}, {"gap", fmt(rep.gap)}},
            {"index", "energy", "nearest_level", "distance_ratio", "in_disk"});
  for (std::size_t i = 0; i < shifted.size(); ++i)
    f.row({fmt(i), fmt(shifted[i]), fmt(rep.nearest[i]), fmt(rep.distance[i]),
           rep.distance[i] <= c2 ? "true" : "false"});
  const double top = shifted.empty() ? 0.0 : shifted.back();
  const auto levels = free_levels(model.energies(), vol.size(), top + 1.0);
  CsvFile disks(ctx, "disks.csv", {}, {"level", "radius"});
  for (double a : levels) disks.row({fmt(a), fmt(c2 * lambda * a)});

  Checks checks;
  checks.add("fitted_c2", rep.c2, "<=", c2);
  checks.add("gap", rep.gap, ">=", model.mu() * (1.0 - 3.0 * lambda));
  return checks.finish(ctx);
}

int run_ed(const RunContext& ctx, const std::string& mode) {
  const Model model = build_model(ctx.cfg);
  const Volume vol = build_volume(ctx.cfg);
  if (mode == "band") {
    const double c2 = ctx.cfg.num("renorm.c2", 2.5);
    const double mu = model.mu(), lambda = model.lambda();
    const auto win = ctx.cfg.list("ed.window", {mu * (1.0 - c2 * lambda), mu * (1.0 + c2 * lambda)});
    if (win.size() != 2) throw Error("ed.window needs two values");
    const BandResult band = momentum_band(vol, model, win[0], win[1]);
    CsvFile f(ctx, "ed_band.csv", {{"ground", fmt(band.ground)}, {"count", fmt(band.count())}},
              {"j", "k", "lowest", "levels"});
    const auto low = band.lowest();
    for (std::size_t i = 0; i < band.sectors.size(); ++i) {
      const auto& s = band.sectors[i];
      f.row({fmt(s.j), fmt(static_cast<double>(s.j) / vol.size()), fmt(low[i]), fmt(s.energies.size())});
    }
    return 0;
  }
  const Hamiltonian ham = assemble_hamiltonian(vol, model);
  if (mode == "spectrum") {
    const Eigenpairs ed = lowest_levels(ham.full, ctx.cfg.integer("ed.k", 0), ctx.seed, false);
    CsvFile f(ctx, "ed_spectrum.csv", {{"dimension", fmt(ham.space.dim())}}, {"index", "energy", "excitation"});
    for (Eigen::Index i = 0; i < ed.values.size(); ++i)
      f.row({fmt(static_cast<std::size_t>(i)), fmt(ed.values(i)), fmt(ed.values(i) - ed.values(0))});
    return 0;
  }
  if (mode == "evolve") {
    const int site = ctx.cfg.integer("ed.site", vol.size() / 2);
    if (site < 0 || site >= vol.size()) throw Error("ed.site outside the volume");
    auto times = ctx.cfg.list("ed.times", {0.0, 1.0, 2.0, 5.0, 10.0});
    if (!std::is_sorted(times.begin(), times.end()) || times.front() < 0)
      throw Error("ed.times must be non-negative and ascending");
    const auto& ps = ham.space;
    CVector psi = CVector::Zero(static_cast<Eigen::Index>(ps.dim()));
    psi(static_cast<Eigen::Index>(ps.stride(site) * static_cast<std::size_t>(model.w_index()))) = 1.0;
    const auto bounds = spectral_bounds(ham.full, 60, ctx.seed);
    CsvFile f(ctx, "ed_evolve.csv", {{"site", fmt(site)}}, {"t", "x", "excitation", "norm"});
    double now = 0.0;
    for (double t : times) {
      if (t > now) psi = evolve_reference(ham.full, psi, t - now, bounds);
      now = t;
      std::vector<double> dens(static_cast<std::size_t>(vol.size()), 0.0);
      for (std::size_t s = 0; s < ps.dim(); ++s) {
        const double p = std::norm(psi(static_cast<Eigen::Index>(s)));
        for (int x = 0; x < vol.size(); ++x)
          if (ps.digit(s, x) != 0) dens[x] += p;
      }
      for (int x = 0; x < vol.size(); ++x) f.row({fmt(t), fmt(x), fmt(dens[x]), fmt(psi.norm())});
    }
    return 0;
  }
  throw Error("unknown ed mode '" + mode + "' (expected spectrum, band or evolve)");
}

int run_report(const RunContext& ctx) {
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(ctx.out))
    for (const auto& e : std::filesystem::directory_iterator(ctx.out)) {
      const std::string n = e.path().filename().string();
      if (n.rfind("checks_", 0) == 0 && e.path().extension() == ".csv") files.push_back(e.path());
    }
  if (files.empty()) throw Error("report: no checks_*.csv files in '" + ctx.out.string() + "'");
  std::sort(files.begin(), files.end());
  CsvFile f(ctx, "report.csv", {}, {"command", "check", "value", "relation", "threshold", "pass"});
  bool ok = true;
  for (const auto& p : files) {
    const std::string cmd = p.stem().string().substr(7);
    for (const auto& r : read_csv_rows(p)) {
      if (r.size() != 5) throw Error("report: malformed row in " + p.string());
      f.row({cmd, r[0], r[1], r[2], r[3], r[4]});
      ok = ok && r[4] == "pass";
      std::cout << (r[4] == "pass" ? "PASS " : "FAIL ") << cmd << "/" << r[0] << "\n";
    }
  }
  return ok ? 0 : 2;
}

int run_command(RunContext ctx, const std::string& command) {
  try {
    ctx.command = command;
    if (command == "validate") return run_validate(ctx);
    if (command == "solve-gs") return run_solve_gs(ctx);
    if (command == "spectrum-check") return run_spectrum_check(ctx);
    if (command == "hoppings") return run_hoppings(ctx);
    if (command == "dispersion") return run_dispersion(ctx);
    if (command == "scatter") return run_scatter(ctx);
    if (command == "report") return run_report(ctx);
    if (command.rfind("ed ", 0) == 0) {
      const std::string mode = command.substr(3);
      ctx.command = "ed_" + mode;
      return run_ed(ctx, mode);
    }
    throw Error("unknown command '" + command + "'");
  } catch (const std::exception& e) {
    std::cerr << "qpert " << command << ": error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace qpert::cli

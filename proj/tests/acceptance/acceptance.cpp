// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "rwl/admissibility.hpp"
#include "rwl/estimates.hpp"
#include "rwl/haar.hpp"
#include "rwl/littlewood_paley.hpp"
#include "rwl/multipliers.hpp"

using namespace rwl;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kIdentityTol = 1e-10;
constexpr double kReconTol = 1e-8;
constexpr double kPartitionTol = 1e-10;
constexpr double kSumTol = 1e-7;
constexpr double kSquareTol = 1e-8;
constexpr double kRepresentationTol = 1e-6;
constexpr double kSlopeSlack = 0.25;
constexpr double kEnvelopeDrift = 0.25;
constexpr double kUnitarityTol = 1e-10;
constexpr double kSemenovSpread = 3.0;
constexpr double kRefinementDrift = 0.25;
constexpr double kScaleInvarianceTol = 1e-10;
constexpr std::uint64_t kSeed = 1;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    detail << (ok ? "" : "!") << what << "; ";
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::shared_ptr<const WaveletSystem> db4_system(int n, int J) {
  return std::make_shared<const WaveletSystem>(build_wavelet_system("db4", make_grid(n, J), all_directions(n)));
}

std::shared_ptr<const LittlewoodPaley> lp_for(std::shared_ptr<const WaveletSystem> sys) {
  const TorusGrid& g = sys->grid();
  return std::make_shared<const LittlewoodPaley>(sys, std::make_shared<const CalderonPair>(g), make_auxiliary_system(g));
}

std::vector<DiscreteField> bandlimited(const WaveletSystem& sys, int count) {
  SuiteSpec s;
  s.bandlimited = count;
  s.atoms = s.packets = s.riesz_preimages = 0;
  std::vector<DiscreteField> out;
  for (auto& m : make_suite(s, sys, 0)) out.push_back(std::move(m.field));
  return out;
}

Direction direction_for(int n) { return parse_direction(n == 1 ? "1" : "10", 0); }

Budget budget() {
  Budget b;
  b.seed = kSeed;
  return b;
}

void algebraic_identities(Outcome& o) {
  for (auto [n, J] : {std::pair{1, 10}, std::pair{2, 7}}) {
    const TorusGrid g = make_grid(n, J);
    Rng rng(derive_seed(kSeed, 10 + n));
    const auto off = off_hyperplane_table(g, 0);
    double sq = 0.0, inv = 0.0, sect = 0.0;
    for (int t = 0; t < 20; ++t) {
      const DiscreteField u = remove_mean(random_real_field(g, rng));
      DiscreteField s(g);
      for (int i = 0; i < n; ++i) s += riesz(riesz(u, i), i);
      sq = std::max(sq, max_abs(s + u));
      if (n == 1) inv = std::max(inv, max_abs_diff(riesz_inverse(u, 0), cdouble(-1.0) * riesz(u, 0)));
      const DiscreteField w = apply_multiplier(u, std::span<const cdouble>(off));
      sect = std::max(sect, max_abs_diff(partial_derivative(sectional_integral(w, 0), 0), w));
    }
    const std::string tag = "n=" + std::to_string(n) + " ";
    o.require(sq <= kIdentityTol, tag + "sum R_i^2 + I " + fmt(sq));
    if (n == 1) o.require(inv <= kIdentityTol, tag + "R^-1 + R " + fmt(inv));
    o.require(sect <= kIdentityTol, tag + "dE - I " + fmt(sect));
  }
}

void completeness(Outcome& o) {
  for (auto [n, J] : {std::pair{1, 10}, std::pair{2, 7}}) {
    const auto sys = db4_system(n, J);
    const TorusGrid& g = sys->grid();
    Rng rng(derive_seed(kSeed, 20 + n));
    double wav = 0.0, haar = 0.0;
    for (int t = 0; t < 100; ++t) {
      const DiscreteField u = random_real_field(g, rng);
      wav = std::max(wav, relative_l2_error(sys->synthesize(sys->analyze(u)), u));
      haar = std::max(haar, relative_l2_error(haar_synthesize(haar_analyze(u)), u));
    }
    const CalderonPair pair(g);
    double part = 0.0;
    for (std::size_t s = 1; s < g.size(); ++s) {
      double acc = 0.0;
      for (int m = pair.min_scale(); m <= pair.max_scale(); ++m) acc += pair.table(m)[s];
      part = std::max(part, std::fabs(acc - 1.0));
    }
    const auto L = lp_for(sys);
    const Direction eps = direction_for(n);
    double sum_t = 0.0, sum_m = 0.0;
    for (const auto& u : bandlimited(*sys, 5)) {
      DiscreteField s(g);
      for (int l = L->ell_min(); l <= L->ell_max(); ++l) s += L->t_ell(u, l, eps);
      sum_t = std::max(sum_t, relative_l2_error(s, wavelet_projection(u, *sys, eps)));
      for (int ell : {0, 1, 2}) {
        DiscreteField sm(g);
        for (int m = L->m_min(ell); m <= L->m_max(ell); ++m) sm += L->t_ell_m(u, ell, m, eps);
        // T_l u may vanish exactly on a band-limited u; normalize by ||u||.
        sum_m = std::max(sum_m, l2_norm(sm - L->t_ell(u, ell, eps)) / l2_norm(u));
      }
    }
    const std::string tag = "n=" + std::to_string(n) + " ";
    o.require(wav <= kReconTol, tag + "wavelet recon " + fmt(wav));
    o.require(haar <= kReconTol, tag + "haar recon " + fmt(haar));
    o.require(part <= kPartitionTol, tag + "partition " + fmt(part));
    o.require(sum_t <= kSumTol, tag + "sum T_l " + fmt(sum_t));
    o.require(sum_m <= kSumTol, tag + "sum T_lm " + fmt(sum_m));
  }
}

void square_function_identity(Outcome& o) {
  for (auto [n, J] : {std::pair{1, 10}, std::pair{2, 7}}) {
    const TorusGrid g = make_grid(n, J);
    Rng rng(derive_seed(kSeed, 30 + n));
    double err = 0.0;
    for (int t = 0; t < 100; ++t) {
      const DiscreteField v = remove_mean(random_real_field(g, rng));
      err = std::max(err, std::fabs(l2_norm(square_function(v)) - l2_norm(v)) / l2_norm(v));
    }
    o.require(err <= kSquareTol, "n=" + std::to_string(n) + " " + fmt(err));
  }
}

void riesz_representation(Outcome& o) {
  const auto sys = db4_system(2, 7);
  const auto L = lp_for(sys);
  const Direction eps = direction_for(2);
  const auto off = off_hyperplane_table(sys->grid(), 0);
  const auto fields = bandlimited(*sys, 20);
  for (int ell : {0, 1, 2}) {
    const RieszIdentity id(*L, ell, eps);
    double worst = 0.0;
    for (const auto& f : fields) worst = std::max(worst, id.residual(apply_multiplier(f, std::span<const cdouble>(off))));
    o.require(worst <= kRepresentationTol, "l=" + std::to_string(ell) + " " + fmt(worst));
  }
}

void decay_law(Outcome& o) {
  const auto sys = db4_system(2, 8);
  const double alpha = sys->certificate().alpha;
  const auto L = lp_for(sys);
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = scan_t_ell(L, direction_for(2), 2.0, 0, std::min(5, L->ell_max()), true, budget());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double s0 = r[0].fit ? r[0].fit->slope : INFINITY;
  const double s1 = r[1].fit ? r[1].fit->slope : INFINITY;
  o.require(s0 <= -alpha + kSlopeSlack, "T slope " + fmt(s0) + " vs " + fmt(-alpha + kSlopeSlack));
  o.require(s1 <= 1.0 - alpha + kSlopeSlack, "T R^-1 slope " + fmt(s1) + " vs " + fmt(1.0 - alpha + kSlopeSlack));
  o.require(secs <= 600.0, "scan " + fmt(secs) + " s");
}

void low_shift_law(Outcome& o) {
  std::vector<double> cs;
  std::vector<ScanReport> scans;
  for (int J : {7, 8}) {
    const auto r = scan_t_ell(lp_for(db4_system(2, J)), direction_for(2), 2.0, -6, -1, false, budget())[0];
    cs.push_back(envelope_constant(r, law_low_shift));
    scans.push_back(r);
  }
  o.require(cs[0] > 0.0 && std::isfinite(cs[0]), "C(7) " + fmt(cs[0]));
  const double drift = std::fabs(cs[1] / cs[0] - 1.0);
  o.require(drift <= kEnvelopeDrift, "C(8) " + fmt(cs[1]) + " drift " + fmt(drift));
  // Finer-grid values must sit under the coarse envelope widened by the drift allowance.
  bool under = true;
  for (const auto& pt : scans[1].points)
    under = under && pt.estimate.value() <= (1.0 + kEnvelopeDrift) * cs[0] * law_low_shift(pt.value);
  o.require(under, "J=8 values under envelope");
}

void semenov_growth(Outcome& o) {
  const TorusGrid g = make_grid(1, 12);
  const std::vector<int> mus{1, 2, 4, 8, 16};
  Rng rng(derive_seed(kSeed, 70));
  double iso = 0.0;
  for (int mu : mus)
    for (int t = 0; t < 4; ++t) {
      const DiscreteField u = random_complex_field(g, rng);
      iso = std::max(iso, std::fabs(l2_norm(semenov_rearrange(u, {mu, 0, 0})) / l2_norm(u) - 1.0));
    }
  o.require(iso <= kUnitarityTol, "isometry " + fmt(iso));
  const auto r = scan_semenov(g, 4.0, mus, budget());
  double lo = INFINITY, hi = 0.0;
  for (const auto& pt : r.points) {
    const double v = pt.estimate.value() / std::log(2.0 + pt.value);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  o.require(hi / lo <= kSemenovSpread, "p=4 spread " + fmt(hi / lo));
}

void predecessor_envelope(Outcome& o) {
  Direction eps = direction_for(1);
  eps.i0.reset();
  std::vector<double> cs;
  for (int J : {7, 8}) {
    const auto r = scan_predecessor(db4_system(1, J), eps, 2.0, {1, 2, 3}, budget());
    if (J == 7) {
      bool dense = true;
      for (const auto& pt : r.points) dense = dense && pt.estimate.certified.has_value();
      o.require(dense, "J=7 dense oracle");
    }
    cs.push_back(*r.c_fit);
  }
  const double drift = std::fabs(cs[1] / cs[0] - 1.0);
  o.require(drift <= kEnvelopeDrift, "C " + fmt(cs[0]) + " -> " + fmt(cs[1]) + " drift " + fmt(drift));
}

// Max of `metric` over the standard suite at J and J+1 for W and P.
void refinement(Outcome& o, int n, int J, const std::vector<double>& ps,
                const std::function<double(const DiscreteField&, double, ProjectorKind, const FieldMap&,
                                           const WaveletSystem&)>& metric) {
  const Direction eps = direction_for(n);
  std::vector<std::shared_ptr<const WaveletSystem>> systems{db4_system(n, J), db4_system(n, J + 1)};
  std::vector<std::vector<SuiteMember>> suites;
  for (const auto& s : systems) suites.push_back(make_suite(SuiteSpec{}, *s, 0));
  for (double p : ps)
    for (ProjectorKind kind : {ProjectorKind::wavelet, ProjectorKind::haar}) {
      double m[2] = {0.0, 0.0};
      for (int d = 0; d < 2; ++d) {
        const auto sys = systems[static_cast<std::size_t>(d)];
        FieldMap proj;
        if (kind == ProjectorKind::wavelet)
          proj = [sys, eps](const DiscreteField& u) { return wavelet_projection(u, *sys, eps); };
        else
          proj = [sc = sys->active_scales(), eps](const DiscreteField& u) { return haar_projection(u, eps, sc); };
        for (const auto& mem : suites[static_cast<std::size_t>(d)]) m[d] = std::max(m[d], metric(mem.field, p, kind, proj, *sys));
      }
      const double drift = std::fabs(m[1] / m[0] - 1.0);
      const bool ok = std::isfinite(m[0]) && std::isfinite(m[1]) && m[0] > 0.0 && drift < kRefinementDrift;
      o.require(ok, std::string(kind == ProjectorKind::wavelet ? "W" : "P") + " p=" + fmt(p) + " " + fmt(m[0]) + "->" +
                        fmt(m[1]));
    }
}

InterpConfig interp_config(const WaveletSystem& sys, double p, ProjectorKind kind) {
  const double a = sys.certificate().alpha;
  return InterpConfig{p, a > 0.0 ? a : 1.0, 0, direction_for(sys.grid().n), kind};
}

void interp_boundedness(Outcome& o) {
  refinement(o, 1, 10, {4.0 / 3.0, 2.0, 4.0},
             [](const DiscreteField& u, double p, ProjectorKind kind, const FieldMap& proj, const WaveletSystem& sys) {
               return interp_ratio(u, interp_config(sys, p, kind), proj);
             });
  const auto sys = db4_system(1, 10);
  const auto u = bandlimited(*sys, 1).front();
  const FieldMap W = [sys](const DiscreteField& v) { return wavelet_projection(v, *sys, direction_for(1)); };
  double inv = 0.0;
  for (double p : {4.0 / 3.0, 2.0, 4.0}) {
    const auto c = interp_config(*sys, p, ProjectorKind::wavelet);
    for (double s : {1e-3, 37.5, 1e4}) inv = std::max(inv, std::fabs(interp_ratio(cdouble(s) * u, c, W) / interp_ratio(u, c, W) - 1.0));
  }
  o.require(inv <= kScaleInvarianceTol, "scale invariance " + fmt(inv));
}

void coercivity(Outcome& o) {
  refinement(o, 2, 7, {2.0},
             [](const DiscreteField& u, double p, ProjectorKind, const FieldMap& proj, const WaveletSystem&) {
               const auto r = coercivity_check(u, 0, p, proj);
               return r ? *r : 0.0;
             });
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RWL_CLI_PATH) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

void determinism(Outcome& o) {
  const fs::path root = fs::temp_directory_path() / "rwl_acceptance_determinism";
  fs::remove_all(root);
  const std::string config = std::string(RWL_SOURCE_DIR) + "/configs/default.json";
  const int a = run_cli("--config " + config + " --out " + (root / "a").string() + " --workers 1 all");
  const int b = run_cli("--config " + config + " --out " + (root / "b").string() + " --workers 2 all");
  o.require(a == 0 && b == 0, "exit codes " + std::to_string(a) + "," + std::to_string(b));
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(root / "a"))
    if (e.path().filename() != "manifest.json") names.push_back(e.path().filename().string());
  std::size_t other = 0;
  for (const auto& e : fs::directory_iterator(root / "b"))
    if (e.path().filename() != "manifest.json") ++other;
  o.require(!names.empty() && other == names.size(), std::to_string(names.size()) + " data files");
  std::size_t same = 0;
  for (const auto& name : names) same += slurp(root / "a" / name) == slurp(root / "b" / name) ? 1 : 0;
  o.require(same == names.size(), std::to_string(same) + " byte-identical");
  fs::remove_all(root);
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"algebraic identities", algebraic_identities},
      {"completeness", completeness},
      {"square function identity", square_function_identity},
      {"riesz representation identity", riesz_representation},
      {"T_l decay law", decay_law},
      {"low-shift envelope", low_shift_law},
      {"semenov growth", semenov_growth},
      {"predecessor envelope", predecessor_envelope},
      {"interpolatory boundedness", interp_boundedness},
      {"partial coercivity", coercivity},
      {"determinism", determinism},
  };
  int failures = 0;
  int index = 0;
  for (const auto& [name, body] : criteria) {
    ++index;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      body(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "error: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += o.pass ? 0 : 1;
    std::printf("%s %2d %-32s [%.1fs] %s\n", o.pass ? "PASS" : "FAIL", index, name.c_str(), secs, o.detail.str().c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

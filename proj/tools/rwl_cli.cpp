#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "rwl/admissibility.hpp"
#include "rwl/estimates.hpp"
#include "rwl/haar.hpp"
#include "rwl/littlewood_paley.hpp"
#include "rwl/multipliers.hpp"
#include "rwl/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rwl;

namespace {

constexpr const char* kSchema = "rwl-experiment/1";

struct SemenovConfig {
  int n = 1;
  int J = 12;
  double p = 4.0;
  std::vector<int> mu{1, 2, 4, 8, 16};
};

struct PredecessorConfig {
  std::vector<int> J{7, 8};
  std::vector<int> lambda{1, 2, 3};
  double p = 2.0;
};

struct ExperimentConfig {
  int n = 1;
  int J = 10;
  std::string filter = "db4";
  std::string filter_table;
  double delta = 1.0;
  std::optional<double> alpha;
  std::string epsilon = "1";
  int i0 = 0;
  std::vector<double> p{4.0 / 3.0, 2.0, 4.0};
  std::uint64_t seed = 1;
  int workers = 1;
  SuiteSpec suite;
  int tell_lo = 0, tell_hi = 5;
  int tell2b_lo = -6, tell2b_hi = -1;
  std::vector<int> identity_ell{0, 1, 2};
  int identity_fields = 20;
  SemenovConfig semenov;
  PredecessorConfig predecessor;
  Budget budget;
  std::string output = "out";
};

void require_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
  }
}

ExperimentConfig parse_config(const json& j) {
  require_keys(j, "config",
               {"schema", "grid", "filter", "filter_table", "delta", "alpha", "epsilon", "i0", "p", "seed", "workers",
                "suite", "scan_tell", "identity", "semenov", "predecessor", "budget", "output"});
  if (!j.contains("schema") || j.at("schema") != kSchema)
    throw ConfigError(std::string("config schema must be \"") + kSchema + "\"");
  ExperimentConfig c;
  if (j.contains("grid")) {
    require_keys(j["grid"], "grid", {"n", "J"});
    read(j["grid"], "n", c.n);
    read(j["grid"], "J", c.J);
  }
  read(j, "filter", c.filter);
  read(j, "filter_table", c.filter_table);
  read(j, "delta", c.delta);
  if (j.contains("alpha") && !j["alpha"].is_null()) {
    double a = 0.0;
    read(j, "alpha", a);
    c.alpha = a;
  }
  read(j, "epsilon", c.epsilon);
  read(j, "i0", c.i0);
  read(j, "p", c.p);
  read(j, "seed", c.seed);
  read(j, "workers", c.workers);
  read(j, "output", c.output);
  if (j.contains("suite")) {
    const auto& s = j["suite"];
    require_keys(s, "suite", {"bandlimited", "atoms", "packets", "riesz_preimages", "band", "seed"});
    read(s, "bandlimited", c.suite.bandlimited);
    read(s, "atoms", c.suite.atoms);
    read(s, "packets", c.suite.packets);
    read(s, "riesz_preimages", c.suite.riesz_preimages);
    read(s, "band", c.suite.band);
    read(s, "seed", c.suite.seed);
  }
  if (j.contains("scan_tell")) {
    const auto& s = j["scan_tell"];
    require_keys(s, "scan_tell", {"decay_range", "low_range"});
    std::vector<int> r;
    if (s.contains("decay_range")) {
      read(s, "decay_range", r);
      if (r.size() != 2) throw ConfigError("scan_tell.decay_range must be [lo, hi]");
      c.tell_lo = r[0];
      c.tell_hi = r[1];
    }
    if (s.contains("low_range")) {
      read(s, "low_range", r);
      if (r.size() != 2) throw ConfigError("scan_tell.low_range must be [lo, hi]");
      c.tell2b_lo = r[0];
      c.tell2b_hi = r[1];
    }
  }
  if (j.contains("identity")) {
    require_keys(j["identity"], "identity", {"ell", "fields"});
    read(j["identity"], "ell", c.identity_ell);
    read(j["identity"], "fields", c.identity_fields);
  }
  if (j.contains("semenov")) {
    const auto& s = j["semenov"];
    require_keys(s, "semenov", {"n", "J", "p", "mu"});
    read(s, "n", c.semenov.n);
    read(s, "J", c.semenov.J);
    read(s, "p", c.semenov.p);
    read(s, "mu", c.semenov.mu);
  }
  if (j.contains("predecessor")) {
    const auto& s = j["predecessor"];
    require_keys(s, "predecessor", {"J", "lambda", "p"});
    read(s, "J", c.predecessor.J);
    read(s, "lambda", c.predecessor.lambda);
    read(s, "p", c.predecessor.p);
  }
  c.budget.dense_limit = 1024;
  if (j.contains("budget")) {
    const auto& s = j["budget"];
    require_keys(s, "budget",
                 {"max_iterations", "tolerance", "random_probes", "ascent_starts", "ascent_steps", "dense_limit"});
    read(s, "max_iterations", c.budget.max_iterations);
    read(s, "tolerance", c.budget.tolerance);
    read(s, "random_probes", c.budget.random_probes);
    read(s, "ascent_starts", c.budget.ascent_starts);
    read(s, "ascent_steps", c.budget.ascent_steps);
    read(s, "dense_limit", c.budget.dense_limit);
  }
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["schema"] = kSchema;
  j["grid"] = {{"n", c.n}, {"J", c.J}};
  j["filter"] = c.filter;
  if (!c.filter_table.empty()) j["filter_table"] = c.filter_table;
  j["delta"] = c.delta;
  j["alpha"] = c.alpha ? json(*c.alpha) : json(nullptr);
  j["epsilon"] = c.epsilon;
  j["i0"] = c.i0;
  j["p"] = c.p;
  j["seed"] = c.seed;
  j["suite"] = {{"bandlimited", c.suite.bandlimited}, {"atoms", c.suite.atoms},
                {"packets", c.suite.packets},         {"riesz_preimages", c.suite.riesz_preimages},
                {"band", c.suite.band},               {"seed", c.suite.seed}};
  j["scan_tell"] = {{"decay_range", {c.tell_lo, c.tell_hi}}, {"low_range", {c.tell2b_lo, c.tell2b_hi}}};
  j["identity"] = {{"ell", c.identity_ell}, {"fields", c.identity_fields}};
  j["semenov"] = {{"n", c.semenov.n}, {"J", c.semenov.J}, {"p", c.semenov.p}, {"mu", c.semenov.mu}};
  j["predecessor"] = {{"J", c.predecessor.J}, {"lambda", c.predecessor.lambda}, {"p", c.predecessor.p}};
  j["budget"] = {{"max_iterations", c.budget.max_iterations}, {"tolerance", c.budget.tolerance},
                 {"random_probes", c.budget.random_probes},   {"ascent_starts", c.budget.ascent_starts},
                 {"ascent_steps", c.budget.ascent_steps},     {"dense_limit", c.budget.dense_limit}};
  return j;
}

void log(const std::string& msg) { std::cerr << "[rwl] " << msg << std::endl; }

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

// Shared state for one invocation.
class Runner {
 public:
  Runner(ExperimentConfig cfg, fs::path out) : cfg_(std::move(cfg)), out_(std::move(out)) {}

  // Everything a stage needs is checked here, before any compute.
  void validate() {
    table_ = cfg_.filter_table.empty() ? FilterTable::builtin() : FilterTable::load(cfg_.filter_table);
    const Filter& f = table_.find(cfg_.filter);
    const TorusGrid g = make_grid(cfg_.n, cfg_.J);
    if (g.J < 5) throw ConfigError("grid depth J must be at least 5");
    if (f.length() > (g.N() >> 2)) throw ConfigError("filter too long for the grid");
    if (cfg_.J + 1 > max_depth(cfg_.n)) throw ConfigError("refinement stages need depth J+1 within the grid limit");
    eps_ = parse_direction(cfg_.epsilon, cfg_.i0);
    if (eps_.n != cfg_.n) throw ConfigError("epsilon length does not match grid dimension");
    if (!(cfg_.delta > 0.0)) throw ConfigError("delta must be positive");
    if (cfg_.alpha && !(*cfg_.alpha > 0.0 && *cfg_.alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
    if (cfg_.p.empty()) throw ConfigError("p list is empty");
    for (double p : cfg_.p)
      if (!(p > 1.0) || !std::isfinite(p)) throw ConfigError("every p must be finite and exceed 1");
    if (cfg_.workers < 1) throw ConfigError("workers must be positive");
    if (cfg_.suite.total() <= 0) throw ConfigError("suite is empty");
    if (cfg_.suite.bandlimited <= 0) throw ConfigError("suite needs band-limited members");
    if (2 * cfg_.suite.band >= g.N()) throw ConfigError("suite band exceeds Nyquist");
    if (cfg_.tell_hi < cfg_.tell_lo || cfg_.tell2b_hi < cfg_.tell2b_lo) throw ConfigError("empty scan_tell range");
    if (cfg_.identity_fields <= 0 || cfg_.identity_ell.empty()) throw ConfigError("identity stage needs fields and shifts");
    make_grid(cfg_.semenov.n, cfg_.semenov.J);
    if (!(cfg_.semenov.p > 1.0) || cfg_.semenov.mu.empty()) throw ConfigError("bad semenov section");
    if (cfg_.predecessor.J.empty() || cfg_.predecessor.lambda.empty()) throw ConfigError("bad predecessor section");
    for (int J : cfg_.predecessor.J) {
      const TorusGrid pg = make_grid(cfg_.n, J);
      if (pg.J < 5 || f.length() > (pg.N() >> 2)) throw ConfigError("predecessor depth too small for the filter");
      for (int l : cfg_.predecessor.lambda)
        if (l < 1) throw ConfigError("predecessor lambda must be positive");
    }
    if (!(cfg_.predecessor.p > 1.0)) throw ConfigError("predecessor p must exceed 1");
    fs::create_directories(out_);
    Budget b = cfg_.budget;
    b.seed = cfg_.seed;
    budget_ = b;
  }

  void run(const std::string& stage) {
    const auto t0 = std::chrono::steady_clock::now();
    log("stage " + stage);
    if (stage == "verify-admissible") verify_admissible();
    else if (stage == "decompose") decompose();
    else if (stage == "scan-tell") scan_tell();
    else if (stage == "scan-semenov") scan_semenov_stage();
    else if (stage == "scan-predecessor") scan_predecessor_stage();
    else if (stage == "interp-check") interp_check();
    else if (stage == "coercivity") coercivity();
    else if (stage == "identity-check") identity_check();
    timings_.push_back({stage, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
  }

  bool passed() const {
    for (const auto& c : checks_)
      if (!c["pass"].get<bool>()) return false;
    return true;
  }

  void finish(const std::string& config_text) {
    json report;
    report["version"] = kVersion;
    report["config"] = config_to_json(cfg_);
    report["sections"] = sections_;
    report["checks"] = checks_;
    report["pass"] = passed();
    write_file("report.json", report.dump(2) + "\n");

    json manifest;
    manifest["version"] = kVersion;
    manifest["config_sha256"] = sha256_hex(config_text);
    const std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    manifest["finished_utc"] = stamp;
    json stages = json::array();
    for (const auto& [name, secs] : timings_) stages.push_back({{"stage", name}, {"wall_seconds", secs}});
    manifest["stages"] = stages;
    json files = json::array();
    for (const auto& name : files_) {
      const std::string bytes = slurp(out_ / name);
      files.push_back({{"path", name}, {"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}});
    }
    manifest["files"] = files;
    std::ofstream(out_ / "manifest.json") << manifest.dump(2) << "\n";
    for (const auto& c : checks_)
      log(std::string(c["pass"].get<bool>() ? "PASS " : "FAIL ") + c["name"].get<std::string>());
  }

 private:
  void write_file(const std::string& name, const std::string& bytes) {
    std::ofstream(out_ / name, std::ios::binary) << bytes;
    if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
  }

  void write_scan(const std::string& name, const ScanReport& r) {
    std::ostringstream os;
    write_scan_csv(os, r);
    write_file(name, os.str());
  }

  void check(const std::string& name, bool pass, double value, double threshold, const std::string& rule) {
    checks_.push_back({{"name", name}, {"pass", pass}, {"value", value}, {"threshold", threshold}, {"rule", rule}});
  }

  std::shared_ptr<const WaveletSystem> system(int n, int J) {
    const auto key = std::make_pair(n, J);
    auto it = systems_.find(key);
    if (it != systems_.end()) return it->second;
    auto sys = std::make_shared<const WaveletSystem>(
        build_wavelet_system(table_.find(cfg_.filter), make_grid(n, J), all_directions(n), cfg_.seed));
    systems_[key] = sys;
    return sys;
  }

  std::shared_ptr<const LittlewoodPaley> lp(int J) {
    const TorusGrid g = make_grid(cfg_.n, J);
    return std::make_shared<const LittlewoodPaley>(system(cfg_.n, J), std::make_shared<const CalderonPair>(g),
                                                   make_auxiliary_system(g, table_));
  }

  std::vector<DiscreteField> bandlimited(const WaveletSystem& sys, int count) {
    SuiteSpec s = cfg_.suite;
    s.bandlimited = count;
    s.atoms = s.packets = s.riesz_preimages = 0;
    std::vector<DiscreteField> out;
    for (auto& m : make_suite(s, sys, cfg_.i0)) out.push_back(std::move(m.field));
    return out;
  }

  void verify_admissible() {
    auto sys = system(cfg_.n, cfg_.J);
    double alpha = cfg_.alpha ? *cfg_.alpha : sys->filter().alpha_default;
    if (alpha <= 0.0) alpha = 1.0;
    const auto rep = verify_admissibility(*sys, cfg_.delta, alpha, cfg_.seed);
    sections_["verify-admissible"] = to_json(rep);
  }

  void decompose() {
    auto sys = system(cfg_.n, cfg_.J);
    const TorusGrid& g = sys->grid();
    Rng rng(derive_seed(cfg_.seed, 101));
    double wav = 0.0, haar = 0.0, sq = 0.0;
    for (int t = 0; t < 100; ++t) {
      const DiscreteField u = random_real_field(g, rng);
      wav = std::max(wav, relative_l2_error(sys->synthesize(sys->analyze(u)), u));
      haar = std::max(haar, relative_l2_error(haar_synthesize(haar_analyze(u)), u));
      const DiscreteField v = remove_mean(u);
      sq = std::max(sq, std::fabs(l2_norm(square_function(v)) - l2_norm(v)) / l2_norm(v));
    }
    check("wavelet reconstruction", wav <= 1e-8, wav, 1e-8, "max relative L2 error over 100 random fields");
    check("haar reconstruction", haar <= 1e-8, haar, 1e-8, "max relative L2 error over 100 random fields");
    check("square function at p=2", sq <= 1e-8, sq, 1e-8, "| ||S u|| - ||u|| | / ||u|| on mean-zero fields");

    const CalderonPair pair(g);
    double part = 0.0;
    for (std::size_t s = 1; s < g.size(); ++s) {
      double acc = 0.0;
      for (int m = pair.min_scale(); m <= pair.max_scale(); ++m) acc += pair.table(m)[s];
      part = std::max(part, std::fabs(acc - 1.0));
    }
    check("calderon partition", part <= 1e-10, part, 1e-10, "max |sum_m v_hat w_hat - 1| at nonzero frequencies");

    auto L = lp(cfg_.J);
    const auto fields = bandlimited(*sys, 5);
    double sum_t = 0.0, sum_m = 0.0;
    const int ell_mid = std::clamp(1, L->ell_min(), L->ell_max());
    for (const auto& u : fields) {
      DiscreteField s(g);
      for (int l = L->ell_min(); l <= L->ell_max(); ++l) s += L->t_ell(u, l, eps_);
      sum_t = std::max(sum_t, relative_l2_error(s, wavelet_projection(u, *sys, eps_)));
      DiscreteField sm(g);
      for (int m = L->m_min(ell_mid); m <= L->m_max(ell_mid); ++m) sm += L->t_ell_m(u, ell_mid, m, eps_);
      sum_m = std::max(sum_m, l2_norm(sm - L->t_ell(u, ell_mid, eps_)) / l2_norm(u));
    }
    check("sum_l T_l = W", sum_t <= 1e-7, sum_t, 1e-7, "relative L2 on band-limited fields");
    check("sum_m T_lm = T_l", sum_m <= 1e-7, sum_m, 1e-7, "L2 error over ||u|| on band-limited fields");

    std::ostringstream os;
    write_haar_csv(os, haar_analyze(fields.front()));
    write_file("haar_coefficients.csv", os.str());
    sections_["decompose"] = {{"wavelet_error", wav},   {"haar_error", haar},     {"square_function_error", sq},
                              {"partition_error", part}, {"sum_t_error", sum_t},  {"sum_m_error", sum_m},
                              {"ell_range", {L->ell_min(), L->ell_max()}}, {"ell_for_m", ell_mid}};
  }

  void scan_tell() {
    auto L = lp(cfg_.J);
    const double alpha = system(cfg_.n, cfg_.J)->certificate().alpha;
    const int hi = std::min(cfg_.tell_hi, L->ell_max());
    auto decay = scan_t_ell(L, eps_, 2.0, cfg_.tell_lo, hi, true, budget_, cfg_.workers);
    const std::string tag = "_J" + std::to_string(cfg_.J);
    write_scan("scan_tell_T" + tag + ".csv", decay[0]);
    write_scan("scan_tell_T_Rinv" + tag + ".csv", decay[1]);
    const double s0 = decay[0].fit ? decay[0].fit->slope : INFINITY;
    const double s1 = decay[1].fit ? decay[1].fit->slope : INFINITY;
    check("T_l decay slope", s0 <= -alpha + 0.25, s0, -alpha + 0.25, "fitted log2 slope <= -alpha + 0.25");
    check("T_l R^-1 slope", s1 <= 1.0 - alpha + 0.25, s1, 1.0 - alpha + 0.25, "fitted log2 slope <= 1 - alpha + 0.25");

    json low = json::array();
    std::vector<double> cs;
    for (int J : {cfg_.J, cfg_.J + 1}) {
      auto r = scan_t_ell(lp(J), eps_, 2.0, cfg_.tell2b_lo, cfg_.tell2b_hi, false, budget_, cfg_.workers)[0];
      r.c_fit = envelope_constant(r, law_low_shift);
      r.envelope = "C 2^-|l| |l|";
      cs.push_back(*r.c_fit);
      write_scan("scan_tell_low_J" + std::to_string(J) + ".csv", r);
      low.push_back({{"J", J}, {"scan", to_json(r)}});
    }
    const double drift = std::fabs(cs[1] / cs[0] - 1.0);
    check("low-l envelope stability", drift <= 0.25, drift, 0.25, "|C(J+1)/C(J) - 1|");
    sections_["scan-tell"] = {{"alpha", alpha}, {"decay", {to_json(decay[0]), to_json(decay[1])}}, {"low", low}};
  }

  void scan_semenov_stage() {
    const TorusGrid g = make_grid(cfg_.semenov.n, cfg_.semenov.J);
    Rng rng(derive_seed(cfg_.seed, 202));
    double iso = 0.0;
    for (int mu : cfg_.semenov.mu)
      for (int t = 0; t < 4; ++t) {
        const DiscreteField u = random_real_field(g, rng);
        iso = std::max(iso, std::fabs(l2_norm(semenov_rearrange(u, {mu, 0, 0})) / l2_norm(u) - 1.0));
      }
    check("T_mu isometry at p=2", iso <= 1e-10, iso, 1e-10, "| ||T_mu u||_2 / ||u||_2 - 1 |");
    auto r = scan_semenov(g, cfg_.semenov.p, cfg_.semenov.mu, budget_, cfg_.workers);
    write_scan("scan_semenov.csv", r);
    double lo = INFINITY, hi = 0.0;
    for (const auto& pt : r.points) {
      const double v = pt.estimate.value() / std::log(2.0 + std::abs(pt.value));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    check("T_mu log growth", hi / lo <= 3.0, hi / lo, 3.0, "max/min of ||T_mu||_p / log(2+|mu|)");
    sections_["scan-semenov"] = {{"n", g.n}, {"J", g.J}, {"isometry_defect", iso}, {"scan", to_json(r)}};
  }

  void scan_predecessor_stage() {
    json scans = json::array();
    std::vector<double> cs;
    for (int J : cfg_.predecessor.J) {
      auto sys = system(cfg_.n, J);
      Direction e = eps_;
      e.i0.reset();
      const auto r = scan_predecessor(sys, e, cfg_.predecessor.p, cfg_.predecessor.lambda, budget_, cfg_.workers);
      cs.push_back(*r.c_fit);
      write_scan("scan_predecessor_J" + std::to_string(J) + ".csv", r);
      scans.push_back({{"J", J}, {"scan", to_json(r)}});
    }
    double drift = 0.0;
    for (std::size_t i = 1; i < cs.size(); ++i) drift = std::max(drift, std::fabs(cs[i] / cs[0] - 1.0));
    check("predecessor envelope stability", drift <= 0.25, drift, 0.25, "|C(J')/C(J) - 1| over configured depths");
    sections_["scan-predecessor"] = scans;
  }

  // Max of `metric` over the suite at depths J and J+1, per (p, projector).
  template <class Metric>
  json refinement(const std::string& stage, const std::vector<double>& ps, Metric metric, const std::string& label) {
    json rows = json::array();
    for (double p : ps)
      for (ProjectorKind kind : {ProjectorKind::wavelet, ProjectorKind::haar}) {
        const std::string form = kind == ProjectorKind::wavelet ? "W" : "P";
        ScanReport r;
        r.axis = "J";
        r.series = label + "_" + form;
        r.p = p;
        for (int J : {cfg_.J, cfg_.J + 1}) {
          auto sys = system(cfg_.n, J);
          const auto suite = make_suite(cfg_.suite, *sys, cfg_.i0);
          FieldMap proj;
          if (kind == ProjectorKind::wavelet)
            proj = [sys, e = eps_](const DiscreteField& u) { return wavelet_projection(u, *sys, e); };
          else
            proj = [sc = sys->active_scales(), e = eps_](const DiscreteField& u) { return haar_projection(u, e, sc); };
          const auto vals = parallel_map<double>(suite.size(), cfg_.workers,
                                                 [&](std::size_t t) { return metric(suite[t].field, p, kind, proj, *sys); });
          NormEstimate e;
          e.p = p;
          e.lower = *std::max_element(vals.begin(), vals.end());
          e.method = "suite-max";
          e.probes = static_cast<int>(vals.size());
          r.points.push_back({J, e, false});
        }
        const double a = r.points[0].estimate.value(), b = r.points[1].estimate.value();
        const double drift = std::fabs(b / a - 1.0);
        std::ostringstream name;
        name << label << " " << form << " p=" << format_number(p);
        check(name.str() + " refinement", std::isfinite(a) && std::isfinite(b) && drift < 0.25, drift, 0.25,
              "|max(J+1)/max(J) - 1|");
        std::ostringstream file;
        file << stage << "_" << form << "_p" << std::fixed << std::setprecision(3) << p << ".csv";
        write_scan(file.str(), r);
        rows.push_back(to_json(r));
      }
    return rows;
  }

  void interp_check() {
    auto metric = [this](const DiscreteField& u, double p, ProjectorKind kind, const FieldMap& proj,
                         const WaveletSystem& sys) {
      InterpConfig c{p, sys.certificate().alpha > 0.0 ? sys.certificate().alpha : 1.0, cfg_.i0, eps_, kind};
      return interp_ratio(u, c, proj);
    };
    json rows = refinement("interp", cfg_.p, metric, "interp");

    // Degree-0 homogeneity on the first band-limited member.
    auto sys = system(cfg_.n, cfg_.J);
    const auto u = bandlimited(*sys, 1).front();
    FieldMap W = [sys, e = eps_](const DiscreteField& v) { return wavelet_projection(v, *sys, e); };
    InterpConfig c{cfg_.p.front(), sys->certificate().alpha > 0.0 ? sys->certificate().alpha : 1.0, cfg_.i0, eps_,
                   ProjectorKind::wavelet};
    const double r1 = interp_ratio(u, c, W), r2 = interp_ratio(cdouble(37.5) * u, c, W);
    const double inv = std::fabs(r2 / r1 - 1.0);
    check("interp scale invariance", inv <= 1e-10, inv, 1e-10, "|ratio(c u)/ratio(u) - 1|");
    sections_["interp-check"] = {{"rows", rows}, {"scale_invariance_defect", inv}};
  }

  void coercivity() {
    auto metric = [this](const DiscreteField& u, double p, ProjectorKind, const FieldMap& proj, const WaveletSystem&) {
      const auto r = coercivity_check(u, cfg_.i0, p, proj);
      return r ? *r : 0.0;
    };
    sections_["coercivity"] = {{"rows", refinement("coercivity", {2.0}, metric, "coercivity")}};
  }

  void identity_check() {
    const TorusGrid g = make_grid(cfg_.n, cfg_.J);
    Rng rng(derive_seed(cfg_.seed, 303));
    double riesz_sq = 0.0, hilbert = 0.0, sect = 0.0;
    for (int t = 0; t < 10; ++t) {
      const DiscreteField u = remove_mean(random_real_field(g, rng));
      DiscreteField s(g);
      for (int i = 0; i < g.n; ++i) s += riesz(riesz(u, i), i);
      riesz_sq = std::max(riesz_sq, max_abs(s + u));
      if (g.n == 1) hilbert = std::max(hilbert, max_abs_diff(riesz_inverse(u, 0), cdouble(-1.0) * riesz(u, 0)));
      const DiscreteField w = apply_multiplier(u, std::span<const cdouble>(off_hyperplane_table(g, cfg_.i0)));
      sect = std::max(sect, max_abs_diff(partial_derivative(sectional_integral(w, cfg_.i0), cfg_.i0), w));
    }
    check("sum_i R_i^2 = -I", riesz_sq <= 1e-10, riesz_sq, 1e-10, "max abs on mean-zero fields");
    if (g.n == 1) check("R^-1 = -R (n=1)", hilbert <= 1e-10, hilbert, 1e-10, "max abs on mean-zero fields");
    check("d_i0 E_i0 = I", sect <= 1e-10, sect, 1e-10, "max abs on sectional-mean-zero fields");

    auto L = lp(cfg_.J);
    auto sys = system(cfg_.n, cfg_.J);
    const auto fields = bandlimited(*sys, cfg_.identity_fields);
    const auto off = off_hyperplane_table(g, cfg_.i0);
    json per = json::array();
    double worst = 0.0;
    for (int ell : cfg_.identity_ell) {
      L->require_ell(ell);
      const RieszIdentity id(*L, ell, eps_);
      const auto res = parallel_map<double>(fields.size(), cfg_.workers, [&](std::size_t t) {
        const DiscreteField u = apply_multiplier(fields[t], std::span<const cdouble>(off));
        return id.residual(u);
      });
      const double m = *std::max_element(res.begin(), res.end());
      worst = std::max(worst, m);
      per.push_back({{"ell", ell}, {"max_relative_residual", m}});
    }
    check("riesz representation identity", worst <= 1e-6, worst, 1e-6, "max relative residual");
    sections_["identity-check"] = {{"riesz_square_error", riesz_sq}, {"sectional_error", sect}, {"representation", per}};
    if (g.n == 1) sections_["identity-check"]["inverse_error"] = hilbert;
  }

  ExperimentConfig cfg_;
  fs::path out_;
  FilterTable table_;
  Direction eps_;
  Budget budget_;
  std::map<std::pair<int, int>, std::shared_ptr<const WaveletSystem>> systems_;
  json sections_ = json::object();
  json checks_ = json::array();
  std::vector<std::string> files_;
  std::vector<std::pair<std::string, double>> timings_;
};

const std::vector<std::string> kStages{"verify-admissible", "decompose",    "scan-tell",  "scan-semenov",
                                       "scan-predecessor",  "interp-check", "coercivity", "identity-check"};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wavelet and Littlewood-Paley experiment runner"};
  app.require_subcommand(1, 1);
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  app.add_option("--config", config_path, "experiment config (JSON)")->required();
  app.add_option("--seed", seed, "root seed (overrides config)");
  app.add_option("--workers", workers, "worker threads (overrides config)");
  app.add_option("--out", out_dir, "output directory (overrides config)");
  app.fallthrough();
  for (const auto& s : kStages) app.add_subcommand(s);
  app.add_subcommand("all", "run every stage");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  const std::string sub = app.get_subcommands().front()->get_name();

  std::string text;
  ExperimentConfig cfg;
  std::unique_ptr<Runner> runner;
  try {
    if (!fs::is_regular_file(config_path)) throw ConfigError("config file not found: " + config_path);
    text = slurp(config_path);
    cfg = parse_config(json::parse(text));
    if (seed) cfg.seed = *seed;
    if (workers) cfg.workers = *workers;
    if (!out_dir.empty()) cfg.output = out_dir;
    runner = std::make_unique<Runner>(cfg, fs::path(cfg.output));
    runner->validate();
  } catch (const std::exception& e) {
    log(std::string("config error: ") + e.what());
    return 2;
  }

  try {
    if (sub == "all")
      for (const auto& s : kStages) runner->run(s);
    else
      runner->run(sub);
    runner->finish(text);
  } catch (const std::exception& e) {
    log(std::string("compute error: ") + e.what());
    return 3;
  }
  return runner->passed() ? 0 : 1;
}

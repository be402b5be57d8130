// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "hypo/liealg.hpp"
#include "hypo/vfield.hpp"
#include "jobs.hpp"

using namespace hypo;

namespace {

FieldSystem corpus(const std::string& name) { return load_field_system(std::string(HYPO_CORPUS_DIR) + "/" + name + ".vf"); }

// Lyndon words of length n over d letters, counted by brute force over all d^n words.
int brute_lyndon_count(int d, int n) {
  std::vector<int> w(n, 0);
  int count = 0;
  while (true) {
    bool lyndon = true;
    for (int s = 1; s < n && lyndon; ++s) {
      // the rotation starting at s must be strictly greater
      const auto rot = [&](int i) { return w[(s + i) % n]; };
      int i = 0;
      while (i < n && rot(i) == w[i]) ++i;
      if (i == n || rot(i) < w[i]) lyndon = false;
    }
    count += lyndon;
    int k = n - 1;
    while (k >= 0 && w[k] == d - 1) w[k--] = 0;
    if (k < 0) break;
    ++w[k];
  }
  return count;
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Outcome criterion1() {
  Outcome o;
  const std::vector<std::pair<int, int>> cases{{2, 2}, {2, 3}, {2, 4}, {3, 2}};
  const std::vector<int> expected_dims{3, 5, 8, 6};
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const auto [d, m] = cases[c];
    std::vector<int> brute;
    int total = 0;
    for (int n = 1; n <= m; ++n) {
      brute.push_back(brute_lyndon_count(d, n));
      total += brute.back();
    }
    const auto job = jobs::lie_dims(d, m);
    const auto dims = job.report["dims"].get<std::vector<int>>();
    const std::string tag = "g_{" + std::to_string(d) + "," + std::to_string(m) + "}";
    o.require(dims == brute, tag + " graded dims vs Lyndon enumeration");
    o.require(job.report["dim"].get<int>() == total && total == expected_dims[c], tag + " dimension");
    o.require(job.pass, tag + " Jacobi/antisymmetry");
    o.detail << " " << tag << "=" << total << " (jacobi triples " << job.report["jacobi_triples"].get<long>() << ")";
  }
  return o;
}

Outcome criterion2() {
  Outcome o;
  const auto grushin = corpus("grushin");
  const auto at0 = flag_at(grushin.fields, {0, 0}, 2).dims;
  const auto off = flag_at(grushin.fields, {1, 0}, 2).dims;
  o.require(at0 == std::vector<int>{1, 2}, "Grushin flag at origin");
  o.require(off == std::vector<int>{2, 2}, "Grushin flag off-axis");

  const auto heis = corpus("heisenberg");
  std::mt19937 rng(42);
  std::uniform_int_distribution<int> num(-50, 50), den(1, 17);
  int free_count = 0;
  for (int s = 0; s < 100; ++s) {
    std::vector<Rational> pt;
    for (int i = 0; i < 3; ++i) {
      Rational r(num(rng), den(rng));
      r.canonicalize();
      pt.push_back(r);
    }
    free_count += jobs::free(heis, 2, pt).pass;
  }
  o.require(free_count == 100, "Heisenberg free at all sample points");

  const auto martinet = corpus("martinet");
  const auto step = hormander_step(martinet.fields, {0, 0, 0}, 4);
  o.require(step && *step == 3, "Martinet step 3 at origin");
  o.detail << " grushin [" << at0[0] << "," << at0[1] << "] / [" << off[0] << "," << off[1] << "]; heisenberg free "
           << free_count << "/100; martinet step " << (step ? std::to_string(*step) : "none");
  return o;
}

Outcome criterion3() {
  Outcome o;
  const auto g = jobs::lift_system(corpus("grushin"), 2, {0, 0}, {});
  o.require(g.report["k"] == 1, "Grushin k = 1");
  o.require(g.pass, "Grushin lift free on grid, projection, increments");
  const auto m = jobs::lift_system(corpus("martinet"), 3, {0, 0, 0}, {});
  o.require(m.report["k"] == 2, "Martinet k = 2");
  o.require(m.report["final_flag"].get<std::vector<int>>() == std::vector<int>{2, 3, 5}, "Martinet final flag");
  o.require(m.pass, "Martinet lift free on grid, projection, increments");
  o.detail << " grushin k=" << g.report["k"] << " free on " << g.report["grid_points"] << " grid points; martinet k="
           << m.report["k"] << " flag " << m.report["final_flag"].dump();
  return o;
}

Outcome criterion4() {
  Outcome o;
  struct Case {
    std::string name;
    int m;
    std::vector<double> base, y;
  };
  const std::vector<Case> cases{{"heisenberg", 2, {0.1, -0.2, 0.3}, {}},
                                {"grushin", 2, {0.2, 0.1, -0.1}, {}},
                                {"martinet", 3, {0.1, 0.2, -0.1, 0.05, 0.1}, {}},
                                {"twisted", 2, {1, 0, 0}, {}},
                                {"heisenberg_family", 2, {}, {0.5}},
                                {"planar", 2, {0.1, 0.1, 0}, {}},
                                {"line", 1, {0.3}, {}}};
  double worst = 0;
  for (const auto& c : cases) {
    jobs::ThetaCheckOptions opts;
    opts.m = c.m;
    opts.base = c.base;
    opts.y = c.y;
    const auto r = jobs::theta_check(corpus(c.name), opts);
    o.require(r.pass, c.name);
    worst = std::max({worst, r.report["theta_diagonal"].get<double>(), r.report["antisymmetry"].get<double>(),
                      r.report["max_violation"].get<double>()});
    if (c.name == "heisenberg")
      o.require(r.report["max_remainder"].get<double>() <= 1e-9, "Heisenberg remainder");
  }
  o.detail << " " << cases.size() << " systems x 50 pairs, worst residual " << fmt(worst);
  return o;
}

Outcome criterion5() {
  Outcome o;
  const auto r = jobs::k0_calibrate(100, 42, 1e-8);
  o.require(r.pass, "K0 residual/flux/homogeneity");
  o.detail << " L0K0 rel residual " << fmt(r.report["l0_relative_residual"].get<double>()) << ", flux deviation "
           << fmt(r.report["flux_deviation"].get<double>()) << ", degree " << r.report["homogeneity_degree"];
  return o;
}

Outcome criterion6() {
  Outcome o;
  const auto g = jobs::parametrix_residual(corpus("grushin"), {2, 4, 8, 16});
  const auto a = jobs::parametrix_residual(corpus("line"), {2, 4, 8, 16});
  o.require(g.pass, "lifted Grushin growth");
  o.require(a.pass, "abelian flatness");
  const auto rg = g.report["residual_growth"].get<std::vector<double>>();
  const auto gg = g.report["gradient_growth"].get<std::vector<double>>();
  const auto ar = a.report["ratios"].get<std::vector<double>>();
  o.detail << " grushin max r growth " << fmt(*std::max_element(rg.begin(), rg.end())) << ", min grad growth "
           << fmt(*std::min_element(gg.begin(), gg.end())) << "; abelian max r " << fmt(*std::max_element(ar.begin(), ar.end()));
  return o;
}

Outcome criterion7() {
  Outcome o;
  const auto r = jobs::chart_identities(10, 42, 1e-7);
  o.require(r.pass, "chart identities");
  for (const auto& id : r.report["identities"])
    o.detail << " " << id["identity"].get<std::string>().substr(0, id["identity"].get<std::string>().find(' ')) << "="
             << fmt(id["residual"].get<double>());
  return o;
}

Outcome criterion8() {
  Outcome o;
  const double Lambda = 100 * std::numbers::pi * std::numbers::pi;
  for (const char* a : {"0", "1/2", "1/3", "2/5"}) {
    const auto r = jobs::gap_report(Slope::parse(a), 16, Lambda, 0.5, 1.0);
    o.require(r.pass, std::string("alpha=") + a + " set equality");
  }
  const auto e50 = jobs::gap_report(Slope::golden(), 50, 100, 0.5, INFINITY).report["epsilon"].get<double>();
  const auto e200 = jobs::gap_report(Slope::golden(), 200, 100, 0.5, INFINITY).report["epsilon"].get<double>();
  o.require(e200 <= e50 / 2, "eps(200) <= eps(50)/2");
  o.require(e200 <= 1.0, "eps(200) <= 1");
  o.detail << " rational slopes equal at N=16; golden eps(50)=" << fmt(e50) << " eps(200)=" << fmt(e200);
  return o;
}

Outcome criterion9() {
  Outcome o;
  const std::vector<std::string> densities{"1", "2; 1:1:0", "3; 1:0:1; 0.5:1:1", "2.5; 0.7:1:-1; 0.4:2:0"};
  double worst = INFINITY;
  int models = 0;
  for (const char* a : {"0", "1/2", "2/5", "golden", "sqrt2"})
    for (const auto& mu : densities) {
      const auto r = jobs::spectrum(Slope::parse(a), 12, CosineDensity::parse(mu));
      o.require(r.report["symmetric"].get<bool>(), std::string("symmetric alpha=") + a + " mu=" + mu);
      o.require(r.pass, std::string("semidefinite alpha=") + a + " mu=" + mu);
      worst = std::min(worst, r.report["min_eigenvalue"].get<double>());
      ++models;
    }
  o.detail << " " << models << " models exactly symmetric, min eigenvalue " << fmt(worst);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"Witt dimensions and Jacobi", criterion1},      {"flags and freeness", criterion2},
      {"lifting", criterion3},                         {"canonical coordinates", criterion4},
      {"K0 calibration", criterion5},                  {"parametrix residual", criterion6},
      {"chart identities", criterion7},                {"Kronecker spectrum", criterion8},
      {"Galerkin self-adjointness", criterion9}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %zu: %s  %s:%s (%.1fs)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.str().c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}

// hypo: batch driver over the corpus and the verification jobs.
//
//   hypo lie-dims d=2 m=4
//   hypo free corpus/heisenberg m=2 at=origin
//   hypo spectrum alpha=golden N=50 csv=golden.csv
//
// Exit status: 0 pass, 1 verification failure, 2 input error.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "hypo/errors.hpp"
#include "jobs.hpp"

namespace fs = std::filesystem;
using namespace hypo;

namespace {

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Params {
 public:
  void set(const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw InputError("expected key=value, got '" + kv + "'");
    values_[kv.substr(0, eq)] = kv.substr(eq + 1);
  }

  void load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config " + path);
    std::string line;
    while (std::getline(in, line)) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto a = line.find_first_not_of(" \t\r");
      if (a == std::string::npos) continue;
      line = line.substr(a, line.find_last_not_of(" \t\r") - a + 1);
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw InputError(path + ": expected key=value, got '" + line + "'");
      auto key = line.substr(0, eq), val = line.substr(eq + 1);
      key.erase(key.find_last_not_of(" \t") + 1);
      val.erase(0, val.find_first_not_of(" \t"));
      if (!values_.count(key)) values_[key] = val;  // command-line values win
    }
  }

  bool has(const std::string& k) const { return values_.count(k) > 0; }
  std::string str(const std::string& k, const std::string& dflt = "") const {
    used_.insert(k);
    auto it = values_.find(k);
    return it == values_.end() ? dflt : it->second;
  }
  int integer(const std::string& k, int dflt) const {
    if (!has(k)) return dflt;
    const auto s = str(k);
    try {
      std::size_t pos = 0;
      const int v = std::stoi(s, &pos);
      if (pos != s.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw InputError(k + ": not an integer: '" + s + "'");
    }
  }
  double real(const std::string& k, double dflt) const {
    if (!has(k)) return dflt;
    return parse_real(k, str(k));
  }
  std::vector<double> reals(const std::string& k) const {
    std::vector<double> out;
    if (!has(k)) return out;
    std::stringstream ss(str(k));
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_real(k, item));
    return out;
  }
  void check_all_used() const {
    for (const auto& [k, v] : values_)
      if (!used_.count(k) && k != "config") throw InputError("unknown parameter '" + k + "'");
  }

  // Accepts a plain number or a multiple of π²: "100pi^2", "100*pi^2".
  static double parse_real(const std::string& key, std::string s) {
    s.erase(0, s.find_first_not_of(" \t"));
    s.erase(s.find_last_not_of(" \t") + 1);
    double scale = 1;
    for (const std::string suffix : {"*pi^2", "pi^2", "*pi2", "pi2"})
      if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
        s.erase(s.size() - suffix.size());
        scale = std::numbers::pi * std::numbers::pi;
        break;
      }
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument("");
      return v * scale;
    } catch (const std::exception&) {
      throw InputError(key + ": not a number: '" + s + "'");
    }
  }

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

FieldSystem load_system(const std::string& path) {
  if (path.empty()) throw InputError("missing corpus file");
  std::string p = path;
  if (!fs::exists(p) && fs::exists(p + ".vf")) p += ".vf";
  if (!fs::exists(p)) throw InputError("no such corpus file: " + path);
  try {
    return load_field_system(p);
  } catch (const ParseError& e) {
    throw InputError("parse error in " + p + ": " + e.what());
  }
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << content;
}

std::string sibling(const std::string& out, const std::string& ext) {
  fs::path p(out);
  p.replace_extension(ext);
  return p.string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bracket flags, lifting, nilpotent approximation, parametrix and spectral checks"};
  app.require_subcommand(1);
  app.fallthrough();

  double tol = -1;
  unsigned seed = 42;
  int max_degree = 3;
  int threads = 1;
  std::string out_path;
  app.add_option("--tol", tol, "Verification tolerance (job default when omitted)")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Random seed")->capture_default_str();
  app.add_option("--max-degree", max_degree, "Degree cap for lifting coefficients")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--threads", threads, "Worker threads (jobs run sequentially)")->check(CLI::PositiveNumber);
  app.add_option("--out", out_path, "Write the JSON report here instead of stdout");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"lie-dims", "Graded dimensions of g_{d,m}: d=, m="},
      {"flag", "Bracket flag at a point: FILE m= at="},
      {"hormander", "Bracket-generating step: FILE m= at="},
      {"free", "Freeness of order m: FILE m= at="},
      {"lift", "Lift to a free system: FILE m= at= lifted=OUT.vf"},
      {"theta-check", "Canonical-coordinate checks: FILE m= base= y= pairs= radius= weight="},
      {"k0-calibrate", "Fundamental solution of the G_{2,2} sub-Laplacian: points="},
      {"parametrix-residual", "Residual smoothing sweep: FILE frequencies= csv="},
      {"chart-identities", "Groupoid chart identities: pairs="},
      {"spectrum", "Kronecker torus spectrum: alpha= N= mu= csv="},
      {"gap-report", "Truncated vs leafwise spectrum: alpha= N= Lambda= grid= eps="},
  };
  std::map<std::string, std::vector<std::string>> args;
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("args", args[name], "Corpus file, config file (config=PATH) and key=value parameters");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    Params params;
    std::string input;
    for (const auto& a : args[cmd]) {
      if (a.find('=') != std::string::npos)
        params.set(a);
      else if (input.empty())
        input = a;
      else
        throw InputError("unexpected argument '" + a + "'");
    }
    if (params.has("config")) params.load(params.str("config"));

    jobs::Result res;
    auto need_system = [&] { return load_system(input); };
    auto point = [&](const FieldSystem& sys) { return jobs::parse_point(params.str("at", "origin"), sys.p + sys.q); };
    const bool takes_input = cmd == "flag" || cmd == "hormander" || cmd == "free" || cmd == "lift" ||
                             cmd == "theta-check" || cmd == "parametrix-residual";
    if (!takes_input && !input.empty()) throw InputError(cmd + " takes no corpus file");

    if (cmd == "lie-dims") {
      const int d = params.integer("d", 2), m = params.integer("m", 2);
      if (d < 1 || m < 1) throw InputError("d and m must be positive");
      res = jobs::lie_dims(d, m);
    } else if (cmd == "flag") {
      const auto sys = need_system();
      res = jobs::flag(sys, params.integer("m", 3), point(sys));
    } else if (cmd == "hormander") {
      const auto sys = need_system();
      res = jobs::hormander(sys, params.integer("m", 4), point(sys));
    } else if (cmd == "free") {
      const auto sys = need_system();
      res = jobs::free(sys, params.integer("m", 2), point(sys));
    } else if (cmd == "lift") {
      const auto sys = need_system();
      LiftOptions opts;
      opts.degree_cap = max_degree;
      res = jobs::lift_system(sys, params.integer("m", 2), point(sys), opts);
      if (params.has("lifted"))
        write_file(params.str("lifted"), res.text);
      else
        res.report["lifted_system"] = res.text;
    } else if (cmd == "theta-check") {
      const auto sys = need_system();
      jobs::ThetaCheckOptions o;
      o.m = params.integer("m", 2);
      o.base = params.reals("base");
      o.y = params.reals("y");
      o.pairs = params.integer("pairs", 50);
      o.radius = params.real("radius", 0.1);
      o.max_weight = params.integer("weight", 4);
      o.seed = seed;
      if (tol > 0) o.tol = tol;
      o.lift.degree_cap = max_degree;
      res = jobs::theta_check(sys, o);
    } else if (cmd == "k0-calibrate") {
      res = jobs::k0_calibrate(params.integer("points", 100), seed, tol > 0 ? tol : 1e-8);
    } else if (cmd == "parametrix-residual") {
      const auto sys = need_system();
      auto freqs = params.reals("frequencies");
      if (freqs.empty()) freqs = {2, 4, 8, 16};
      res = jobs::parametrix_residual(sys, freqs);
    } else if (cmd == "chart-identities") {
      res = jobs::chart_identities(params.integer("pairs", 10), seed, tol > 0 ? tol : 1e-7);
    } else if (cmd == "spectrum") {
      const auto alpha = Slope::parse(params.str("alpha", "0"));
      std::optional<CosineDensity> mu;
      if (params.has("mu")) {
        mu = CosineDensity::parse(params.str("mu"));
        mu->check_positive();
      }
      res = jobs::spectrum(alpha, params.integer("N", 16), mu);
    } else if (cmd == "gap-report") {
      const auto alpha = Slope::parse(params.str("alpha", "0"));
      const double Lambda = params.real("Lambda", alpha.is_rational() ? 100 * std::numbers::pi * std::numbers::pi : 100);
      res = jobs::gap_report(alpha, params.integer("N", 16), Lambda, params.real("grid", 0.5), params.real("eps", 1.0));
    }
    const std::string csv_path = params.str("csv");
    params.check_all_used();

    if (!res.csv.empty()) {
      if (!csv_path.empty())
        write_file(csv_path, res.csv);
      else if (!out_path.empty())
        write_file(sibling(out_path, ".csv"), res.csv);
    }
    res.report["command"] = cmd;
    res.report["pass"] = res.pass;
    const std::string json = res.report.dump(2) + "\n";
    if (out_path.empty())
      std::cout << json;
    else
      write_file(out_path, json);
    return res.pass ? 0 : 1;
  } catch (const ParseError& e) {
    std::cerr << "hypo " << cmd << ": parse error: " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    std::cerr << "hypo " << cmd << ": " << e.what() << "\n";
    return 2;
  } catch (const PreconditionError& e) {
    std::cerr << "hypo " << cmd << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "hypo " << cmd << ": " << e.what() << "\n";
    return 1;
  }
}

#include "hypo/vfield.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "hypo/expr_parser.hpp"

namespace hypo {

PolyVectorField::PolyVectorField(int p, int q) : p_(p), q_(q), comps_(p, RationalPolynomial(p + q)) {}

PolyVectorField::PolyVectorField(int p, int q, std::vector<RationalPolynomial> components)
    : p_(p), q_(q), comps_(std::move(components)) {
  if (static_cast<int>(comps_.size()) != p) throw PreconditionError("field needs one component per base variable");
  for (const auto& c : comps_)
    if (c.nvars() != p + q) throw PreconditionError("field component has the wrong number of variables");
}

bool PolyVectorField::is_zero() const {
  for (const auto& c : comps_)
    if (!c.is_zero()) return false;
  return true;
}

RationalPolynomial PolyVectorField::apply(const RationalPolynomial& f) const {
  if (f.nvars() != nvars()) throw PreconditionError("function and field live on different charts");
  RationalPolynomial r(nvars());
  for (int j = 0; j < p_; ++j)
    if (!comps_[j].is_zero()) r += comps_[j] * f.derivative(j);
  return r;
}

PolyVectorField& PolyVectorField::operator+=(const PolyVectorField& o) {
  if (p_ != o.p_ || q_ != o.q_) throw PreconditionError("field dimension mismatch");
  for (int i = 0; i < p_; ++i) comps_[i] += o.comps_[i];
  return *this;
}

PolyVectorField& PolyVectorField::operator-=(const PolyVectorField& o) {
  if (p_ != o.p_ || q_ != o.q_) throw PreconditionError("field dimension mismatch");
  for (int i = 0; i < p_; ++i) comps_[i] -= o.comps_[i];
  return *this;
}

PolyVectorField operator*(const Rational& s, PolyVectorField a) {
  for (auto& c : a.comps_) c *= s;
  return a;
}

std::string PolyVectorField::to_string(const std::vector<std::string>& names) const {
  std::string s;
  for (int i = 0; i < p_; ++i) {
    if (i) s += ", ";
    s += comps_[i].to_string(names);
  }
  return s;
}

PolyVectorField lie_bracket(const PolyVectorField& X, const PolyVectorField& Y) {
  if (X.p() != Y.p() || X.q() != Y.q()) throw PreconditionError("lie_bracket: field dimension mismatch");
  std::vector<RationalPolynomial> comps;
  comps.reserve(X.p());
  for (int i = 0; i < X.p(); ++i) comps.push_back(X.apply(Y.component(i)) - Y.apply(X.component(i)));
  return PolyVectorField(X.p(), X.q(), std::move(comps));
}

CommutatorCache::CommutatorCache(std::vector<PolyVectorField> fields) : fields_(std::move(fields)) {
  if (fields_.empty()) throw PreconditionError("empty field list");
  for (const auto& f : fields_)
    if (f.p() != fields_[0].p() || f.q() != fields_[0].q()) throw PreconditionError("fields on different charts");
}

const PolyVectorField& CommutatorCache::get(const Word& I) {
  if (I.empty()) throw PreconditionError("bracket word must be nonempty");
  for (int i : I)
    if (i < 0 || i >= static_cast<int>(fields_.size())) throw PreconditionError("bracket index out of range");
  if (I.size() == 1) return fields_[I[0]];
  auto it = nested_.find(I);
  if (it != nested_.end()) return it->second;
  const PolyVectorField& inner = get(Word(I.begin() + 1, I.end()));
  PolyVectorField value = lie_bracket(fields_[I[0]], inner);
  return nested_.emplace(I, std::move(value)).first->second;
}

const PolyVectorField& CommutatorCache::lyndon(const Word& w) {
  if (w.size() == 1) return get(w);
  auto it = lyndon_.find(w);
  if (it != lyndon_.end()) return it->second;
  auto [u, v] = standard_factorization(w);
  PolyVectorField a = lyndon(u);
  PolyVectorField value = lie_bracket(a, lyndon(v));
  return lyndon_.emplace(w, std::move(value)).first->second;
}

PolyVectorField basic_commutator(const std::vector<PolyVectorField>& fields, const Word& I) {
  CommutatorCache cache(fields);
  return cache.get(I);
}

Rational structural_coefficient(const Word& I, const Word& J) {
  if (I.size() != J.size() || I.empty()) return 0;
  // Expand a1 E - E a1 from the innermost letter outwards.
  std::map<Word, Rational> e = {{Word{I.back()}, Rational(1)}};
  for (int k = static_cast<int>(I.size()) - 2; k >= 0; --k) {
    std::map<Word, Rational> next;
    for (const auto& [w, c] : e) {
      Word left{I[k]};
      left.insert(left.end(), w.begin(), w.end());
      next[left] += c;
      Word right = w;
      right.push_back(I[k]);
      next[right] -= c;
    }
    e = std::move(next);
  }
  auto it = e.find(J);
  return it == e.end() ? Rational(0) : it->second;
}

std::vector<Word> words_of_length(int d, int len) {
  std::vector<Word> out;
  Word w(len, 0);
  while (true) {
    out.push_back(w);
    int i = len - 1;
    while (i >= 0 && w[i] == d - 1) w[i--] = 0;
    if (i < 0) break;
    ++w[i];
  }
  return out;
}

namespace {

void check_point(const CommutatorCache& cache, const std::vector<Rational>& point) {
  if (static_cast<int>(point.size()) != cache.fields()[0].nvars())
    throw PreconditionError("point has " + std::to_string(point.size()) + " coordinates, chart has " +
                            std::to_string(cache.fields()[0].nvars()));
}

}  // namespace

Flag flag_at(CommutatorCache& cache, const std::vector<Rational>& point, int m) {
  check_point(cache, point);
  const int d = static_cast<int>(cache.fields().size());
  IncrementalSpan span(cache.fields()[0].p());
  Flag flag;
  flag.point = point;
  for (int k = 1; k <= m; ++k) {
    std::vector<Word> spanning;
    if (span.rank() < span.dim())
      for (const Word& I : words_of_length(d, k))
        if (span.add(cache.get(I).evaluate(point))) spanning.push_back(I);
    flag.dims.push_back(span.rank());
    flag.spanning_words.push_back(std::move(spanning));
  }
  return flag;
}

Flag flag_at(const std::vector<PolyVectorField>& fields, const std::vector<Rational>& point, int m) {
  CommutatorCache cache(fields);
  return flag_at(cache, point, m);
}

std::optional<int> hormander_step(const std::vector<PolyVectorField>& fields, const std::vector<Rational>& point,
                                  int max_m) {
  if (max_m < 1) throw PreconditionError("max_m must be at least 1");
  CommutatorCache cache(fields);
  Flag f = flag_at(cache, point, max_m);
  for (int k = 0; k < max_m; ++k)
    if (f.dims[k] == fields[0].p()) return k + 1;
  return std::nullopt;
}

FreenessReport freeness_report(CommutatorCache& cache, const std::vector<Rational>& point, int m) {
  check_point(cache, point);
  const int d = static_cast<int>(cache.fields().size());
  FreenessReport rep;
  for (int x : witt_dimensions(d, m)) rep.target += x;
  std::vector<Word> words;
  RationalMatrix columns;  // one row per word: the evaluated commutator
  for (int k = 1; k <= m; ++k)
    for (const Word& I : words_of_length(d, k)) {
      words.push_back(I);
      columns.push_back(cache.get(I).evaluate(point));
    }
  rep.rank = exact_rank(columns);
  rep.free = rep.rank == rep.target;

  // Relations a with Σ a_I X_[I](x) = 0: null space of the p x |words| matrix.
  const int p = cache.fields()[0].p();
  const int n = static_cast<int>(words.size());
  RationalMatrix A(p, RationalVector(n));
  for (int i = 0; i < p; ++i)
    for (int w = 0; w < n; ++w) A[i][w] = columns[w][i];
  rep.relations_universal = true;
  for (const auto& a : exact_nullspace(A, n)) {
    for (int jw = 0; jw < n && rep.relations_universal; ++jw) {
      Rational s = 0;
      for (int iw = 0; iw < n; ++iw)
        if (a[iw] != 0 && words[iw].size() == words[jw].size()) s += a[iw] * structural_coefficient(words[iw], words[jw]);
      if (s != 0) rep.relations_universal = false;
    }
    if (!rep.relations_universal) break;
  }
  return rep;
}

bool is_free(const std::vector<PolyVectorField>& fields, const std::vector<Rational>& point, int m) {
  CommutatorCache cache(fields);
  return freeness_report(cache, point, m).free;
}

std::vector<PolyVectorField> lyndon_frame(const std::vector<PolyVectorField>& fields, int m) {
  CommutatorCache cache(fields);
  std::vector<PolyVectorField> frame;
  for (const Word& w : lyndon_words(static_cast<int>(fields.size()), m)) frame.push_back(cache.lyndon(w));
  return frame;
}

std::optional<std::vector<RationalPolynomial>> triangular_flow(const std::vector<PolyVectorField>& frame) {
  if (frame.empty()) throw PreconditionError("empty frame");
  const int p = frame[0].p(), q = frame[0].q();
  const int N = static_cast<int>(frame.size());
  // Dependency graph of the combined field: component i reads variable j.
  std::vector<std::vector<bool>> dep(p, std::vector<bool>(p, false));
  for (const auto& f : frame)
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j)
        if (f.component(i).depends_on(j)) dep[i][j] = true;
  std::vector<int> order;
  std::vector<bool> done(p, false);
  while (static_cast<int>(order.size()) < p) {
    bool progressed = false;
    for (int i = 0; i < p; ++i) {
      if (done[i]) continue;
      bool ready = true;
      for (int j = 0; j < p; ++j)
        if (dep[i][j] && !done[j]) ready = false;
      if (ready) {
        done[i] = true;
        order.push_back(i);
        progressed = true;
      }
    }
    if (!progressed) return std::nullopt;
  }

  // Work in (x0, u, y, t); t is integrated out and set to 1 at the end.
  const int nv = p + N + q + 1;
  const int tvar = nv - 1;
  std::vector<RationalPolynomial> path(p, RationalPolynomial(nv));
  std::vector<RationalPolynomial> images(p + q, RationalPolynomial(nv));
  for (int j = 0; j < q; ++j) images[p + j] = RationalPolynomial::variable(nv, p + N + j);
  for (int i : order) {
    for (int j = 0; j < p; ++j) images[j] = path[j];
    RationalPolynomial rhs(nv);
    for (int k = 0; k < N; ++k) {
      if (frame[k].component(i).is_zero()) continue;
      rhs += RationalPolynomial::variable(nv, p + k) * frame[k].component(i).compose(images);
    }
    path[i] = RationalPolynomial::variable(nv, i) + rhs.integral(tvar);
  }
  std::vector<int> drop(nv);
  for (int v = 0; v < nv - 1; ++v) drop[v] = v;
  drop[tvar] = -1;
  std::vector<RationalPolynomial> out;
  for (auto& c : path) out.push_back(c.substitute(tvar, Rational(1)).remap(drop, nv - 1));
  return out;
}

namespace {

std::vector<RealPolynomial> combined_field(const std::vector<PolyVectorField>& frame, const std::vector<double>& u,
                                           const std::vector<double>& y) {
  const int p = frame[0].p(), q = frame[0].q();
  std::vector<int> keep(p + q, -1);
  for (int j = 0; j < p; ++j) keep[j] = j;
  std::vector<RealPolynomial> z(p, RealPolynomial(p));
  for (std::size_t k = 0; k < frame.size(); ++k) {
    if (u[k] == 0) continue;
    for (int i = 0; i < p; ++i) {
      RealPolynomial c = frame[k].component(i).cast<double>();
      for (int j = 0; j < q; ++j) c = c.substitute(p + j, y[j]);
      z[i] += c.remap(keep, p) * u[k];
    }
  }
  return z;
}

std::vector<double> rk4(const std::vector<RealPolynomial>& z, std::vector<double> x, int steps, double radius) {
  const int p = static_cast<int>(x.size());
  const double h = 1.0 / steps;
  auto rhs = [&](const std::vector<double>& pt) {
    std::vector<double> v(p);
    for (int i = 0; i < p; ++i) v[i] = z[i].evaluate(pt);
    return v;
  };
  std::vector<double> tmp(p);
  for (int s = 0; s < steps; ++s) {
    auto k1 = rhs(x);
    for (int i = 0; i < p; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
    auto k2 = rhs(tmp);
    for (int i = 0; i < p; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
    auto k3 = rhs(tmp);
    for (int i = 0; i < p; ++i) tmp[i] = x[i] + h * k3[i];
    auto k4 = rhs(tmp);
    for (int i = 0; i < p; ++i) {
      x[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
      if (!std::isfinite(x[i]) || std::abs(x[i]) > radius) throw NumericalError("flow leaves the chart");
    }
  }
  return x;
}

}  // namespace

std::vector<double> exp_flow_rk4(const std::vector<PolyVectorField>& frame, const std::vector<double>& u,
                                 const std::vector<double>& start, const std::vector<double>& y,
                                 const FlowOptions& opts) {
  if (frame.empty() || u.size() != frame.size()) throw PreconditionError("one coefficient per frame field required");
  const int p = frame[0].p(), q = frame[0].q();
  if (static_cast<int>(start.size()) != p || static_cast<int>(y.size()) != q)
    throw PreconditionError("start point or parameter has the wrong size");
  auto z = combined_field(frame, u, y);
  std::vector<double> coarse = rk4(z, start, 8, opts.chart_radius);
  int steps = 8;
  for (int h = 0; h < opts.max_halvings; ++h) {
    steps *= 2;
    std::vector<double> fine = rk4(z, start, steps, opts.chart_radius);
    double diff = 0, scale = 1;
    for (int i = 0; i < p; ++i) {
      diff = std::max(diff, std::abs(fine[i] - coarse[i]));
      scale = std::max(scale, std::abs(fine[i]));
    }
    // Richardson: the fine RK4 error is about diff / 15.
    if (diff / 15 <= opts.tol * scale) {
      for (int i = 0; i < p; ++i) fine[i] += (fine[i] - coarse[i]) / 15;
      return fine;
    }
    coarse = std::move(fine);
  }
  throw NumericalError("exp_flow: RK4 did not reach the requested tolerance");
}

FrameFlow::FrameFlow(std::vector<PolyVectorField> frame, FlowOptions opts)
    : frame_(std::move(frame)), opts_(opts), exact_(triangular_flow(frame_)) {
  if (exact_)
    for (const auto& c : *exact_) real_.push_back(c.cast<double>());
}

const std::vector<RationalPolynomial>& FrameFlow::polynomials() const {
  if (!exact_) throw PreconditionError("frame flow is not triangular");
  return *exact_;
}

std::vector<double> FrameFlow::operator()(const std::vector<double>& u, const std::vector<double>& start,
                                          const std::vector<double>& y) const {
  if (!exact_) return exp_flow_rk4(frame_, u, start, y, opts_);
  if (u.size() != frame_.size() || static_cast<int>(start.size()) != frame_[0].p() ||
      static_cast<int>(y.size()) != frame_[0].q())
    throw PreconditionError("exp_flow argument sizes do not match the frame");
  std::vector<double> args = start;
  args.insert(args.end(), u.begin(), u.end());
  args.insert(args.end(), y.begin(), y.end());
  std::vector<double> out;
  for (const auto& c : real_) {
    out.push_back(c.evaluate(args));
    if (!std::isfinite(out.back()) || std::abs(out.back()) > opts_.chart_radius)
      throw NumericalError("flow leaves the chart");
  }
  return out;
}

std::vector<Rational> FrameFlow::exact(const std::vector<Rational>& u, const std::vector<Rational>& start,
                                       const std::vector<Rational>& y) const {
  const auto& polys = polynomials();
  std::vector<Rational> args = start;
  args.insert(args.end(), u.begin(), u.end());
  args.insert(args.end(), y.begin(), y.end());
  std::vector<Rational> out;
  for (const auto& c : polys) out.push_back(c.evaluate(args));
  return out;
}

std::vector<double> exp_flow(const std::vector<PolyVectorField>& frame, const std::vector<double>& u,
                             const std::vector<double>& start, const std::vector<double>& y, const FlowOptions& opts) {
  return FrameFlow(frame, opts)(u, start, y);
}

std::vector<Rational> exp_flow_exact(const std::vector<PolyVectorField>& frame, const std::vector<Rational>& u,
                                     const std::vector<Rational>& start, const std::vector<Rational>& y) {
  return FrameFlow(frame).exact(u, start, y);
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int parse_int_value(const std::string& v, int line, int col) {
  try {
    std::size_t used = 0;
    int x = std::stoi(v, &used);
    if (used != v.size() || x < 0) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ParseError("expected a non-negative integer, got '" + v + "'", line, col);
  }
}

// Splits on commas, returning each piece with its column offset in the line.
std::vector<std::pair<std::string, int>> split_commas(const std::string& line, std::size_t from) {
  std::vector<std::pair<std::string, int>> out;
  std::size_t start = from;
  while (true) {
    std::size_t comma = line.find(',', start);
    std::string piece = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    out.emplace_back(piece, static_cast<int>(start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

FieldSystem parse_field_system(const std::string& text) {
  FieldSystem sys;
  struct Pending {
    int index;
    std::string line;
    std::size_t value_at;
    int line_no;
  };
  std::vector<Pending> field_lines, jump_lines;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  bool any = false;
  bool have_d = false, have_p = false;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw.substr(0, raw.find('#'));
    if (trim(line).empty()) continue;
    any = true;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no, 1);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const int value_col = static_cast<int>(eq) + 2;
    if (key == "name") {
      sys.name = value;
    } else if (key == "d") {
      sys.d = parse_int_value(value, line_no, value_col);
      have_d = true;
    } else if (key == "p") {
      sys.p = parse_int_value(value, line_no, value_col);
      have_p = true;
    } else if (key == "q") {
      sys.q = parse_int_value(value, line_no, value_col);
    } else if (key == "vars") {
      sys.variables.clear();
      for (auto& [name, col] : split_commas(line, eq + 1)) sys.variables.push_back(trim(name));
    } else if (key == "rank_jump") {
      jump_lines.push_back({0, line, eq + 1, line_no});
    } else if (key == "round") {
      sys.provenance.push_back(value);
    } else if (key.size() >= 2 && key[0] == 'X' && key.find_first_not_of("0123456789", 1) == std::string::npos) {
      field_lines.push_back({std::stoi(key.substr(1)), line, eq + 1, line_no});
    } else {
      throw ParseError("unknown key '" + key + "'", line_no, 1);
    }
  }
  if (!any) throw ParseError("empty field system", 1, 1);
  if (!have_d || !have_p) throw ParseError("field system must declare d and p", line_no, 1);
  if (sys.p < 1 || sys.d < 1) throw ParseError("d and p must be positive", line_no, 1);
  if (sys.variables.empty()) sys.variables = default_variable_names(sys.p, sys.q);
  if (static_cast<int>(sys.variables.size()) != sys.p + sys.q)
    throw ParseError("vars must list p + q names", line_no, 1);
  if (static_cast<int>(field_lines.size()) != sys.d)
    throw ParseError("expected " + std::to_string(sys.d) + " fields X1..X" + std::to_string(sys.d) + ", found " +
                         std::to_string(field_lines.size()),
                     line_no, 1);
  sys.fields.assign(sys.d, PolyVectorField(sys.p, sys.q));
  std::vector<bool> seen(sys.d, false);
  for (const auto& f : field_lines) {
    if (f.index < 1 || f.index > sys.d || seen[f.index - 1])
      throw ParseError("field index X" + std::to_string(f.index) + " out of range or repeated", f.line_no, 1);
    seen[f.index - 1] = true;
    auto pieces = split_commas(f.line, f.value_at);
    if (static_cast<int>(pieces.size()) != sys.p)
      throw ParseError("field X" + std::to_string(f.index) + " needs " + std::to_string(sys.p) + " components",
                       f.line_no, static_cast<int>(f.value_at) + 1);
    std::vector<RationalPolynomial> comps;
    for (auto& [text, col] : pieces) comps.push_back(parse_polynomial(text, sys.variables, f.line_no, col));
    sys.fields[f.index - 1] = PolyVectorField(sys.p, sys.q, std::move(comps));
  }
  for (const auto& j : jump_lines) {
    std::vector<Rational> pt;
    for (auto& [text, col] : split_commas(j.line, j.value_at)) {
      try {
        pt.push_back(parse_rational(trim(text)));
      } catch (const Error&) {
        throw ParseError("invalid rational '" + trim(text) + "'", j.line_no, col + 1);
      }
    }
    if (static_cast<int>(pt.size()) != sys.p + sys.q)
      throw ParseError("rank_jump point needs p + q coordinates", j.line_no, 1);
    sys.rank_jumps.push_back(std::move(pt));
  }
  return sys;
}

FieldSystem load_field_system(const std::string& path) {
  std::ifstream in(path);
  if (!in && path.find(".vf") == std::string::npos) in.open(path + ".vf");
  if (!in) throw Error("cannot open field system '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  FieldSystem sys = parse_field_system(ss.str());
  if (sys.name.empty()) sys.name = path;
  return sys;
}

std::string format_field_system(const FieldSystem& sys) {
  std::ostringstream os;
  if (!sys.name.empty()) os << "name = " << sys.name << "\n";
  os << "d = " << sys.d << "\np = " << sys.p << "\nq = " << sys.q << "\n";
  os << "vars = ";
  for (std::size_t i = 0; i < sys.variables.size(); ++i) os << (i ? ", " : "") << sys.variables[i];
  os << "\n";
  for (std::size_t i = 0; i < sys.fields.size(); ++i)
    os << "X" << i + 1 << " = " << sys.fields[i].to_string(sys.variables) << "\n";
  for (const auto& pt : sys.rank_jumps) {
    os << "rank_jump = ";
    for (std::size_t i = 0; i < pt.size(); ++i) os << (i ? ", " : "") << to_string(pt[i]);
    os << "\n";
  }
  for (const auto& r : sys.provenance) os << "round = " << r << "\n";
  return os.str();
}

}  // namespace hypo

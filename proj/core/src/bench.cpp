#include "minlp/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "minlp/io.hpp"

namespace minlp {

const char* run_class_name(RunClass c) {
  switch (c) {
    case RunClass::Solved: return "solved";
    case RunClass::Timeout: return "timeout";
    case RunClass::FailNonopt: return "fail(nonopt)";
    case RunClass::FailInfeas: return "fail(infeas)";
    case RunClass::FailAbort: return "fail(abort)";
  }
  return "?";
}

std::optional<RunClass> parse_run_class(const std::string& s) {
  for (auto c : {RunClass::Solved, RunClass::Timeout, RunClass::FailNonopt, RunClass::FailInfeas, RunClass::FailAbort})
    if (s == run_class_name(c)) return c;
  return std::nullopt;
}

BenchRecord classify(const std::string& instance, const std::string& solver, const RunTrace& t,
                     const ClassifyRules& rules) {
  BenchRecord r;
  r.instance = instance;
  r.solver = solver;
  r.time = t.time;
  r.primal = t.primal;
  r.dual = t.dual;
  r.maxviol = t.maxviol;
  auto done = [&](RunClass c) {
    r.status = c;
    if (c != RunClass::Solved) r.time = rules.time_limit;
    return r;
  };
  if (!t.terminated_normally) return done(RunClass::FailAbort);
  if (t.has_solution && !(t.maxviol <= rules.feastol)) return done(RunClass::FailInfeas);
  // minimization view
  double s = t.maximize ? -1.0 : 1.0;
  double up = s * t.primal, lo = s * t.dual;
  std::optional<double> rlo = t.ref_lo, rhi = t.ref_hi;
  if (t.maximize) {
    rlo = t.ref_hi ? std::optional<double>(-*t.ref_hi) : std::nullopt;
    rhi = t.ref_lo ? std::optional<double>(-*t.ref_lo) : std::nullopt;
  }
  auto tol = [&](double v) { return std::isfinite(v) ? std::max(rules.abs_gap, rules.rel_gap * std::fabs(v)) : 0.0; };
  if (rhi && lo > *rhi + tol(*rhi)) return done(RunClass::FailNonopt);
  if (rlo && up < *rlo - tol(*rlo)) return done(RunClass::FailNonopt);
  bool met;
  if (std::isinf(up) && std::isinf(lo))
    met = up == lo;
  else if (std::isfinite(up) && std::isfinite(lo)) {
    double g = std::max(0.0, up - lo);
    met = g <= rules.abs_gap || g <= rules.rel_gap * std::max(std::fabs(up), std::fabs(lo));
  } else {
    met = false;
  }
  if (met && t.time <= rules.time_limit) return done(RunClass::Solved);
  return done(RunClass::Timeout);
}

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double to_double(const std::string& s) {
  if (s == "inf" || s == "+inf") return kInf;
  if (s == "-inf") return -kInf;
  double v;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    auto a = s.find_first_not_of(" \t"), b = s.find_last_not_of(" \t");
    s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
  }
  return out;
}

}  // namespace

std::string write_csv(const std::vector<BenchRecord>& records) {
  std::string s = "instance,solver,time,primal,dual,maxviol,status\n";
  for (auto& r : records)
    s += r.instance + "," + r.solver + "," + num(r.time) + "," + num(r.primal) + "," + num(r.dual) + "," + num(r.maxviol) +
         "," + run_class_name(r.status) + "\n";
  return s;
}

std::vector<BenchRecord> read_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<BenchRecord> out;
  bool header = true;
  int ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    if (line.empty() || line == "\r") continue;
    auto f = split_csv(line);
    if (header) {
      header = false;
      if (f.size() != 7 || f[0] != "instance")
        throw std::invalid_argument("expected header instance,solver,time,primal,dual,maxviol,status");
      continue;
    }
    if (f.size() != 7) throw std::invalid_argument("line " + std::to_string(ln) + ": expected 7 fields");
    BenchRecord r;
    r.instance = f[0];
    r.solver = f[1];
    r.time = to_double(f[2]);
    r.primal = to_double(f[3]);
    r.dual = to_double(f[4]);
    r.maxviol = to_double(f[5]);
    auto c = parse_run_class(f[6]);
    if (!c) throw std::invalid_argument("line " + std::to_string(ln) + ": unknown status '" + f[6] + "'");
    r.status = *c;
    out.push_back(std::move(r));
  }
  return out;
}

double shifted_geomean(const std::vector<double>& times, double shift) {
  if (times.empty()) throw std::invalid_argument("shifted_geomean of no times");
  double acc = 0.0;
  for (double t : times) {
    if (t < 0) throw std::invalid_argument("negative time");
    acc += std::log(t + shift);
  }
  return std::exp(acc / static_cast<double>(times.size())) - shift;
}

ProfileTable perf_profile(const std::vector<BenchRecord>& records, std::vector<double> taus) {
  ProfileTable t;
  std::set<std::string> solvers, instances;
  for (auto& r : records) {
    solvers.insert(r.solver);
    instances.insert(r.instance);
  }
  t.solvers.assign(solvers.begin(), solvers.end());
  std::map<std::string, double> best;
  for (auto& r : records)
    if (r.status == RunClass::Solved) {
      auto it = best.find(r.instance);
      if (it == best.end() || r.time < it->second) best[r.instance] = r.time;
    }
  auto within = [&](const BenchRecord& r, double tau) {
    if (r.status != RunClass::Solved) return false;
    double b = best[r.instance];
    return r.time <= tau * b + 1e-12 * std::max(1.0, b);
  };
  if (taus.empty()) {
    double worst = 1.0;
    for (auto& r : records)
      if (r.status == RunClass::Solved && best[r.instance] > 0) worst = std::max(worst, r.time / best[r.instance]);
    for (int k = 0; k <= 64; ++k) {
      double tau = std::pow(2.0, k / 2.0);
      taus.push_back(tau);
      if (tau >= worst && k >= 2) break;
    }
  }
  std::sort(taus.begin(), taus.end());
  t.taus = taus;
  for (double tau : taus) {
    std::vector<int> row(t.solvers.size(), 0);
    for (auto& r : records)
      if (within(r, tau)) {
        auto j = std::lower_bound(t.solvers.begin(), t.solvers.end(), r.solver) - t.solvers.begin();
        ++row[static_cast<size_t>(j)];
      }
    t.counts.push_back(std::move(row));
  }
  return t;
}

std::string ProfileTable::format() const {
  std::ostringstream o;
  o << "tau";
  for (auto& s : solvers) o << "\t" << s;
  o << "\n";
  for (size_t i = 0; i < taus.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", taus[i]);
    o << buf;
    for (int c : counts[i]) o << "\t" << c;
    o << "\n";
  }
  return o.str();
}

std::vector<FamilyAlias> parse_aliases(const std::string& text) {
  std::vector<FamilyAlias> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    auto h = line.find('#');
    if (h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    FamilyAlias a;
    if (!(ls >> a.pattern)) continue;
    if (!(ls >> a.id)) throw std::invalid_argument("alias '" + a.pattern + "' has no identifier");
    out.push_back(std::move(a));
  }
  return out;
}

std::string family_id(const std::string& name, const std::vector<FamilyAlias>& aliases) {
  for (auto& a : aliases) {
    if (!a.pattern.empty() && a.pattern.back() == '*') {
      std::string pre = a.pattern.substr(0, a.pattern.size() - 1);
      if (name.compare(0, pre.size(), pre) == 0) return a.id;
    } else if (name == a.pattern) {
      return a.id;
    }
  }
  size_t k = 0;
  while (k < name.size() && !std::isdigit(static_cast<unsigned char>(name[k])) && name[k] != '_' && name[k] != '-') ++k;
  return k == 0 ? name : name.substr(0, k);
}

int bucket_of(double v, const std::vector<double>& breaks) {
  int b = 0;
  for (double x : breaks)
    if (v >= x) ++b;
  return b;
}

SelectionModel build_selection_mip(const std::vector<SelectionInstance>& inst, const SelectionSpec& spec) {
  SelectionModel m;
  Problem& p = m.problem;
  const int n = static_cast<int>(inst.size());
  const int nd = static_cast<int>(spec.d_breaks.size()) + 1, ne = static_cast<int>(spec.e_breaks.size()) + 1;
  m.target_d = static_cast<int>(std::floor(static_cast<double>(spec.n) / nd + 0.5));
  m.target_e = static_cast<int>(std::floor(static_cast<double>(spec.n) / ne + 0.5));
  for (int i = 0; i < n; ++i) m.z.push_back(p.add_var("z" + std::to_string(i), 0, 1, VarType::Binary));
  for (int k = 0; k < nd; ++k)
    m.lam_d.push_back(p.add_var("lam_d" + std::to_string(k), -m.target_d, n - m.target_d, VarType::Integer));
  for (int k = 0; k < ne; ++k)
    m.lam_e.push_back(p.add_var("lam_e" + std::to_string(k), -m.target_e, n - m.target_e, VarType::Integer));
  std::map<std::string, std::vector<int>> fam;
  for (int i = 0; i < n; ++i) fam[inst[static_cast<size_t>(i)].family].push_back(i);
  for (auto& [f, members] : fam) {
    m.families.push_back(f);
    double top = std::max(0, static_cast<int>(members.size()) - spec.family_cap);
    m.lam_f.push_back(p.add_var("lam_f" + std::to_string(m.lam_f.size()), 0, top, VarType::Integer));
  }
  auto zi = [&](int i) { return m.z[static_cast<size_t>(i)]; };
  for (int k = 0; k < nd; ++k) {
    std::vector<LinearTerm> t;
    for (int i = 0; i < n; ++i)
      if (bucket_of(inst[static_cast<size_t>(i)].d, spec.d_breaks) == k) t.push_back({zi(i), 1.0});
    t.push_back({m.lam_d[static_cast<size_t>(k)], -1.0});
    p.add_linear("bucket_d" + std::to_string(k), t, m.target_d, m.target_d);
  }
  for (int k = 0; k < ne; ++k) {
    std::vector<LinearTerm> t;
    for (int i = 0; i < n; ++i)
      if (bucket_of(inst[static_cast<size_t>(i)].e, spec.e_breaks) == k) t.push_back({zi(i), 1.0});
    t.push_back({m.lam_e[static_cast<size_t>(k)], -1.0});
    p.add_linear("bucket_e" + std::to_string(k), t, m.target_e, m.target_e);
  }
  size_t fk = 0;
  for (auto& [f, members] : fam) {
    std::vector<LinearTerm> t;
    for (int i : members) t.push_back({zi(i), 1.0});
    t.push_back({m.lam_f[fk], -1.0});
    p.add_linear("family" + std::to_string(fk), t, -kInf, spec.family_cap);
    ++fk;
  }
  for (int i = 0; i < n; ++i) {
    const auto& s = inst[static_cast<size_t>(i)];
    if (s.tmax <= spec.trivial_time) p.add_linear("trivial" + std::to_string(i), {{zi(i), 1.0}}, 0, 0);
    if (!s.solvable) p.add_linear("unsolved" + std::to_string(i), {{zi(i), 1.0}}, 0, 0);
  }
  auto& d = p.dag;
  std::vector<std::pair<double, NodeId>> terms;
  for (int v : m.lam_d) terms.push_back({1.0, d.pow(d.var(v), 2)});
  for (int v : m.lam_e) terms.push_back({1.0, d.pow(d.var(v), 2)});
  for (int v : m.lam_f) terms.push_back({spec.family_weight, d.pow(d.var(v), 2)});
  p.obj.assign(p.vars.size(), 0.0);
  if (terms.empty()) return m;
  p.set_objective_expr(d.sum(0, terms), false);
  return m;
}

Selection decode_selection(const SelectionModel& m, const std::vector<SelectionInstance>& inst,
                           std::span<const double> x, const SelectionSpec& spec) {
  Selection s;
  for (size_t i = 0; i < m.z.size(); ++i)
    if (x[static_cast<size_t>(m.z[i])] > 0.5) s.chosen.push_back(inst[i].name);
  for (int v : m.lam_d) s.lam_d.push_back(std::round(x[static_cast<size_t>(v)]));
  for (int v : m.lam_e) s.lam_e.push_back(std::round(x[static_cast<size_t>(v)]));
  for (int v : m.lam_f) s.lam_f.push_back(std::round(x[static_cast<size_t>(v)]));
  for (double l : s.lam_d) s.penalty += l * l;
  for (double l : s.lam_e) s.penalty += l * l;
  for (double l : s.lam_f) s.penalty += spec.family_weight * l * l;
  return s;
}

std::vector<SelectionInstance> read_features_csv(const std::string& text, const std::vector<FamilyAlias>& aliases) {
  std::istringstream in(text);
  std::string line;
  std::map<std::string, int> col;
  std::vector<SelectionInstance> out;
  int ln = 0;
  auto need = [&](std::initializer_list<const char*> names) {
    for (auto n : names)
      if (col.count(n)) return col[n];
    throw std::invalid_argument(std::string("features: missing column ") + *names.begin());
  };
  int ci = -1, cd = -1, ce = -1, ct = -1, cs = -1, cf = -1;
  while (std::getline(in, line)) {
    ++ln;
    if (line.empty() || line[0] == '#') continue;
    auto f = split_csv(line);
    if (col.empty()) {
      for (size_t k = 0; k < f.size(); ++k) col[f[k]] = static_cast<int>(k);
      ci = need({"instance"});
      cd = need({"d", "discreteness"});
      ce = need({"e", "nonlinearity"});
      ct = need({"tmax", "max_time"});
      cs = need({"solvable"});
      cf = col.count("family") ? col["family"] : -1;
      continue;
    }
    if (f.size() < col.size()) throw std::invalid_argument("features line " + std::to_string(ln) + ": too few fields");
    SelectionInstance s;
    s.name = f[static_cast<size_t>(ci)];
    s.d = to_double(f[static_cast<size_t>(cd)]);
    s.e = to_double(f[static_cast<size_t>(ce)]);
    s.tmax = to_double(f[static_cast<size_t>(ct)]);
    const auto& sv = f[static_cast<size_t>(cs)];
    s.solvable = sv == "1" || sv == "true" || sv == "yes";
    s.family = cf >= 0 && !f[static_cast<size_t>(cf)].empty() ? f[static_cast<size_t>(cf)] : family_id(s.name, aliases);
    if (s.d < 0 || s.d > 1 || s.e < 0 || s.e > 1)
      throw std::invalid_argument("features line " + std::to_string(ln) + ": fractions must lie in [0,1]");
    out.push_back(std::move(s));
  }
  return out;
}

BenchRecord run_instance(const std::string& name, const Problem& p, const Settings& s, std::optional<double> ref_lo,
                         std::optional<double> ref_hi) {
  RunTrace t;
  t.maximize = p.maximize;
  t.ref_lo = ref_lo;
  t.ref_hi = ref_hi;
  auto start = std::chrono::steady_clock::now();
  try {
    auto r = solve(p, s);
    t.time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    t.terminated_normally = r.status != Status::Abort;
    t.primal = r.primal;
    t.dual = r.dual;
    t.has_solution = r.has_incumbent();
    if (t.has_solution) t.maxviol = check_solution(p, r.incumbent, s.feastol).violation.max();
    if (r.status == Status::Infeasible) t.primal = t.dual = t.maximize ? -kInf : kInf;
  } catch (const std::exception&) {
    t.terminated_normally = false;
  }
  ClassifyRules rules;
  rules.time_limit = std::isfinite(s.time_limit) ? s.time_limit : std::max(t.time, 1.0);
  rules.feastol = s.feastol;
  rules.rel_gap = s.rel_gap;
  rules.abs_gap = s.abs_gap;
  return classify(name, "minlp", t, rules);
}

}  // namespace minlp

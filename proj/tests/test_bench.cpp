#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "minlp/bench.hpp"
#include "minlp/io.hpp"

using namespace minlp;

namespace {

BenchRecord rec(const std::string& inst, const std::string& solver, double t, RunClass c = RunClass::Solved) {
  BenchRecord r;
  r.instance = inst;
  r.solver = solver;
  r.time = t;
  r.status = c;
  return r;
}

int count(const ProfileTable& t, double tau, const std::string& solver) {
  for (size_t i = 0; i < t.taus.size(); ++i)
    if (t.taus[i] == tau)
      for (size_t j = 0; j < t.solvers.size(); ++j)
        if (t.solvers[j] == solver) return t.counts[i][j];
  return -1;
}

// brute force over all z; lambda values are forced by the rows except the
// family ones, which take the smallest admissible value
double oracle_penalty(const std::vector<SelectionInstance>& inst, const SelectionSpec& spec) {
  const int n = static_cast<int>(inst.size());
  const int nd = static_cast<int>(spec.d_breaks.size()) + 1, ne = static_cast<int>(spec.e_breaks.size()) + 1;
  const double td = std::round(static_cast<double>(spec.n) / nd), te = std::round(static_cast<double>(spec.n) / ne);
  auto bucket = [](double v, const std::vector<double>& br) {
    int k = 0;
    while (k < static_cast<int>(br.size()) && v >= br[static_cast<size_t>(k)]) ++k;
    return k;
  };
  double best = kInf;
  for (int mask = 0; mask < (1 << n); ++mask) {
    bool ok = true;
    std::vector<int> cd(static_cast<size_t>(nd)), ce(static_cast<size_t>(ne));
    std::map<std::string, int> cf;
    for (int i = 0; i < n; ++i) {
      if (!(mask >> i & 1)) continue;
      const auto& s = inst[static_cast<size_t>(i)];
      if (s.tmax <= spec.trivial_time || !s.solvable) ok = false;
      ++cd[static_cast<size_t>(bucket(s.d, spec.d_breaks))];
      ++ce[static_cast<size_t>(bucket(s.e, spec.e_breaks))];
      ++cf[s.family];
    }
    if (!ok) continue;
    double pen = 0;
    for (int c : cd) pen += (c - td) * (c - td);
    for (int c : ce) pen += (c - te) * (c - te);
    for (auto& [f, c] : cf) {
      double l = std::max(0, c - spec.family_cap);
      pen += spec.family_weight * l * l;
    }
    best = std::min(best, pen);
  }
  return best;
}

Selection solve_selection(const std::vector<SelectionInstance>& inst, const SelectionSpec& spec, Status* st = nullptr) {
  auto m = build_selection_mip(inst, spec);
  // through the model text, like the command line does
  Problem p = parse_model(print_model(m.problem));
  auto r = solve(p);
  if (st) *st = r.status;
  EXPECT_TRUE(r.has_incumbent());
  return decode_selection(m, inst, r.incumbent, spec);
}

}  // namespace

TEST(Geomean, Examples) {
  EXPECT_NEAR(shifted_geomean({1, 9}, 1), std::sqrt(20.0) - 1, 1e-12);
  EXPECT_NEAR(shifted_geomean({3.5}, 10), 3.5, 1e-12);
  EXPECT_NEAR(shifted_geomean({7, 7, 7}, 1), 7, 1e-12);
  EXPECT_THROW(shifted_geomean({}, 1), std::invalid_argument);
  EXPECT_THROW(shifted_geomean({-1}, 1), std::invalid_argument);
}

TEST(Profile, HandCount) {
  std::vector<BenchRecord> r{rec("i1", "A", 1), rec("i2", "A", 10), rec("i1", "B", 2), rec("i2", "B", 5)};
  auto t = perf_profile(r, {1, 2});
  EXPECT_EQ(count(t, 1, "A"), 1);
  EXPECT_EQ(count(t, 1, "B"), 1);
  EXPECT_EQ(count(t, 2, "A"), 2);
  EXPECT_EQ(count(t, 2, "B"), 2);
  auto d = perf_profile(r);
  EXPECT_EQ(d.taus.front(), 1.0);
  EXPECT_GE(d.taus.back(), 2.0);
  EXPECT_FALSE(d.format().empty());
}

TEST(Profile, SingleSolverAndAllFailing) {
  std::vector<BenchRecord> r{rec("a", "S", 1), rec("b", "S", 3), rec("c", "S", 7200, RunClass::Timeout),
                             rec("a", "F", 7200, RunClass::FailAbort), rec("b", "F", 7200, RunClass::FailNonopt)};
  auto t = perf_profile(r, {1, 1.5, 4, 100});
  for (double tau : t.taus) {
    EXPECT_EQ(count(t, tau, "S"), 2);
    EXPECT_EQ(count(t, tau, "F"), 0);
  }
}

TEST(Profile, MonotoneAndBounded) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(0.1, 100);
  std::vector<BenchRecord> r;
  for (int i = 0; i < 40; ++i)
    for (const char* s : {"A", "B", "C"}) {
      RunClass c = u(rng) < 20 ? RunClass::Timeout : RunClass::Solved;
      r.push_back(rec("i" + std::to_string(i), s, u(rng), c));
    }
  auto t = perf_profile(r);
  for (size_t j = 0; j < t.solvers.size(); ++j)
    for (size_t i = 0; i < t.taus.size(); ++i) {
      EXPECT_LE(t.counts[i][j], 40);
      if (i > 0) EXPECT_GE(t.counts[i][j], t.counts[i - 1][j]);
    }
}

TEST(Classify, Rules) {
  ClassifyRules rules;
  rules.time_limit = 100;
  RunTrace t;
  t.time = 3;
  t.primal = 2.0;
  t.dual = 2.0 - 1e-7;
  t.has_solution = true;
  t.ref_lo = 1.9999;
  t.ref_hi = 2.0001;
  auto r = classify("x", "s", t, rules);
  EXPECT_EQ(r.status, RunClass::Solved);
  EXPECT_EQ(r.time, 3.0);

  RunTrace abort = t;
  abort.terminated_normally = false;
  EXPECT_EQ(classify("x", "s", abort, rules).status, RunClass::FailAbort);
  EXPECT_EQ(classify("x", "s", abort, rules).time, 100.0);

  RunTrace infeas = t;
  infeas.maxviol = 1e-5;
  EXPECT_EQ(classify("x", "s", infeas, rules).status, RunClass::FailInfeas);

  RunTrace high = t;
  high.dual = 2.5;  // dual above the known optimum
  high.primal = 2.5;
  EXPECT_EQ(classify("x", "s", high, rules).status, RunClass::FailNonopt);
  RunTrace low = t;
  low.primal = 1.5;  // solution better than the known optimum
  EXPECT_EQ(classify("x", "s", low, rules).status, RunClass::FailNonopt);

  RunTrace open = t;
  open.dual = 1.0;
  open.time = 100;
  auto o = classify("x", "s", open, rules);
  EXPECT_EQ(o.status, RunClass::Timeout);
  EXPECT_EQ(o.time, 100.0);

  RunTrace mx = t;
  mx.maximize = true;
  mx.dual = 2.0 + 1e-7;
  EXPECT_EQ(classify("x", "s", mx, rules).status, RunClass::Solved);
  mx.primal = 2.5;
  mx.dual = 2.5;
  EXPECT_EQ(classify("x", "s", mx, rules).status, RunClass::FailNonopt);

  RunTrace rel = t;
  rel.ref_lo.reset();
  rel.ref_hi.reset();
  rel.primal = 1000;
  rel.dual = 1000 - 0.09;  // within 1e-4 relative
  EXPECT_EQ(classify("x", "s", rel, rules).status, RunClass::Solved);
}

TEST(Csv, RoundTrip) {
  std::vector<BenchRecord> r{rec("a", "S", 1.25), rec("b", "S", 7200, RunClass::Timeout)};
  r[0].primal = -3.5;
  r[0].dual = -3.5;
  r[1].primal = kInf;
  r[1].dual = -kInf;
  r[1].maxviol = 1e-9;
  std::string s = write_csv(r);
  EXPECT_EQ(s.substr(0, s.find('\n')), "instance,solver,time,primal,dual,maxviol,status");
  auto back = read_csv(s);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].primal, -3.5);
  EXPECT_EQ(back[1].primal, kInf);
  EXPECT_EQ(back[1].dual, -kInf);
  EXPECT_EQ(back[1].status, RunClass::Timeout);
  EXPECT_EQ(back[1].maxviol, 1e-9);
  EXPECT_THROW(read_csv("bad\n"), std::invalid_argument);
}

TEST(Family, Identifiers) {
  EXPECT_EQ(family_id("nvs01"), "nvs");
  EXPECT_EQ(family_id("ex1221"), "ex");
  EXPECT_EQ(family_id("tln_5"), "tln");
  EXPECT_EQ(family_id("st-e13"), "st");
  EXPECT_EQ(family_id("plain"), "plain");
  auto al = parse_aliases("# block layout\nfo* blay\nm* blay\nno* blay\no* blay\n");
  EXPECT_EQ(family_id("fo7_2", al), "blay");
  EXPECT_EQ(family_id("m3", al), "blay");
  EXPECT_EQ(family_id("nvs01", al), "nvs");
  EXPECT_THROW(parse_aliases("lonely\n"), std::invalid_argument);
}

TEST(Selection, Buckets) {
  std::vector<double> br{0.05, 0.25, 0.5, 0.9};
  EXPECT_EQ(bucket_of(0.0, br), 0);
  EXPECT_EQ(bucket_of(0.05, br), 1);
  EXPECT_EQ(bucket_of(0.3, br), 2);
  EXPECT_EQ(bucket_of(1.0, br), 4);
}

TEST(Selection, FourInstancesMatchesEnumeration) {
  SelectionSpec spec;
  spec.n = 2;
  spec.d_breaks = {0.5};
  spec.e_breaks = {0.5};
  std::vector<SelectionInstance> inst{
      {"a1", 0.1, 0.2, "a", 30, true}, {"a2", 0.7, 0.9, "a", 40, true},
      {"b1", 0.8, 0.1, "b", 12, true}, {"c1", 0.2, 0.6, "c", 50, true}};
  Status st;
  auto s = solve_selection(inst, spec, &st);
  EXPECT_EQ(st, Status::Optimal);
  EXPECT_NEAR(s.penalty, oracle_penalty(inst, spec), 1e-9);
}

TEST(Selection, RandomInstancesMatchEnumeration) {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(0, 1);
  for (int rep = 0; rep < 4; ++rep) {
    int n = 6 + 2 * rep;
    std::vector<SelectionInstance> inst;
    for (int i = 0; i < n; ++i) {
      SelectionInstance s;
      s.name = "f" + std::to_string(i % 3) + "_" + std::to_string(i);
      s.family = family_id(s.name);
      s.d = u(rng) < 0.3 ? 0.0 : u(rng);
      s.e = u(rng);
      s.tmax = u(rng) < 0.2 ? 2.0 : 10 + 100 * u(rng);
      s.solvable = u(rng) > 0.1;
      inst.push_back(s);
    }
    SelectionSpec spec;
    spec.n = n / 2;
    Status st;
    auto s = solve_selection(inst, spec, &st);
    EXPECT_EQ(st, Status::Optimal);
    EXPECT_NEAR(s.penalty, oracle_penalty(inst, spec), 1e-9) << n;
  }
}

TEST(Selection, AllTrivialSelectsNothing) {
  SelectionSpec spec;
  spec.n = 4;
  spec.d_breaks = {0.5};
  spec.e_breaks = {0.5};
  std::vector<SelectionInstance> inst{{"a", 0.1, 0.1, "a", 1, true}, {"b", 0.9, 0.9, "b", 5, true}};
  auto s = solve_selection(inst, spec);
  EXPECT_TRUE(s.chosen.empty());
  // targets round(4/2) = 2 in each of four buckets
  EXPECT_NEAR(s.penalty, 4 * 4.0, 1e-9);
  for (double l : s.lam_d) EXPECT_EQ(l, -2.0);
}

TEST(Selection, FamilyCap) {
  SelectionSpec spec;
  spec.n = 3;
  spec.d_breaks = {};
  spec.e_breaks = {};
  std::vector<SelectionInstance> inst{{"x1", 0.1, 0.1, "x", 10, true}, {"x2", 0.1, 0.1, "x", 10, true},
                                      {"x3", 0.1, 0.1, "x", 10, true}};
  auto m = build_selection_mip(inst, spec);
  ASSERT_EQ(m.lam_f.size(), 1u);
  // all three selected: the family row forces lam_f >= 1
  auto& row = m.problem.linear.back().name == "family0" ? m.problem.linear.back() : m.problem.linear[2];
  EXPECT_EQ(row.name, "family0");
  EXPECT_EQ(row.hi, 2.0);
  auto s = solve_selection(inst, spec);
  // choosing 3 costs 10 * 1 against (3-2)^2 + (3-2)^2 = 2 for choosing two
  EXPECT_EQ(s.chosen.size(), 2u);
  EXPECT_EQ(s.lam_f[0], 0.0);
  EXPECT_NEAR(s.penalty, 2.0, 1e-9);
  spec.family_weight = 0.1;
  auto t = solve_selection(inst, spec);
  EXPECT_EQ(t.chosen.size(), 3u);
  EXPECT_EQ(t.lam_f[0], 1.0);
}

TEST(Features, Csv) {
  auto v = read_features_csv("instance,d,e,tmax,solvable\nnvs01,0.5,0.25,12,1\nex1,0,1,3,0\n");
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0].family, "nvs");
  EXPECT_FALSE(v[1].solvable);
  EXPECT_THROW(read_features_csv("instance,d\nx,1\n"), std::invalid_argument);
  EXPECT_THROW(read_features_csv("instance,d,e,tmax,solvable\nx,2,0,1,1\n"), std::invalid_argument);
}

TEST(RunInstance, SolvedRecord) {
  auto p = parse_model("var x >= -1 <= 1; var y >= -1 <= 1; min -x - y; con c: x^2 + y^2 <= 1;");
  auto r = run_instance("circle", p, Settings{}, -std::sqrt(2.0), -std::sqrt(2.0));
  EXPECT_EQ(r.status, RunClass::Solved);
  EXPECT_LE(r.maxviol, 1e-6);
}

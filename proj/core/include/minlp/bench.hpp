#pragma once

#include <optional>
#include <string>
#include <vector>

#include "minlp/problem.hpp"
#include "minlp/solver.hpp"

namespace minlp {

enum class RunClass { Solved, Timeout, FailNonopt, FailInfeas, FailAbort };
const char* run_class_name(RunClass c);
std::optional<RunClass> parse_run_class(const std::string& s);

struct BenchRecord {
  std::string instance;
  std::string solver;
  double time = 0.0;
  double primal = kInf;
  double dual = -kInf;
  double maxviol = 0.0;
  RunClass status = RunClass::FailAbort;
  bool failed() const { return status == RunClass::FailNonopt || status == RunClass::FailInfeas || status == RunClass::FailAbort; }
};

struct RunTrace {
  bool terminated_normally = true;
  bool has_solution = false;
  double time = 0.0;
  double primal = kInf;
  double dual = -kInf;
  double maxviol = 0.0;
  bool maximize = false;
  // known bounds on the optimal value
  std::optional<double> ref_lo, ref_hi;
};

struct ClassifyRules {
  double time_limit = 7200.0;
  double feastol = 1e-6;
  double rel_gap = 1e-4;
  double abs_gap = 1e-6;
};

// abort, then infeasible solution, then bound contradiction, then gap; failed
// and unfinished runs carry the time limit as their time
BenchRecord classify(const std::string& instance, const std::string& solver, const RunTrace& t,
                     const ClassifyRules& rules = {});

std::string write_csv(const std::vector<BenchRecord>& records);
std::vector<BenchRecord> read_csv(const std::string& text);

// exp(mean(log(t + shift))) - shift
double shifted_geomean(const std::vector<double>& times, double shift = 1.0);

struct ProfileTable {
  std::vector<std::string> solvers;
  std::vector<double> taus;
  std::vector<std::vector<int>> counts;  // [tau][solver]
  std::string format() const;
};

// Instances solved within tau times the fastest solved time. Default taus are
// powers of sqrt(2) up to the largest ratio seen.
ProfileTable perf_profile(const std::vector<BenchRecord>& records, std::vector<double> taus = {});

struct FamilyAlias {
  std::string pattern;  // trailing * matches any suffix
  std::string id;
};
// "PATTERN ID" per line, # comments
std::vector<FamilyAlias> parse_aliases(const std::string& text);
// alias if one matches, else the name up to the first digit, '_' or '-'
std::string family_id(const std::string& name, const std::vector<FamilyAlias>& aliases = {});

struct SelectionInstance {
  std::string name;
  double d = 0.0;  // fraction of integer variables
  double e = 0.0;  // fraction of nonlinear nonzeros
  std::string family;
  double tmax = 0.0;  // largest reliable solve time
  bool solvable = true;
};

struct SelectionSpec {
  int n = 0;
  std::vector<double> d_breaks{0.05, 0.25, 0.5, 0.9};
  std::vector<double> e_breaks{0.1, 0.25, 0.5};
  int family_cap = 2;
  double trivial_time = 5.0;
  double family_weight = 10.0;
};

// interval index of v in the partition of [0,1] at the breakpoints; a value
// on a breakpoint belongs to the interval it starts
int bucket_of(double v, const std::vector<double>& breaks);

struct SelectionModel {
  Problem problem;
  std::vector<int> z;
  std::vector<int> lam_d, lam_e, lam_f;
  std::vector<std::string> families;
  int target_d = 0, target_e = 0;
};

SelectionModel build_selection_mip(const std::vector<SelectionInstance>& instances, const SelectionSpec& spec);

struct Selection {
  std::vector<std::string> chosen;
  std::vector<double> lam_d, lam_e, lam_f;
  double penalty = 0.0;
};
Selection decode_selection(const SelectionModel& m, const std::vector<SelectionInstance>& instances,
                           std::span<const double> x, const SelectionSpec& spec);

// header names: instance, d|discreteness, e|nonlinearity, tmax|max_time,
// solvable, optional family (derived from the name when absent)
std::vector<SelectionInstance> read_features_csv(const std::string& text, const std::vector<FamilyAlias>& aliases = {});

// Solve, then check the incumbent on the problem as given.
BenchRecord run_instance(const std::string& name, const Problem& p, const Settings& s,
                         std::optional<double> ref_lo = std::nullopt, std::optional<double> ref_hi = std::nullopt);

}  // namespace minlp

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "minlp/extended.hpp"
#include "minlp/heuristics.hpp"
#include "minlp/problem.hpp"
#include "minlp/separation.hpp"

namespace minlp {

enum class Status { Optimal, Infeasible, GapLimit, TimeLimit, NodeLimit, Abort };
const char* status_name(Status s);

struct Settings {
  double feastol = 1e-6;
  double rel_gap = 1e-4;
  double abs_gap = 1e-6;
  double time_limit = kInf;  // seconds
  long node_limit = -1;      // negative: none
  double inf_bound = 1e12;
  double branch_lambda = 0.75;
  std::uint64_t seed = 0;
  int sep_rounds = 10;
  int plunge_depth = 8;
  int cut_age = 20;
  double branch_ratio = 0.1;  // branch when best cut violation < ratio * constraint violation
  int multistart_samples = 20;
  int undercover_frequency = 100;
  long undercover_nodes = 200;
  // cut families, detectors and heuristics by name (see `known_toggles`)
  std::set<std::string> disabled;
  bool enabled(const std::string& name) const { return !disabled.count(name); }
};

const std::vector<std::string>& known_toggles();

struct Stats {
  long nodes = 0;
  long lp_solves = 0;
  long lp_iterations = 0;
  int max_depth = 0;
  std::map<std::string, long> cuts;            // rows added to LPs by family
  std::map<std::string, long> heuristic_wins;  // improving incumbents by source
  int obbt_tightened = 0;
  int lvbs = 0;
  int lvb_tightened = 0;
  long pool_size = 0;
  double seconds = 0.0;
  std::string to_json() const;
};

struct SolveResult {
  Status status = Status::Abort;
  double primal = kInf;  // objective of the incumbent in the problem's sense
  double dual = -kInf;
  std::vector<double> incumbent;  // original variables
  Stats stats;
  bool has_incumbent() const { return !incumbent.empty(); }
};

SolveResult solve(const Problem& problem, const Settings& settings = {});

// Smallest gap closing tolerance around a primal value (minimization view).
double gap_tolerance(double primal, const Settings& s);

struct BranchCandidate {
  int var = -1;
  double weight = 0.0;
};

class Pseudocosts {
 public:
  explicit Pseudocosts(size_t n = 0) : sum_(n, {0.0, 0.0}), count_(n, {0, 0}) {}
  void record(int var, bool up, double gain_per_unit);
  // geometric mean of the two directions; 1e-6 when nothing was observed
  double estimate(int var) const;
  void set(int var, double down, double up);

 private:
  std::vector<std::pair<double, double>> sum_;
  std::vector<std::pair<int, int>> count_;
};

struct BranchDecision {
  int var = -1;
  double point = 0.0;
  bool integer = false;
};

// lambda * xhat + (1 - lambda) * mid, kept 1e-4 * width away from both ends
double branch_point(Interval b, double xhat, double lambda);

std::optional<BranchDecision> select_branching(const std::vector<BranchCandidate>& candidates, const Pseudocosts& pc,
                                               std::span<const double> xhat, const Box& box,
                                               const std::vector<bool>& integer, double lambda);

enum class Outcome { Cutoff, BoundsTightened, CutsAdded, Branched, Feasible };
const char* outcome_name(Outcome o);

struct EnforceResult {
  Outcome outcome = Outcome::Branched;
  std::vector<Cut> cuts;
  std::vector<BranchCandidate> candidates;
  Box box;  // tightened original box for BoundsTightened
  double max_violation = 0.0;  // of the extended constraints
  double best_cut_violation = 0.0;
};

// Separation and enforcement over one relaxation. Holds the presolved
// problem and its extended form.
class Relaxation {
 public:
  Relaxation(const Problem& presolved, const Settings& settings);
  const Problem& problem() const { return p_; }
  const ExtendedForm& ext() const { return ef_; }
  Box ext_box(const Box& box) const;  // auxiliary bounds under an original box
  // cuts at y for violated extended constraints plus RLT/SDP
  EnforceResult separate(const Box& ext_box, const Box& root_ext_box, std::span<const double> y) const;
  EnforceResult enforce(const Box& box, const Box& root_ext_box, std::span<const double> y) const;
  // estimator rows at a reference point, one per needed side
  std::vector<Cut> initial_cuts(const Box& ext_box, const Box& root_ext_box, std::span<const double> ref) const;
  // quadratic rows propagated in the extended space; nullopt when infeasible
  std::optional<Box> quad_propagate(const Box& ext_box) const;

 private:
  Problem p_;
  ExtendedForm ef_;
  Settings s_;
  std::map<int, SemiContInfo> semicont_;
  std::optional<Estimator> strengthen(const ExtConstraint& c, const Estimator& e, const Box& ext_box) const;
};

std::optional<Candidate> undercover(const Problem& p, std::span<const double> ref, const Settings& settings);

}  // namespace minlp

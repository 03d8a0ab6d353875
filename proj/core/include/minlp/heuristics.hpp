#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "minlp/problem.hpp"

namespace minlp {

struct Candidate {
  std::vector<double> point;
  double max_violation = kInf;
  double objective = kInf;
  int iterations = 0;
};

// max over all rows and bounds of the absolute violation (integrality ignored)
double max_violation(const Problem& p, std::span<const double> x);

Candidate constraint_consensus(const Problem& p, std::span<const double> start, int max_iters = 100,
                               double feastol = 1e-6);

struct MultistartOptions {
  double feastol = 1e-6;
  int consensus_iters = 100;
  double sample_clamp = 1e4;
  double cluster_radius = 0.1;  // relative to the sampling box diameter
};

// One candidate per cluster, after rounding and fix_and_polish.
std::vector<Candidate> multistart(const Problem& p, int samples, std::uint64_t seed, const MultistartOptions& opts = {});

// Fixes integers at their (integral) values in `point`, tightens, then solves
// the linear remainder by LP or polishes the nonlinear one by projected gradient.
std::optional<Candidate> fix_and_polish(const Problem& p, std::span<const double> point, double feastol = 1e-6,
                                        int max_iters = 200);

// Each requirement is satisfied once one of its alternatives is fully fixed.
struct CoverRequirement {
  std::vector<std::vector<int>> alternatives;
};
std::vector<CoverRequirement> cover_requirements(const Problem& p);
std::vector<int> greedy_cover(const std::vector<CoverRequirement>& reqs, int num_vars,
                              const std::vector<bool>& already_fixed = {});

// Subproblem with the given variables fixed at the reference values.
Problem fix_variables(const Problem& p, const std::vector<int>& vars, std::span<const double> values);

}  // namespace minlp

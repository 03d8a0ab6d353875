#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "minlp/problem.hpp"

namespace minlp {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, int line, int col);
  int line = 0, col = 0;
};

// Model text:
//   var NAME [>= L] [<= U] [int|bin];
//   min EXPR;  |  max EXPR;
//   con NAME: [L <=] EXPR [<= U];
// with + - * / ^, unary minus, parentheses and exp log abs sin cos sqrt
// entropy signpower(e, p). Lines starting with # are comments.
Problem parse_model(const std::string& text);
std::string print_model(const Problem& p);

// "NAME VALUE" per line, # comments. Unlisted variables are 0.
std::vector<double> parse_solution(const Problem& p, const std::string& text);
std::string print_solution(const Problem& p, std::span<const double> x);

struct CheckReport {
  Violation violation;
  bool pass = false;
};

// Absolute violations by class on the problem as given. A moved nonlinear
// objective variable is recomputed from its expression first.
CheckReport check_solution(const Problem& p, std::span<const double> x, double feastol = 1e-6);

std::string read_file(const std::string& path);

}  // namespace minlp

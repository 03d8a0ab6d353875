// minlp: solve, check and benchmark models in the text format.
#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include "minlp/bench.hpp"
#include "minlp/io.hpp"
#include "minlp/solver.hpp"

namespace fs = std::filesystem;
using namespace minlp;

namespace {

constexpr int kExitOk = 0, kExitInfeasible = 2, kExitLimit = 3, kExitFail = 4, kExitUsage = 64;

struct SolveOpts {
  double time_limit = kInf;
  double rel_gap = 1e-4, abs_gap = 1e-6, feastol = 1e-6, inf_bound = 1e12;
  long node_limit = -1;
  std::uint64_t seed = 0;
  std::vector<std::string> disable;
};

void add_solve_flags(CLI::App* app, SolveOpts& o) {
  app->add_option("--time-limit", o.time_limit, "seconds");
  app->add_option("--rel-gap", o.rel_gap)->check(CLI::PositiveNumber);
  app->add_option("--abs-gap", o.abs_gap)->check(CLI::PositiveNumber);
  app->add_option("--feastol", o.feastol)->check(CLI::PositiveNumber);
  app->add_option("--inf-bound", o.inf_bound)->check(CLI::PositiveNumber);
  app->add_option("--node-limit", o.node_limit);
  app->add_option("--seed", o.seed);
  app->add_option("--disable", o.disable, "cut family, detector or heuristic")
      ->check(CLI::IsMember(known_toggles()));
}

Settings settings_of(const SolveOpts& o) {
  Settings s;
  s.time_limit = o.time_limit;
  s.rel_gap = o.rel_gap;
  s.abs_gap = o.abs_gap;
  s.feastol = o.feastol;
  s.inf_bound = o.inf_bound;
  s.node_limit = o.node_limit;
  s.seed = o.seed;
  s.disabled.insert(o.disable.begin(), o.disable.end());
  return s;
}

bool gap_met(const SolveResult& r, const Settings& s) {
  if (!std::isfinite(r.primal) || !std::isfinite(r.dual)) return false;
  double g = std::fabs(r.primal - r.dual);
  return g <= s.abs_gap || g <= s.rel_gap * std::max(std::fabs(r.primal), std::fabs(r.dual));
}

int exit_code(const SolveResult& r, const Settings& s) {
  switch (r.status) {
    case Status::Optimal: return kExitOk;
    case Status::Infeasible: return kExitInfeasible;
    case Status::GapLimit: return gap_met(r, s) ? kExitOk : kExitLimit;
    case Status::TimeLimit:
    case Status::NodeLimit: return kExitLimit;
    case Status::Abort: return kExitFail;
  }
  return kExitFail;
}

std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

int cmd_solve(const std::string& file, const SolveOpts& o, const std::string& stats, const std::string& sol) {
  Problem p = parse_model(read_file(file));
  Settings s = settings_of(o);
  auto r = solve(p, s);
  std::cout << "status: " << status_name(r.status) << "\n"
            << "primal: " << fmt_num(r.primal) << "\n"
            << "dual: " << fmt_num(r.dual) << "\n"
            << "nodes: " << r.stats.nodes << "\n"
            << "time: " << fmt_num(r.stats.seconds) << "\n";
  if (r.has_incumbent()) {
    auto c = check_solution(p, r.incumbent, s.feastol);
    std::cout << "maxviol: " << fmt_num(c.violation.max()) << "\n";
    if (sol.empty()) {
      std::cout << "solution:\n" << print_solution(p, r.incumbent);
    } else {
      write_text(sol, print_solution(p, r.incumbent));
    }
  }
  if (!stats.empty()) write_text(stats, r.stats.to_json() + "\n");
  return exit_code(r, s);
}

int cmd_check(const std::string& file, const std::string& solfile, double feastol) {
  Problem p = parse_model(read_file(file));
  auto x = parse_solution(p, read_file(solfile));
  auto c = check_solution(p, x, feastol);
  std::cout << "linear: " << fmt_num(c.violation.linear) << "\n"
            << "nonlinear: " << fmt_num(c.violation.nonlinear) << "\n"
            << "bounds: " << fmt_num(c.violation.bounds) << "\n"
            << "integrality: " << fmt_num(c.violation.integrality) << "\n"
            << "objective: ";
  std::vector<double> y = x;
  y.resize(p.vars.size(), 0.0);
  if (p.objective_var >= 0) {
    try {
      y[static_cast<size_t>(p.objective_var)] = eval(p.dag, p.objective_expr, y);
    } catch (const DomainError&) {
      y[static_cast<size_t>(p.objective_var)] = std::nan("");
    }
  }
  std::cout << fmt_num(p.objective(y)) << "\n" << (c.pass ? "pass" : "fail") << "\n";
  return c.pass ? kExitOk : kExitFail;
}

// optional refs.csv: instance,lo,hi
std::map<std::string, std::pair<double, double>> read_refs(const fs::path& dir) {
  std::map<std::string, std::pair<double, double>> refs;
  fs::path f = dir / "refs.csv";
  if (!fs::exists(f)) return refs;
  std::istringstream in(read_file(f.string()));
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      if (line.rfind("instance", 0) == 0) continue;
    }
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    std::string name, lo, hi;
    if (ls >> name >> lo >> hi) refs[name] = {std::stod(lo), std::stod(hi)};
  }
  return refs;
}

int cmd_bench_run(const std::string& dir, const std::string& out, const SolveOpts& o, int jobs) {
  std::vector<fs::path> files;
  for (auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".mod") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  auto refs = read_refs(dir);
  Settings s = settings_of(o);
  if (!std::isfinite(s.time_limit)) s.time_limit = 60.0;
  std::vector<BenchRecord> recs(files.size());
  std::atomic<size_t> next{0};
  std::mutex io;
  auto worker = [&]() {
    for (size_t i = next++; i < files.size(); i = next++) {
      std::string name = files[i].stem().string();
      std::optional<double> lo, hi;
      if (auto it = refs.find(name); it != refs.end()) {
        lo = it->second.first;
        hi = it->second.second;
      }
      BenchRecord r;
      try {
        Problem p = parse_model(read_file(files[i].string()));
        r = run_instance(name, p, s, lo, hi);
      } catch (const std::exception& e) {
        RunTrace t;
        t.terminated_normally = false;
        ClassifyRules rules;
        rules.time_limit = s.time_limit;
        r = classify(name, "minlp", t, rules);
        std::lock_guard lk(io);
        std::cerr << name << ": " << e.what() << "\n";
      }
      recs[i] = r;
      std::lock_guard lk(io);
      std::cerr << name << " " << run_class_name(r.status) << " " << fmt_num(r.time) << "s\n";
    }
  };
  std::vector<std::thread> pool;
  for (int k = 0; k < std::max(1, jobs); ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  std::sort(recs.begin(), recs.end(), [](auto& a, auto& b) { return a.instance < b.instance; });
  std::string csv = write_csv(recs);
  if (out.empty())
    std::cout << csv;
  else
    write_text(out, csv);
  int solved = 0, timeouts = 0, failed = 0;
  std::vector<double> times;
  for (auto& r : recs) {
    solved += r.status == RunClass::Solved;
    timeouts += r.status == RunClass::Timeout;
    failed += r.failed();
    times.push_back(r.time);
  }
  std::cerr << "solved " << solved << ", timeout " << timeouts << ", failed " << failed;
  if (!times.empty()) std::cerr << ", shifted geomean " << fmt_num(shifted_geomean(times, 1.0)) << "s";
  std::cerr << "\n";
  return failed ? kExitFail : (timeouts ? kExitLimit : kExitOk);
}

int cmd_bench_profile(const std::string& csv, const std::vector<double>& taus) {
  auto recs = read_csv(read_file(csv));
  auto t = perf_profile(recs, taus);
  std::cout << t.format();
  std::map<std::string, std::vector<double>> by;
  for (auto& r : recs) by[r.solver].push_back(r.time);
  std::cout << "\nsolver\tsolved\tshifted-geomean\n";
  for (auto& [s, times] : by) {
    int solved = 0;
    for (auto& r : recs) solved += r.solver == s && r.status == RunClass::Solved;
    std::cout << s << "\t" << solved << "\t" << fmt_num(shifted_geomean(times, 1.0)) << "\n";
  }
  return kExitOk;
}

int cmd_bench_select(const std::string& features, int n, const std::string& aliases, const std::vector<double>& dbr,
                     const std::vector<double>& ebr, const std::string& model_out, const SolveOpts& o) {
  std::vector<FamilyAlias> al;
  if (!aliases.empty()) al = parse_aliases(read_file(aliases));
  auto inst = read_features_csv(read_file(features), al);
  SelectionSpec spec;
  spec.n = n;
  if (!dbr.empty()) spec.d_breaks = dbr;
  if (!ebr.empty()) spec.e_breaks = ebr;
  auto m = build_selection_mip(inst, spec);
  std::string text = print_model(m.problem);
  if (!model_out.empty()) write_text(model_out, text);
  Problem p = parse_model(text);
  Settings s = settings_of(o);
  auto r = solve(p, s);
  std::cout << "status: " << status_name(r.status) << "\n";
  if (!r.has_incumbent()) return exit_code(r, s);
  auto sel = decode_selection(m, inst, r.incumbent, spec);
  std::cout << "penalty: " << fmt_num(sel.penalty) << "\n"
            << "selected: " << sel.chosen.size() << "\n";
  for (auto& c : sel.chosen) std::cout << "  " << c << "\n";
  return exit_code(r, s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Global MINLP solver and benchmark harness"};
  app.require_subcommand(1);

  SolveOpts so;
  std::string file, stats, solout;
  auto* solve_cmd = app.add_subcommand("solve", "solve a model file");
  solve_cmd->add_option("FILE", file)->required()->check(CLI::ExistingFile);
  add_solve_flags(solve_cmd, so);
  solve_cmd->add_option("--stats", stats, "write statistics JSON");
  solve_cmd->add_option("--sol", solout, "write the incumbent as a solution file");

  std::string cfile, csol;
  double cfeas = 1e-6;
  auto* check_cmd = app.add_subcommand("check", "check a solution file against a model");
  check_cmd->add_option("FILE", cfile)->required()->check(CLI::ExistingFile);
  check_cmd->add_option("SOLFILE", csol)->required()->check(CLI::ExistingFile);
  check_cmd->add_option("--feastol", cfeas)->check(CLI::PositiveNumber);

  auto* bench = app.add_subcommand("bench", "benchmark harness");
  bench->require_subcommand(1);
  std::string bdir, bout;
  int jobs = 1;
  SolveOpts bo;
  auto* run = bench->add_subcommand("run", "solve every .mod file in a directory");
  run->add_option("DIR", bdir)->required()->check(CLI::ExistingDirectory);
  run->add_option("--out", bout, "CSV output file");
  run->add_option("--jobs", jobs)->check(CLI::PositiveNumber);
  add_solve_flags(run, bo);

  std::string pcsv;
  std::vector<double> taus;
  auto* prof = bench->add_subcommand("profile", "performance profile of a results CSV");
  prof->add_option("CSV", pcsv)->required()->check(CLI::ExistingFile);
  prof->add_option("--tau", taus, "ratios to report");

  std::string feats, aliases, model_out;
  int n = 0;
  std::vector<double> dbr, ebr;
  SolveOpts selo;
  auto* sel = bench->add_subcommand("select", "instance selection by penalized MIQP");
  sel->add_option("FEATURES", feats)->required()->check(CLI::ExistingFile);
  sel->add_option("--n", n, "target number of instances")->required()->check(CLI::NonNegativeNumber);
  sel->add_option("--aliases", aliases, "family alias file")->check(CLI::ExistingFile);
  sel->add_option("--d-breaks", dbr);
  sel->add_option("--e-breaks", ebr);
  sel->add_option("--model-out", model_out, "write the selection model");
  add_solve_flags(sel, selo);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*solve_cmd) return cmd_solve(file, so, stats, solout);
    if (*check_cmd) return cmd_check(cfile, csol, cfeas);
    if (*run) return cmd_bench_run(bdir, bout, bo, jobs);
    if (*prof) return cmd_bench_profile(pcsv, taus);
    if (*sel) return cmd_bench_select(feats, n, aliases, dbr, ebr, model_out, selo);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
  return kExitUsage;
}

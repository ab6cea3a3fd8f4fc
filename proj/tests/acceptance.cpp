// End-to-end acceptance run: one PASS/FAIL line per criterion.
//
// Usage: acceptance [--out DIR] [--known-failure N]...
// Exit status is the number of failing criteria not listed as known failures.
// A listed criterion that passes is reported as such and does not count.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "hrc/cli.hpp"
#include "support/gradcheck.hpp"
#include "support/instances.hpp"

namespace fs = std::filesystem;
using namespace hrc;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "hrc_cli");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::istringstream in;
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), in, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh_dir(const fs::path& p) {
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

/// Value following `key ` in `text`, e.g. number_after("makespan 7", "makespan").
std::optional<long long> number_after(const std::string& text, const std::string& key) {
  const auto at = text.rfind(key + " ");
  if (at == std::string::npos) return std::nullopt;
  return std::stoll(text.substr(at + key.size() + 1));
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

/// Every regular file below `a` must exist below `b` with identical bytes.
bool same_tree(const fs::path& a, const fs::path& b, std::string& why) {
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    ++files;
    const auto rel = fs::relative(entry.path(), a);
    if (!fs::exists(b / rel)) {
      why = rel.string() + " missing in repeat";
      return false;
    }
    if (slurp(entry.path()) != slurp(b / rel)) {
      why = rel.string() + " differs";
      return false;
    }
  }
  why = std::to_string(files) + " files identical";
  return files > 0;
}

// ---------------------------------------------------------------------------

constexpr int kOracleInstances = 50;

/// Solves every small random instance through the CLI into `dir`.
std::vector<long long> solve_small_instances(const fs::path& dir) {
  std::vector<long long> makespans;
  for (int i = 0; i < kOracleInstances; ++i) {
    const fs::path sub = fresh_dir(dir / ("instance_" + std::to_string(i)));
    const fs::path job = sub / "job.txt";
    std::ofstream(job) << serialize_jobspec(testing::random_instance(static_cast<std::uint64_t>(i)));
    CliRun r = cli({"solve", "--jobspec", job.string(), "--simulations", "500", "--max-depth", "0", "--seed", "0",
                    "--out", sub.string()});
    makespans.push_back(r.code == 0 ? number_after(r.out, "makespan").value_or(-1) : -1);
  }
  return makespans;
}

Verdict oracle_equivalence(const fs::path& dir) {
  const auto solved = solve_small_instances(dir);
  int equal = 0;
  int below = 0;
  int failed = 0;
  for (int i = 0; i < kOracleInstances; ++i) {
    const OracleResult o = exhaustive_search(testing::random_instance(static_cast<std::uint64_t>(i)), 50'000'000);
    if (!o.complete() || solved[i] < 0) {
      ++failed;
      continue;
    }
    equal += solved[i] == *o.optimum;
    below += solved[i] < *o.optimum;
  }
  std::ostringstream d;
  d << equal << "/" << kOracleInstances << " equal to the exhaustive optimum, " << below << " below, " << failed
    << " not evaluated";
  return {failed == 0 && below == 0 && equal * 100 >= 95 * kOracleInstances, d.str()};
}

Verdict return_identity() {
  int mismatches = 0;
  constexpr int kEpisodes = 1000;
  for (int i = 0; i < kEpisodes; ++i) {
    const auto seed = static_cast<std::uint64_t>(i);
    const GameRules rules{.strict_precedence = i % 4 < 2, .allow_wait = i % 2 == 1};
    JobPtr job = make_job(testing::random_instance(seed, {.max_width = 6, .max_height = 6, .max_tasks = 20}), rules);
    EpisodeRecord rec = run_episode(job, RandomPickPolicy{}, seed + 7);
    Time sum = 0;
    for (Time r : rec.rewards) sum += r;
    mismatches += sum != -rec.makespan;
  }
  return {mismatches == 0, std::to_string(kEpisodes - mismatches) + "/" + std::to_string(kEpisodes) +
                               " episodes with reward sum equal to minus makespan"};
}

Verdict two_step_cascade() {
  const JobSpec spec = parse_jobspec(
      "board 3 3\nagents 1 1\n"
      "task A1 H 1 0 0 1\ntask A2 H 1 1 0 1\ntask A3 H 1 2 0 1\n"
      "task B1 R 1 0 1 1\ntask B2 R 1 1 1 1\n"
      "task C1 E 1 0 2 2\n");
  const auto id = [&](const char* name) { return *spec.find(name); };
  Board b(spec);
  const PickOutcome first = b.remove_and_cascade(id("A1"));
  const bool step1 = first.descents == std::vector<Descent>{{id("B1"), 1, 0}} && b.row_of(id("C1")) == 2;
  const PickOutcome second = b.remove_and_cascade(id("A2"));
  const bool step2 = second.descents == std::vector<Descent>{{id("B2"), 1, 0}, {id("C1"), 2, 1}} &&
                     b.render(spec) == "...\nEE.\nRRH\n";
  return {step1 && step2, std::string("first pick ") + (step1 ? "ok" : "wrong") + ", second pick " +
                              (step2 ? "ok" : "wrong")};
}

Verdict gradient_check() {
  const NetConfig cfg = testing::tiny_net();
  double worst = 0.0;
  std::string where;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Parameters p = testing::random_parameters(cfg, seed);
    for (const auto& c : testing::check_gradients(p, testing::random_batch(cfg, 4, 50 + seed), 1e-4)) {
      if (c.max_relative_error >= worst) {
        worst = c.max_relative_error;
        where = c.name;
      }
    }
  }
  std::ostringstream d;
  d << "max relative error " << std::scientific << std::setprecision(2) << worst << " (" << where << ")";
  return {worst < 1e-4, d.str()};
}

Verdict shape_contract() {
  const NetConfig cfg;
  const Parameters p = init_parameters(cfg, 0);
  const ForwardTrace t = forward_trace(p, InputTensor::zeros(15, 8));
  const PolicyValue pv = forward(p, InputTensor::zeros(15, 8));
  const bool ok = cfg.height == 15 && cfg.width == 8 && cfg.flatten_size() == 30 && t.pooled.back().size() == 30 &&
                  pv.p.size() == 8 && std::isfinite(pv.v);
  std::ostringstream d;
  d << "input " << cfg.height << "x" << cfg.width << "x3, flatten " << t.pooled.back().size() << ", policy "
    << pv.p.size() << ", scalar value";
  return {ok, d.str()};
}

struct DeskRun {
  std::vector<long long> best;  // best_makespan column
  long long final_greedy = -1;
  double random_mean = 0.0;
  long long random_min = 0;
  std::map<long long, long long> histogram;
  bool ok = false;
};

/// Trains on the desk fixture with defaults, solves greedily with the final
/// checkpoint and samples the random baseline, all below `dir`.
DeskRun desk_run(const fs::path& dir) {
  DeskRun run;
  const fs::path train = fresh_dir(dir / "train");
  const fs::path solve = fresh_dir(dir / "solve");
  const fs::path base = fresh_dir(dir / "baseline");
  if (cli({"train", "--jobspec", "@desk", "--seed", "0", "--out", train.string()}).code != 0) return run;
  for (const auto& row : read_csv(train / "training_log.csv")) run.best.push_back(std::stoll(row.at(3)));
  CliRun s = cli({"solve", "--jobspec", "@desk", "--seed", "0", "--checkpoint", (train / checkpoint_name(10)).string(),
                  "--out", solve.string()});
  if (s.code != 0) return run;
  run.final_greedy = number_after(s.out, "makespan").value_or(-1);
  if (cli({"baseline", "--jobspec", "@desk", "--seed", "0", "--out", base.string()}).code != 0) return run;
  long long n = 0;
  long long total = 0;
  for (const auto& row : read_csv(base / "histogram.csv")) {
    const long long m = std::stoll(row.at(0));
    const long long c = std::stoll(row.at(1));
    run.histogram[m] = c;
    n += c;
    total += m * c;
  }
  for (const auto& [m, c] : run.histogram) {
    if (c > 0) {
      run.random_min = m;
      break;
    }
  }
  run.random_mean = n > 0 ? static_cast<double>(total) / static_cast<double>(n) : 0.0;
  run.ok = run.best.size() == 10 && n == 1000;
  return run;
}

Verdict training_progress(const DeskRun& r) {
  if (!r.ok) return {false, "desk run did not complete"};
  bool monotone = true;
  for (std::size_t i = 1; i < r.best.size(); ++i) monotone = monotone && r.best[i] <= r.best[i - 1];
  const double limit = 0.97 * r.random_mean;
  std::ostringstream d;
  d << "best column";
  for (auto b : r.best) d << ' ' << b;
  d << (monotone ? " (non-increasing)" : " (NOT monotone)") << "; final " << r.best.back() << " vs 0.97 x random mean "
    << std::fixed << std::setprecision(2) << r.random_mean << " = " << limit;
  return {monotone && static_cast<double>(r.best.back()) <= limit, d.str()};
}

Verdict random_baseline_shape(const DeskRun& r) {
  if (!r.ok) return {false, "desk run did not complete"};
  auto share_at_or_below = [&](long long m) {
    long long hits = 0;
    for (const auto& [k, c] : r.histogram) hits += k <= m ? c : 0;
    return static_cast<double>(hits) / 1000.0;
  };
  const long long best = r.best.back();
  const double share = share_at_or_below(best);
  std::ostringstream d;
  d << std::fixed << std::setprecision(1) << "random mean " << std::setprecision(2) << r.random_mean << " > min "
    << r.random_min << "; " << std::setprecision(1) << share * 100.0 << "% of trajectories at or below best " << best
    << " (limit 5%); final greedy policy " << r.final_greedy << ", " << share_at_or_below(r.final_greedy) * 100.0
    << "% at or below it";
  return {r.random_mean > static_cast<double>(r.random_min) && share <= 0.05, d.str()};
}

Verdict exhaustive_infeasibility(const fs::path& dir) {
  const fs::path out = fresh_dir(dir);
  CliRun r = cli({"oracle", "--jobspec", "@desk", "--node-budget", "10000000", "--out", out.string()});
  const bool exceeded = r.code == 0 && r.out.find("budget exceeded") != std::string::npos;
  std::vector<double> routes;
  for (const auto& row : read_csv(out / "oracle.csv")) routes.push_back(std::stod(row.at(1)));
  std::ostringstream d;
  d << (exceeded ? "budget exceeded" : "budget NOT exceeded") << "; route counts";
  bool growth = routes.size() >= 6;
  for (std::size_t i = 0; i < routes.size(); ++i) d << ' ' << static_cast<long long>(routes[i]);
  d << "; first ratios";
  for (std::size_t i = 1; i < routes.size() && i <= 5; ++i) {
    const double ratio = routes[i] / routes[i - 1];
    growth = growth && ratio >= 2.0;
    d << ' ' << std::fixed << std::setprecision(2) << ratio;
  }
  return {exceeded && growth, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance run"};
  std::string out = (fs::temp_directory_path() / "hrc_acceptance").string();
  std::vector<int> known;
  app.add_option("--out", out, "Scratch directory for CLI outputs")->capture_default_str();
  app.add_option("--known-failure", known, "Criterion whose failure does not affect the exit status");
  CLI11_PARSE(app, argc, argv);
  const std::set<int> known_failures(known.begin(), known.end());
  const fs::path root = out;

  int unexpected = 0;
  auto report = [&](int id, const std::string& name, const std::function<Verdict()>& check) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (v.pass ? "PASS" : "FAIL") << ' ' << id << ' ' << name << ": " << v.detail << " [" << std::fixed
              << std::setprecision(1) << secs << " s]";
    if (!v.pass && known_failures.count(id)) std::cout << " (known failure)";
    std::cout << std::endl;
    if (!v.pass && !known_failures.count(id)) ++unexpected;
  };

  DeskRun desk_a, desk_b;
  report(1, "oracle equivalence", [&] { return oracle_equivalence(root / "c1_a"); });
  report(2, "return identity", [] { return return_identity(); });
  report(3, "two-step gravity cascade", [] { return two_step_cascade(); });
  report(4, "gradient check", [] { return gradient_check(); });
  report(5, "network shape contract", [] { return shape_contract(); });
  report(6, "training progress", [&] {
    desk_a = desk_run(root / "desk_a");
    return training_progress(desk_a);
  });
  report(7, "random baseline shape", [&] { return random_baseline_shape(desk_a); });
  report(8, "exhaustive infeasibility", [&] { return exhaustive_infeasibility(root / "c8"); });
  report(9, "determinism", [&]() -> Verdict {
    solve_small_instances(root / "c1_b");
    desk_b = desk_run(root / "desk_b");
    std::string why1, why67;
    const bool same1 = same_tree(root / "c1_a", root / "c1_b", why1);
    const bool same67 = same_tree(root / "desk_a", root / "desk_b", why67);
    return {same1 && same67, "criterion 1 repeat: " + why1 + "; criteria 6/7 repeat: " + why67};
  });
  return unexpected;
}

#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "smom/experiments.hpp"

namespace {

using smom::ExperimentConfig;
using smom::ResultRow;

constexpr int kExitConfig = 2;
constexpr int kExitOracleNan = 3;

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
  } else {
    smom::write_text(out, text);
    std::fprintf(stderr, "wrote %s\n", out.c_str());
  }
}

// Exit 3 when an oracle-mode estimator produced no usable replication at
// all: those rows are the published anchors, a NaN there is never benign.
int oracle_nan_exit(const std::vector<ResultRow>& rows) {
  for (const ResultRow& r : rows)
    if (r.estimator == "improved_oracle" && std::isnan(r.mse)) {
      std::fprintf(stderr,
                   "oracle estimator failed every replication "
                   "(%s %s n=%d K=%d pair=%d)\n",
                   r.experiment.c_str(), r.parameter.c_str(), r.n, r.k,
                   r.pair);
      return kExitOracleNan;
    }
  return 0;
}

void add_study_options(CLI::App* cmd, ExperimentConfig& cfg,
                       std::string& config_path) {
  cmd->add_option("--n", cfg.n_list, "sample sizes (default per study)");
  cmd->add_option("--reps", cfg.reps, "replications per cell")
      ->capture_default_str();
  cmd->add_option("--K", cfg.k_list, "field counts (default per study)");
  cmd->add_option("--pairs", cfg.pairs, "field initialization pairs")
      ->capture_default_str();
  cmd->add_option("--M", cfg.mc, "Monte Carlo size for moment matrices")
      ->capture_default_str();
  cmd->add_option("--seed", cfg.master_seed, "master seed")
      ->capture_default_str();
  cmd->add_option("--out", cfg.out, "output CSV path (default: stdout)");
  cmd->add_flag("--full", cfg.full, "publication-scale replication count");
  cmd->add_option("--config", config_path,
                  "key=value config file; explicit flags win");
}

std::vector<int> parse_int_list(const std::string& value) {
  std::vector<int> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(std::stoi(item));
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

// key=value lines; '#' starts a comment; a key is ignored when the matching
// flag appeared on the command line.
void apply_config_file(const CLI::App* cmd, const std::string& path,
                       ExperimentConfig& cfg, int& beta) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  auto given = [&](const char* flag) { return cmd->count(flag) > 0; };
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "n") {
        if (!given("--n")) cfg.n_list = parse_int_list(value);
      } else if (key == "K") {
        if (!given("--K")) cfg.k_list = parse_int_list(value);
      } else if (key == "reps") {
        if (!given("--reps")) cfg.reps = std::stoi(value);
      } else if (key == "pairs") {
        if (!given("--pairs")) cfg.pairs = std::stoi(value);
      } else if (key == "M") {
        if (!given("--M")) cfg.mc = std::stoi(value);
      } else if (key == "seed") {
        if (!given("--seed")) cfg.master_seed = std::stoull(value);
      } else if (key == "out") {
        if (!given("--out")) cfg.out = value;
      } else if (key == "full") {
        if (!given("--full")) cfg.full = value == "1" || value == "true";
      } else if (key == "beta") {
        if (!cmd->get_option_no_throw("--beta"))
          throw std::runtime_error("key 'beta' not valid for this subcommand");
        if (!given("--beta")) beta = std::stoi(value);
      } else {
        throw std::runtime_error("unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": bad value for '" + key + "'");
    } catch (const std::out_of_range&) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": bad value for '" + key + "'");
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stein's method of moments: studies and diagnostics"};
  app.require_subcommand(1);

  ExperimentConfig cfg;
  int beta = 2;
  int beta_max = 20;
  std::string config_path, in_path, out_path;

  CLI::App* gnormal = app.add_subcommand(
      "gnormal", "generalized normal replication study");
  add_study_options(gnormal, cfg, config_path);
  gnormal->add_option("--beta", beta, "integer shape exponent")
      ->capture_default_str();

  CLI::App* ppi = app.add_subcommand(
      "ppi", "pairwise-interaction model on the sphere orthant");
  add_study_options(ppi, cfg, config_path);

  CLI::App* bingham =
      app.add_subcommand("bingham", "matrix Bingham study on the Stiefel manifold");
  add_study_options(bingham, cfg, config_path);

  CLI::App* curve = app.add_subcommand(
      "are-curve", "closed-form efficiency ratio against the shape exponent");
  curve->add_option("--beta-max", beta_max, "largest shape exponent")
      ->capture_default_str();
  curve->add_option("--out", cfg.out, "output CSV path (default: stdout)");

  CLI::App* trace = app.add_subcommand(
      "trace", "test functions on a grid with per-pair improved means");
  add_study_options(trace, cfg, config_path);
  trace->add_option("--beta", beta, "integer shape exponent")
      ->capture_default_str();

  CLI::App* summ = app.add_subcommand(
      "summarize", "median (min,max) across pairs from a results CSV");
  summ->add_option("input", in_path, "results CSV produced by a study")
      ->required();
  summ->add_option("--out", out_path, "output CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (!config_path.empty()) {
      for (CLI::App* sub : {gnormal, ppi, bingham, trace})
        if (sub->parsed()) apply_config_file(sub, config_path, cfg, beta);
    }
    cfg.beta = beta;
    if (gnormal->parsed()) {
      cfg.experiment = "gnormal";
      auto rows = run_gnormal(cfg);
      emit(result_csv(rows), cfg.out);
      return oracle_nan_exit(rows);
    }
    if (ppi->parsed()) {
      cfg.experiment = "ppi";
      auto rows = run_ppi(cfg);
      emit(result_csv(rows), cfg.out);
      return oracle_nan_exit(rows);
    }
    if (bingham->parsed()) {
      cfg.experiment = "bingham";
      auto rows = run_bingham(cfg);
      emit(result_csv(rows), cfg.out);
      return oracle_nan_exit(rows);
    }
    if (curve->parsed()) {
      emit(smom::are_curve_csv(beta_max), cfg.out);
      return 0;
    }
    if (trace->parsed()) {
      cfg.experiment = "trace";
      emit(smom::testfunction_trace_csv(cfg), cfg.out);
      return 0;
    }
    if (summ->parsed()) {
      std::ifstream in(in_path, std::ios::binary);
      if (!in) {
        std::fprintf(stderr, "cannot open %s\n", in_path.c_str());
        return kExitConfig;
      }
      std::ostringstream buf;
      buf << in.rdbuf();
      emit(smom::summarize_csv(smom::parse_result_csv(buf.str())), out_path);
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitConfig;
}

#include "smom/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <thread>
#include <tuple>

#include "smom/errors.hpp"
#include "smom/models.hpp"
#include "smom/moments.hpp"
#include "smom/vector_fields.hpp"
#include "smom/wasserstein.hpp"

namespace smom {
namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::uint64_t mix_one(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 12) + (h >> 3);
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ULL;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebULL;
  h ^= h >> 31;
  return h;
}

std::uint64_t mix(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t v : parts) h = mix_one(h, v);
  return h;
}

std::uint64_t tag(const char* s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (; *s; ++s) h = (h ^ static_cast<unsigned char>(*s)) * 0x100000001b3ULL;
  return h;
}

int worker_count() {
  if (const char* e = std::getenv("SMOM_WORKERS")) {
    char* end = nullptr;
    long w = std::strtol(e, &end, 10);
    if (end != e && w >= 1 && w <= 4096) return static_cast<int>(w);
  }
  unsigned h = std::thread::hardware_concurrency();
  return h ? static_cast<int>(h) : 1;
}

// Runs body(0..n-1) on the worker pool. Results must land in slots indexed
// by the loop counter so the output is byte-identical for any worker count.
// body must not throw.
void parallel_for(int n, const std::function<void(int)>& body) {
  const int w = std::min(worker_count(), std::max(n, 1));
  if (w <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  auto drain = [&] {
    for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
  };
  std::vector<std::thread> pool;
  pool.reserve(w - 1);
  for (int t = 1; t < w; ++t) pool.emplace_back(drain);
  drain();
  for (auto& th : pool) th.join();
}

std::string fmt(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

int effective_reps(const ExperimentConfig& cfg) {
  return cfg.full ? std::max(cfg.reps, 1000) : cfg.reps;
}

void validate(const ExperimentConfig& cfg, const std::vector<int>& n_list,
              const std::vector<int>& k_list) {
  if (cfg.reps < 1) throw InvalidShape("experiments: reps must be >= 1");
  if (cfg.pairs < 1) throw InvalidShape("experiments: pairs must be >= 1");
  if (cfg.mc < 2) throw InvalidShape("experiments: mc must be >= 2");
  if (cfg.beta < 1) throw InvalidShape("experiments: beta must be >= 1");
  for (int n : n_list)
    if (n < 2) throw InvalidShape("experiments: n must be >= 2");
  for (int k : k_list)
    if (k < 1) throw InvalidShape("experiments: K must be >= 1");
}

// One estimator outcome for one replication.
struct Cell {
  Vector theta;
  Vector are;
  bool ok = false;
};

struct Aggregate {
  Vector mse;   // per parameter; NaN when every replication failed
  Vector are;   // mean ARE estimate over replications that produced one
  int failures = 0;
};

Aggregate aggregate_cells(const std::vector<Cell>& cells, const Vector& truth) {
  const int d = static_cast<int>(truth.size());
  Aggregate out;
  out.mse = Vector::Constant(d, kNan);
  out.are = Vector::Constant(d, kNan);
  Vector sq = Vector::Zero(d), ar = Vector::Zero(d);
  int n_ok = 0, n_are = 0;
  for (const Cell& c : cells) {
    if (!c.ok) {
      ++out.failures;
      continue;
    }
    ++n_ok;
    sq += (c.theta - truth).array().square().matrix();
    if (c.are.size() == d) {
      ++n_are;
      ar += c.are;
    }
  }
  if (n_ok > 0) out.mse = sq / n_ok;
  if (n_are > 0) out.are = ar / n_are;
  return out;
}

using MleFn = std::function<EstimateRecord(const std::vector<Vector>&)>;

struct StudySpec {
  std::string name;
  ModelSpec model;
  Vector theta_star;
  std::vector<std::string> params;
  std::vector<int> default_n;
  std::vector<int> default_k;
  MleFn mle;  // closed-form benchmark, when the family has one
};

std::vector<ResultRow> run_study(const ExperimentConfig& cfg,
                                 const StudySpec& st) {
  const std::vector<int>& n_list =
      cfg.n_list.empty() ? st.default_n : cfg.n_list;
  const std::vector<int>& k_list =
      cfg.k_list.empty() ? st.default_k : cfg.k_list;
  validate(cfg, n_list, k_list);
  const int reps = effective_reps(cfg);
  const int pairs = cfg.pairs;
  const int d = st.model.param_dim;
  const std::uint64_t ms = cfg.master_seed;
  const std::uint64_t ex = tag(st.name.c_str());

  // The field pairs are fixed functions: one set of K network
  // initializations per pair id, identical across n, K and replications
  // (the K lists are nested prefixes of one sequence per pair).
  const int k_max = *std::max_element(k_list.begin(), k_list.end());
  std::vector<std::vector<VectorField>> pair_fields;
  pair_fields.reserve(pairs);
  for (int pair = 0; pair < pairs; ++pair) {
    std::vector<VectorField> fs;
    fs.reserve(k_max);
    for (int a = 0; a < k_max; ++a)
      fs.push_back(mlp_field(
          st.model.domain,
          {mix({ms, ex, tag("mlp"), static_cast<std::uint64_t>(pair)}),
           static_cast<std::uint64_t>(a)}));
    pair_fields.push_back(std::move(fs));
  }

  std::vector<ResultRow> rows;
  for (int n : n_list) {
    for (int k : k_list) {
      const std::uint64_t nn = static_cast<std::uint64_t>(n);
      const std::uint64_t kk = static_cast<std::uint64_t>(k);
      const std::uint64_t data_seed = mix({ms, ex, tag("data"), nn, kk});
      std::vector<std::vector<VectorField>> fields(pairs);
      std::vector<std::uint64_t> orc_seed(pairs), plg_seed(pairs);
      for (int pair = 0; pair < pairs; ++pair) {
        const std::uint64_t pp = static_cast<std::uint64_t>(pair);
        fields[pair].assign(pair_fields[pair].begin(),
                            pair_fields[pair].begin() + k);
        orc_seed[pair] = mix({ms, ex, tag("mc-oracle"), nn, kk, pp});
        plg_seed[pair] = mix({ms, ex, tag("mc-plugin"), nn, kk, pp});
      }

      std::vector<Cell> sm(reps), mle(reps);
      std::vector<std::vector<Cell>> orc(pairs, std::vector<Cell>(reps));
      std::vector<std::vector<Cell>> plg(pairs, std::vector<Cell>(reps));
      parallel_for(reps, [&](int rep) {
        const std::uint64_t rr = static_cast<std::uint64_t>(rep);
        std::vector<Vector> data;
        try {
          data = st.model.sample(st.theta_star, n, {data_seed, rr});
        } catch (const std::exception&) {
          return;  // every estimator fails this replication
        }
        try {
          sm[rep] = {score_matching(st.model, data).theta_hat, {}, true};
        } catch (const std::exception&) {
        }
        if (st.mle) {
          try {
            mle[rep] = {st.mle(data).theta_hat, {}, true};
          } catch (const std::exception&) {
          }
        }
        for (int pair = 0; pair < pairs; ++pair) {
          try {
            EstimateRecord r =
                improved_estimator(st.model, data, st.theta_star,
                                   fields[pair], cfg.mc, {orc_seed[pair], rr});
            orc[pair][rep] = {std::move(r.theta_hat), std::move(r.are), true};
          } catch (const std::exception&) {
          }
          if (!sm[rep].ok) continue;
          try {
            EstimateRecord r = improved_estimator(
                st.model, data, std::optional<Vector>(sm[rep].theta),
                fields[pair], cfg.mc, {plg_seed[pair], rr});
            plg[pair][rep] = {std::move(r.theta_hat), std::move(r.are), true};
          } catch (const std::exception&) {
          }
        }
      });

      const Aggregate ag_sm = aggregate_cells(sm, st.theta_star);
      auto push = [&](const std::string& est, int pair, const Aggregate& ag) {
        for (int j = 0; j < d; ++j) {
          ResultRow row;
          row.experiment = st.name;
          row.parameter = st.params[j];
          row.n = n;
          row.k = k;
          row.pair = pair;
          row.estimator = est;
          row.mse = ag.mse(j);
          row.ratio_vs_sm = est == "sm" ? (std::isfinite(ag.mse(j)) ? 1.0 : kNan)
                                        : ag.mse(j) / ag_sm.mse(j);
          row.are_estimate = ag.are(j);
          row.failures = ag.failures;
          rows.push_back(std::move(row));
        }
      };
      push("sm", -1, ag_sm);
      if (st.mle) push("mle", -1, aggregate_cells(mle, st.theta_star));
      for (int pair = 0; pair < pairs; ++pair) {
        push("improved_oracle", pair, aggregate_cells(orc[pair], st.theta_star));
        push("improved_plugin", pair, aggregate_cells(plg[pair], st.theta_star));
      }
    }
  }
  return rows;
}

}  // namespace

std::vector<ResultRow> run_gnormal(const ExperimentConfig& cfg) {
  StudySpec st;
  st.name = "gnormal";
  st.model = generalized_normal(cfg.beta);
  st.theta_star = Vector::Constant(1, gn_theta_star(cfg.beta));
  st.params = {"theta"};
  st.default_n = {10, 100, 1000};
  st.default_k = {1, 2, 4, 8};
  const int beta = cfg.beta;
  st.mle = [beta](const std::vector<Vector>& data) {
    return gn_mle(beta, data);
  };
  return run_study(cfg, st);
}

std::vector<ResultRow> run_ppi(const ExperimentConfig& cfg) {
  StudySpec st;
  st.name = "ppi";
  st.model = ppi_model(Vector::Constant(3, -0.5), 3);
  Matrix a = Matrix::Zero(3, 3);
  a(0, 0) = 1.0;
  a(1, 1) = 1.0;
  st.theta_star = ppi_pack(a, Vector::Zero(3));
  st.params = {"A11", "A22", "A12", "mu1", "mu2"};
  st.default_n = {100};
  st.default_k = {3, 6, 12, 24};
  return run_study(cfg, st);
}

std::vector<ResultRow> run_bingham(const ExperimentConfig& cfg) {
  StudySpec st;
  st.name = "bingham";
  st.model = matrix_bingham(3, 2);
  Matrix a = Matrix::Zero(3, 3);
  a(0, 0) = 1.0;
  a(1, 1) = 1.0;
  st.theta_star = bingham_pack(a);
  st.params = {"A11", "A22", "A12", "A13", "A23"};
  st.default_n = {100};
  st.default_k = {3, 6, 12, 24};
  return run_study(cfg, st);
}

std::string result_csv(std::vector<ResultRow> rows) {
  std::sort(rows.begin(), rows.end(),
            [](const ResultRow& a, const ResultRow& b) {
              return std::tie(a.experiment, a.n, a.k, a.pair, a.estimator,
                              a.parameter) < std::tie(b.experiment, b.n, b.k,
                                                      b.pair, b.estimator,
                                                      b.parameter);
            });
  std::string out =
      "experiment,parameter,n,K,pair,estimator,mse,ratio_vs_sm,are_estimate,"
      "failures\n";
  for (const ResultRow& r : rows) {
    out += r.experiment + ',' + r.parameter + ',' + std::to_string(r.n) + ',' +
           std::to_string(r.k) + ',' + std::to_string(r.pair) + ',' +
           r.estimator + ',' + fmt(r.mse) + ',' + fmt(r.ratio_vs_sm) + ',' +
           fmt(r.are_estimate) + ',' + std::to_string(r.failures) + '\n';
  }
  return out;
}

std::vector<ResultRow> parse_result_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) ||
      line !=
          "experiment,parameter,n,K,pair,estimator,mse,ratio_vs_sm,"
          "are_estimate,failures")
    throw InvalidShape("parse_result_csv: bad header");
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        f.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    f.push_back(cur);
    if (f.size() != 10) throw InvalidShape("parse_result_csv: bad row");
    ResultRow r;
    r.experiment = f[0];
    r.parameter = f[1];
    r.n = std::stoi(f[2]);
    r.k = std::stoi(f[3]);
    r.pair = std::stoi(f[4]);
    r.estimator = f[5];
    r.mse = std::strtod(f[6].c_str(), nullptr);
    r.ratio_vs_sm = std::strtod(f[7].c_str(), nullptr);
    r.are_estimate = std::strtod(f[8].c_str(), nullptr);
    r.failures = std::stoi(f[9]);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidShape("write_text: cannot open " + path);
  out << text;
}

std::string summarize_csv(const std::vector<ResultRow>& rows) {
  auto figure = [](double v) -> std::string {
    if (!std::isfinite(v) || v > 100.0) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
  };
  using Key = std::tuple<std::string, int, int, std::string, std::string>;
  std::vector<std::pair<Key, std::vector<double>>> groups;
  auto slot = [&](const Key& key) -> std::vector<double>& {
    for (auto& g : groups)
      if (g.first == key) return g.second;
    groups.push_back({key, {}});
    return groups.back().second;
  };
  for (const ResultRow& r : rows) {
    auto& vals =
        slot({r.experiment, r.n, r.k, r.estimator, r.parameter});
    if (std::isfinite(r.ratio_vs_sm)) vals.push_back(r.ratio_vs_sm);
  }
  std::sort(groups.begin(), groups.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::string out = "experiment,parameter,n,K,estimator,median,min,max\n";
  for (auto& g : groups) {
    auto& v = g.second;
    std::string med = "-", lo = "-", hi = "-";
    if (!v.empty()) {
      std::sort(v.begin(), v.end());
      const size_t m = v.size();
      const double median =
          m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
      med = figure(median);
      lo = figure(v.front());
      hi = figure(v.back());
    }
    out += std::get<0>(g.first) + ',' + std::get<4>(g.first) + ',' +
           std::to_string(std::get<1>(g.first)) + ',' +
           std::to_string(std::get<2>(g.first)) + ',' +
           std::get<3>(g.first) + ',' + med + ',' + lo + ',' + hi + '\n';
  }
  return out;
}

std::string are_curve_csv(int beta_max) {
  if (beta_max < 1) throw InvalidShape("are_curve_csv: beta_max must be >= 1");
  std::string out = "beta,are,limit\n";
  for (int beta = 1; beta <= beta_max; ++beta)
    out += std::to_string(beta) + ',' + fmt(are_closed_form(beta)) + ',' +
           fmt(1.0 / 3.0) + '\n';
  return out;
}

std::string testfunction_trace_csv(const ExperimentConfig& cfg) {
  const int n = cfg.n_list.empty() ? 1000 : cfg.n_list.front();
  const int k = cfg.k_list.empty() ? 1 : cfg.k_list.front();
  validate(cfg, {n}, {k});
  const int reps = effective_reps(cfg);
  const int pairs = cfg.pairs;
  const int beta = cfg.beta;
  const std::uint64_t ms = cfg.master_seed;
  const std::uint64_t ex = tag("trace");

  ModelSpec model = generalized_normal(beta);
  const Vector theta_star = Vector::Constant(1, gn_theta_star(beta));

  std::vector<double> grid;
  for (int i = 0; i <= 120; ++i) grid.push_back(-3.0 + 0.05 * i);
  const int gn = static_cast<int>(grid.size());

  std::vector<std::vector<VectorField>> fields(pairs);
  for (int pair = 0; pair < pairs; ++pair)
    for (int a = 0; a < k; ++a)
      fields[pair].push_back(mlp_field(
          model.domain,
          {mix({ms, ex, tag("mlp"), static_cast<std::uint64_t>(pair)}),
           static_cast<std::uint64_t>(a)}));

  const std::uint64_t data_seed =
      mix({ms, ex, tag("data"), static_cast<std::uint64_t>(n),
           static_cast<std::uint64_t>(k)});

  // values[rep][pair * gn + i]; NaN marks a replication whose improved
  // field could not be formed (it is skipped in the average).
  std::vector<std::vector<double>> values(
      reps, std::vector<double>(static_cast<size_t>(pairs) * gn, kNan));
  parallel_for(reps, [&](int rep) {
    const std::uint64_t rr = static_cast<std::uint64_t>(rep);
    std::vector<Vector> data;
    Vector th0;
    try {
      data = model.sample(theta_star, n, {data_seed, rr});
      th0 = score_matching(model, data).theta_hat;
    } catch (const std::exception&) {
      return;
    }
    for (int pair = 0; pair < pairs; ++pair) {
      const std::uint64_t pp = static_cast<std::uint64_t>(pair);
      try {
        MomentEstimate me = estimate_moments(
            model, th0, fields[pair], cfg.mc,
            {mix({ms, ex, tag("mc"), static_cast<std::uint64_t>(n),
                  static_cast<std::uint64_t>(k), pp}),
             rr});
        VectorField f = improved_fields(me)[0];
        for (int i = 0; i < gn; ++i)
          values[rep][static_cast<size_t>(pair) * gn + i] =
              f(Vector::Constant(1, grid[i]))(0);
      } catch (const std::exception&) {
      }
    }
  });

  std::string out = "x,f_sm,f_mle";
  for (int pair = 0; pair < pairs; ++pair)
    out += ",improved_p" + std::to_string(pair);
  out += '\n';
  for (int i = 0; i < gn; ++i) {
    const double x = grid[i];
    out += fmt(x) + ',' + fmt(-2.0 * beta * std::pow(x, 2 * beta - 1)) + ',' +
           fmt(x);
    for (int pair = 0; pair < pairs; ++pair) {
      double sum = 0;
      int cnt = 0;
      for (int rep = 0; rep < reps; ++rep) {
        const double v = values[rep][static_cast<size_t>(pair) * gn + i];
        if (std::isfinite(v)) {
          sum += v;
          ++cnt;
        }
      }
      out += ',' + fmt(cnt > 0 ? sum / cnt : kNan);
    }
    out += '\n';
  }
  return out;
}

}  // namespace smom

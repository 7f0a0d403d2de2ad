// Command-line front end: dataset generation, solving, value estimation,
// property verification, and simulator benchmarks. Reports are JSON
// (schema "mpc-kclust/1"); exit codes: 0 ok, 1 verification failure,
// 2 usage error, 3 capacity error.

#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <cmath>
#include <sstream>
#include <iostream>
#include <map>
#include <json.hpp>

#include "mpclust/mpclust.hpp"

namespace {

using namespace mpclust;
using nlohmann::json;

double wall_seconds(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Dataset load_dataset(const std::string& path) {
  if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path);
    json j;
    in >> j;
    Dataset d;
    for (const auto& row : j) {
      std::vector<double> p = row.get<std::vector<double>>();
      d.push_back(p);
    }
    return d;
  }
  return load_csv(path);
}

void emit(const json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream out(out_path);
    if (!out) throw io_error("cannot open " + out_path);
    out << j.dump(2) << "\n";
  }
}

int cmd_gen(const std::string& kind, std::size_t n, int dim, int planted, std::uint64_t seed,
            const std::string& out) {
  Dataset d;
  if (kind == "line")
    d = gen_line(n);
  else if (kind == "grid")
    d = gen_grid(n, dim);
  else if (kind == "uniform-cube")
    d = gen_uniform_cube(n, dim, seed);
  else if (kind == "gaussian-mixture")
    d = gen_gaussian_mixture(n, dim, planted, seed);
  else
    throw parameter_error("unknown dataset kind: " + kind);
  save_csv(d, out);
  return 0;
}

json run_solve(const Dataset& data, const DistanceOracle* matrix_oracle, std::size_t k, int z,
               double gamma, const std::string& backend_kind, std::size_t mpc_s,
               std::uint64_t seed) {
  auto t0 = std::chrono::steady_clock::now();
  json rep;
  rep["schema"] = "mpc-kclust/1";
  rep["params"] = {{"k", k}, {"z", z}, {"gamma", gamma}, {"backend", backend_kind},
                   {"seed", seed}};
  DistanceOracle oracle = matrix_oracle ? *matrix_oracle : DistanceOracle::euclidean(data, z);
  rep["n"] = oracle.size();
  if (mpc_s > 0) {
    if (matrix_oracle)
      throw parameter_error("the simulator takes coordinate datasets, not distance matrices");
    MpcConfig cfg;
    cfg.s = mpc_s;
    cfg.seed = seed;
    auto res = distributed_solve_kz(data, k, z, gamma, cfg, seed);
    rep["centers"] = res.solve.centers;
    rep["cost"] = res.solve.cost;
    rep["stats"] = to_json(res.stats);
  } else {
    PrimitiveBackend backend = PrimitiveBackend::exact(gamma);
    if (backend_kind == "cost-modeled")
      backend = PrimitiveBackend::cost_modeled(gamma, oracle.size(), 0, nullptr);
    SolveResult res = solve_kz(oracle, k, gamma, backend, seed);
    rep["centers"] = res.centers;
    rep["cost"] = res.cost;
    rep["sweep"] = to_json(res.sweep);
  }
  // Oracle ratio at desk scale.
  if (oracle.size() <= 12) {
    OracleResult opt = brute_opt_integral(oracle, k);
    rep["oracle_opt"] = opt.value;
    if (opt.value > 0.0) rep["ratio"] = rep["cost"].get<double>() / opt.value;
  }
  rep["wall_seconds"] = wall_seconds(t0);
  return rep;
}

json run_value(const Dataset& data, std::size_t k, int z, double gamma, double alpha_scale,
               std::uint64_t seed) {
  auto t0 = std::chrono::steady_clock::now();
  DistanceOracle oracle = DistanceOracle::euclidean(data, z);
  PrimitiveBackend backend = PrimitiveBackend::exact(gamma);
  ValueEstimate est = estimate_opt_value(oracle, k, gamma, backend, seed, alpha_scale);
  json rep = to_json(est);
  rep["schema"] = "mpc-kclust/1";
  if (data.size() <= 12) {
    OracleResult opt = brute_opt_integral(oracle, k);
    rep["oracle_opt"] = opt.value;
    if (opt.value > 0.0) rep["ratio"] = est.eta / opt.value;
  }
  rep["wall_seconds"] = wall_seconds(t0);
  return rep;
}

// Seeded instance battery over the exactly-assertable structural inequalities.
int cmd_verify(int instances, std::uint64_t seed, const std::string& out) {
  struct Row {
    bool pass = true;
    double worst_slack = std::numeric_limits<double>::infinity();
    int failures = 0;
  };
  std::map<std::string, Row> table;
  for (int inst = 0; inst < instances; ++inst) {
    std::uint64_t s = hash_combine(seed, inst);
    std::size_t n = 2 + s % 12;
    int z = 1 + static_cast<int>(s % 3);
    Dataset d = gen_uniform_cube(n, 2, s);
    auto norm = normalize_dataset(d);
    DistanceOracle oracle = DistanceOracle::euclidean(norm.data, z);
    SolverParams params{z, 1.0 + static_cast<double>(s % 5), 0.125, 1.0};
    std::vector<double> scales{1.0 / 16.0, 1.0 / 8.0, DerivedConstants::beta_star(z)};
    PropertyReport rep = check_structural_properties(oracle, params, scales);
    for (const auto& c : rep.checks) {
      Row& row = table[c.name];
      row.worst_slack = std::min(row.worst_slack, c.worst_slack);
      if (!c.pass) {
        row.pass = false;
        ++row.failures;
      }
    }
  }
  bool all_pass = true;
  json checks = json::array();
  for (const auto& [name, row] : table) {
    all_pass = all_pass && row.pass;
    checks.push_back({{"check", name},
                      {"pass", row.pass},
                      {"failures", row.failures},
                      {"worst_slack", row.worst_slack}});
  }
  emit(json{{"schema", "mpc-kclust/1"},
            {"instances", instances},
            {"checks", checks},
            {"pass", all_pass}},
       out);
  return all_pass ? 0 : 1;
}

int cmd_bench(const std::vector<std::size_t>& ns, const std::vector<std::size_t>& ss,
              const std::string& op, std::uint64_t seed, const std::string& format,
              const std::string& out) {
  json rows = json::array();
  for (std::size_t n : ns)
    for (std::size_t s : ss) {
      MpcConfig cfg;
      cfg.s = s;
      cfg.seed = seed;
      json row{{"n", n}, {"s", s}, {"op", op}};
      double log_s_n = std::max(
          1.0, std::ceil(std::log(static_cast<double>(n)) / std::log(static_cast<double>(s))));
      if (op == "sort") {
        Rng rng(hash_combine(seed, n * 1315423911ULL + s));
        std::vector<double> items(n);
        for (double& v : items) v = rng.next_u01();
        auto [sorted, stats] = mpc_sort_values(items, cfg);
        row["rounds"] = stats.rounds();
        row["c_log_s"] = static_cast<double>(stats.rounds()) / log_s_n;
        row["peak_local"] = stats.peak_local;
        row["total_memory"] = stats.total_memory();
      } else if (op == "solve") {
        Dataset d = gen_uniform_cube(n, 2, hash_combine(seed, n));
        auto res = distributed_solve_kz(d, 3, 1, 8.0, cfg, seed);
        row["rounds"] = res.stats.rounds();
        row["c_log_s"] = static_cast<double>(res.stats.rounds()) / log_s_n;
        row["supersteps"] = res.stats.supersteps;
        row["peak_local"] = res.stats.peak_local;
        row["total_memory"] = res.stats.total_memory();
      } else {
        throw parameter_error("unknown bench op: " + op);
      }
      rows.push_back(row);
    }
  if (format == "csv") {
    std::ostringstream csv;
    csv << "n,s,op,rounds,peak_local,total_memory\n";
    for (const auto& row : rows)
      csv << row["n"] << ',' << row["s"] << ',' << row["op"].get<std::string>() << ','
          << row["rounds"] << ',' << row["peak_local"] << ',' << row["total_memory"] << '\n';
    if (out.empty()) {
      std::cout << csv.str();
    } else {
      std::ofstream f(out);
      if (!f) throw io_error("cannot open " + out);
      f << csv.str();
    }
    return 0;
  }
  emit(json{{"schema", "mpc-kclust/1"}, {"grid", rows}}, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fractional Mettu-Plaxton (k,z)-clustering toolkit"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a dataset CSV");
  std::string gen_kind = "uniform-cube", gen_out = "data.csv";
  std::size_t gen_n = 100;
  int gen_d = 2, gen_planted = 3;
  std::uint64_t gen_seed = 1;
  gen->add_option("--kind", gen_kind, "uniform-cube|gaussian-mixture|line|grid");
  gen->add_option("--n", gen_n);
  gen->add_option("--d", gen_d);
  gen->add_option("--planted", gen_planted, "planted clusters (gaussian-mixture)");
  gen->add_option("--seed", gen_seed);
  gen->add_option("--out", gen_out)->required();

  // shared solve/value flags
  std::string data_path, matrix_path, out_path;
  std::size_t k = 2;
  int z = 1;
  double gamma = 8.0, alpha_scale = 0.0;
  std::string backend_kind = "exact";
  std::size_t mpc_s = 0;
  std::uint64_t seed = 1;

  auto add_common = [&](CLI::App* c) {
    c->add_option("--data", data_path, "points as CSV rows or a JSON array of arrays");
    c->add_option("--matrix", matrix_path, "square CSV of pairwise distances");
    c->add_option("--k", k);
    c->add_option("--z", z);
    c->add_option("--gamma", gamma);
    c->add_option("--backend", backend_kind, "exact|cost-modeled");
    c->add_option("--seed", seed);
    c->add_option("--out", out_path, "write the JSON report to a file");
  };
  auto* solve = app.add_subcommand("solve", "compute a center set");
  add_common(solve);
  solve->add_option("--mpc-s", mpc_s, "run under the BSP simulator with this local memory");
  auto* value = app.add_subcommand("value", "estimate the optimal value");
  add_common(value);
  value->add_option("--alpha-scale", alpha_scale);

  // verify
  auto* verify = app.add_subcommand("verify", "run the structural-inequality battery");
  int verify_instances = 50;
  std::uint64_t verify_seed = 7;
  std::string verify_out;
  verify->add_option("--instances", verify_instances);
  verify->add_option("--seed", verify_seed);
  verify->add_option("--out", verify_out);

  // bench
  auto* bench = app.add_subcommand("bench", "simulator round/memory grid");
  std::vector<std::size_t> bench_n{1024, 4096}, bench_s{64, 256};
  std::string bench_op = "sort", bench_out, bench_format = "json";
  std::uint64_t bench_seed = 1;
  bench->add_option("--n", bench_n);
  bench->add_option("--s", bench_s);
  bench->add_option("--op", bench_op, "sort|solve");
  bench->add_option("--seed", bench_seed);
  bench->add_option("--format", bench_format, "json|csv");
  bench->add_option("--out", bench_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) return cmd_gen(gen_kind, gen_n, gen_d, gen_planted, gen_seed, gen_out);
    if (*solve) {
      if (!matrix_path.empty()) {
        std::size_t mn = 0;
        auto m = load_matrix_csv(matrix_path, mn);
        auto oracle = DistanceOracle::matrix(std::move(m), mn, z);
        if (k > oracle.size()) throw parameter_error("k exceeds the number of points");
        emit(run_solve(Dataset{}, &oracle, k, z, gamma, backend_kind, mpc_s, seed), out_path);
        return 0;
      }
      if (data_path.empty()) throw parameter_error("solve needs --data or --matrix");
      Dataset d = load_dataset(data_path);
      if (k > d.size()) throw parameter_error("k exceeds the number of points");
      emit(run_solve(d, nullptr, k, z, gamma, backend_kind, mpc_s, seed), out_path);
      return 0;
    }
    if (*value) {
      if (data_path.empty()) throw parameter_error("value needs --data");
      Dataset d = load_dataset(data_path);
      if (k > d.size()) throw parameter_error("k exceeds the number of points");
      emit(run_value(d, k, z, gamma, alpha_scale, seed), out_path);
      return 0;
    }
    if (*verify) return cmd_verify(verify_instances, verify_seed, verify_out);
    if (*bench) return cmd_bench(bench_n, bench_s, bench_op, bench_seed, bench_format, bench_out);
  } catch (const capacity_error& e) {
    std::cerr << "capacity error: " << e.what() << "\n";
    return 3;
  } catch (const guard_error& e) {
    std::cerr << "guard error: " << e.what() << "\n";
    return 3;
  } catch (const error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "swald/swald.hpp"

namespace {

using swald::json;

struct ErrorClass {
  const char* label;
  int exit_code;
};

// exit 2: malformed input or configuration; exit 3: numerical failure
ErrorClass classify_error(const swald::Error& e) {
  if (dynamic_cast<const swald::ConfigError*>(&e)) return {"ConfigError", 2};
  if (dynamic_cast<const swald::DimensionMismatchError*>(&e)) return {"DimensionMismatch", 2};
  if (dynamic_cast<const swald::NonFiniteInputError*>(&e)) return {"NonFiniteInput", 2};
  if (dynamic_cast<const swald::TooFewRowsError*>(&e)) return {"TooFewRows", 2};
  if (dynamic_cast<const swald::TooManyHypothesesError*>(&e)) return {"TooManyHypotheses", 2};
  if (dynamic_cast<const swald::EmptySubsetError*>(&e)) return {"EmptySubset", 2};
  if (dynamic_cast<const swald::EmptyExperimentError*>(&e)) return {"EmptyExperiment", 2};
  if (dynamic_cast<const swald::EmptyArmError*>(&e)) return {"EmptyArm", 3};
  if (dynamic_cast<const swald::NoSurvivorsError*>(&e)) return {"NoSurvivors", 3};
  if (dynamic_cast<const swald::NotPsdError*>(&e)) return {"NotPSD", 3};
  if (dynamic_cast<const swald::SingularError*>(&e)) return {"Singular", 3};
  if (dynamic_cast<const swald::ZeroVarianceError*>(&e)) return {"ZeroVariance", 3};
  if (dynamic_cast<const swald::ZeroNormalError*>(&e)) return {"ZeroNormal", 3};
  if (dynamic_cast<const swald::NoConvergenceError*>(&e)) return {"NoConvergence", 3};
  if (dynamic_cast<const swald::DegenerateCorrelationError*>(&e))
    return {"DegenerateCorrelation", 3};
  if (dynamic_cast<const swald::EmptySampleError*>(&e)) return {"EmptySample", 3};
  if (dynamic_cast<const swald::NullAlternativeError*>(&e)) return {"NullAlternative", 3};
  return {"Error", 3};
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw swald::ConfigError("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw swald::ConfigError("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

Eigen::VectorXd parse_vector(const std::string& csv) {
  std::vector<double> vals;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      vals.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw swald::ConfigError("expected a comma-separated number list, got '" + csv + "'");
    }
  }
  if (vals.empty()) throw swald::ConfigError("empty number list");
  Eigen::VectorXd v(Eigen::Index(vals.size()));
  for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = vals[std::size_t(k)];
  return v;
}

std::vector<double> parse_list(const std::string& csv) {
  const Eigen::VectorXd v = parse_vector(csv);
  return std::vector<double>(v.data(), v.data() + v.size());
}

struct CommonOpts {
  std::string input_path;
  std::string influence_path;
  std::string theta_csv;
  std::string deltas_csv, weights_csv;
  double alpha = -1.0;
  long draws = -1;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool json_out = false;
  bool conservative = false;
};

void add_common(CLI::App* cmd, CommonOpts& opt) {
  auto* input = cmd->add_option("--input", opt.input_path,
                                "JSON estimate fixture (n, theta_hat, covariance, ...)");
  auto* infl = cmd->add_option("--influence", opt.influence_path,
                               "influence CSV (header row, one row per subject)");
  input->excludes(infl);
  cmd->add_option("--theta", opt.theta_csv,
                  "estimates (comma list), required with --influence");
  cmd->add_option("--deltas", opt.deltas_csv, "null margins, comma list");
  cmd->add_option("--weights", opt.weights_csv, "hypothesis weights, comma list");
  cmd->add_option("--alpha", opt.alpha, "significance level");
  cmd->add_option("--draws", opt.draws, "Monte-Carlo draws");
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&opt](const std::uint64_t& s) { opt.seed = s; }, "Monte-Carlo seed");
  cmd->add_option("--threads", opt.threads, "worker threads (0 = all cores)");
  cmd->add_flag("--json", opt.json_out, "machine-readable output only");
  cmd->add_flag("--conservative", opt.conservative,
                "use the (1+count)/(1+B) p-value estimate");
}

swald::AnalysisInput build_input(const CommonOpts& opt) {
  std::optional<swald::AnalysisInput> input;
  if (!opt.input_path.empty()) {
    input = swald::analysis_input_from_json(load_json_file(opt.input_path));
  } else if (!opt.influence_path.empty()) {
    if (opt.theta_csv.empty())
      throw swald::ConfigError("--influence requires --theta (influence rows are mean zero)");
    std::ifstream in(opt.influence_path);
    if (!in) throw swald::ConfigError("cannot open file: " + opt.influence_path);
    auto [infl, names] = swald::influence_from_csv(in);
    const Eigen::VectorXd theta = parse_vector(opt.theta_csv);
    if (theta.size() != infl.cols())
      throw swald::ConfigError("--theta length disagrees with the influence CSV");
    swald::EstimateSet est(infl.rows(), theta, swald::stack_covariance(infl), infl, names);
    const Eigen::Index dim = est.size();
    input = swald::AnalysisInput{std::move(est),
                                 Eigen::VectorXd::Zero(dim),
                                 Eigen::VectorXd::Constant(dim, 1.0 / double(dim)),
                                 0.025,
                                 10000,
                                 std::nullopt,
                                 Eigen::MatrixXd(),
                                 "asymptotic"};
    input->covariance = input->est.sigma_hat().mat();
  } else {
    throw swald::ConfigError("one of --input or --influence is required");
  }
  if (!opt.deltas_csv.empty()) input->deltas = parse_vector(opt.deltas_csv);
  if (!opt.weights_csv.empty()) input->weights = parse_vector(opt.weights_csv);
  if (opt.alpha > 0.0) input->alpha = opt.alpha;
  if (opt.draws > 0) input->draws = opt.draws;
  if (opt.seed) input->seed = opt.seed;
  if (input->deltas.size() != input->est.size() ||
      input->weights.size() != input->est.size())
    throw swald::ConfigError("deltas/weights length disagrees with theta_hat");
  return std::move(*input);
}

std::uint64_t require_seed(const swald::AnalysisInput& input) {
  if (!input.seed)
    throw swald::ConfigError("a seed is required for Monte-Carlo paths (use --seed)");
  return *input.seed;
}

std::string fmt(const char* spec, double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, x);
  return buf;
}

std::string vector_line(const Eigen::VectorXd& v, const char* spec = "%.4g") {
  std::string out = "[";
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (k) out += ", ";
    out += fmt(spec, v[k]);
  }
  return out + "]";
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw swald::ConfigError("cannot write file: " + out_path);
  out << text;
}

int cmd_test(const CommonOpts& opt, const std::string& method) {
  const swald::AnalysisInput input = build_input(opt);
  const swald::HypothesisSpec spec(input.deltas, input.weights, input.alpha);
  swald::TestResult res;
  if (method == "sw") {
    const swald::McConfig mc(input.draws, require_seed(input));
    res = swald::sw_test(input.est, spec, mc, opt.conservative, opt.threads);
  } else if (method == "minp") {
    std::optional<swald::McConfig> mc;
    if (input.est.size() > 1) mc.emplace(input.draws, require_seed(input));
    res = swald::minp_test(input.est, spec, mc, swald::MinpMode::joint, opt.threads);
  } else if (method == "bonferroni") {
    res = swald::minp_test(input.est, spec, std::nullopt, swald::MinpMode::bonferroni,
                           opt.threads);
  } else {
    throw swald::ConfigError("unknown method '" + method + "'");
  }

  if (opt.json_out) {
    json j = swald::analysis_echo_json(input);
    j.update(swald::test_result_to_json(res));
    j["input_method"] = method;
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  const bool is_sw = method == "sw";
  std::cout << "\n\t" << (is_sw ? "Signed Wald Intersection Test" : "Min-p Intersection Test")
            << "\n\n";
  std::cout << "n = " << input.est.n() << "\n";
  std::cout << "Intersection null hypothesis: theta =< " << vector_line(input.deltas) << "\n";
  if (is_sw) std::cout << "w = " << vector_line(input.weights, "%.2f") << "\n";
  std::cout << (is_sw ? "Q = " : "min p = ") << fmt("%.5f", res.statistic)
            << ", p-value = " << fmt("%.4f", res.p_value) << "\n";
  if (res.mc)
    std::cout << "Monte Carlo: B = " << res.mc->draws << ", seed = " << res.mc->seed
              << ", std. error = " << fmt("%.4f", *res.mc_std_error) << "\n";
  return 0;
}

int cmd_closed(const CommonOpts& opt, const std::string& method) {
  const swald::AnalysisInput input = build_input(opt);
  swald::ClosureMethod m;
  if (method == "sw")
    m = swald::ClosureMethod::sw;
  else if (method == "minp")
    m = swald::ClosureMethod::minp;
  else
    throw swald::ConfigError("unknown method '" + method + "'");
  const swald::McConfig mc(input.draws, require_seed(input));
  const swald::ClosedTestReport report = swald::closed_testing(
      input.est, input.deltas, input.weights, input.alpha, mc, m, opt.threads);
  if (opt.json_out) {
    json j = swald::analysis_echo_json(input);
    j["closed_testing"] = swald::report_to_json(report);
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  std::cout << swald::report_table(report);
  return 0;
}

swald::ScenarioConfig scenario_from_json(const json& j, const swald::ScenarioConfig& base) {
  swald::ScenarioConfig cfg = base;
  if (j.contains("n")) cfg.n = j["n"].get<long>();
  if (j.contains("mu")) cfg.mu = j["mu"].get<double>();
  if (j.contains("sigma")) cfg.sigma = j["sigma"].get<double>();
  if (j.contains("lambda")) cfg.lambda = j["lambda"].get<double>();
  if (j.contains("tau")) cfg.tau = j["tau"].get<double>();
  if (j.contains("gamma")) cfg.gamma = j["gamma"].get<double>();
  if (j.contains("trt_hazard")) cfg.trt_hazard = j["trt_hazard"].get<double>();
  if (j.contains("trt_score")) cfg.trt_score = j["trt_score"].get<double>();
  if (j.contains("weights"))
    cfg.weights = swald::detail::vector_from_json(j["weights"], "weights");
  return cfg;
}

swald::ScenarioConfig default_null_scenario() {
  swald::ScenarioConfig cfg;
  cfg.n = 500;
  cfg.mu = 40.0;
  cfg.sigma = 15.0;
  cfg.lambda = 0.05;
  cfg.tau = 2.0;
  cfg.gamma = 15.0;
  cfg.trt_hazard = 0.0;
  cfg.trt_score = 0.0;
  cfg.weights = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
  return cfg;
}

swald::ScenarioConfig default_alternative_scenario() {
  swald::ScenarioConfig cfg = default_null_scenario();
  cfg.lambda = 0.07;
  cfg.trt_hazard = -0.018;
  cfg.trt_score = 2.7;
  return cfg;
}

int cmd_simulate(int study, const std::string& scale, const std::string& config_path,
                 std::optional<std::uint64_t> seed, int threads,
                 const std::string& out_path) {
  if (scale != "desk" && scale != "paper")
    throw swald::ConfigError("--scale must be desk or paper");
  const bool paper = scale == "paper";
  json cfg = json::object();
  if (!config_path.empty()) cfg = load_json_file(config_path);
  if (cfg.contains("seed") && !seed) seed = cfg["seed"].get<std::uint64_t>();
  if (!seed) throw swald::ConfigError("a seed is required for simulations (use --seed)");
  const double alpha = cfg.contains("alpha") ? cfg["alpha"].get<double>() : 0.025;

  swald::StudyResultTable table;
  if (study == 1) {
    swald::Study1Config s1;
    s1.alpha = alpha;
    s1.replications = paper ? 100000 : 10000;
    if (cfg.contains("replications")) s1.replications = cfg["replications"].get<long>();
    if (cfg.contains("study1")) {
      const json& j1 = cfg["study1"];
      if (j1.contains("rho_grid")) s1.rho_grid = j1["rho_grid"].get<std::vector<double>>();
      if (j1.contains("s_grid")) s1.s_grid = j1["s_grid"].get<std::vector<double>>();
      if (j1.contains("target_power")) s1.target_power = j1["target_power"].get<double>();
    }
    s1.seed = *seed;
    table = swald::run_study1(s1, threads);
  } else if (study == 2) {
    long reps = paper ? 10000 : 2000;
    long draws = paper ? 10000 : 2000;
    if (cfg.contains("replications")) reps = cfg["replications"].get<long>();
    if (cfg.contains("draws")) draws = cfg["draws"].get<long>();
    std::vector<long> n_grid = paper ? std::vector<long>{200, 500, 1000, 2000, 3500}
                                     : std::vector<long>{200, 500, 1000};
    std::vector<double> mu_grid = {40.0, 45.0};
    std::vector<double> lambda_grid = {0.05, 0.08};
    swald::ScenarioConfig base = default_null_scenario();
    if (cfg.contains("scenario")) base = scenario_from_json(cfg["scenario"], base);
    if (cfg.contains("study2")) {
      const json& j2 = cfg["study2"];
      if (j2.contains("n_grid")) n_grid = j2["n_grid"].get<std::vector<long>>();
      if (j2.contains("mu_grid")) mu_grid = j2["mu_grid"].get<std::vector<double>>();
      if (j2.contains("lambda_grid"))
        lambda_grid = j2["lambda_grid"].get<std::vector<double>>();
    }
    std::vector<swald::ScenarioConfig> scenarios;
    for (long n : n_grid)
      for (double mu : mu_grid)
        for (double lambda : lambda_grid) {
          swald::ScenarioConfig c = base;
          c.n = n;
          c.mu = mu;
          c.lambda = lambda;
          scenarios.push_back(c);
        }
    const Eigen::VectorXd w_equal = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
    Eigen::VectorXd w_up(3);
    w_up << 0.2, 0.4, 0.4;
    table = swald::run_study2(scenarios, {w_equal, w_up}, reps, draws, alpha, *seed, threads);
  } else if (study == 3) {
    long reps = paper ? 10000 : 1000;
    long draws = paper ? 10000 : 2000;
    if (cfg.contains("replications")) reps = cfg["replications"].get<long>();
    if (cfg.contains("draws")) draws = cfg["draws"].get<long>();
    std::vector<long> n_grid = {200, 500, 1000, 2000, 3500};
    std::vector<swald::Strategy> strategies = {swald::Strategy::sw_equal,
                                               swald::Strategy::sw_weighted,
                                               swald::Strategy::minp};
    swald::ScenarioConfig base = default_alternative_scenario();
    if (cfg.contains("scenario")) base = scenario_from_json(cfg["scenario"], base);
    if (cfg.contains("study3")) {
      const json& j3 = cfg["study3"];
      if (j3.contains("n_grid")) n_grid = j3["n_grid"].get<std::vector<long>>();
      if (j3.contains("strategies")) {
        strategies.clear();
        for (const auto& s : j3["strategies"]) {
          const std::string name = s.get<std::string>();
          if (name == "sw_equal")
            strategies.push_back(swald::Strategy::sw_equal);
          else if (name == "sw_weighted")
            strategies.push_back(swald::Strategy::sw_weighted);
          else if (name == "minp")
            strategies.push_back(swald::Strategy::minp);
          else
            throw swald::ConfigError("unknown strategy '" + name + "'");
        }
      }
    }
    table = swald::run_study3(base, n_grid, strategies, reps, draws, alpha, *seed, threads);
  } else {
    throw swald::ConfigError("--study must be 1, 2, or 3");
  }
  emit(table.csv(), out_path);
  return 0;
}

int cmd_bahadur(const std::string& rho_csv, const std::string& s_csv, double z_max,
                const std::string& out_path) {
  std::vector<double> rho_grid = {-0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75};
  std::vector<double> s_grid;
  for (int k = 0; k <= 40; ++k) s_grid.push_back(-1.0 + 0.05 * k);
  if (!rho_csv.empty()) rho_grid = parse_list(rho_csv);
  if (!s_csv.empty()) s_grid = parse_list(s_csv);
  emit(swald::bahadur_grid(rho_grid, s_grid, z_max).csv(), out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted signed Wald intersection tests for one-sided hypotheses"};
  app.require_subcommand(1);

  CommonOpts test_opts, closed_opts;
  std::string test_method = "sw", closed_method = "sw";
  CLI::App* test_cmd = app.add_subcommand("test", "run one intersection test");
  add_common(test_cmd, test_opts);
  test_cmd->add_option("--method", test_method, "sw | minp | bonferroni");

  CLI::App* closed_cmd = app.add_subcommand("closed", "closed testing over all subsets");
  add_common(closed_cmd, closed_opts);
  closed_cmd->add_option("--method", closed_method, "sw | minp");

  int study = 0;
  std::string scale = "desk", sim_config, sim_out;
  std::optional<std::uint64_t> sim_seed;
  int sim_threads = 0;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "reproduce the simulation studies");
  sim_cmd->add_option("--study", study, "1 | 2 | 3")->required();
  sim_cmd->add_option("--scale", scale, "desk | paper");
  sim_cmd->add_option("--config", sim_config, "JSON config (keys mirror ScenarioConfig)");
  sim_cmd->add_option_function<std::uint64_t>(
      "--seed", [&sim_seed](const std::uint64_t& s) { sim_seed = s; }, "master seed");
  sim_cmd->add_option("--threads", sim_threads, "worker threads (0 = all cores)");
  sim_cmd->add_option("--out", sim_out, "write CSV here instead of stdout");

  std::string bah_rho, bah_s, bah_out;
  double bah_zmax = 1.0;
  CLI::App* bah_cmd = app.add_subcommand("bahadur", "efficiency-ratio grid as CSV");
  bah_cmd->add_option("--rho-grid", bah_rho, "comma list of correlations");
  bah_cmd->add_option("--s-grid", bah_s, "comma list of z_min/z_max ratios");
  bah_cmd->add_option("--z-max", bah_zmax, "alternative scale (default 1)");
  bah_cmd->add_option("--out", bah_out, "write CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (test_cmd->parsed()) return cmd_test(test_opts, test_method);
    if (closed_cmd->parsed()) return cmd_closed(closed_opts, closed_method);
    if (sim_cmd->parsed())
      return cmd_simulate(study, scale, sim_config, sim_seed, sim_threads, sim_out);
    if (bah_cmd->parsed()) return cmd_bahadur(bah_rho, bah_s, bah_zmax, bah_out);
  } catch (const swald::Error& e) {
    const ErrorClass c = classify_error(e);
    std::cerr << c.label << ": " << e.what() << "\n";
    return c.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

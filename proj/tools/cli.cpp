#include "cli.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <fstream>
#include <optional>
#include <string>

#include "pretrends/serialization.hpp"

namespace pretrends::cli {

namespace {

struct AnalyzeOptions {
  std::string input;
  std::string output;
  std::string format = "json";
  double alpha_pretest = 0.05;
  double alpha_ci = 0.05;
  int trend_order = 1;
};

struct SimulateOptions {
  int table = 1;
  std::size_t reps = 100000;
  std::uint64_t seed = 42;
  std::string dgp;
  int k_max = 8;
  int n = 250;
  double slope = 0.065;
  double sigma = 1.0;
  double alpha_pretest = 0.05;
  double alpha_ci = 0.05;
  int trend_order = 1;
  unsigned workers = 0;
  std::string path = "fast";
  bool known_sigma = false;
  std::string format = "csv";
  std::string output;
};

struct EtaOptions {
  int k = 1;
  int p = 1;
  int m = 1;
};

struct GenerateOptions {
  int k = 3;
  int n = 250;
  double slope = 0.065;
  double sigma = 1.0;
  std::uint64_t seed = 42;
  std::string output;
};

void write_output(const std::string& path, const std::string& content, std::ostream& out) {
  if (path == "-") {
    out << content;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw ValidationError("cannot open output file " + path);
  file << content;
  if (!file) throw ValidationError("failed writing output file " + path);
}

int cmd_analyze(const AnalyzeOptions& opt, std::ostream& out) {
  PanelData data = [&] {
    try {
      return load_panel(opt.input);
    } catch (const ParseError& e) {
      throw ParseError(opt.input + ": " + e.what(), e.line());
    }
  }();
  const EstimateBundle bundle = estimate_event_study(data);
  const InferenceReport report = analyze(bundle, opt.alpha_pretest, opt.alpha_ci, opt.trend_order);
  write_output(opt.output, opt.format == "csv" ? report_to_csv(bundle, report) : report_to_json(bundle, report),
               out);
  return kExitOk;
}

int cmd_simulate(const SimulateOptions& opt, std::ostream& out) {
  SimConfig base;
  base.k_max = opt.k_max;
  base.n_per_cell = opt.n;
  base.sigma_noise = opt.sigma;
  base.reps = opt.reps;
  base.seed = opt.seed;
  base.alpha_pretest = opt.alpha_pretest;
  base.alpha_ci = opt.alpha_ci;
  base.trend_order = opt.trend_order;
  base.workers = opt.workers;
  base.fast_path = opt.path == "fast";
  base.known_sigma = opt.known_sigma;

  std::vector<std::string> dgps;
  if (!opt.dgp.empty()) {
    dgps = {opt.dgp};
  } else if (opt.table == 1) {
    dgps = {"null"};
  } else if (opt.table == 2) {
    dgps = {"trend"};
  } else {
    dgps = {"null", "trend"};
  }

  std::vector<SimTableRow> rows;
  for (const auto& dgp : dgps) {
    SimConfig config = base;
    config.trend_slope = dgp == "trend" ? opt.slope : 0.0;
    auto part = run_table(config, opt.table);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  write_output(opt.output, opt.format == "json" ? rows_to_json(rows) : rows_to_csv(rows), out);
  return kExitOk;
}

int cmd_eta(const EtaOptions& opt, std::ostream& out) {
  const Vec eta = eta_gamma(opt.k, opt.p, opt.m);
  char buf[32];
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    // Clean up rounding residue such as 1.0000000000000002.
    const double rounded = std::abs(eta(i) - std::round(eta(i))) < 1e-12 ? std::round(eta(i)) + 0.0 : eta(i);
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, rounded);
    out << (i ? " " : "") << std::string(buf, end);
  }
  out << '\n';
  return kExitOk;
}

int cmd_generate(const GenerateOptions& opt, std::ostream& out) {
  SimConfig config;
  config.k_max = opt.k;
  config.n_per_cell = opt.n;
  config.trend_slope = opt.slope;
  config.sigma_noise = opt.sigma;
  config.seed = opt.seed;
  config.validate();
  Rng rng(derive_seed(opt.seed, 0));
  write_output(opt.output, format_panel(generate_panel(config, opt.k, rng)), out);
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Difference-in-differences inference conditional on passing a pre-trends test"};
  app.require_subcommand(1);

  AnalyzeOptions analyze_opt;
  auto* analyze_cmd = app.add_subcommand("analyze", "Estimate and report every estimator for a panel CSV");
  analyze_cmd->add_option("--input", analyze_opt.input, "CSV with header unit,period,treatment,outcome")->required();
  analyze_cmd->add_option("--output", analyze_opt.output, "Report path, or - for stdout")->required();
  analyze_cmd->add_option("--alpha-pretest", analyze_opt.alpha_pretest)->check(CLI::Range(0.0, 1.0));
  analyze_cmd->add_option("--alpha-ci", analyze_opt.alpha_ci)->check(CLI::Range(0.0, 1.0));
  analyze_cmd->add_option("--trend-order", analyze_opt.trend_order)->check(CLI::PositiveNumber);
  analyze_cmd->add_option("--format", analyze_opt.format)->check(CLI::IsMember({"json", "csv"}));

  SimulateOptions sim_opt;
  auto* sim_cmd = app.add_subcommand("simulate", "Reproduce one of the simulation tables");
  sim_cmd->add_option("--table", sim_opt.table)->required()->check(CLI::Range(1, 4));
  sim_cmd->add_option("--reps", sim_opt.reps)->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed", sim_opt.seed);
  sim_cmd->add_option("--dgp", sim_opt.dgp, "null or trend; tables 3 and 4 run both by default")
      ->check(CLI::IsMember({"null", "trend"}));
  sim_cmd->add_option("--k-max", sim_opt.k_max)->check(CLI::PositiveNumber);
  sim_cmd->add_option("--n", sim_opt.n, "Observations per group and period")->check(CLI::Range(2, 100000000));
  sim_cmd->add_option("--slope", sim_opt.slope, "Trend slope of the trend DGP");
  sim_cmd->add_option("--sigma", sim_opt.sigma, "Noise standard deviation")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--alpha-pretest", sim_opt.alpha_pretest)->check(CLI::Range(0.0, 1.0));
  sim_cmd->add_option("--alpha-ci", sim_opt.alpha_ci)->check(CLI::Range(0.0, 1.0));
  sim_cmd->add_option("--trend-order", sim_opt.trend_order)->check(CLI::PositiveNumber);
  sim_cmd->add_option("--workers", sim_opt.workers, "Worker threads, 0 for all cores");
  sim_cmd->add_option("--path", sim_opt.path, "fast (cell statistics) or full (individual rows)")
      ->check(CLI::IsMember({"fast", "full"}));
  sim_cmd->add_flag("--known-sigma", sim_opt.known_sigma, "Use the population covariance");
  sim_cmd->add_option("--format", sim_opt.format)->check(CLI::IsMember({"csv", "json"}));
  sim_cmd->add_option("--output", sim_opt.output, "Table path, or - for stdout")->required();

  EtaOptions eta_opt;
  auto* eta_cmd = app.add_subcommand("eta", "Print the trend-adjusted contrast (post weight first)");
  eta_cmd->add_option("--k", eta_opt.k)->required();
  eta_cmd->add_option("--p", eta_opt.p)->required();
  eta_cmd->add_option("--m", eta_opt.m);

  GenerateOptions gen_opt;
  auto* gen_cmd = app.add_subcommand("generate", "Write a simulated panel CSV");
  gen_cmd->add_option("--k", gen_opt.k)->check(CLI::PositiveNumber);
  gen_cmd->add_option("--n", gen_opt.n)->check(CLI::Range(2, 100000000));
  gen_cmd->add_option("--slope", gen_opt.slope);
  gen_cmd->add_option("--sigma", gen_opt.sigma)->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen_opt.seed);
  gen_cmd->add_option("--output", gen_opt.output)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    if (analyze_cmd->parsed()) return cmd_analyze(analyze_opt, out);
    if (sim_cmd->parsed()) return cmd_simulate(sim_opt, out);
    if (eta_cmd->parsed()) return cmd_eta(eta_opt, out);
    if (gen_cmd->parsed()) return cmd_generate(gen_opt, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::Parse: return kExitParse;
      case ErrorKind::Validation: return kExitValidation;
      case ErrorKind::Numerical: return kExitNumerical;
    }
  }
  return kExitValidation;
}

}  // namespace pretrends::cli

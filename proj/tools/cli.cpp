// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "linattn/analysis.hpp"
#include "linattn/attention.hpp"
#include "linattn/bench.hpp"
#include "linattn/error.hpp"
#include "linattn/linalg.hpp"
#include "linattn/matrix_io.hpp"
#include "linattn/projections.hpp"
#include "linattn/report.hpp"

namespace linattn::cli {
namespace {

using Json = nlohmann::ordered_json;

/// Thrown for configuration problems detected after parsing.
struct InvalidConfig : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::uint64_t seed = 0;
  std::string out_path;
  std::string format;
};

struct Options {
  Common common;
  // bench
  std::vector<std::string> variants{"vanilla", "factorized_right"};
  std::vector<std::size_t> n_list;
  std::string k_rule = "fixed";
  std::size_t reps = 7;
  // shared shapes
  std::size_t n = 0;
  std::size_t d_model = 64;
  std::size_t d_k = 32;
  std::size_t k = 64;
  double eps = 0.5;
  std::optional<double> delta;
  std::size_t trials = 10000;
  // spectrum
  std::string source = "factorized";
  // jl
  int lemma = 1;
  // approx
  std::string bound = "eq1";
  // gradcheck
  double step = 1e-5;
  double tolerance = 1e-6;
};

struct Outcome {
  std::string document;
  std::string summary;
  int status = kExitOk;
};

void check_out_path(const std::string& path) {
  if (path.empty()) return;
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (fs::is_directory(target)) throw InvalidConfig("--out: '" + path + "' is a directory");
  const fs::path parent = target.has_parent_path() ? target.parent_path() : fs::path(".");
  if (!fs::is_directory(parent)) {
    throw InvalidConfig("--out: directory '" + parent.string() + "' does not exist");
  }
}

void check_eps(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidConfig("--eps: must lie in (0, 1)");
}

void check_format(const std::string& format, bool csv_allowed = true) {
  if (format != "json" && !(csv_allowed && format == "csv")) {
    throw InvalidConfig("--format: expected json" + std::string(csv_allowed ? " or csv" : ""));
  }
}

std::string csv_with_config(const Json& config, const std::string& body) {
  return "# config: " + config.dump() + "\n" + body;
}

std::string json_document(const Json& config, const std::string& key, Json value) {
  Json doc;
  doc["config"] = config;
  doc[key] = std::move(value);
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------- commands

Outcome run_bench(const Options& o, const Json& config) {
  if (o.reps < 5) throw InvalidConfig("--reps: must be at least 5");
  if (o.n_list.size() < 4) throw InvalidConfig("--n: need at least 4 sequence lengths");
  if (!std::is_sorted(o.n_list.begin(), o.n_list.end()) ||
      std::adjacent_find(o.n_list.begin(), o.n_list.end()) != o.n_list.end()) {
    throw InvalidConfig("--n: lengths must be strictly increasing");
  }
  check_eps(o.eps);
  std::vector<Variant> variants;
  for (const auto& name : o.variants) {
    try {
      variants.push_back(parse_variant(name));
    } catch (const DomainError& e) {
      throw InvalidConfig(std::string("--variants: ") + e.what());
    }
  }
  KRule rule;
  try {
    rule = KRule::parse(o.k_rule, o.k, o.eps);
  } catch (const DomainError& e) {
    throw InvalidConfig(std::string("--k-rule: ") + e.what());
  }

  std::vector<BenchRecord> all;
  Json fits = Json::array();
  std::ostringstream summary;
  summary << "bench seed=" << o.common.seed;
  for (Variant v : variants) {
    RngStream rng(o.common.seed);
    auto records = time_variant(v, o.n_list, o.d_model, o.d_k, rule, o.reps, rng);
    std::optional<SlopeFit> fit;
    if (o.n_list.back() >= 8 * o.n_list.front()) fit = fit_slope(records);
    if (fit) {
      fits.push_back(to_json(*fit));
      summary << " " << to_string(v) << "_exponent=" << format_double(fit->exponent);
    }
    all.insert(all.end(), records.begin(), records.end());
  }

  Outcome result;
  if (o.common.format == "csv") {
    std::string body = std::string(kBenchCsvHeader) + "\n";
    for (const auto& r : all) body += bench_csv_row(r) + "\n";
    result.document = csv_with_config(config, body);
    for (const auto& f : fits) result.summary += f.dump() + "\n";
  } else {
    Json records = Json::array();
    for (const auto& r : all) records.push_back(to_json(r));
    Json doc;
    doc["config"] = config;
    doc["records"] = records;
    doc["fits"] = fits;
    result.document = doc.dump(2) + "\n";
  }
  result.summary += summary.str();
  return result;
}

Outcome run_spectrum(const Options& o, const Json& config) {
  const std::size_t n = o.n ? o.n : 256;
  if (n < 2 || n > kSpectrumMaxSide) throw InvalidConfig("--n: must lie in [2, 1024]");
  RngStream rng(o.common.seed);
  const AttentionInput inp = random_input(n, o.d_model, rng);
  const AttentionParams params = random_params(o.d_model, o.d_k, rng);
  Matrix P;
  if (o.source == "factorized") {
    P = *context_map(inp, params).P;
  } else if (o.source == "vanilla") {
    P = vanilla_context_map(inp, params);
  } else if (o.source == "approx") {
    const FactorizationTrace trace = context_map(inp, params);
    const ProjectionPair proj = make_projection_pair(n, o.k, delta_schedule(n, o.delta), rng);
    P = approx_context_map(trace, proj.R);
  } else {
    throw InvalidConfig("--source: expected factorized, vanilla or approx");
  }
  const std::size_t rank_cut = o.source == "approx" ? o.k : o.d_k;
  const SpectrumReport report = spectrum_report(P, rank_cut);

  Outcome result;
  if (o.common.format == "csv") {
    std::string body = "# tail_ratio: " + format_double(report.tail_ratio) + "\n# energy_topd: " +
                       format_double(report.energy_topd) + "\nindex,sigma\n";
    for (std::size_t i = 0; i < report.sigmas.size(); ++i) {
      body += std::to_string(i + 1) + "," + format_double(report.sigmas[i]) + "\n";
    }
    result.document = csv_with_config(config, body);
  } else {
    result.document = json_document(config, "spectrum", to_json(report));
  }
  result.summary = "spectrum seed=" + std::to_string(o.common.seed) + " source=" + o.source +
                   " tail_ratio=" + format_double(report.tail_ratio) +
                   " energy_topd=" + format_double(report.energy_topd);
  return result;
}

Outcome verdict_outcome(const std::string& command, const Options& o, const Json& config,
                        const LemmaVerdict& v) {
  Outcome result;
  if (o.common.format == "csv") {
    result.document = csv_with_config(config, lemma_csv_header() + "\n" + lemma_csv_row(v) + "\n");
  } else {
    result.document = json_document(config, "verdict", to_json(v));
  }
  result.summary = command + " seed=" + std::to_string(o.common.seed) + " " +
                   std::string(to_string(v.lemma_id)) + " rate=" + format_double(v.empirical_rate) +
                   " bound=" + format_double(v.theoretical_bound);
  return result;
}

Outcome run_jl(const Options& o, const Json& config) {
  check_eps(o.eps);
  if (o.lemma != 1 && o.lemma != 2) throw InvalidConfig("--lemma: expected 1 or 2");
  if (o.trials < 1000) throw InvalidConfig("--trials: must be at least 1000");
  const std::size_t n = o.n ? o.n : 256;
  RngStream rng(o.common.seed);
  const LemmaVerdict v = o.lemma == 1 ? verify_lemma1(n, o.k, o.eps, o.trials, rng)
                                      : verify_lemma2(n, o.k, o.eps, o.trials, rng);
  return verdict_outcome("jl", o, config, v);
}

Outcome run_approx(const Options& o, const Json& config) {
  check_eps(o.eps);
  const std::size_t n = o.n ? o.n : 256;
  if (n < 2 || n > 1024) throw InvalidConfig("--n: must lie in [2, 1024]");
  RngStream rng(o.common.seed);
  if (o.bound == "eq1") {
    return verdict_outcome("approx", o, config,
                           approx_error_experiment(n, o.d_k, o.eps, o.trials, rng, o.d_model));
  }
  if (o.bound == "eq3") {
    return verdict_outcome("approx", o, config,
                           factorized_error_experiment(n, o.d_k, o.eps, o.trials, rng, o.delta, o.d_model));
  }
  throw InvalidConfig("--bound: expected eq1 or eq3");
}

Outcome run_kfree(const Options& o, const Json& config) {
  check_eps(o.eps);
  std::vector<std::size_t> n_list = o.n_list.empty() ? std::vector<std::size_t>{64, 128, 256, 512} : o.n_list;
  for (std::size_t n : n_list) {
    if (n < 2 || n > 1024) throw InvalidConfig("--n: every length must lie in [2, 1024]");
  }
  if (o.d_k < 2) throw InvalidConfig("--d-k: must be at least 2");
  RngStream rng(o.common.seed);
  const auto points = k_independence_experiment(o.d_k, o.eps, n_list, o.trials, rng, o.d_model);

  Outcome result;
  if (o.common.format == "csv") {
    std::string body = "n,k,trials,successes,empirical_rate\n";
    for (const auto& p : points) {
      body += std::to_string(p.n) + "," + std::to_string(p.k) + "," + std::to_string(p.trials) + "," +
              std::to_string(p.successes) + "," + format_double(p.empirical_rate) + "\n";
    }
    result.document = csv_with_config(config, body);
  } else {
    Json arr = Json::array();
    for (const auto& p : points) arr.push_back(to_json(p));
    result.document = json_document(config, "points", arr);
  }
  const double drop = points.front().empirical_rate - points.back().empirical_rate;
  result.summary = "kfree seed=" + std::to_string(o.common.seed) + " k=" + std::to_string(points.front().k) +
                   " rate_first=" + format_double(points.front().empirical_rate) +
                   " rate_last=" + format_double(points.back().empirical_rate) +
                   " drop=" + format_double(drop);
  return result;
}

Outcome run_gradcheck(const Options& o, const Json& config) {
  check_format(o.common.format, false);
  const std::size_t n = o.n ? o.n : 16;
  if (n < 2) throw InvalidConfig("--n: must be at least 2");
  if (!(o.step >= 1e-7 && o.step <= 1e-3)) throw InvalidConfig("--h: must lie in [1e-7, 1e-3]");
  if (!(o.tolerance > 0.0)) throw InvalidConfig("--tolerance: must be positive");
  RngStream rng(o.common.seed);
  const AttentionInput inp = random_input(n, o.d_model, rng);
  const AttentionParams params = random_params(o.d_model, o.d_k, rng);
  const ProjectionPair proj = make_projection_pair(n, o.k, delta_schedule(n, o.delta), rng);
  const GradcheckReport report = gradcheck(inp, params, proj, o.step, o.tolerance, rng);

  Outcome result;
  result.document = json_document(config, "gradcheck", to_json(report));
  result.summary = "gradcheck seed=" + std::to_string(o.common.seed) +
                   " worst_rel_error=" + format_double(report.worst) +
                   (report.passed ? " passed" : " FAILED");
  result.status = report.passed ? kExitOk : kExitNumerical;
  return result;
}

Outcome run_equiv(const Options& o, const Json& config) {
  check_format(o.common.format, false);
  const std::size_t n = o.n ? o.n : 512;
  if (n < 2) throw InvalidConfig("--n: must be at least 2");
  constexpr double kGapLimit = 1e-9;
  RngStream rng(o.common.seed);
  const AttentionInput inp = random_input(n, o.d_model, rng);
  const AttentionParams params = random_params(o.d_model, o.d_k, rng);
  const ProjectionPair proj = make_projection_pair(n, o.k, delta_schedule(n, o.delta), rng);
  const Matrix left = factorized_attention(inp, params, proj, Order::left).first;
  const Matrix right = factorized_attention(inp, params, proj, Order::right).first;
  const double factorized_gap = relative_frobenius_gap(left, right);
  const double scaled_gap = relative_frobenius_gap(scaled_linear_attention(inp, params, Order::left),
                                                   scaled_linear_attention(inp, params, Order::right));
  const bool passed = factorized_gap <= kGapLimit && scaled_gap <= kGapLimit;

  Json value;
  value["factorized_gap"] = factorized_gap;
  value["scaled_linear_gap"] = scaled_gap;
  value["limit"] = kGapLimit;
  value["passed"] = passed;
  Outcome result;
  result.document = json_document(config, "equivalence", value);
  result.summary = "equiv seed=" + std::to_string(o.common.seed) +
                   " factorized_gap=" + format_double(factorized_gap) +
                   " scaled_linear_gap=" + format_double(scaled_gap) + (passed ? " passed" : " FAILED");
  result.status = passed ? kExitOk : kExitNumerical;
  return result;
}

// ------------------------------------------------------------------ parsing

void add_common(CLI::App* sub, Options& o, const std::string& default_format) {
  sub->add_option("--seed", o.common.seed, "RNG seed")->capture_default_str();
  sub->add_option("--out", o.common.out_path, "Output file (written atomically); stdout if omitted");
  sub->add_option("--format", o.common.format, "Output format: csv or json")->default_str(default_format);
}

CLI::Option* add_size(CLI::App* sub, const std::string& name, std::size_t& target, const std::string& desc) {
  return sub->add_option(name, target, desc)->check(CLI::PositiveNumber)->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Factorized-softmax linear attention: benchmarks and bound verification", "linattn"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_help_all_flag("--help-all", "Show help for every command");

  Options o;
  std::string command;
  std::map<std::string, std::function<Outcome(const Options&, const Json&)>> handlers;
  std::map<std::string, CLI::App*> subs;

  auto make = [&](const std::string& name, const std::string& desc, const std::string& format,
                  std::function<Outcome(const Options&, const Json&)> fn) {
    CLI::App* sub = app.add_subcommand(name, desc);
    add_common(sub, o, format);
    sub->callback([&command, name] { command = name; });
    handlers[name] = std::move(fn);
    subs[name] = sub;
    return sub;
  };

  {
    auto* sub = make("bench", "Time attention variants and fit log-log slopes", "csv", run_bench);
    sub->add_option("--variants", o.variants, "Comma-separated variants")->delimiter(',')->capture_default_str();
    sub->add_option("--n", o.n_list, "Comma-separated, strictly increasing sequence lengths")
        ->delimiter(',')
        ->required()
        ->check(CLI::PositiveNumber);
    add_size(sub, "--d-model", o.d_model, "Model width");
    add_size(sub, "--d-k", o.d_k, "Head width");
    add_size(sub, "--k", o.k, "Projection dimension for --k-rule fixed");
    sub->add_option("--k-rule", o.k_rule, "fixed, jl (5 ln n rule) or rank (9 ln d_k rule)")->capture_default_str();
    sub->add_option("--eps", o.eps, "Distortion for the jl/rank k rules")->capture_default_str();
    add_size(sub, "--reps", o.reps, "Timed repetitions per length (>= 5)");
  }
  {
    auto* sub = make("spectrum", "Singular spectrum of a context map", "json", run_spectrum);
    add_size(sub, "--n", o.n, "Sequence length (default 256)");
    add_size(sub, "--d-model", o.d_model, "Model width");
    add_size(sub, "--d-k", o.d_k, "Head width");
    add_size(sub, "--k", o.k, "Projection dimension for --source approx");
    sub->add_option("--source", o.source, "factorized, vanilla or approx")->capture_default_str();
    sub->add_option("--delta", o.delta, "Override for the delta schedule");
  }
  {
    auto* sub = make("jl", "Monte-Carlo check of the JL norm or inner-product bound", "json", run_jl);
    sub->add_option("--lemma", o.lemma, "1 (norm) or 2 (inner product)")->capture_default_str();
    add_size(sub, "--n", o.n, "Ambient dimension (default 256)");
    add_size(sub, "--k", o.k, "Projection dimension");
    sub->add_option("--eps", o.eps, "Distortion in (0, 1)")->capture_default_str();
    add_size(sub, "--trials", o.trials, "Monte-Carlo trials (>= 1000)");
  }
  {
    auto* sub = make("approx", "Monte-Carlo check of the context-map approximation bound", "json", run_approx);
    add_size(sub, "--n", o.n, "Sequence length (default 256, at most 1024)");
    add_size(sub, "--d-model", o.d_model, "Model width");
    add_size(sub, "--d-k", o.d_k, "Head width");
    sub->add_option("--eps", o.eps, "Distortion in (0, 1)")->capture_default_str();
    add_size(sub, "--trials", o.trials, "Monte-Carlo trials");
    sub->add_option("--bound", o.bound, "eq1 (P R^T R c) or eq3 (factorized scalar form)")->capture_default_str();
    sub->add_option("--delta", o.delta, "Override for the delta schedule (eq3)");
  }
  {
    auto* sub = make("kfree", "Approximation rate across n with the rank-based k held fixed", "json", run_kfree);
    sub->add_option("--n", o.n_list, "Comma-separated sequence lengths (default 64,128,256,512)")
        ->delimiter(',')
        ->check(CLI::PositiveNumber);
    add_size(sub, "--d-model", o.d_model, "Model width");
    add_size(sub, "--d-k", o.d_k, "Head width (sets k)");
    sub->add_option("--eps", o.eps, "Distortion in (0, 1)")->capture_default_str();
    add_size(sub, "--trials", o.trials, "Monte-Carlo trials per length");
  }
  {
    auto* sub = make("gradcheck", "Finite-difference check of the factorized backward pass", "json", run_gradcheck);
    add_size(sub, "--n", o.n, "Sequence length (default 16)");
    add_size(sub, "--d-model", o.d_model, "Model width");
    add_size(sub, "--d-k", o.d_k, "Head width");
    add_size(sub, "--k", o.k, "Projection dimension");
    sub->add_option("--h", o.step, "Central-difference step")->capture_default_str();
    sub->add_option("--tolerance", o.tolerance, "Max relative error")->capture_default_str();
    sub->add_option("--delta", o.delta, "Override for the delta schedule");
  }
  {
    auto* sub = make("equiv", "Compare (HL)X with H(LX) and the two scaled-linear orders", "json", run_equiv);
    add_size(sub, "--n", o.n, "Sequence length (default 512)");
    add_size(sub, "--d-model", o.d_model, "Model width");
    add_size(sub, "--d-k", o.d_k, "Head width");
    add_size(sub, "--k", o.k, "Projection dimension");
    sub->add_option("--delta", o.delta, "Override for the delta schedule");
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }

  // Every parsed option of the chosen command except the destination, so
  // output files are self-describing and independent of where they land.
  Json config;
  config["command"] = command;
  for (const CLI::Option* opt : subs[command]->get_options()) {
    const std::string name = opt->get_name();
    if (name.rfind("--", 0) != 0 || name == "--help" || name == "--out") continue;
    std::string value = opt->count() ? CLI::detail::join(opt->results(), ",") : opt->get_default_str();
    if (value.empty()) continue;
    config[name.substr(2)] = value;
  }
  if (o.common.format.empty()) o.common.format = subs[command]->get_option("--format")->get_default_str();

  try {
    check_format(o.common.format);
    check_out_path(o.common.out_path);
    Outcome result = handlers[command](o, config);
    if (o.common.out_path.empty()) {
      out << result.document;
    } else {
      write_file_atomic(o.common.out_path, result.document);
    }
    out << result.summary << "\n";
    return result.status;
  } catch (const InvalidConfig& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const ShapeError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
}

}  // namespace linattn::cli

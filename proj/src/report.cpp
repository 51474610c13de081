// SPDX-License-Identifier: Apache-2.0
#include "linattn/report.hpp"

#include "linattn/matrix_io.hpp"

namespace linattn {

nlohmann::ordered_json to_json(const LemmaVerdict& v) {
  nlohmann::ordered_json j;
  j["lemma_id"] = std::string(to_string(v.lemma_id));
  j["n"] = v.n;
  j["k"] = v.k;
  j["eps"] = v.eps;
  j["trials"] = v.trials;
  j["successes"] = v.successes;
  j["empirical_rate"] = v.empirical_rate;
  j["theoretical_bound"] = v.theoretical_bound;
  j["standard_error"] = v.standard_error();
  j["within_bound"] = v.within_bound();
  j["seed"] = v.seed;
  return j;
}

nlohmann::ordered_json to_json(const SpectrumReport& r) {
  nlohmann::ordered_json j;
  j["d_k"] = r.d_k;
  j["tail_ratio"] = r.tail_ratio;
  j["energy_topd"] = r.energy_topd;
  j["sigmas"] = r.sigmas;
  return j;
}

nlohmann::ordered_json to_json(const SlopeFit& f) {
  nlohmann::ordered_json j;
  j["variant"] = std::string(to_string(f.variant));
  j["exponent"] = f.exponent;
  j["r_squared"] = f.r_squared;
  j["n_points"] = f.n_points;
  return j;
}

nlohmann::ordered_json to_json(const GradcheckReport& r) {
  nlohmann::ordered_json j;
  j["step"] = r.step;
  j["tolerance"] = r.tolerance;
  nlohmann::ordered_json blocks;
  for (const char* name : {"Wq", "Wk", "Wv", "Q", "K", "V"}) {
    if (auto it = r.max_rel_error.find(name); it != r.max_rel_error.end()) blocks[name] = it->second;
  }
  j["max_rel_error"] = blocks;
  j["worst"] = r.worst;
  j["passed"] = r.passed;
  return j;
}

nlohmann::ordered_json to_json(const KIndependencePoint& p) {
  nlohmann::ordered_json j;
  j["n"] = p.n;
  j["k"] = p.k;
  j["trials"] = p.trials;
  j["successes"] = p.successes;
  j["empirical_rate"] = p.empirical_rate;
  return j;
}

nlohmann::ordered_json to_json(const BenchRecord& r) {
  nlohmann::ordered_json j;
  j["variant"] = std::string(to_string(r.variant));
  j["n"] = r.n;
  j["d_model"] = r.d_model;
  j["d_k"] = r.d_k;
  j["k"] = r.k;
  j["rep"] = r.rep;
  j["seconds"] = r.seconds;
  j["peak_bytes"] = r.peak_bytes;
  return j;
}

std::string lemma_csv_header() {
  return "lemma_id,n,k,eps,trials,successes,empirical_rate,theoretical_bound,seed";
}

std::string lemma_csv_row(const LemmaVerdict& v) {
  return std::string(to_string(v.lemma_id)) + "," + std::to_string(v.n) + "," + std::to_string(v.k) +
         "," + format_double(v.eps) + "," + std::to_string(v.trials) + "," +
         std::to_string(v.successes) + "," + format_double(v.empirical_rate) + "," +
         format_double(v.theoretical_bound) + "," + std::to_string(v.seed);
}

}  // namespace linattn

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "linattn/analysis.hpp"
#include "linattn/bench.hpp"

namespace linattn {

// JSON and CSV forms of the result carriers. Key order is fixed so that
// equal results serialize to identical bytes.

nlohmann::ordered_json to_json(const LemmaVerdict& v);
nlohmann::ordered_json to_json(const SpectrumReport& r);
nlohmann::ordered_json to_json(const SlopeFit& f);
nlohmann::ordered_json to_json(const GradcheckReport& r);
nlohmann::ordered_json to_json(const KIndependencePoint& p);
nlohmann::ordered_json to_json(const BenchRecord& r);

std::string lemma_csv_header();
std::string lemma_csv_row(const LemmaVerdict& v);

}  // namespace linattn

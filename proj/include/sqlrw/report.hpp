/*
    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/

#ifndef SQLRW_REPORT_HPP
#define SQLRW_REPORT_HPP

#include <string>
#include <vector>

#include "sqlrw/prover.hpp"

namespace sqlrw {

inline constexpr const char* kToolName = "sqlrw";
inline constexpr const char* kToolVersion = "0.1.0";

struct RuleReport {
    std::string name;
    std::string category;
    std::string expect;
    std::string verdict;
    std::string method;
    std::string reason;
    bool matched = false;
    long millis = -1;  // negative: omitted from output (oracle mode)
    long instancesChecked = 0;
    bool exhausted = false;
    std::vector<std::string> steps;
    std::string counterexample;  // instance-block syntax, replayable
};

struct Report {
    std::string mode;  // "check" or "oracle"
    std::vector<RuleReport> rules;
    bool allMatched() const;
};

// Proves (or, with oracleOnly, only tests) one rule and reports the outcome.
// In oracle mode expectations above corroborated clamp down to corroborated
// since testing never proves, and timing is omitted for determinism.
RuleReport run_rule(const RewriteRule& rule, const ProverConfig& cfg, bool oracleOnly);

// The human format derives from the machine one: same facts, same order.
std::string render_text(const Report& r, bool trace);
std::string render_json(const Report& r, bool trace);

}  // namespace sqlrw

#endif

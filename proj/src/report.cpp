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

#include "sqlrw/report.hpp"

#include <chrono>
#include <map>
#include <sstream>

#include "json.hpp"

namespace sqlrw {

bool Report::allMatched() const {
    for (const auto& r : rules)
        if (!r.matched) return false;
    return true;
}

RuleReport run_rule(const RewriteRule& rule, const ProverConfig& cfg, bool oracleOnly) {
    RuleReport rr;
    rr.name = rule.name;
    rr.category = rule.category;
    rr.expect = rule.expect;
    if (oracleOnly) {
        OracleResult res = differential_test(rule, cfg.oracle);
        rr.instancesChecked = res.instancesChecked;
        rr.exhausted = res.exhausted;
        Verdict v;
        if (res.cex) {
            v.kind = VerdictKind::Refuted;
            v.cex = res.cex;
            rr.counterexample = res.cex->show(rule);
        } else {
            v.corroborated = res.instancesChecked > 0;
        }
        rr.verdict = verdict_name(v);
        // Testing never proves, so an expect of proved reads as corroborated.
        std::string want = rule.expect == "proved" ? "corroborated" : rule.expect;
        rr.matched = verdict_meets(v, want);
        return rr;
    }
    auto t0 = std::chrono::steady_clock::now();
    Verdict v = prove_equiv(rule, cfg);
    rr.millis = std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
    rr.verdict = verdict_name(v);
    rr.method = v.trace.method;
    rr.reason = v.reason;
    rr.steps = v.trace.steps;
    rr.instancesChecked = v.instancesChecked;
    if (v.cex) rr.counterexample = v.cex->show(rule);
    rr.matched = verdict_meets(v, rule.expect);
    return rr;
}

namespace {

std::map<std::string, int> verdictCounts(const Report& r) {
    std::map<std::string, int> out{
        {"proved", 0}, {"refuted", 0}, {"corroborated", 0}, {"unknown", 0}};
    for (const auto& rr : r.rules) out[rr.verdict]++;
    return out;
}

}  // namespace

std::string render_text(const Report& r, bool trace) {
    std::ostringstream out;
    out << kToolName << " " << kToolVersion << " " << r.mode << " report\n";
    int mismatched = 0;
    for (const auto& rr : r.rules) {
        out << rr.name << ": " << rr.verdict;
        if (!rr.method.empty()) out << " via " << rr.method;
        if (rr.verdict == "refuted" || rr.verdict == "corroborated" || r.mode == "oracle")
            out << " (" << rr.instancesChecked << " instances"
                << (rr.exhausted ? ", bounds exhausted" : "") << ")";
        if (rr.millis >= 0) out << " [" << rr.millis << " ms]";
        if (!rr.reason.empty()) out << " reason=" << rr.reason;
        if (!rr.matched) {
            mismatched++;
            out << " MISMATCH: expected "
                << (rr.expect.empty() ? "corroborated or better" : rr.expect);
        }
        out << "\n";
        if (trace)
            for (const auto& s : rr.steps) out << "    " << s << "\n";
        if (!rr.counterexample.empty()) {
            std::istringstream cex(rr.counterexample);
            for (std::string line; std::getline(cex, line);) out << "    " << line << "\n";
        }
    }
    auto counts = verdictCounts(r);
    out << "summary: " << r.rules.size() << " rules; proved " << counts["proved"]
        << ", corroborated " << counts["corroborated"] << ", refuted " << counts["refuted"]
        << ", unknown " << counts["unknown"] << "; ";
    if (mismatched == 0)
        out << "all expectations met\n";
    else
        out << mismatched << " expectation mismatch" << (mismatched == 1 ? "" : "es") << "\n";
    return out.str();
}

std::string render_json(const Report& r, bool trace) {
    nlohmann::ordered_json doc;
    doc["tool"] = kToolName;
    doc["version"] = kToolVersion;
    doc["mode"] = r.mode;
    doc["rules"] = nlohmann::ordered_json::array();
    for (const auto& rr : r.rules) {
        nlohmann::ordered_json j;
        j["name"] = rr.name;
        j["category"] = rr.category;
        j["expect"] = rr.expect;
        j["verdict"] = rr.verdict;
        if (!rr.method.empty()) j["method"] = rr.method;
        if (!rr.reason.empty()) j["reason"] = rr.reason;
        j["matched"] = rr.matched;
        if (rr.millis >= 0) j["millis"] = rr.millis;
        j["instances_checked"] = rr.instancesChecked;
        j["exhausted"] = rr.exhausted;
        if (trace) j["steps"] = rr.steps;
        if (!rr.counterexample.empty()) j["counterexample"] = rr.counterexample;
        doc["rules"].push_back(std::move(j));
    }
    auto counts = verdictCounts(r);
    doc["summary"] = {{"total", r.rules.size()},
                      {"proved", counts["proved"]},
                      {"corroborated", counts["corroborated"]},
                      {"refuted", counts["refuted"]},
                      {"unknown", counts["unknown"]},
                      {"all_matched", r.allMatched()}};
    return doc.dump(2) + "\n";
}

}  // namespace sqlrw

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

// Equivalence decision pipeline: conjunctive-query short-circuit, semiring
// normalization, proposition elimination, biimplication, then a bounded
// differential oracle for refutation or corroboration.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sqlrw/ast.hpp"
#include "sqlrw/cq.hpp"
#include "sqlrw/interp.hpp"
#include "sqlrw/normalize.hpp"

namespace sqlrw {

enum class VerdictKind { Proved, Refuted, Unknown };

// Evidence for a Proved verdict.  Replay re-derives the deterministic parts
// and checks recorded witnesses (homomorphism mappings, canonical keys)
// without repeating proof search.
struct ProofTrace {
    std::string method;  // "cq-set" | "cq-bag" | "normal-form" | "hprop" | "biimpl"
    std::vector<std::string> steps;
    std::vector<int> cqForward;   // cq-set: lhs atoms into rhs atoms
    std::vector<int> cqBackward;  // cq-set: rhs atoms into lhs atoms
    std::string leftKey, rightKey;  // canonical keys at the closing phase
};

struct ProverConfig {
    long fuel = 10000;
    OracleConfig oracle;
    bool runOracle = true;  // bounded search for counterexamples on failure
};

struct Verdict {
    VerdictKind kind = VerdictKind::Unknown;
    ProofTrace trace;
    std::optional<CounterExample> cex;  // Refuted
    std::string reason;                 // Unknown: "fuel" or "fragment"
    bool corroborated = false;          // Unknown: oracle found no counterexample
    long instancesChecked = 0;
    std::string leftNormal, rightNormal;  // printed normal forms, diagnostics
};

Verdict prove_equiv(const RewriteRule& rule, const ProverConfig& cfg = {});

// Checks a recorded trace against the rule.  Witness-carrying methods verify
// the stored mappings and keys directly.
bool replay_trace(const RewriteRule& rule, const ProofTrace& trace,
                  const ProverConfig& cfg = {});

// Outcome name used in reports and expectations: proved, refuted,
// corroborated, or unknown.
std::string verdict_name(const Verdict& v);

// An expectation names the weakest acceptable outcome on the scale
// refuted < unknown < corroborated < proved, except that "refuted" demands
// exactly a refutation.  Empty means corroborated or better.
bool verdict_meets(const Verdict& v, const std::string& expect);

}  // namespace sqlrw

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

#ifndef SQLRW_RULES_HPP
#define SQLRW_RULES_HPP

#include "sqlrw/ast.hpp"

namespace sqlrw {

// Rewrites every group-by node in q into its correlated-subquery form:
// SELECT k, agg(a) FROM s GROUP BY k  becomes
// DISTINCT SELECT (k, eval(agg(SELECT a FROM s WHERE outer.k = inner.k))) FROM s.
QueryP desugar_groupby(const QueryP& q);

// A key or functional-dependency premise together with its defining query
// equation (the form the oracle checks and tests cross-validate).
struct Constraint {
    Premise premise;
    QueryP lhs, rhs;
    Schema outSchema;
};

// key(k, R): SELECT * FROM R equals its self-join on k projected to the left.
Constraint encode_key(const Declarations& d, const ProjP& k, const std::string& table);

// fd(a, b, R): key(left) over DISTINCT SELECT (a, b) FROM R.
Constraint encode_fd(const Declarations& d, const ProjP& a, const ProjP& b, const std::string& table);

// Defining query of an index on attribute a of R with key k: SELECT (k, a) FROM R.
QueryP index_def(const ProjP& a, const ProjP& k, const std::string& table);

struct RuleCorpus {
    std::vector<RewriteRule> rules;
    std::map<std::string, int> categoryCounts;
};

// The builtin corpus: 23 rules in categories
// basic 8, aggregation 1, subquery 2, magicset 7, index 3, cq 2.
RuleCorpus builtin_rules();

// Deliberately broken variants; every one must be refuted by the oracle at
// default bounds.
std::vector<RewriteRule> seeded_mutants();

// DSL source the above are parsed from (also served by `dump-corpus`).
const std::string& builtin_rules_text();
const std::string& seeded_mutants_text();

}  // namespace sqlrw

#endif

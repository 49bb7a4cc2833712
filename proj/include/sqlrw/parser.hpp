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

#ifndef SQLRW_PARSER_HPP
#define SQLRW_PARSER_HPP

#include "sqlrw/interp.hpp"

namespace sqlrw {

struct ParseError : Error {
    int line, col;
    std::vector<std::string> expected;
    ParseError(int line, int col, std::vector<std::string> expected, const std::string& found);
    ParseError(int line, int col, const std::string& msg);
};

struct ParsedInstance {
    std::string name;
    Instance inst;
};

struct RuleFile {
    Declarations decls;
    std::vector<RewriteRule> rules;
    std::map<std::string, std::string> pragmas;
    std::vector<ParsedInstance> instances;
};

// Parses declarations, rules, pragmas, and instance blocks.  Every rule must
// pass rule_wellformed or the whole file is rejected.
RuleFile parse_rule_file(const std::string& text);

// Single-construct entry points sharing the rule-file grammar.
QueryP parse_query(const Declarations& decls, const std::string& text);
ProjP parse_proj_text(const Declarations& decls, const std::string& text);
PredP parse_pred_text(const Declarations& decls, const std::string& text);

}  // namespace sqlrw

#endif

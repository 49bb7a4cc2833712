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

#include <cstdint>

#include "doctest.h"
#include "sqlrw/interp.hpp"
#include "sqlrw/parser.hpp"
#include "sqlrw/rules.hpp"

using namespace sqlrw;

namespace {

std::uint64_t splitmix(std::uint64_t& s) {
    s += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

TEST_CASE("corpus text round-trips through printing") {
    for (const std::string& text : {builtin_rules_text(), seeded_mutants_text()}) {
        RuleFile file = parse_rule_file(text);
        REQUIRE(!file.rules.empty());
        for (const RewriteRule& r : file.rules) {
            RuleFile back = parse_rule_file(show(r));
            REQUIRE(back.rules.size() == 1);
            const RewriteRule& r2 = back.rules[0];
            CHECK(r2.name == r.name);
            CHECK(same_query(r2.lhs, r.lhs));
            CHECK(same_query(r2.rhs, r.rhs));
            CHECK(r2.expect == r.expect);
            CHECK(r2.category == r.category);
            CHECK(r2.provenance == r.provenance);
            CHECK(r2.context == r.context);
            REQUIRE(r2.premises.size() == r.premises.size());
            for (size_t i = 0; i < r.premises.size(); i++) {
                CHECK(r2.premises[i].kind == r.premises[i].kind);
                CHECK(r2.premises[i].table == r.premises[i].table);
                CHECK(show(r2.premises[i].p1) == show(r.premises[i].p1));
            }
        }
    }
}

TEST_CASE("query printing round-trips") {
    RuleFile file = parse_rule_file(builtin_rules_text());
    for (const RewriteRule& r : file.rules) {
        for (const QueryP& q : {r.lhs, r.rhs}) {
            QueryP back = parse_query(file.decls, show(q));
            CHECK(same_query(back, q));
        }
    }
}

TEST_CASE("parse errors carry positions") {
    try {
        parse_rule_file("schema S1\ntable R (S1)\nrule r\n  select ?? from R\nequiv\n");
        FAIL("did not throw");
    } catch (const ParseError& e) {
        CHECK(e.line == 4);
        CHECK(e.col >= 10);
    }

    CHECK_THROWS_AS(parse_rule_file("schema S1\nschema S1\n"), ParseError);
    CHECK_THROWS_AS(parse_rule_file("schema S1\ntable S1 (S1)\n"), ParseError);
    CHECK_THROWS_AS(
        parse_rule_file("rule r\n  expect maybe\n  select * from R\nequiv\n  select * from R\nend"),
        ParseError);
    CHECK_THROWS_AS(parse_rule_file("schema S1\ntable R (S1)\nrule r\nselect * from Q\nequiv\n"
                                    "select * from R\nend"),
                    ParseError);
    // Sides with different output schemas are rejected at the rule level.
    CHECK_THROWS(parse_rule_file(
        "schema S1\ntable R ((S1, S1))\nrule r\nselect * from R\nequiv\nselect left from R\nend"));
}

TEST_CASE("line comments and pragmas") {
    RuleFile file = parse_rule_file(
        "-- leading comment\n"
        "pragma suite smoke\n"
        "pragma version 2\n"
        "schema S1  -- trailing comment\n"
        "table R (S1)\n"
        "rule r\n  select * from R\nequiv\n  select * from R  -- same\nend\n");
    CHECK(file.pragmas.at("suite") == "smoke");
    CHECK(file.pragmas.at("version") == "2");
    REQUIRE(file.rules.size() == 1);
    CHECK(same_query(file.rules[0].lhs, file.rules[0].rhs));
}

TEST_CASE("instance blocks parse into instances") {
    RuleFile file = parse_rule_file(
        "schema S1\n"
        "table R ((int, int))\n"
        "pred b over (<>, (int, int))\n"
        "fn l () -> int\n"
        "rule keep\n  select * from R\nequiv\n  select * from R\nend\n"
        "instance keep\n"
        "  domain int = 2\n"
        "  schema S1 = (int, int)\n"
        "  table R = { (0, 1) * 2, (1, 1) }\n"
        "  pred b = { ((), (0, 1)) }\n"
        "  fn l = { () -> 1 }\n"
        "end\n");
    REQUIRE(file.instances.size() == 1);
    const ParsedInstance& pi = file.instances[0];
    CHECK(pi.name == "keep");
    CHECK(pi.inst.domains.at("int") == 2);
    CHECK(pi.inst.schemaMetas.at("S1") ==
          Schema::node(Schema::leaf(BaseType::intType()), Schema::leaf(BaseType::intType())));
    Tup row = Tuple::pair(Tuple::scalar(Value::intV(0)), Tuple::scalar(Value::intV(1)));
    CHECK(pi.inst.tables.at("R").mult(row) == 2);
    CHECK(pi.inst.predMetas.at("b").count(tuple_key(Tuple::pair(Tuple::unit(), row))) == 1);
    CHECK(pi.inst.fns.at("l").at("()") == Value::intV(1));
}

TEST_CASE("counterexample display is replayable syntax") {
    RuleFile mutants = parse_rule_file(seeded_mutants_text());
    const RewriteRule* target = nullptr;
    for (const auto& r : mutants.rules)
        if (r.premises.empty()) {
            target = &r;
            break;
        }
    REQUIRE(target != nullptr);
    OracleResult res = differential_test(*target, OracleConfig{});
    REQUIRE(res.cex.has_value());

    // The instance block inside the printed counterexample parses back and
    // carries the same table contents.
    std::string shown = res.cex->show(*target);
    auto start = shown.find("instance");
    auto stop = shown.find("\nend\n", start);
    REQUIRE(start != std::string::npos);
    REQUIRE(stop != std::string::npos);
    std::string block = shown.substr(start, stop + 5 - start);
    RuleFile back = parse_rule_file(seeded_mutants_text() + "\n" + block);
    REQUIRE(back.instances.size() == 1);
    CHECK(back.instances[0].name == target->name);
    for (const auto& [name, bag] : res.cex->inst.tables)
        CHECK(back.instances[0].inst.tables.at(name) == bag);
}

TEST_CASE("mangled inputs never crash the parser") {
    const std::string base = builtin_rules_text();
    std::uint64_t st = 12345;
    int parsed = 0, rejected = 0;
    for (int i = 0; i < 600; i++) {
        std::string s = base;
        switch (i % 3) {
            case 0:  // truncate
                s = s.substr(0, splitmix(st) % (s.size() + 1));
                break;
            case 1:  // substitute bytes
                for (int k = 0; k < 8; k++)
                    s[splitmix(st) % s.size()] = static_cast<char>(splitmix(st) % 256);
                break;
            case 2:  // splice a random slice over another position
                if (s.size() > 4) {
                    size_t from = splitmix(st) % s.size();
                    size_t len = splitmix(st) % std::min<size_t>(64, s.size() - from);
                    size_t to = splitmix(st) % s.size();
                    s = s.substr(0, to) + s.substr(from, from + len) + s.substr(to);
                }
                break;
        }
        try {
            parse_rule_file(s);
            parsed++;
        } catch (const Error&) {
            rejected++;  // ParseError or TypeError are the only allowed outcomes
        }
    }
    CHECK(parsed + rejected == 600);
    CHECK(rejected > 0);

    for (int i = 0; i < 300; i++) {
        std::string s;
        size_t n = splitmix(st) % 200;
        for (size_t k = 0; k < n; k++) s.push_back(static_cast<char>(splitmix(st) % 128));
        try {
            parse_rule_file(s);
        } catch (const Error&) {
        }
    }
}

TEST_CASE("single construct entry points") {
    RuleFile file = parse_rule_file(builtin_rules_text());
    QueryP q = parse_query(file.decls, "select * from R, S where b1");
    CHECK(q->kind == Query::Kind::Select);
    PredP p = parse_pred_text(file.decls, "b1 and not b2");
    CHECK(p->kind == Pred::Kind::And);
    ProjP pr = parse_proj_text(file.decls, "(right.k, left)");
    CHECK(pr->kind == Proj::Kind::Pair);
    CHECK_THROWS_AS(parse_query(file.decls, "select * from"), ParseError);
}

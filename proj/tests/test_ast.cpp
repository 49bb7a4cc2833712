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

#include "doctest.h"
#include "sqlrw/ast.hpp"

using namespace sqlrw;

namespace {

Schema intS() { return Schema::leaf(BaseType::intType()); }
Schema rowS() { return Schema::node(intS(), intS()); }

Declarations decls() {
    Declarations d;
    d.tables["R"] = TableSig{rowS(), true};
    d.tables["S"] = TableSig{rowS(), true};
    d.tables["T1"] = TableSig{intS(), true};
    d.projs["p"] = ProjSig{rowS(), intS()};
    d.preds["b"] = Schema::node(Schema::empty(), rowS());
    d.exprs["e"] = ExprSig{BaseType::intType(), rowS()};
    d.fns["f"] = FnSig{{BaseType::intType()}, BaseType::intType()};
    d.schemaMetas.insert("A");
    return d;
}

}  // namespace

TEST_CASE("schema structure") {
    Schema s = rowS();
    CHECK(s.isNode());
    CHECK(s.left() == intS());
    CHECK(s.right() == intS());
    CHECK(s == Schema::node(intS(), intS()));
    CHECK(s != intS());
    CHECK(Schema::empty().isEmpty());
    CHECK(Schema::meta("A").metaName() == "A");
    CHECK(Schema::leaf(BaseType::stringType()).base() == BaseType::stringType());
    CHECK(Schema::leaf(BaseType::abstract("U")).base().name == "U");
    CHECK(rowS().show() == "(int, int)");
    CHECK(Schema::empty().show() == "<>");
}

TEST_CASE("projection typechecking") {
    Declarations d = decls();
    CHECK(proj_typecheck(d, Proj::star(), rowS()) == rowS());
    CHECK(proj_typecheck(d, Proj::left(), rowS()) == intS());
    CHECK(proj_typecheck(d, Proj::right(), rowS()) == intS());
    CHECK(proj_typecheck(d, Proj::empty(), rowS()) == Schema::empty());
    CHECK(proj_typecheck(d, Proj::pair(Proj::right(), Proj::left()), rowS()) == rowS());
    CHECK(proj_typecheck(d, Proj::compose(Proj::pair(Proj::left(), Proj::star()), Proj::right()),
                         rowS()) == rowS());
    CHECK(proj_typecheck(d, Proj::meta("p"), rowS()) == intS());

    // Descending into a scalar and meta signature mismatches both fail.
    CHECK_THROWS_AS(proj_typecheck(d, Proj::left(), intS()), TypeError);
    CHECK_THROWS_AS(proj_typecheck(d, Proj::meta("p"), intS()), TypeError);
    CHECK_THROWS_AS(proj_typecheck(d, Proj::meta("nope"), rowS()), TypeError);
}

TEST_CASE("expression and predicate typechecking") {
    Declarations d = decls();
    CHECK(expr_typecheck(d, Expr::var(Proj::left()), rowS()) == BaseType::intType());
    CHECK(expr_typecheck(d, Expr::apply("f", {Expr::var(Proj::left())}), rowS()) ==
          BaseType::intType());
    CHECK(expr_typecheck(d, Expr::meta("e"), rowS()) == BaseType::intType());
    CHECK(expr_typecheck(d, Expr::castExpr(Proj::left(), Expr::var(Proj::star())),
                         Schema::node(intS(), rowS())) == BaseType::intType());

    // A var path must land on a column, not a subtree.
    CHECK_THROWS_AS(expr_typecheck(d, Expr::var(Proj::star()), rowS()), TypeError);
    // Arity mismatch on a declared function.
    CHECK_THROWS_AS(expr_typecheck(d, Expr::apply("f", {}), rowS()), TypeError);
    // Aggregates take a query producing a single int column.
    CHECK(expr_typecheck(d, Expr::agg("sum", Query::select(Proj::left(), Query::table("R"))),
                         Schema::empty()) == BaseType::intType());
    CHECK_THROWS_AS(expr_typecheck(d, Expr::agg("sum", Query::table("R")), Schema::empty()),
                    TypeError);

    PredP eq = Pred::eq(Expr::var(Proj::left()), Expr::var(Proj::right()));
    CHECK_NOTHROW(pred_typecheck(d, eq, rowS()));
    CHECK_NOTHROW(pred_typecheck(d, Pred::conj(eq, Pred::negate(eq)), rowS()));
    CHECK_NOTHROW(pred_typecheck(d, Pred::meta("b"), Schema::node(Schema::empty(), rowS())));
    // Declared pred context must match the use site exactly.
    CHECK_THROWS_AS(pred_typecheck(d, Pred::meta("b"), rowS()), TypeError);
    // Comparing columns of different base types fails.
    Declarations ds = d;
    ds.tables["Str"] = TableSig{Schema::leaf(BaseType::stringType()), true};
    CHECK_THROWS_AS(
        pred_typecheck(ds, Pred::eq(Expr::var(Proj::left()), Expr::var(Proj::right())),
                       Schema::node(intS(), Schema::leaf(BaseType::stringType()))),
        TypeError);
}

TEST_CASE("query typechecking") {
    Declarations d = decls();
    QueryP R = Query::table("R");
    QueryP S = Query::table("S");
    Schema ctx = Schema::empty();

    CHECK(query_typecheck(d, R, ctx) == rowS());
    CHECK(query_typecheck(d, Query::select(Proj::left(), R), ctx) == intS());
    CHECK(query_typecheck(d, Query::product(R, S), ctx) == Schema::node(rowS(), rowS()));
    CHECK(query_typecheck(d, Query::unionAll(R, S), ctx) == rowS());
    CHECK(query_typecheck(d, Query::except(R, S), ctx) == rowS());
    CHECK(query_typecheck(d, Query::distinct(R), ctx) == rowS());
    PredP eq = Pred::eq(Expr::var(Proj::compose(Proj::right(), Proj::left())),
                        Expr::var(Proj::compose(Proj::right(), Proj::right())));
    CHECK(query_typecheck(d, Query::where(R, eq), ctx) == rowS());

    // Group by: output pairs the key column with the aggregate value.
    CHECK(query_typecheck(d, Query::groupBy(Proj::left(), "sum", Proj::right(), R), ctx) ==
          Schema::node(intS(), intS()));
    CHECK(query_typecheck(d, Query::groupBy(Proj::left(), "count", Proj::right(), R), ctx) ==
          Schema::node(intS(), intS()));

    CHECK_THROWS_AS(query_typecheck(d, Query::table("nope"), ctx), TypeError);
    CHECK_THROWS_AS(query_typecheck(d, Query::unionAll(R, Query::select(Proj::left(), S)), ctx),
                    TypeError);
    // Group-by key and aggregate argument must both be single attributes.
    CHECK_THROWS_AS(query_typecheck(d, Query::groupBy(Proj::star(), "sum", Proj::right(), R), ctx),
                    TypeError);
    CHECK_THROWS_AS(query_typecheck(d, Query::groupBy(Proj::left(), "sum", Proj::star(), R), ctx),
                    TypeError);
}

TEST_CASE("aggregate names") {
    for (const char* n : {"sum", "count", "avg", "max", "min"}) CHECK(is_aggregate_name(n));
    CHECK_FALSE(is_aggregate_name("median"));
    CHECK_FALSE(is_aggregate_name(""));
}

TEST_CASE("rule wellformedness") {
    Declarations d = decls();
    RewriteRule r;
    r.name = "same_table";
    r.decls = d;
    r.context = Schema::empty();
    r.lhs = Query::table("R");
    r.rhs = Query::table("R");
    CHECK_NOTHROW(rule_wellformed(r));

    RewriteRule bad = r;
    bad.rhs = Query::select(Proj::left(), Query::table("R"));
    CHECK_THROWS_AS(rule_wellformed(bad), TypeError);

    RewriteRule prem = r;
    prem.premises.push_back({Premise::Kind::Key, Proj::left(), nullptr, "R"});
    CHECK_NOTHROW(rule_wellformed(prem));
    RewriteRule badPrem = r;
    badPrem.premises.push_back({Premise::Kind::Key, Proj::left(), nullptr, "nope"});
    CHECK_THROWS_AS(rule_wellformed(badPrem), TypeError);
    RewriteRule badCol = r;
    badCol.premises.push_back({Premise::Kind::Key, Proj::compose(Proj::left(), Proj::left()),
                               nullptr, "R"});
    CHECK_THROWS_AS(rule_wellformed(badCol), TypeError);
}

TEST_CASE("printing and structural equality") {
    QueryP q = Query::where(
        Query::product(Query::table("R"), Query::distinct(Query::table("S"))),
        Pred::eq(Expr::var(Proj::compose(Proj::right(), Proj::compose(Proj::left(), Proj::left()))),
                 Expr::var(Proj::compose(Proj::right(),
                                         Proj::compose(Proj::right(), Proj::right())))));
    QueryP q2 = Query::where(
        Query::product(Query::table("R"), Query::distinct(Query::table("S"))),
        Pred::eq(Expr::var(Proj::compose(Proj::right(), Proj::compose(Proj::left(), Proj::left()))),
                 Expr::var(Proj::compose(Proj::right(),
                                         Proj::compose(Proj::right(), Proj::right())))));
    CHECK(same_query(q, q2));
    CHECK(show(q) == show(q2));
    CHECK_FALSE(same_query(q, Query::table("R")));
    // Tables and table metas share one namespace; only declarations
    // distinguish them, so they print alike.
    CHECK(show(Query::table("R")) == show(Query::tableMeta("R")));
    CHECK(show(Query::distinct(Query::table("R"))) != show(Query::table("R")));
}

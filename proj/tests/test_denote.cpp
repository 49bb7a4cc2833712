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
#include "sqlrw/denote.hpp"
#include "sqlrw/interp.hpp"
#include "sqlrw/rules.hpp"

using namespace sqlrw;

namespace {

Tup iv(long a) { return Tuple::scalar(Value::intV(a)); }
Tup pv(long a, long b) { return Tuple::pair(iv(a), iv(b)); }

// Small-valued instance: every value that queries can produce stays inside
// the enumerated tuple space, so bag comparisons below are complete.
Instance fixture() {
    Instance inst;
    Schema row = Schema::node(Schema::leaf(BaseType::intType()), Schema::leaf(BaseType::intType()));
    inst.decls.tables["R"] = TableSig{row, true};
    inst.decls.tables["S"] = TableSig{row, true};
    inst.domains["int"] = 3;
    Bag r;
    r.add(pv(1, 0), 1);
    r.add(pv(2, 0), 1);
    r.add(pv(2, 1), 2);
    inst.tables["R"] = r;
    Bag s;
    s.add(pv(2, 1), 1);
    s.add(pv(0, 2), 2);
    inst.tables["S"] = s;

    // Unreferenced padding table: widens the active domain so aggregate
    // outputs (sums and counts up to 4) stay inside the enumerated space.
    inst.decls.tables["Pad"] = TableSig{row, true};
    Bag pad;
    pad.add(pv(3, 4), 1);
    inst.tables["Pad"] = pad;
    return inst;
}

// Compares the denotation against direct evaluation at every context and
// output tuple.
void checkAgainstEval(const Instance& inst, const Schema& ctx, const QueryP& q) {
    TermCtx tc;
    Denoted den = denote_query(inst.decls, ctx, q, tc);
    for (const Tup& g : tuple_space(inst, ctx)) {
        Bag want = eval_query(inst, g, q);
        Nat total = 0;
        for (const Tup& t : tuple_space(inst, den.outSchema)) {
            std::map<VarId, Tup> env;
            env[den.g] = g;
            env[den.t] = t;
            Nat got = eval_uterm(inst, env, den.body);
            CHECK(got == want.mult(t));
            total += got;
        }
        // Every output the evaluator produced was visited above.
        Nat wantTotal = 0;
        for (const auto& [k, e] : want.m) wantTotal += e.second;
        CHECK(total == wantTotal);
    }
}

}  // namespace

TEST_CASE("denotation body is closed except for its two binders") {
    Instance inst = fixture();
    TermCtx tc;
    QueryP q = Query::where(
        Query::product(Query::table("R"), Query::table("S")),
        Pred::eq(Expr::var(Proj::compose(Proj::right(), Proj::compose(Proj::left(), Proj::left()))),
                 Expr::var(Proj::compose(Proj::right(),
                                         Proj::compose(Proj::right(), Proj::left())))));
    Denoted den = denote_query(inst.decls, Schema::empty(), q, tc);
    std::set<VarId> free;
    ut_free_vars(den.body, free);
    for (VarId v : free) CHECK((v == den.g || v == den.t));
}

TEST_CASE("denotation agrees with evaluation on composite queries") {
    Instance inst = fixture();
    Schema ctx = Schema::empty();
    QueryP R = Query::table("R");
    QueryP S = Query::table("S");

    checkAgainstEval(inst, ctx, R);
    checkAgainstEval(inst, ctx, Query::select(Proj::left(), R));
    checkAgainstEval(inst, ctx, Query::distinct(Query::select(Proj::right(), R)));
    checkAgainstEval(inst, ctx, Query::unionAll(R, S));
    checkAgainstEval(inst, ctx, Query::except(R, S));
    checkAgainstEval(inst, ctx, Query::product(R, S));
    checkAgainstEval(
        inst, ctx,
        Query::where(R, Pred::eq(Expr::var(Proj::compose(Proj::right(), Proj::left())),
                                 Expr::var(Proj::compose(Proj::right(), Proj::right())))));
    checkAgainstEval(inst, ctx, Query::select(Proj::pair(Proj::right(), Proj::left()), R));
}

TEST_CASE("denotation agrees with evaluation under a nonempty context") {
    Instance inst = fixture();
    Schema intS = Schema::leaf(BaseType::intType());
    // Rows whose first column equals the ambient context value.
    QueryP q = Query::where(Query::table("R"),
                            Pred::eq(Expr::var(Proj::left()),
                                     Expr::var(Proj::compose(Proj::right(), Proj::left()))));
    checkAgainstEval(inst, intS, q);
}

TEST_CASE("denotation agrees with evaluation on subqueries and grouping") {
    Instance inst = fixture();
    Schema ctx = Schema::empty();
    QueryP R = Query::table("R");
    QueryP S = Query::table("S");

    // EXISTS with a correlated join condition.
    PredP join = Pred::eq(
        Expr::var(Proj::compose(Proj::left(), Proj::compose(Proj::right(), Proj::left()))),
        Expr::var(Proj::compose(Proj::right(), Proj::left())));
    checkAgainstEval(inst, ctx, Query::where(R, Pred::exists(Query::where(S, join))));

    // Group-by goes through its subquery form inside the denotation too.
    checkAgainstEval(inst, ctx, Query::groupBy(Proj::left(), "sum", Proj::right(), R));
    checkAgainstEval(inst, ctx, Query::groupBy(Proj::left(), "count", Proj::right(), R));
}

TEST_CASE("predicate denotation is squash valued and matches the evaluator") {
    Instance inst = fixture();
    Schema row = Schema::node(Schema::leaf(BaseType::intType()), Schema::leaf(BaseType::intType()));
    PredP p = Pred::disj(Pred::eq(Expr::var(Proj::left()), Expr::var(Proj::right())),
                         Pred::negate(Pred::exists(Query::table("S"))));
    TermCtx tc;
    UT den = denote_pred(inst.decls, row, p, tc);
    REQUIRE(den->kind == UTerm::Kind::Lam);
    for (const Tup& gt : tuple_space(inst, row)) {
        std::map<VarId, Tup> env;
        env[den->binder] = gt;
        Nat got = eval_uterm(inst, env, den->u1);
        CHECK((got == 0 || got == 1));
        CHECK(got == (eval_pred(inst, p, gt) ? 1 : 0));
    }
}

TEST_CASE("denotation agrees with evaluation across corpus instances") {
    OracleConfig cfg;
    cfg.depth = 1;
    cfg.domain = 2;
    cfg.tuples = 1;
    cfg.mult = 2;
    for (const RewriteRule& rule : builtin_rules().rules) {
        CAPTURE(rule.name);
        TermCtx tc;
        Denoted dl = denote_query(rule.decls, rule.context, rule.lhs, tc);
        Denoted dr = denote_query(rule.decls, rule.context, rule.rhs, tc);
        long seen = 0;
        for_each_instance(rule, cfg, [&](Instance& inst) {
            for (const Tup& g : tuple_space(inst, rule.context)) {
                Bag wl, wr;
                try {
                    wl = eval_query(inst, g, rule.lhs);
                    wr = eval_query(inst, g, rule.rhs);
                } catch (const EvalError& e) {
                    if (e.code == EvalError::Code::EmptyAggregate) continue;
                    throw;
                }
                for (const Tup& t : tuple_space(inst, resolve_schema(inst, dl.outSchema))) {
                    std::map<VarId, Tup> env;
                    env[dl.g] = g;
                    env[dl.t] = t;
                    CHECK(eval_uterm(inst, env, dl.body) == wl.mult(t));
                    env.clear();
                    env[dr.g] = g;
                    env[dr.t] = t;
                    CHECK(eval_uterm(inst, env, dr.body) == wr.mult(t));
                }
            }
            return ++seen < 25;
        });
        CHECK(seen > 0);
    }
}

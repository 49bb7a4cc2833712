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
#include "sqlrw/interp.hpp"

using namespace sqlrw;

namespace {

Tup iv(long a) { return Tuple::scalar(Value::intV(a)); }
Tup pv(long a, long b) { return Tuple::pair(iv(a), iv(b)); }

Bag bagOf(std::initializer_list<std::pair<Tup, long>> rows) {
    Bag b;
    for (const auto& [t, m] : rows) b.add(t, m);
    return b;
}

// Two-column table R = { (1,40), (2,40), (2,50)*2 } with a constant fn c40.
// All expected bags below are computed by hand from this fixture.
Instance fixture() {
    Instance inst;
    Schema row = Schema::node(Schema::leaf(BaseType::intType()), Schema::leaf(BaseType::intType()));
    inst.decls.tables["R"] = TableSig{row, true};
    inst.decls.tables["S"] = TableSig{row, true};
    inst.decls.fns["c40"] = FnSig{{}, BaseType::intType()};
    inst.domains["int"] = 2;
    inst.tables["R"] = bagOf({{pv(1, 40), 1}, {pv(2, 40), 1}, {pv(2, 50), 2}});
    inst.tables["S"] = bagOf({{pv(2, 50), 1}, {pv(3, 9), 5}});
    inst.fns["c40"] = {{"()", Value::intV(40)}};
    return inst;
}

ExprP c40() { return Expr::apply("c40", {}); }

}  // namespace

TEST_CASE("aggregates over fixed bags") {
    Bag b = bagOf({{iv(40), 1}, {iv(50), 2}});
    CHECK(eval_agg("sum", b) == Value::intV(140));
    CHECK(eval_agg("count", b) == Value::intV(3));
    CHECK(eval_agg("max", b) == Value::intV(50));
    CHECK(eval_agg("min", b) == Value::intV(40));
    CHECK(eval_agg("avg", b) == Value::ratV(mpq_class(140, 3)));

    // An average with denominator one canonicalizes to an integer.
    Bag even = bagOf({{iv(40), 1}, {iv(50), 1}});
    CHECK(eval_agg("avg", even) == Value::intV(45));

    Bag empty;
    CHECK(eval_agg("sum", empty) == Value::intV(0));
    CHECK(eval_agg("count", empty) == Value::intV(0));
    for (const char* agg : {"max", "min", "avg"}) {
        try {
            eval_agg(agg, empty);
            FAIL("empty ", agg, " did not throw");
        } catch (const EvalError& e) {
            CHECK(e.code == EvalError::Code::EmptyAggregate);
        }
    }
}

TEST_CASE("bag semantics") {
    Bag b;
    CHECK(b.empty());
    b.add(iv(3), 2);
    b.add(iv(3), 1);
    b.add(iv(1), 1);
    CHECK(b.mult(iv(3)) == 3);
    CHECK(b.mult(iv(1)) == 1);
    CHECK(b.mult(iv(0)) == 0);
    CHECK(b == bagOf({{iv(1), 1}, {iv(3), 3}}));
    CHECK_FALSE(b == bagOf({{iv(1), 1}, {iv(3), 2}}));
}

TEST_CASE("query evaluator on the fixed instance") {
    Instance inst = fixture();
    Tup ctx = Tuple::unit();
    QueryP R = Query::table("R");
    QueryP S = Query::table("S");

    SUBCASE("table lookup") {
        CHECK(eval_query(inst, ctx, R) == inst.tables.at("R"));
    }
    SUBCASE("select first column folds multiplicities") {
        Bag got = eval_query(inst, ctx, Query::select(Proj::left(), R));
        CHECK(got == bagOf({{iv(1), 1}, {iv(2), 3}}));
    }
    SUBCASE("distinct caps multiplicities at one") {
        Bag got = eval_query(inst, ctx, Query::distinct(Query::select(Proj::left(), R)));
        CHECK(got == bagOf({{iv(1), 1}, {iv(2), 1}}));
    }
    SUBCASE("where filters on the (context, row) pair") {
        PredP p = Pred::eq(Expr::var(Proj::compose(Proj::right(), Proj::right())), c40());
        Bag got = eval_query(inst, ctx, Query::where(R, p));
        CHECK(got == bagOf({{pv(1, 40), 1}, {pv(2, 40), 1}}));
    }
    SUBCASE("product multiplies multiplicities") {
        Bag got = eval_query(inst, ctx, Query::product(R, R));
        Nat total = 0;
        for (const auto& [k, e] : got.m) total += e.second;
        CHECK(total == 16);
        CHECK(got.mult(Tuple::pair(pv(2, 50), pv(2, 50))) == 4);
        CHECK(got.mult(Tuple::pair(pv(1, 40), pv(2, 50))) == 2);
    }
    SUBCASE("union all adds, except drops rows present on the right") {
        Bag u = eval_query(inst, ctx, Query::unionAll(R, S));
        CHECK(u.mult(pv(2, 50)) == 3);
        CHECK(u.mult(pv(3, 9)) == 5);
        // A row keeps its full multiplicity only when the right side has none
        // of it; (2,50) appears in S, so it is dropped entirely.
        Bag d = eval_query(inst, ctx, Query::except(R, S));
        CHECK(d == bagOf({{pv(1, 40), 1}, {pv(2, 40), 1}}));
        Bag d2 = eval_query(inst, ctx, Query::except(S, R));
        CHECK(d2 == bagOf({{pv(3, 9), 5}}));
    }
    SUBCASE("group by sum") {
        Bag got = eval_query(inst, ctx, Query::groupBy(Proj::left(), "sum", Proj::right(), R));
        CHECK(got == bagOf({{pv(1, 40), 1}, {pv(2, 140), 1}}));
    }
    SUBCASE("group by count") {
        Bag got = eval_query(inst, ctx, Query::groupBy(Proj::left(), "count", Proj::right(), R));
        CHECK(got == bagOf({{pv(1, 1), 1}, {pv(2, 3), 1}}));
    }
    SUBCASE("exists sees the enclosing row") {
        // Rows of R whose first column occurs in S: (2,40) and (2,50)*2.
        PredP join = Pred::eq(Expr::var(Proj::compose(Proj::left(), Proj::compose(
                                            Proj::right(), Proj::left()))),
                              Expr::var(Proj::compose(Proj::right(), Proj::left())));
        QueryP sub = Query::where(S, join);
        Bag got = eval_query(inst, ctx, Query::where(R, Pred::exists(sub)));
        CHECK(got == bagOf({{pv(2, 40), 1}, {pv(2, 50), 2}}));
    }
}

TEST_CASE("projection application") {
    Instance inst = fixture();
    Tup t = Tuple::pair(pv(1, 2), iv(7));
    CHECK(tuple_key(apply_proj(inst, Proj::star(), t)) == tuple_key(t));
    CHECK(apply_proj(inst, Proj::right(), t)->v == Value::intV(7));
    CHECK(apply_proj(inst, Proj::compose(Proj::left(), Proj::right()), t)->v == Value::intV(2));
    Tup pr = apply_proj(inst, Proj::pair(Proj::right(), Proj::right()), t);
    CHECK(tuple_key(pr) == tuple_key(pv(7, 7)));
    CHECK(apply_proj(inst, Proj::empty(), t)->kind == Tuple::Kind::Unit);
    CHECK(apply_proj(inst, Proj::eval(c40()), t)->v == Value::intV(40));

    inst.projMetas["m"] = Proj::left();
    CHECK(tuple_key(apply_proj(inst, Proj::meta("m"), t)) == tuple_key(pv(1, 2)));
    CHECK_THROWS_AS(apply_proj(inst, Proj::meta("nope"), t), TypeError);
}

TEST_CASE("predicate evaluation") {
    Instance inst = fixture();
    Tup gt = pv(1, 1);
    PredP eq = Pred::eq(Expr::var(Proj::left()), Expr::var(Proj::right()));
    CHECK(eval_pred(inst, eq, gt));
    CHECK_FALSE(eval_pred(inst, eq, pv(1, 2)));
    CHECK(eval_pred(inst, Pred::tru(), gt));
    CHECK_FALSE(eval_pred(inst, Pred::fls(), gt));
    CHECK(eval_pred(inst, Pred::conj(eq, Pred::tru()), gt));
    CHECK_FALSE(eval_pred(inst, Pred::conj(eq, Pred::fls()), gt));
    CHECK(eval_pred(inst, Pred::disj(Pred::fls(), eq), gt));
    CHECK(eval_pred(inst, Pred::negate(Pred::fls()), gt));
    // Casting turns a predicate over the left component into one over the pair.
    CHECK(eval_pred(inst, Pred::castPred(Proj::left(), Pred::tru()), gt));

    inst.predMetas["b"] = {tuple_key(pv(1, 1))};
    CHECK(eval_pred(inst, Pred::meta("b"), pv(1, 1)));
    CHECK_FALSE(eval_pred(inst, Pred::meta("b"), pv(1, 2)));
}

TEST_CASE("tuple space enumeration") {
    Instance inst;
    Schema row = Schema::node(Schema::leaf(BaseType::intType()), Schema::leaf(BaseType::intType()));
    inst.decls.tables["T"] = TableSig{row, true};
    inst.domains["int"] = 2;
    inst.tables["T"] = bagOf({{pv(5, 0), 1}});

    // Base domain {0,1} plus the active value 5, so 3 x 3 pairs.
    std::vector<Tup> space = tuple_space(inst, row);
    CHECK(space.size() == 9);
    std::set<std::string> keys;
    for (const auto& t : space) keys.insert(tuple_key(t));
    CHECK(keys.size() == 9);
    CHECK(keys.count(tuple_key(pv(5, 5))) == 1);
    CHECK(keys.count(tuple_key(pv(0, 1))) == 1);

    // Deterministic order: a second enumeration is identical.
    std::vector<Tup> again = tuple_space(inst, row);
    REQUIRE(again.size() == space.size());
    for (size_t i = 0; i < space.size(); i++) CHECK(tuple_key(space[i]) == tuple_key(again[i]));

    Instance bare;
    try {
        tuple_space(bare, Schema::leaf(BaseType::intType()));
        FAIL("missing domain did not throw");
    } catch (const EvalError& e) {
        CHECK(e.code == EvalError::Code::InfiniteDomain);
    }
}

TEST_CASE("premise checks") {
    Instance inst = fixture();
    Premise keyLeft{Premise::Kind::Key, Proj::left(), nullptr, "R"};
    // R maps first column 2 to two different rows.
    CHECK_FALSE(premise_holds(inst, keyLeft));
    Premise keyS{Premise::Kind::Key, Proj::left(), nullptr, "S"};
    // S is duplicate-free only per row key; (3,9) has multiplicity 5.
    CHECK_FALSE(premise_holds(inst, keyS));

    inst.tables["K"] = bagOf({{pv(1, 40), 1}, {pv(2, 40), 1}});
    Premise keyK{Premise::Kind::Key, Proj::left(), nullptr, "K"};
    CHECK(premise_holds(inst, keyK));
    Premise keyKRight{Premise::Kind::Key, Proj::right(), nullptr, "K"};
    CHECK_FALSE(premise_holds(inst, keyKRight));

    // Functional dependency left -> right tolerates duplicates of whole rows.
    Premise fd{Premise::Kind::Fd, Proj::left(), Proj::right(), "R"};
    CHECK_FALSE(premise_holds(inst, fd));  // 2 maps to both 40 and 50
    Premise fdS{Premise::Kind::Fd, Proj::left(), Proj::right(), "S"};
    CHECK(premise_holds(inst, fdS));
}

TEST_CASE("semiring term evaluation") {
    Instance inst = fixture();
    TermCtx tc;
    Schema intS = Schema::leaf(BaseType::intType());
    std::map<VarId, Tup> env;

    CHECK(eval_uterm(inst, env, utZero()) == 0);
    CHECK(eval_uterm(inst, env, utOne()) == 1);
    CHECK(eval_uterm(inst, env, utPlus(utOne(), utOne())) == 2);
    CHECK(eval_uterm(inst, env, utTimes(utPlus(utOne(), utOne()), utPlus(utOne(), utOne()))) == 4);
    CHECK(eval_uterm(inst, env, utSquash(utPlus(utOne(), utOne()))) == 1);
    CHECK(eval_uterm(inst, env, utSquash(utZero())) == 0);
    CHECK(eval_uterm(inst, env, utNegate(utZero())) == 1);
    CHECK(eval_uterm(inst, env, utNegate(utPlus(utOne(), utOne()))) == 0);

    // Sigma sums the body across the binder's tuple space; on an instance
    // with no tables that space is exactly the base domain {0,1}.
    Instance bare;
    bare.domains["int"] = 2;
    VarId x = tc.fresh(intS);
    CHECK(eval_uterm(bare, env, utSigma(x, intS, utOne())) == 2);
    Schema pairS = Schema::node(intS, intS);
    VarId xp = tc.fresh(pairS);
    CHECK(eval_uterm(bare, env, utSigma(xp, pairS, utOne())) == 4);

    // An equality atom contributes one instance per diagonal element.
    VarId y = tc.fresh(intS);
    UT eqTerm = utSigma(y, intS, utEqAtom(ttVar(tc, y), ttVar(tc, y)));
    CHECK(eval_uterm(bare, env, eqTerm) == 2);

    // RelAtom multiplicity: rows of R at a bound tuple.
    Schema row = Schema::node(intS, intS);
    VarId r = tc.fresh(row);
    env[r] = pv(2, 50);
    CHECK(eval_uterm(inst, env, utRelAtom("R", ttVar(tc, r))) == 2);
    env[r] = pv(9, 9);
    CHECK(eval_uterm(inst, env, utRelAtom("R", ttVar(tc, r))) == 0);
}

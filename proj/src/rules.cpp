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

#include "sqlrw/rules.hpp"

#include "sqlrw/parser.hpp"

namespace sqlrw {

// ---------------------------------------------------------------------------
// Group-by elimination
// ---------------------------------------------------------------------------

namespace {

QueryP desugarQuery(const QueryP& q);
PredP desugarPred(const PredP& b);
ExprP desugarExpr(const ExprP& e);

ProjP desugarProj(const ProjP& p) {
    switch (p->kind) {
        case Proj::Kind::Star:
        case Proj::Kind::Left:
        case Proj::Kind::Right:
        case Proj::Kind::Empty:
        case Proj::Kind::Meta: return p;
        case Proj::Kind::Compose: return Proj::compose(desugarProj(p->a), desugarProj(p->b));
        case Proj::Kind::Pair: return Proj::pair(desugarProj(p->a), desugarProj(p->b));
        case Proj::Kind::Eval: return Proj::eval(desugarExpr(p->e));
    }
    throw Error("desugarProj: unreachable");
}

ExprP desugarExpr(const ExprP& e) {
    switch (e->kind) {
        case Expr::Kind::Var: return Expr::var(desugarProj(e->path));
        case Expr::Kind::Apply: {
            std::vector<ExprP> args;
            args.reserve(e->args.size());
            for (const auto& a : e->args) args.push_back(desugarExpr(a));
            return Expr::apply(e->name, std::move(args));
        }
        case Expr::Kind::Agg: return Expr::agg(e->name, desugarQuery(e->q));
        case Expr::Kind::CastExpr: return Expr::castExpr(desugarProj(e->path), desugarExpr(e->sub));
        case Expr::Kind::Meta: return e;
    }
    throw Error("desugarExpr: unreachable");
}

PredP desugarPred(const PredP& b) {
    switch (b->kind) {
        case Pred::Kind::Eq: return Pred::eq(desugarExpr(b->e1), desugarExpr(b->e2));
        case Pred::Kind::And: return Pred::conj(desugarPred(b->p1), desugarPred(b->p2));
        case Pred::Kind::Or: return Pred::disj(desugarPred(b->p1), desugarPred(b->p2));
        case Pred::Kind::Not: return Pred::negate(desugarPred(b->p1));
        case Pred::Kind::True:
        case Pred::Kind::False:
        case Pred::Kind::Meta: return b;
        case Pred::Kind::Exists: return Pred::exists(desugarQuery(b->q));
        case Pred::Kind::CastPred: return Pred::castPred(desugarProj(b->path), desugarPred(b->p1));
    }
    throw Error("desugarPred: unreachable");
}

QueryP desugarQuery(const QueryP& q) {
    switch (q->kind) {
        case Query::Kind::Table:
        case Query::Kind::TableMeta: return q;
        case Query::Kind::Select: return Query::select(desugarProj(q->proj), desugarQuery(q->q1));
        case Query::Kind::Product: return Query::product(desugarQuery(q->q1), desugarQuery(q->q2));
        case Query::Kind::Where: return Query::where(desugarQuery(q->q1), desugarPred(q->pred));
        case Query::Kind::UnionAll: return Query::unionAll(desugarQuery(q->q1), desugarQuery(q->q2));
        case Query::Kind::Except: return Query::except(desugarQuery(q->q1), desugarQuery(q->q2));
        case Query::Kind::Distinct: return Query::distinct(desugarQuery(q->q1));
        case Query::Kind::GroupBy: {
            QueryP src = desugarQuery(q->q1);
            ProjP key = desugarProj(q->proj);
            ProjP arg = desugarProj(q->aggArg);
            // The aggregate's subquery runs with the current source row as its
            // context, so left reaches the outer row and right the inner one.
            PredP sameKey = Pred::eq(Expr::var(Proj::compose(Proj::left(), key)),
                                     Expr::var(Proj::compose(Proj::right(), key)));
            QueryP inner = Query::select(arg, Query::where(src, sameKey));
            ProjP head = Proj::pair(key, Proj::eval(Expr::agg(q->aggName, inner)));
            return Query::distinct(Query::select(head, src));
        }
    }
    throw Error("desugarQuery: unreachable");
}

Schema tableSchema(const Declarations& d, const std::string& table) {
    auto it = d.tables.find(table);
    if (it == d.tables.end())
        throw TypeError(TypeError::Code::UnboundMeta, "undeclared table '" + table + "'");
    return it->second.schema;
}

// SELECT * FROM q equals the self-join of q on key projected to the left.
Constraint keyEquation(Premise prem, const QueryP& q, const ProjP& key, const Schema& out) {
    ProjP lk = Proj::compose(Proj::compose(Proj::right(), Proj::left()), key);
    ProjP rk = Proj::compose(Proj::compose(Proj::right(), Proj::right()), key);
    QueryP lhs = Query::select(Proj::star(), q);
    QueryP rhs = Query::select(
        Proj::left(), Query::where(Query::product(q, q), Pred::eq(Expr::var(lk), Expr::var(rk))));
    return Constraint{std::move(prem), std::move(lhs), std::move(rhs), out};
}

}  // namespace

QueryP desugar_groupby(const QueryP& q) { return desugarQuery(q); }

Constraint encode_key(const Declarations& d, const ProjP& k, const std::string& table) {
    Schema sigma = tableSchema(d, table);
    proj_typecheck(d, k, sigma);
    return keyEquation(Premise{Premise::Kind::Key, k, nullptr, table}, Query::table(table), k,
                       sigma);
}

Constraint encode_fd(const Declarations& d, const ProjP& a, const ProjP& b,
                     const std::string& table) {
    Schema sigma = tableSchema(d, table);
    Schema out = Schema::node(proj_typecheck(d, a, sigma), proj_typecheck(d, b, sigma));
    QueryP pairs = Query::distinct(Query::select(Proj::pair(a, b), Query::table(table)));
    return keyEquation(Premise{Premise::Kind::Fd, a, b, table}, pairs, Proj::left(), out);
}

QueryP index_def(const ProjP& a, const ProjP& k, const std::string& table) {
    return Query::select(Proj::pair(k, a), Query::table(table));
}

// ---------------------------------------------------------------------------
// Builtin corpus
// ---------------------------------------------------------------------------

namespace {

const char* kSharedDecls = R"dsl(
schema S1
schema S2
schema S3
table R (S1)
table S (S1)
table R2 (S2)
table R3 (S3)
proj p : S1 -> int
proj k : S1 -> int
proj a : S1 -> int
proj b0 : S1 -> int
proj c1 : S1 -> int
proj c2 : S1 -> int
proj c3 : S2 -> int
pred b over (<>, S1)
pred b1 over (<>, S1)
pred b2 over (<>, S1)
pred th over (<>, (S2, S1))
pred th1 over (<>, (S1, S2))
pred th2 over (<>, ((S1, S2), S3))
fn l () -> int
)dsl";

const char* kBuiltinRules = R"dsl(
-- basic --------------------------------------------------------------------

rule select_union_all_where
  category basic
  expect proved
select * from (R union all S) where b
equiv
(select * from R where b) union all (select * from S where b)
end

rule where_split_nested
  category basic
  expect proved
select * from R where b1 and b2
equiv
select * from (from R where b1) where b2
end

rule where_pushdown_product
  category basic
  expect proved
select * from R, R2 where castpred((left, right.left), b)
equiv
select * from (from R where b), R2
end

rule product_commute
  category basic
  expect proved
select (right.*, left.*) from S, R
equiv
from R, S
end

rule distinct_self_join_prune
  category basic
  expect proved
distinct select left.* from R, R where var(right.left.p) = var(right.right.p)
equiv
distinct select * from R
end

rule union_all_commute
  category basic
  provenance reconstructed
  expect proved
R union all S
equiv
S union all R
end

rule product_associate
  category basic
  provenance reconstructed
  expect proved
select ((left, right.left), right.right) from R, (from S, R2)
equiv
from R, S, R2
end

rule distinct_idempotent
  category basic
  provenance reconstructed
  expect proved
distinct (distinct R)
equiv
distinct R
end

-- aggregation --------------------------------------------------------------

rule groupby_filter_pushdown
  category aggregation
  expect proved
select * from (select k, sum(b0) from R group by k) where var(right.left) = l()
equiv
select k, sum(b0) from R where var(right.k) = l() group by k
end

-- subquery -----------------------------------------------------------------

rule exists_distinct_elim
  category subquery
  provenance reconstructed
  expect proved
select * from R where exists (distinct S)
equiv
select * from R where exists (S)
end

rule exists_union_split
  category subquery
  provenance reconstructed
  expect proved
select * from R where exists (S union all R)
equiv
select * from R where exists (S) or exists (R)
end

-- magicset -----------------------------------------------------------------

rule semijoin_introduce
  category magicset
  expect proved
select * from R2, R where th
equiv
select * from (R2 semijoin R on th), R where th
end

rule semijoin_push_join
  category magicset
  expect proved
(select * from R, R2 where th1) semijoin R3 on th2
equiv
(select * from R, (R2 semijoin (from R, R3) on castpred((left, (right.right.left, right.left)), th1) and castpred((left, ((right.right.left, right.left), right.right.right)), th2)) where th1) semijoin R3 on th2
end

rule semijoin_push_agg
  category magicset
  expect corroborated
(select c1, count(a) from R group by c1) semijoin R2 on var(right.left.left) = var(right.right.c3)
equiv
select c1, count(a) from (R semijoin R2 on var(right.left.c1) = var(right.right.c3)) group by c1
end

rule semijoin_idempotent
  category magicset
  provenance reconstructed
  expect proved
(R semijoin R2 on th1) semijoin R2 on th1
equiv
R semijoin R2 on th1
end

rule semijoin_union
  category magicset
  provenance reconstructed
  expect proved
(R union all S) semijoin R2 on th1
equiv
(R semijoin R2 on th1) union all (S semijoin R2 on th1)
end

rule semijoin_where
  category magicset
  provenance reconstructed
  expect proved
select * from (R semijoin R2 on th1) where b
equiv
(select * from R where b) semijoin R2 on th1
end

rule semijoin_distinct
  category magicset
  provenance reconstructed
  expect proved
distinct (R semijoin R2 on th1)
equiv
(distinct R) semijoin R2 on th1
end

-- index --------------------------------------------------------------------

rule index_lookup_intro
  category index
  expect proved
  assume key(k, R)
select * from R where var(right.a) = l()
equiv
select right.* from (select (k, a) from R), R where var(right.left.right) = l() and var(right.left.left) = var(right.right.k)
end

rule index_only_projection
  category index
  provenance reconstructed
  expect proved
select a from R
equiv
select right.* from (select (k, a) from R)
end

rule index_key_lookup
  category index
  provenance reconstructed
  expect proved
  assume key(k, R)
select * from R where var(right.k) = l()
equiv
select right.* from (select (k, a) from R), R where var(right.left.left) = l() and var(right.left.left) = var(right.right.k)
end

-- cq -----------------------------------------------------------------------

rule cq_self_join_fold
  category cq
  expect proved
distinct select left.c1 from R, R2 where var(right.left.c2) = var(right.right.c3)
equiv
distinct select left.left.c1 from (from R, R), R2 where var(right.left.left.c1) = var(right.left.right.c1) and var(right.left.left.c2) = var(right.right.c3)
end

rule cq_bag_product_commute
  category cq
  expect proved
select * from R, R where var(right.left.c1) = var(right.right.c2)
equiv
select (right.*, left.*) from R, R where var(right.left.c2) = var(right.right.c1)
end
)dsl";

const char* kSeededMutants = R"dsl(
-- Each rule below is wrong on purpose and must be refuted at default bounds.

rule q2q3_drop_distinct
  category basic
  provenance reconstructed
  expect refuted
select p from R
equiv
distinct select p from R
end

rule except_commute
  category basic
  provenance reconstructed
  expect refuted
R except S
equiv
S except R
end

rule index_drop_key
  category index
  provenance reconstructed
  expect refuted
select * from R where var(right.a) = l()
equiv
select right.* from (select (k, a) from R), R where var(right.left.right) = l() and var(right.left.left) = var(right.right.k)
end

rule pred_swap_asym
  category basic
  provenance reconstructed
  expect refuted
select * from R where b1
equiv
select * from R where b2
end

rule cq_drop_join_eq
  category cq
  provenance reconstructed
  expect refuted
distinct select left.c1 from R, R2 where var(right.left.c2) = var(right.right.c3)
equiv
distinct select left.left.c1 from (from R, R), R2 where var(right.left.left.c1) = var(right.left.right.c1)
end

rule groupby_filter_mutant
  category aggregation
  provenance reconstructed
  expect refuted
select * from (select k, sum(b0) from R group by k) where var(right.left) = l()
equiv
select k, sum(b0) from R where var(right.b0) = l() group by k
end
)dsl";

std::string joined(const char* rules) { return std::string(kSharedDecls) + rules; }

}  // namespace

const std::string& builtin_rules_text() {
    static const std::string text = joined(kBuiltinRules);
    return text;
}

const std::string& seeded_mutants_text() {
    static const std::string text = joined(kSeededMutants);
    return text;
}

RuleCorpus builtin_rules() {
    RuleCorpus out;
    out.rules = parse_rule_file(builtin_rules_text()).rules;
    for (const auto& r : out.rules) out.categoryCounts[r.category]++;
    return out;
}

std::vector<RewriteRule> seeded_mutants() { return parse_rule_file(seeded_mutants_text()).rules; }

}  // namespace sqlrw

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

#include "sqlrw/denote.hpp"

#include "sqlrw/rules.hpp"

namespace sqlrw {

TT denote_proj_at(const Declarations& d, const ProjP& p, TermCtx& tc, TT t) {
    switch (p->kind) {
        case Proj::Kind::Star: return t;
        case Proj::Kind::Left: return ttFst(std::move(t));
        case Proj::Kind::Right: return ttSnd(std::move(t));
        case Proj::Kind::Empty: return ttUnit();
        case Proj::Kind::Compose:
            return denote_proj_at(d, p->b, tc, denote_proj_at(d, p->a, tc, std::move(t)));
        case Proj::Kind::Pair:
            return ttPair(denote_proj_at(d, p->a, tc, t), denote_proj_at(d, p->b, tc, t));
        case Proj::Kind::Eval: return denote_expr_at(d, p->e, tc, std::move(t));
        case Proj::Kind::Meta: {
            const ProjSig& sig = d.proj(p->name);
            if (!(sig.from == t->schema))
                throw Error("projection '" + p->name + "' applied off-schema: " + t->schema.show());
            return ttProjMeta(p->name, std::move(t), sig.to);
        }
    }
    throw Error("denote_proj_at: unreachable");
}

TT denote_expr_at(const Declarations& d, const ExprP& e, TermCtx& tc, TT ct) {
    switch (e->kind) {
        case Expr::Kind::Var: return denote_proj_at(d, e->path, tc, std::move(ct));
        case Expr::Kind::Apply: {
            std::vector<TT> args;
            args.reserve(e->args.size());
            for (const ExprP& x : e->args) args.push_back(denote_expr_at(d, x, tc, ct));
            return ttFnApply(e->name, std::move(args), d.fn(e->name).ret);
        }
        case Expr::Kind::Agg: {
            Schema ctxSchema = ct->schema;
            Schema out = query_typecheck(d, e->q, ctxSchema);
            VarId binder = tc.fresh(out);
            UT body = denote_query_at(d, ctxSchema, e->q, tc, ct, ttVar(tc, binder));
            return ttAggApply(e->name, out, binder, std::move(body));
        }
        case Expr::Kind::CastExpr:
            return denote_expr_at(d, e->sub, tc, denote_proj_at(d, e->path, tc, std::move(ct)));
        case Expr::Kind::Meta: return ttExprMeta(e->name, std::move(ct), d.expr(e->name).type);
    }
    throw Error("denote_expr_at: unreachable");
}

UT denote_pred_at(const Declarations& d, const PredP& b, TermCtx& tc, TT gt) {
    switch (b->kind) {
        case Pred::Kind::Eq:
            return utEqAtom(denote_expr_at(d, b->e1, tc, gt), denote_expr_at(d, b->e2, tc, gt));
        case Pred::Kind::And:
            return utTimes(denote_pred_at(d, b->p1, tc, gt), denote_pred_at(d, b->p2, tc, gt));
        case Pred::Kind::Or:
            return utSquash(utPlus(denote_pred_at(d, b->p1, tc, gt), denote_pred_at(d, b->p2, tc, gt)));
        case Pred::Kind::Not: return utNegate(denote_pred_at(d, b->p1, tc, gt));
        case Pred::Kind::True: return utOne();
        case Pred::Kind::False: return utZero();
        case Pred::Kind::Exists: {
            Schema ctxSchema = gt->schema;
            Schema out = query_typecheck(d, b->q, ctxSchema);
            VarId binder = tc.fresh(out);
            UT body = denote_query_at(d, ctxSchema, b->q, tc, gt, ttVar(tc, binder));
            return utSquash(utSigma(binder, out, std::move(body)));
        }
        case Pred::Kind::CastPred:
            return denote_pred_at(d, b->p1, tc, denote_proj_at(d, b->path, tc, std::move(gt)));
        case Pred::Kind::Meta: return utPredAtom(b->name, std::move(gt));
    }
    throw Error("denote_pred_at: unreachable");
}

UT denote_query_at(const Declarations& d, const Schema& ctx, const QueryP& q, TermCtx& tc, TT g, TT t) {
    switch (q->kind) {
        case Query::Kind::Table:
        case Query::Kind::TableMeta: return utRelAtom(q->name, std::move(t));
        case Query::Kind::Select: {
            Schema src = query_typecheck(d, q->q1, ctx);
            VarId tp = tc.fresh(src);
            TT tpv = ttVar(tc, tp);
            UT eq = utEqAtom(denote_proj_at(d, q->proj, tc, tpv), t);
            UT inner = denote_query_at(d, ctx, q->q1, tc, std::move(g), tpv);
            return utSigma(tp, src, utTimes(std::move(eq), std::move(inner)));
        }
        case Query::Kind::Product:
            return utTimes(denote_query_at(d, ctx, q->q1, tc, g, ttFst(t)),
                           denote_query_at(d, ctx, q->q2, tc, g, ttSnd(t)));
        case Query::Kind::Where: {
            UT inner = denote_query_at(d, ctx, q->q1, tc, g, t);
            UT pred = denote_pred_at(d, q->pred, tc, ttPair(std::move(g), std::move(t)));
            return utTimes(std::move(inner), std::move(pred));
        }
        case Query::Kind::UnionAll:
            return utPlus(denote_query_at(d, ctx, q->q1, tc, g, t),
                          denote_query_at(d, ctx, q->q2, tc, g, t));
        case Query::Kind::Except: {
            UT l = denote_query_at(d, ctx, q->q1, tc, g, t);
            UT r = denote_query_at(d, ctx, q->q2, tc, std::move(g), std::move(t));
            return utTimes(std::move(l), utNegate(utSquash(std::move(r))));
        }
        case Query::Kind::Distinct:
            return utSquash(denote_query_at(d, ctx, q->q1, tc, std::move(g), std::move(t)));
        case Query::Kind::GroupBy:
            return denote_query_at(d, ctx, desugar_groupby(q), tc, std::move(g), std::move(t));
    }
    throw Error("denote_query_at: unreachable");
}

Denoted denote_query(const Declarations& d, const Schema& ctx, const QueryP& q, TermCtx& tc) {
    Denoted r;
    r.ctxSchema = ctx;
    r.outSchema = query_typecheck(d, q, ctx);
    r.g = tc.fresh(r.ctxSchema);
    r.t = tc.fresh(r.outSchema);
    r.body = denote_query_at(d, ctx, q, tc, ttVar(tc, r.g), ttVar(tc, r.t));
    return r;
}

UT denote_pred(const Declarations& d, const Schema& ctx, const PredP& b, TermCtx& tc) {
    VarId gt = tc.fresh(ctx);
    UT body = denote_pred_at(d, b, tc, ttVar(tc, gt));
    return utLam(gt, ctx, std::move(body));
}

}  // namespace sqlrw

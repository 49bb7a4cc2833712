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

#include "sqlrw/term.hpp"

#include <sstream>

namespace sqlrw {

const Schema& TermCtx::schemaOf(VarId v) const {
    auto it = schemas.find(v);
    if (it == schemas.end())
        throw Error("unknown term variable t" + std::to_string(v));
    return it->second;
}

static TT mkTT(TupleTerm t) { return std::make_shared<const TupleTerm>(std::move(t)); }

TT ttUnit() {
    static const TT u = mkTT({TupleTerm::Kind::Unit, -1, nullptr, nullptr, {}, {}, Schema::empty(), -1,
                              nullptr, Schema::empty()});
    return u;
}

static TT withSchema(TupleTerm t, Schema s) {
    if (s.isEmpty()) return ttUnit();
    t.schema = std::move(s);
    return mkTT(std::move(t));
}

TT ttVar(const TermCtx& ctx, VarId v) {
    return withSchema({TupleTerm::Kind::Var, v, nullptr, nullptr, {}, {}, {}, -1, nullptr, {}},
                      ctx.schemaOf(v));
}

TT ttFst(TT t) {
    if (t->kind == TupleTerm::Kind::Pair) return t->a;
    if (!t->schema.isNode()) throw Error("fst of non-pair term");
    Schema s = t->schema.left();
    return withSchema({TupleTerm::Kind::Fst, -1, std::move(t), nullptr, {}, {}, {}, -1, nullptr, {}},
                      std::move(s));
}

TT ttSnd(TT t) {
    if (t->kind == TupleTerm::Kind::Pair) return t->b;
    if (!t->schema.isNode()) throw Error("snd of non-pair term");
    Schema s = t->schema.right();
    return withSchema({TupleTerm::Kind::Snd, -1, std::move(t), nullptr, {}, {}, {}, -1, nullptr, {}},
                      std::move(s));
}

TT ttPair(TT a, TT b) {
    if (a->kind == TupleTerm::Kind::Fst && b->kind == TupleTerm::Kind::Snd &&
        tt_key(a->a) == tt_key(b->a))
        return a->a;
    Schema s = Schema::node(a->schema, b->schema);
    return withSchema({TupleTerm::Kind::Pair, -1, std::move(a), std::move(b), {}, {}, {}, -1, nullptr, {}},
                      std::move(s));
}

TT ttProjMeta(std::string name, TT arg, Schema to) {
    return withSchema(
        {TupleTerm::Kind::ProjMeta, -1, std::move(arg), nullptr, std::move(name), {}, {}, -1, nullptr, {}},
        std::move(to));
}

TT ttFnApply(std::string name, std::vector<TT> args, BaseType ret) {
    return withSchema({TupleTerm::Kind::FnApply, -1, nullptr, nullptr, std::move(name), std::move(args),
                       {}, -1, nullptr, {}},
                      Schema::leaf(std::move(ret)));
}

TT ttAggApply(std::string name, Schema aggSchema, VarId binder, UT body) {
    return withSchema({TupleTerm::Kind::AggApply, -1, nullptr, nullptr, std::move(name), {},
                       std::move(aggSchema), binder, std::move(body), {}},
                      Schema::leaf(BaseType::intType()));
}

TT ttExprMeta(std::string name, TT arg, BaseType type) {
    return withSchema(
        {TupleTerm::Kind::ExprMeta, -1, std::move(arg), nullptr, std::move(name), {}, {}, -1, nullptr, {}},
        Schema::leaf(std::move(type)));
}

static UT mkUT(UTerm u) { return std::make_shared<const UTerm>(std::move(u)); }

UT utZero() {
    static const UT z = mkUT({UTerm::Kind::Zero, nullptr, nullptr, -1, {}, {}, nullptr, nullptr});
    return z;
}
UT utOne() {
    static const UT o = mkUT({UTerm::Kind::One, nullptr, nullptr, -1, {}, {}, nullptr, nullptr});
    return o;
}

UT utPlus(UT a, UT b) {
    if (a->kind == UTerm::Kind::Zero) return b;
    if (b->kind == UTerm::Kind::Zero) return a;
    return mkUT({UTerm::Kind::Plus, std::move(a), std::move(b), -1, {}, {}, nullptr, nullptr});
}

UT utTimes(UT a, UT b) {
    if (a->kind == UTerm::Kind::Zero || b->kind == UTerm::Kind::Zero) return utZero();
    if (a->kind == UTerm::Kind::One) return b;
    if (b->kind == UTerm::Kind::One) return a;
    return mkUT({UTerm::Kind::Times, std::move(a), std::move(b), -1, {}, {}, nullptr, nullptr});
}

UT utSquash(UT a) {
    switch (a->kind) {
        case UTerm::Kind::Zero:
        case UTerm::Kind::One:
        case UTerm::Kind::Squash:
        case UTerm::Kind::Negate:
        case UTerm::Kind::EqAtom:
        case UTerm::Kind::PredAtom: return a;
        default: break;
    }
    return mkUT({UTerm::Kind::Squash, std::move(a), nullptr, -1, {}, {}, nullptr, nullptr});
}

UT utNegate(UT a) {
    if (a->kind == UTerm::Kind::Zero) return utOne();
    if (a->kind == UTerm::Kind::One) return utZero();
    return mkUT({UTerm::Kind::Negate, std::move(a), nullptr, -1, {}, {}, nullptr, nullptr});
}

UT utSigma(VarId binder, Schema s, UT body) {
    if (s.isEmpty()) return ut_subst(body, {{binder, ttUnit()}});
    if (body->kind == UTerm::Kind::Zero) return utZero();
    return mkUT({UTerm::Kind::Sigma, std::move(body), nullptr, binder, std::move(s), {}, nullptr, nullptr});
}

UT utLam(VarId binder, Schema s, UT body) {
    return mkUT({UTerm::Kind::Lam, std::move(body), nullptr, binder, std::move(s), {}, nullptr, nullptr});
}

UT utRelAtom(std::string table, TT t) {
    return mkUT({UTerm::Kind::RelAtom, nullptr, nullptr, -1, {}, std::move(table), std::move(t), nullptr});
}

UT utEqAtom(TT a, TT b) {
    // Pair-schema equalities split component-wise; empty-schema equality is 1.
    const Schema& s = a->schema;
    if (!(s == b->schema)) throw Error("eq between different schemas");
    if (s.isEmpty()) return utOne();
    if (s.isNode()) return utTimes(utEqAtom(ttFst(a), ttFst(b)), utEqAtom(ttSnd(a), ttSnd(b)));
    if (tt_key(a) == tt_key(b)) return utOne();
    return mkUT({UTerm::Kind::EqAtom, nullptr, nullptr, -1, {}, {}, std::move(a), std::move(b)});
}

UT utPredAtom(std::string pred, TT t) {
    return mkUT({UTerm::Kind::PredAtom, nullptr, nullptr, -1, {}, std::move(pred), std::move(t), nullptr});
}

// ---------------------------------------------------------------------------
// Substitution
// ---------------------------------------------------------------------------

TT tt_subst(const TT& t, const std::map<VarId, TT>& sub) {
    switch (t->kind) {
        case TupleTerm::Kind::Var: {
            auto it = sub.find(t->var);
            return it == sub.end() ? t : it->second;
        }
        case TupleTerm::Kind::Unit: return t;
        case TupleTerm::Kind::Fst: return ttFst(tt_subst(t->a, sub));
        case TupleTerm::Kind::Snd: return ttSnd(tt_subst(t->a, sub));
        case TupleTerm::Kind::Pair: return ttPair(tt_subst(t->a, sub), tt_subst(t->b, sub));
        case TupleTerm::Kind::ProjMeta: return ttProjMeta(t->name, tt_subst(t->a, sub), t->schema);
        case TupleTerm::Kind::FnApply: {
            std::vector<TT> args;
            args.reserve(t->args.size());
            for (const TT& x : t->args) args.push_back(tt_subst(x, sub));
            return ttFnApply(t->name, std::move(args), t->schema.base());
        }
        case TupleTerm::Kind::AggApply:
            return ttAggApply(t->name, t->aggSchema, t->aggBinder, ut_subst(t->aggBody, sub));
        case TupleTerm::Kind::ExprMeta:
            return ttExprMeta(t->name, tt_subst(t->a, sub), t->schema.base());
    }
    throw Error("tt_subst: unreachable");
}

UT ut_subst(const UT& u, const std::map<VarId, TT>& sub) {
    switch (u->kind) {
        case UTerm::Kind::Zero:
        case UTerm::Kind::One: return u;
        case UTerm::Kind::Plus: return utPlus(ut_subst(u->u1, sub), ut_subst(u->u2, sub));
        case UTerm::Kind::Times: return utTimes(ut_subst(u->u1, sub), ut_subst(u->u2, sub));
        case UTerm::Kind::Squash: return utSquash(ut_subst(u->u1, sub));
        case UTerm::Kind::Negate: return utNegate(ut_subst(u->u1, sub));
        case UTerm::Kind::Sigma: return utSigma(u->binder, u->binderSchema, ut_subst(u->u1, sub));
        case UTerm::Kind::Lam: return utLam(u->binder, u->binderSchema, ut_subst(u->u1, sub));
        case UTerm::Kind::RelAtom: return utRelAtom(u->name, tt_subst(u->t1, sub));
        case UTerm::Kind::EqAtom: return utEqAtom(tt_subst(u->t1, sub), tt_subst(u->t2, sub));
        case UTerm::Kind::PredAtom: return utPredAtom(u->name, tt_subst(u->t1, sub));
    }
    throw Error("ut_subst: unreachable");
}

// ---------------------------------------------------------------------------
// Free variables
// ---------------------------------------------------------------------------

void tt_free_vars(const TT& t, std::set<VarId>& out) {
    switch (t->kind) {
        case TupleTerm::Kind::Var: out.insert(t->var); return;
        case TupleTerm::Kind::Unit: return;
        case TupleTerm::Kind::Fst:
        case TupleTerm::Kind::Snd:
        case TupleTerm::Kind::ProjMeta:
        case TupleTerm::Kind::ExprMeta: tt_free_vars(t->a, out); return;
        case TupleTerm::Kind::Pair:
            tt_free_vars(t->a, out);
            tt_free_vars(t->b, out);
            return;
        case TupleTerm::Kind::FnApply:
            for (const TT& x : t->args) tt_free_vars(x, out);
            return;
        case TupleTerm::Kind::AggApply: {
            std::set<VarId> inner;
            ut_free_vars(t->aggBody, inner);
            inner.erase(t->aggBinder);
            out.insert(inner.begin(), inner.end());
            return;
        }
    }
}

void ut_free_vars(const UT& u, std::set<VarId>& out) {
    switch (u->kind) {
        case UTerm::Kind::Zero:
        case UTerm::Kind::One: return;
        case UTerm::Kind::Plus:
        case UTerm::Kind::Times:
            ut_free_vars(u->u1, out);
            ut_free_vars(u->u2, out);
            return;
        case UTerm::Kind::Squash:
        case UTerm::Kind::Negate: ut_free_vars(u->u1, out); return;
        case UTerm::Kind::Sigma:
        case UTerm::Kind::Lam: {
            std::set<VarId> inner;
            ut_free_vars(u->u1, inner);
            inner.erase(u->binder);
            out.insert(inner.begin(), inner.end());
            return;
        }
        case UTerm::Kind::RelAtom:
        case UTerm::Kind::PredAtom: tt_free_vars(u->t1, out); return;
        case UTerm::Kind::EqAtom:
            tt_free_vars(u->t1, out);
            tt_free_vars(u->t2, out);
            return;
    }
}

// ---------------------------------------------------------------------------
// Structural keys and pretty-printing
// ---------------------------------------------------------------------------

static void ttKeyInto(const TT& t, std::ostringstream& out) {
    switch (t->kind) {
        case TupleTerm::Kind::Var: out << 'V' << t->var; return;
        case TupleTerm::Kind::Unit: out << 'U'; return;
        case TupleTerm::Kind::Fst:
            out << "1(";
            ttKeyInto(t->a, out);
            out << ')';
            return;
        case TupleTerm::Kind::Snd:
            out << "2(";
            ttKeyInto(t->a, out);
            out << ')';
            return;
        case TupleTerm::Kind::Pair:
            out << "P(";
            ttKeyInto(t->a, out);
            out << ',';
            ttKeyInto(t->b, out);
            out << ')';
            return;
        case TupleTerm::Kind::ProjMeta:
            out << "M:" << t->name << '(';
            ttKeyInto(t->a, out);
            out << ')';
            return;
        case TupleTerm::Kind::FnApply: {
            out << "F:" << t->name << '(';
            bool first = true;
            for (const TT& x : t->args) {
                if (!first) out << ',';
                first = false;
                ttKeyInto(x, out);
            }
            out << ')';
            return;
        }
        case TupleTerm::Kind::AggApply:
            out << "A:" << t->name << '[' << t->aggSchema.show() << ";V" << t->aggBinder << ';'
                << ut_key(t->aggBody) << ']';
            return;
        case TupleTerm::Kind::ExprMeta:
            out << "E:" << t->name << '(';
            ttKeyInto(t->a, out);
            out << ')';
            return;
    }
}

static void utKeyInto(const UT& u, std::ostringstream& out) {
    switch (u->kind) {
        case UTerm::Kind::Zero: out << '0'; return;
        case UTerm::Kind::One: out << '1'; return;
        case UTerm::Kind::Plus:
            out << "+(";
            utKeyInto(u->u1, out);
            out << ',';
            utKeyInto(u->u2, out);
            out << ')';
            return;
        case UTerm::Kind::Times:
            out << "*(";
            utKeyInto(u->u1, out);
            out << ',';
            utKeyInto(u->u2, out);
            out << ')';
            return;
        case UTerm::Kind::Squash:
            out << "|(";
            utKeyInto(u->u1, out);
            out << ')';
            return;
        case UTerm::Kind::Negate:
            out << "!(";
            utKeyInto(u->u1, out);
            out << ')';
            return;
        case UTerm::Kind::Sigma:
            out << "S[V" << u->binder << ':' << u->binderSchema.show() << "](";
            utKeyInto(u->u1, out);
            out << ')';
            return;
        case UTerm::Kind::Lam:
            out << "L[V" << u->binder << ':' << u->binderSchema.show() << "](";
            utKeyInto(u->u1, out);
            out << ')';
            return;
        case UTerm::Kind::RelAtom:
            out << "R:" << u->name << '(';
            ttKeyInto(u->t1, out);
            out << ')';
            return;
        case UTerm::Kind::EqAtom:
            out << "=(";
            ttKeyInto(u->t1, out);
            out << ',';
            ttKeyInto(u->t2, out);
            out << ')';
            return;
        case UTerm::Kind::PredAtom:
            out << "B:" << u->name << '(';
            ttKeyInto(u->t1, out);
            out << ')';
            return;
    }
}

std::string tt_key(const TT& t) {
    std::ostringstream out;
    ttKeyInto(t, out);
    return out.str();
}

std::string ut_key(const UT& u) {
    std::ostringstream out;
    utKeyInto(u, out);
    return out.str();
}

static void ttShowInto(const TT& t, std::ostringstream& out) {
    switch (t->kind) {
        case TupleTerm::Kind::Var: out << 't' << t->var; return;
        case TupleTerm::Kind::Unit: out << "<>"; return;
        case TupleTerm::Kind::Fst:
            ttShowInto(t->a, out);
            out << ".1";
            return;
        case TupleTerm::Kind::Snd:
            ttShowInto(t->a, out);
            out << ".2";
            return;
        case TupleTerm::Kind::Pair:
            out << '(';
            ttShowInto(t->a, out);
            out << ", ";
            ttShowInto(t->b, out);
            out << ')';
            return;
        case TupleTerm::Kind::ProjMeta:
            out << t->name << '(';
            ttShowInto(t->a, out);
            out << ')';
            return;
        case TupleTerm::Kind::FnApply: {
            out << t->name << '(';
            bool first = true;
            for (const TT& x : t->args) {
                if (!first) out << ", ";
                first = false;
                ttShowInto(x, out);
            }
            out << ')';
            return;
        }
        case TupleTerm::Kind::AggApply:
            out << t->name << "(λ t" << t->aggBinder << ". " << show(t->aggBody) << ')';
            return;
        case TupleTerm::Kind::ExprMeta:
            out << t->name << '(';
            ttShowInto(t->a, out);
            out << ')';
            return;
    }
}

// precedence: plus = 0, times = 1, atoms = 2
static void utShowInto(const UT& u, std::ostringstream& out, int parentPrec) {
    auto wrap = [&](int prec, auto&& body) {
        if (prec < parentPrec) {
            out << '(';
            body();
            out << ')';
        } else {
            body();
        }
    };
    switch (u->kind) {
        case UTerm::Kind::Zero: out << '0'; return;
        case UTerm::Kind::One: out << '1'; return;
        case UTerm::Kind::Plus:
            wrap(0, [&] {
                utShowInto(u->u1, out, 0);
                out << " + ";
                utShowInto(u->u2, out, 1);
            });
            return;
        case UTerm::Kind::Times:
            wrap(1, [&] {
                utShowInto(u->u1, out, 1);
                out << " × ";
                utShowInto(u->u2, out, 2);
            });
            return;
        case UTerm::Kind::Squash:
            out << "‖";
            utShowInto(u->u1, out, 0);
            out << "‖";
            return;
        case UTerm::Kind::Negate:
            out << "¬(";
            utShowInto(u->u1, out, 0);
            out << ')';
            return;
        case UTerm::Kind::Sigma:
            wrap(0, [&] {
                out << "Σ t" << u->binder << ':' << u->binderSchema.show() << ". ";
                utShowInto(u->u1, out, 0);
            });
            return;
        case UTerm::Kind::Lam:
            wrap(0, [&] {
                out << "λ t" << u->binder << ':' << u->binderSchema.show() << ". ";
                utShowInto(u->u1, out, 0);
            });
            return;
        case UTerm::Kind::RelAtom:
            out << u->name << '(';
            ttShowInto(u->t1, out);
            out << ')';
            return;
        case UTerm::Kind::EqAtom:
            out << '(';
            ttShowInto(u->t1, out);
            out << " = ";
            ttShowInto(u->t2, out);
            out << ')';
            return;
        case UTerm::Kind::PredAtom:
            out << u->name << '(';
            ttShowInto(u->t1, out);
            out << ')';
            return;
    }
}

std::string show(const TT& t) {
    std::ostringstream out;
    ttShowInto(t, out);
    return out.str();
}

std::string show(const UT& u) {
    std::ostringstream out;
    utShowInto(u, out, 0);
    return out.str();
}

}  // namespace sqlrw

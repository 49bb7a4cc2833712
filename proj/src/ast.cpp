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

#include "sqlrw/ast.hpp"

#include <sstream>

namespace sqlrw {

// ---------------------------------------------------------------------------
// BaseType / Schema
// ---------------------------------------------------------------------------

std::string BaseType::show() const {
    switch (kind) {
        case BaseKind::Int: return "int";
        case BaseKind::Bool: return "bool";
        case BaseKind::String: return "string";
        case BaseKind::Abstract: return name;
    }
    return "?";
}

std::shared_ptr<const Schema::Rep> Schema::emptyRep() {
    static const auto rep = std::make_shared<const Rep>(Rep{Kind::Empty, {}, nullptr, nullptr, {}});
    return rep;
}

Schema Schema::leaf(BaseType t) {
    return Schema(std::make_shared<const Rep>(Rep{Kind::Leaf, std::move(t), nullptr, nullptr, {}}));
}

Schema Schema::node(Schema l, Schema r) {
    return Schema(std::make_shared<const Rep>(Rep{Kind::Node, {}, l.rep_, r.rep_, {}}));
}

Schema Schema::meta(std::string name) {
    return Schema(std::make_shared<const Rep>(Rep{Kind::Meta, {}, nullptr, nullptr, std::move(name)}));
}

const BaseType& Schema::base() const {
    if (!isLeaf()) throw Error("schema: base() on non-leaf");
    return rep_->base;
}

Schema Schema::left() const {
    if (!isNode()) throw Error("schema: left() on non-node");
    return Schema(rep_->l);
}

Schema Schema::right() const {
    if (!isNode()) throw Error("schema: right() on non-node");
    return Schema(rep_->r);
}

const std::string& Schema::metaName() const {
    if (!isMeta()) throw Error("schema: metaName() on non-meta");
    return rep_->name;
}

bool Schema::operator==(const Schema& o) const {
    if (rep_ == o.rep_) return true;
    if (rep_->kind != o.rep_->kind) return false;
    switch (rep_->kind) {
        case Kind::Empty: return true;
        case Kind::Leaf: return rep_->base == o.rep_->base;
        case Kind::Meta: return rep_->name == o.rep_->name;
        case Kind::Node:
            return Schema(rep_->l) == Schema(o.rep_->l) && Schema(rep_->r) == Schema(o.rep_->r);
    }
    return false;
}

std::string Schema::show() const {
    switch (kind()) {
        case Kind::Empty: return "<>";
        case Kind::Leaf: return base().show();
        case Kind::Meta: return metaName();
        case Kind::Node: return "(" + left().show() + ", " + right().show() + ")";
    }
    return "?";
}

std::string show(const Schema& s) { return s.show(); }

// ---------------------------------------------------------------------------
// AST factories
// ---------------------------------------------------------------------------

static ProjP mkProj(Proj p) { return std::make_shared<const Proj>(std::move(p)); }

ProjP Proj::star() {
    static const ProjP p = mkProj({Kind::Star, nullptr, nullptr, nullptr, {}});
    return p;
}
ProjP Proj::left() {
    static const ProjP p = mkProj({Kind::Left, nullptr, nullptr, nullptr, {}});
    return p;
}
ProjP Proj::right() {
    static const ProjP p = mkProj({Kind::Right, nullptr, nullptr, nullptr, {}});
    return p;
}
ProjP Proj::empty() {
    static const ProjP p = mkProj({Kind::Empty, nullptr, nullptr, nullptr, {}});
    return p;
}
ProjP Proj::compose(ProjP a, ProjP b) {
    return mkProj({Kind::Compose, std::move(a), std::move(b), nullptr, {}});
}
ProjP Proj::pair(ProjP a, ProjP b) {
    return mkProj({Kind::Pair, std::move(a), std::move(b), nullptr, {}});
}
ProjP Proj::eval(ExprP e) { return mkProj({Kind::Eval, nullptr, nullptr, std::move(e), {}}); }
ProjP Proj::meta(std::string name) {
    return mkProj({Kind::Meta, nullptr, nullptr, nullptr, std::move(name)});
}

static ExprP mkExpr(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

ExprP Expr::var(ProjP p) { return mkExpr({Kind::Var, std::move(p), {}, {}, nullptr, nullptr}); }
ExprP Expr::apply(std::string fn, std::vector<ExprP> args) {
    return mkExpr({Kind::Apply, nullptr, std::move(fn), std::move(args), nullptr, nullptr});
}
ExprP Expr::agg(std::string aggName, QueryP q) {
    return mkExpr({Kind::Agg, nullptr, std::move(aggName), {}, std::move(q), nullptr});
}
ExprP Expr::castExpr(ProjP p, ExprP e) {
    return mkExpr({Kind::CastExpr, std::move(p), {}, {}, nullptr, std::move(e)});
}
ExprP Expr::meta(std::string name) {
    return mkExpr({Kind::Meta, nullptr, std::move(name), {}, nullptr, nullptr});
}

static PredP mkPred(Pred p) { return std::make_shared<const Pred>(std::move(p)); }

PredP Pred::eq(ExprP a, ExprP b) {
    return mkPred({Kind::Eq, std::move(a), std::move(b), nullptr, nullptr, nullptr, nullptr, {}});
}
PredP Pred::conj(PredP a, PredP b) {
    return mkPred({Kind::And, nullptr, nullptr, std::move(a), std::move(b), nullptr, nullptr, {}});
}
PredP Pred::disj(PredP a, PredP b) {
    return mkPred({Kind::Or, nullptr, nullptr, std::move(a), std::move(b), nullptr, nullptr, {}});
}
PredP Pred::negate(PredP a) {
    return mkPred({Kind::Not, nullptr, nullptr, std::move(a), nullptr, nullptr, nullptr, {}});
}
PredP Pred::tru() {
    static const PredP p = mkPred({Kind::True, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, {}});
    return p;
}
PredP Pred::fls() {
    static const PredP p = mkPred({Kind::False, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, {}});
    return p;
}
PredP Pred::exists(QueryP q) {
    return mkPred({Kind::Exists, nullptr, nullptr, nullptr, nullptr, std::move(q), nullptr, {}});
}
PredP Pred::castPred(ProjP p, PredP b) {
    return mkPred({Kind::CastPred, nullptr, nullptr, std::move(b), nullptr, nullptr, std::move(p), {}});
}
PredP Pred::meta(std::string name) {
    return mkPred({Kind::Meta, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, std::move(name)});
}

static QueryP mkQuery(Query q) { return std::make_shared<const Query>(std::move(q)); }

QueryP Query::table(std::string name) {
    return mkQuery({Kind::Table, std::move(name), nullptr, nullptr, nullptr, nullptr, {}, nullptr});
}
QueryP Query::tableMeta(std::string name) {
    return mkQuery({Kind::TableMeta, std::move(name), nullptr, nullptr, nullptr, nullptr, {}, nullptr});
}
QueryP Query::select(ProjP p, QueryP q) {
    return mkQuery({Kind::Select, {}, std::move(p), std::move(q), nullptr, nullptr, {}, nullptr});
}
QueryP Query::product(QueryP a, QueryP b) {
    return mkQuery({Kind::Product, {}, nullptr, std::move(a), std::move(b), nullptr, {}, nullptr});
}
QueryP Query::where(QueryP q, PredP b) {
    return mkQuery({Kind::Where, {}, nullptr, std::move(q), nullptr, std::move(b), {}, nullptr});
}
QueryP Query::unionAll(QueryP a, QueryP b) {
    return mkQuery({Kind::UnionAll, {}, nullptr, std::move(a), std::move(b), nullptr, {}, nullptr});
}
QueryP Query::except(QueryP a, QueryP b) {
    return mkQuery({Kind::Except, {}, nullptr, std::move(a), std::move(b), nullptr, {}, nullptr});
}
QueryP Query::distinct(QueryP q) {
    return mkQuery({Kind::Distinct, {}, nullptr, std::move(q), nullptr, nullptr, {}, nullptr});
}
QueryP Query::groupBy(ProjP key, std::string aggName, ProjP aggArg, QueryP q) {
    return mkQuery({Kind::GroupBy, {}, std::move(key), std::move(q), nullptr, nullptr, std::move(aggName),
                    std::move(aggArg)});
}

// ---------------------------------------------------------------------------
// Declarations
// ---------------------------------------------------------------------------

bool Declarations::knownName(const std::string& n) const {
    return abstractTypes.count(n) || schemaMetas.count(n) || tables.count(n) || projs.count(n) ||
           preds.count(n) || exprs.count(n) || fns.count(n);
}

template <class M>
static const typename M::mapped_type& lookupOr(const M& m, const std::string& n, const char* what) {
    auto it = m.find(n);
    if (it == m.end())
        throw TypeError(TypeError::Code::UnboundMeta, std::string("undeclared ") + what + " '" + n + "'");
    return it->second;
}

const TableSig& Declarations::table(const std::string& n) const { return lookupOr(tables, n, "table"); }
const ProjSig& Declarations::proj(const std::string& n) const { return lookupOr(projs, n, "projection"); }
const Schema& Declarations::pred(const std::string& n) const { return lookupOr(preds, n, "predicate"); }
const ExprSig& Declarations::expr(const std::string& n) const { return lookupOr(exprs, n, "expression"); }
const FnSig& Declarations::fn(const std::string& n) const { return lookupOr(fns, n, "function"); }

// ---------------------------------------------------------------------------
// Typechecking
// ---------------------------------------------------------------------------

bool is_aggregate_name(const std::string& n) {
    return n == "sum" || n == "count" || n == "avg" || n == "max" || n == "min";
}

Schema proj_typecheck(const Declarations& d, const ProjP& p, const Schema& from) {
    switch (p->kind) {
        case Proj::Kind::Star: return from;
        case Proj::Kind::Left:
            if (!from.isNode())
                throw TypeError(TypeError::Code::PathMismatch, "left applied to " + from.show());
            return from.left();
        case Proj::Kind::Right:
            if (!from.isNode())
                throw TypeError(TypeError::Code::PathMismatch, "right applied to " + from.show());
            return from.right();
        case Proj::Kind::Empty: return Schema::empty();
        case Proj::Kind::Compose: return proj_typecheck(d, p->b, proj_typecheck(d, p->a, from));
        case Proj::Kind::Pair:
            return Schema::node(proj_typecheck(d, p->a, from), proj_typecheck(d, p->b, from));
        case Proj::Kind::Eval: return Schema::leaf(expr_typecheck(d, p->e, from));
        case Proj::Kind::Meta: {
            const ProjSig& sig = d.proj(p->name);
            if (!(sig.from == from))
                throw TypeError(TypeError::Code::PathMismatch,
                                "projection '" + p->name + "' expects " + sig.from.show() + ", applied to " +
                                    from.show());
            return sig.to;
        }
    }
    throw Error("proj_typecheck: unreachable");
}

BaseType expr_typecheck(const Declarations& d, const ExprP& e, const Schema& ctx) {
    switch (e->kind) {
        case Expr::Kind::Var: {
            Schema s = proj_typecheck(d, e->path, ctx);
            if (!s.isLeaf())
                throw TypeError(TypeError::Code::PathMismatch,
                                "var path must reach a single attribute, got " + s.show());
            return s.base();
        }
        case Expr::Kind::Apply: {
            const FnSig& sig = d.fn(e->name);
            if (sig.args.size() != e->args.size())
                throw TypeError(TypeError::Code::SchemaMismatch,
                                "function '" + e->name + "' arity mismatch");
            for (size_t i = 0; i < e->args.size(); ++i) {
                BaseType t = expr_typecheck(d, e->args[i], ctx);
                if (!(t == sig.args[i]))
                    throw TypeError(TypeError::Code::SchemaMismatch,
                                    "function '" + e->name + "' argument " + std::to_string(i) +
                                        " has type " + t.show());
            }
            return sig.ret;
        }
        case Expr::Kind::Agg: {
            if (!is_aggregate_name(e->name))
                throw TypeError(TypeError::Code::UnboundMeta, "unknown aggregate '" + e->name + "'");
            Schema out = query_typecheck(d, e->q, ctx);
            if (e->name != "count" && !(out == Schema::leaf(BaseType::intType())))
                throw TypeError(TypeError::Code::SchemaMismatch,
                                e->name + " expects an int-valued query, got " + out.show());
            return BaseType::intType();
        }
        case Expr::Kind::CastExpr:
            return expr_typecheck(d, e->sub, proj_typecheck(d, e->path, ctx));
        case Expr::Kind::Meta: {
            const ExprSig& sig = d.expr(e->name);
            if (!(sig.over == ctx))
                throw TypeError(TypeError::Code::SchemaMismatch,
                                "expression '" + e->name + "' declared over " + sig.over.show() +
                                    ", used under " + ctx.show() + " (wrap in castexpr)");
            return sig.type;
        }
    }
    throw Error("expr_typecheck: unreachable");
}

void pred_typecheck(const Declarations& d, const PredP& b, const Schema& ctx) {
    switch (b->kind) {
        case Pred::Kind::Eq: {
            BaseType t1 = expr_typecheck(d, b->e1, ctx);
            BaseType t2 = expr_typecheck(d, b->e2, ctx);
            if (!(t1 == t2))
                throw TypeError(TypeError::Code::SchemaMismatch,
                                "equality between " + t1.show() + " and " + t2.show());
            return;
        }
        case Pred::Kind::And:
        case Pred::Kind::Or:
            pred_typecheck(d, b->p1, ctx);
            pred_typecheck(d, b->p2, ctx);
            return;
        case Pred::Kind::Not: pred_typecheck(d, b->p1, ctx); return;
        case Pred::Kind::True:
        case Pred::Kind::False: return;
        case Pred::Kind::Exists: query_typecheck(d, b->q, ctx); return;
        case Pred::Kind::CastPred: pred_typecheck(d, b->p1, proj_typecheck(d, b->path, ctx)); return;
        case Pred::Kind::Meta: {
            const Schema& over = d.pred(b->name);
            if (!(over == ctx))
                throw TypeError(TypeError::Code::SchemaMismatch,
                                "predicate '" + b->name + "' declared over " + over.show() +
                                    ", used under " + ctx.show() + " (wrap in castpred)");
            return;
        }
    }
    throw Error("pred_typecheck: unreachable");
}

Schema query_typecheck(const Declarations& d, const QueryP& q, const Schema& ctx) {
    switch (q->kind) {
        case Query::Kind::Table:
        case Query::Kind::TableMeta: return d.table(q->name).schema;
        case Query::Kind::Select: {
            Schema src = query_typecheck(d, q->q1, ctx);
            return proj_typecheck(d, q->proj, src);
        }
        case Query::Kind::Product:
            return Schema::node(query_typecheck(d, q->q1, ctx), query_typecheck(d, q->q2, ctx));
        case Query::Kind::Where: {
            Schema src = query_typecheck(d, q->q1, ctx);
            pred_typecheck(d, q->pred, Schema::node(ctx, src));
            return src;
        }
        case Query::Kind::UnionAll:
        case Query::Kind::Except: {
            Schema a = query_typecheck(d, q->q1, ctx);
            Schema b = query_typecheck(d, q->q2, ctx);
            if (!(a == b))
                throw TypeError(TypeError::Code::SchemaMismatch,
                                "operand schemas differ: " + a.show() + " vs " + b.show());
            return a;
        }
        case Query::Kind::Distinct: return query_typecheck(d, q->q1, ctx);
        case Query::Kind::GroupBy: {
            Schema src = query_typecheck(d, q->q1, ctx);
            Schema key = proj_typecheck(d, q->proj, src);
            if (!key.isLeaf())
                throw TypeError(TypeError::Code::UnsupportedSugar,
                                "group by key must be a single attribute, got " + key.show());
            Schema arg = proj_typecheck(d, q->aggArg, src);
            if (!arg.isLeaf())
                throw TypeError(TypeError::Code::UnsupportedSugar,
                                "aggregate argument must be a single attribute, got " + arg.show());
            if (!is_aggregate_name(q->aggName))
                throw TypeError(TypeError::Code::UnsupportedSugar, "unknown aggregate '" + q->aggName + "'");
            if (q->aggName != "count" && !(arg == Schema::leaf(BaseType::intType())))
                throw TypeError(TypeError::Code::SchemaMismatch,
                                q->aggName + " expects an int attribute, got " + arg.show());
            return Schema::node(key, Schema::leaf(BaseType::intType()));
        }
    }
    throw Error("query_typecheck: unreachable");
}

void rule_wellformed(const RewriteRule& rule) {
    Schema l = query_typecheck(rule.decls, rule.lhs, rule.context);
    Schema r = query_typecheck(rule.decls, rule.rhs, rule.context);
    if (!(l == r))
        throw TypeError(TypeError::Code::SchemaMismatch,
                        "rule '" + rule.name + "': sides have schemas " + l.show() + " vs " + r.show());
    for (const Premise& p : rule.premises) {
        const TableSig& t = rule.decls.table(p.table);
        Schema c1 = proj_typecheck(rule.decls, p.p1, t.schema);
        if (!c1.isLeaf())
            throw TypeError(TypeError::Code::SchemaMismatch,
                            "premise column must be a single attribute, got " + c1.show());
        if (p.kind == Premise::Kind::Fd) {
            Schema c2 = proj_typecheck(rule.decls, p.p2, t.schema);
            if (!c2.isLeaf())
                throw TypeError(TypeError::Code::SchemaMismatch,
                                "premise column must be a single attribute, got " + c2.show());
        }
    }
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

static void showProjInto(const ProjP& p, std::ostringstream& out);
static void showPredInto(const PredP& b, std::ostringstream& out, int parentPrec);
static void showExprInto(const ExprP& e, std::ostringstream& out);
static void showQueryInto(const QueryP& q, std::ostringstream& out);

static bool isQueryAtom(const QueryP& q) {
    return q->kind == Query::Kind::Table || q->kind == Query::Kind::TableMeta;
}

static void showQueryAtomInto(const QueryP& q, std::ostringstream& out) {
    if (isQueryAtom(q)) {
        showQueryInto(q, out);
    } else {
        out << "(";
        showQueryInto(q, out);
        out << ")";
    }
}

static void showProjComponent(const ProjP& p, std::ostringstream& out) {
    switch (p->kind) {
        case Proj::Kind::Star: out << "*"; return;
        case Proj::Kind::Left: out << "left"; return;
        case Proj::Kind::Right: out << "right"; return;
        case Proj::Kind::Empty: out << "<>"; return;
        case Proj::Kind::Meta: out << p->name; return;
        case Proj::Kind::Eval:
            out << "eval(";
            showExprInto(p->e, out);
            out << ")";
            return;
        case Proj::Kind::Pair:
            out << "(";
            showProjInto(p->a, out);
            out << ", ";
            showProjInto(p->b, out);
            out << ")";
            return;
        case Proj::Kind::Compose:
            // nested compose inside a path: flattened by showProjInto
            showProjComponent(p->a, out);
            out << ".";
            showProjComponent(p->b, out);
            return;
    }
}

static void showProjInto(const ProjP& p, std::ostringstream& out) {
    if (p->kind == Proj::Kind::Compose) {
        showProjInto(p->a, out);
        out << ".";
        showProjInto(p->b, out);
        return;
    }
    showProjComponent(p, out);
}

static void showExprInto(const ExprP& e, std::ostringstream& out) {
    switch (e->kind) {
        case Expr::Kind::Var:
            out << "var(";
            showProjInto(e->path, out);
            out << ")";
            return;
        case Expr::Kind::Apply: {
            out << e->name << "(";
            bool first = true;
            for (const ExprP& a : e->args) {
                if (!first) out << ", ";
                first = false;
                showExprInto(a, out);
            }
            out << ")";
            return;
        }
        case Expr::Kind::Agg:
            out << e->name << "(";
            showQueryInto(e->q, out);
            out << ")";
            return;
        case Expr::Kind::CastExpr:
            out << "castexpr(";
            showProjInto(e->path, out);
            out << ", ";
            showExprInto(e->sub, out);
            out << ")";
            return;
        case Expr::Kind::Meta: out << e->name; return;
    }
}

// precedence: or = 0, and = 1, not = 2, atom = 3
static void showPredInto(const PredP& b, std::ostringstream& out, int parentPrec) {
    auto wrap = [&](int prec, auto&& body) {
        if (prec < parentPrec) {
            out << "(";
            body();
            out << ")";
        } else {
            body();
        }
    };
    switch (b->kind) {
        case Pred::Kind::Or:
            wrap(0, [&] {
                showPredInto(b->p1, out, 0);
                out << " or ";
                showPredInto(b->p2, out, 1);
            });
            return;
        case Pred::Kind::And:
            wrap(1, [&] {
                showPredInto(b->p1, out, 1);
                out << " and ";
                showPredInto(b->p2, out, 2);
            });
            return;
        case Pred::Kind::Not:
            wrap(2, [&] {
                out << "not ";
                showPredInto(b->p1, out, 2);
            });
            return;
        case Pred::Kind::Eq:
            showExprInto(b->e1, out);
            out << " = ";
            showExprInto(b->e2, out);
            return;
        case Pred::Kind::True: out << "true"; return;
        case Pred::Kind::False: out << "false"; return;
        case Pred::Kind::Exists:
            out << "exists(";
            showQueryInto(b->q, out);
            out << ")";
            return;
        case Pred::Kind::CastPred:
            out << "castpred(";
            showProjInto(b->path, out);
            out << ", ";
            showPredInto(b->p1, out, 0);
            out << ")";
            return;
        case Pred::Kind::Meta: out << b->name; return;
    }
}

// Prints the FROM source of a select/where: flattens left-nested products into
// a comma list and attaches a trailing WHERE.
static void showFromInto(const QueryP& src, std::ostringstream& out) {
    QueryP body = src;
    PredP wh = nullptr;
    if (body->kind == Query::Kind::Where) {
        wh = body->pred;
        body = body->q1;
    }
    std::vector<QueryP> parts;
    QueryP cur = body;
    while (cur->kind == Query::Kind::Product) {
        parts.push_back(cur->q2);
        cur = cur->q1;
    }
    parts.push_back(cur);
    for (size_t i = parts.size(); i-- > 0;) {
        showQueryAtomInto(parts[i], out);
        if (i > 0) out << ", ";
    }
    if (wh) {
        out << " where ";
        showPredInto(wh, out, 0);
    }
}

static void showQueryInto(const QueryP& q, std::ostringstream& out) {
    switch (q->kind) {
        case Query::Kind::Table:
        case Query::Kind::TableMeta: out << q->name; return;
        case Query::Kind::Select:
            out << "select ";
            showProjInto(q->proj, out);
            out << " from ";
            showFromInto(q->q1, out);
            return;
        case Query::Kind::GroupBy:
            out << "select ";
            showProjInto(q->proj, out);
            out << ", " << q->aggName << "(";
            showProjInto(q->aggArg, out);
            out << ") from ";
            showFromInto(q->q1, out);
            out << " group by ";
            showProjInto(q->proj, out);
            return;
        case Query::Kind::Product:
        case Query::Kind::Where:
            out << "from ";
            showFromInto(q, out);
            return;
        case Query::Kind::Distinct:
            out << "distinct ";
            showQueryAtomInto(q->q1, out);
            return;
        case Query::Kind::UnionAll:
            showQueryAtomInto(q->q1, out);
            out << " union all ";
            showQueryAtomInto(q->q2, out);
            return;
        case Query::Kind::Except:
            showQueryAtomInto(q->q1, out);
            out << " except ";
            showQueryAtomInto(q->q2, out);
            return;
    }
}

std::string show(const ProjP& p) {
    std::ostringstream out;
    showProjInto(p, out);
    return out.str();
}

std::string show(const ExprP& e) {
    std::ostringstream out;
    showExprInto(e, out);
    return out.str();
}

std::string show(const PredP& b) {
    std::ostringstream out;
    showPredInto(b, out, 0);
    return out.str();
}

std::string show(const QueryP& q) {
    std::ostringstream out;
    showQueryInto(q, out);
    return out.str();
}

static void showSchemaDecls(const Declarations& d, std::ostringstream& out) {
    for (const auto& n : d.abstractTypes) out << "type " << n << "\n";
    for (const auto& n : d.schemaMetas) out << "schema " << n << "\n";
    for (const auto& [n, sig] : d.tables) out << "table " << n << "(" << sig.schema.show() << ")\n";
    for (const auto& [n, sig] : d.projs)
        out << "proj " << n << " : " << sig.from.show() << " -> " << sig.to.show() << "\n";
    for (const auto& [n, over] : d.preds) out << "pred " << n << " over " << over.show() << "\n";
    for (const auto& [n, sig] : d.exprs)
        out << "expr " << n << " : " << sig.type.show() << " over " << sig.over.show() << "\n";
    for (const auto& [n, sig] : d.fns) {
        out << "fn " << n << "(";
        for (size_t i = 0; i < sig.args.size(); ++i) {
            if (i) out << ", ";
            out << sig.args[i].show();
        }
        out << ") -> " << sig.ret.show() << "\n";
    }
}

std::string show(const RewriteRule& r) {
    std::ostringstream out;
    showSchemaDecls(r.decls, out);
    out << "rule " << r.name << "\n";
    if (!r.category.empty()) out << "  category " << r.category << "\n";
    if (!r.provenance.empty()) out << "  provenance " << r.provenance << "\n";
    if (!r.expect.empty()) out << "  expect " << r.expect << "\n";
    if (!r.context.isEmpty()) out << "  context " << r.context.show() << "\n";
    for (const Premise& p : r.premises) {
        if (p.kind == Premise::Kind::Key)
            out << "  assume key(" << show(p.p1) << ", " << p.table << ")\n";
        else
            out << "  assume fd(" << show(p.p1) << ", " << show(p.p2) << ", " << p.table << ")\n";
    }
    out << "  " << show(r.lhs) << "\nequiv\n  " << show(r.rhs) << "\nend\n";
    return out.str();
}

bool same_query(const QueryP& a, const QueryP& b) { return show(a) == show(b); }

}  // namespace sqlrw

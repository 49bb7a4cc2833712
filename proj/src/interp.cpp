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

#include "sqlrw/interp.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "sqlrw/rules.hpp"

namespace sqlrw {

// ---------------------------------------------------------------------------
// Values
// ---------------------------------------------------------------------------

Value Value::intV(Nat n) {
    Value v;
    v.kind = Kind::Int;
    v.i = std::move(n);
    return v;
}

Value Value::boolV(bool x) {
    Value v;
    v.kind = Kind::Bool;
    v.b = x;
    return v;
}

Value Value::strV(std::string x) {
    Value v;
    v.kind = Kind::Str;
    v.s = std::move(x);
    return v;
}

Value Value::absV(std::string type, long index) {
    Value v;
    v.kind = Kind::Abs;
    v.absType = std::move(type);
    v.absIndex = index;
    return v;
}

Value Value::ratV(mpq_class q) {
    q.canonicalize();
    if (q.get_den() == 1) return intV(q.get_num());
    Value v;
    v.kind = Kind::Rat;
    v.r = std::move(q);
    return v;
}

bool Value::operator==(const Value& o) const {
    if (kind != o.kind) return false;
    switch (kind) {
        case Kind::Int: return i == o.i;
        case Kind::Bool: return b == o.b;
        case Kind::Str: return s == o.s;
        case Kind::Abs: return absType == o.absType && absIndex == o.absIndex;
        case Kind::Rat: return r == o.r;
    }
    return false;
}

std::string Value::show() const {
    switch (kind) {
        case Kind::Int: return i.get_str();
        case Kind::Bool: return b ? "true" : "false";
        case Kind::Str: return "\"" + s + "\"";
        case Kind::Abs: return absType + "#" + std::to_string(absIndex);
        case Kind::Rat: return r.get_str();
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Tuples and bags
// ---------------------------------------------------------------------------

Tup Tuple::unit() {
    static const Tup u = std::make_shared<Tuple>();
    return u;
}

Tup Tuple::scalar(Value v) {
    auto t = std::make_shared<Tuple>();
    t->kind = Kind::Scalar;
    t->v = std::move(v);
    return t;
}

Tup Tuple::pair(Tup a, Tup b) {
    auto t = std::make_shared<Tuple>();
    t->kind = Kind::Pair;
    t->a = std::move(a);
    t->b = std::move(b);
    return t;
}

std::string tuple_key(const Tup& t) {
    switch (t->kind) {
        case Tuple::Kind::Unit: return "()";
        case Tuple::Kind::Scalar: return t->v.show();
        case Tuple::Kind::Pair:
            return "(" + tuple_key(t->a) + ", " + tuple_key(t->b) + ")";
    }
    return "?";
}

std::string show(const Tup& t) { return tuple_key(t); }

void Bag::add(const Tup& t, const Nat& mult) {
    if (mult == 0) return;
    auto key = tuple_key(t);
    auto it = m.find(key);
    if (it == m.end())
        m.emplace(std::move(key), std::make_pair(t, mult));
    else
        it->second.second += mult;
}

Nat Bag::mult(const Tup& t) const {
    auto it = m.find(tuple_key(t));
    return it == m.end() ? Nat(0) : it->second.second;
}

bool Bag::operator==(const Bag& o) const {
    if (m.size() != o.m.size()) return false;
    auto a = m.begin();
    auto b = o.m.begin();
    for (; a != m.end(); ++a, ++b)
        if (a->first != b->first || a->second.second != b->second.second) return false;
    return true;
}

std::string Bag::show() const {
    std::string out = "{";
    bool first = true;
    for (const auto& [key, entry] : m) {
        out += first ? " " : ", ";
        first = false;
        out += key;
        if (entry.second != 1) out += " * " + entry.second.get_str();
    }
    out += first ? "}" : " }";
    return out;
}

// ---------------------------------------------------------------------------
// Instances
// ---------------------------------------------------------------------------

Schema resolve_schema(const Instance& inst, const Schema& s) {
    switch (s.kind()) {
        case Schema::Kind::Empty:
        case Schema::Kind::Leaf: return s;
        case Schema::Kind::Node:
            return Schema::node(resolve_schema(inst, s.left()), resolve_schema(inst, s.right()));
        case Schema::Kind::Meta: {
            auto it = inst.schemaMetas.find(s.metaName());
            if (it == inst.schemaMetas.end())
                throw TypeError(TypeError::Code::UnboundMeta,
                                "schema meta '" + s.metaName() + "' has no instance binding");
            return it->second;
        }
    }
    return s;
}

std::string Instance::show(const std::string& instName) const {
    std::ostringstream out;
    out << "instance";
    if (!instName.empty()) out << " " << instName;
    out << "\n";
    for (const auto& [name, size] : domains) out << "  domain " << name << " = " << size << "\n";
    for (const auto& [name, s] : schemaMetas) out << "  schema " << name << " = " << s.show() << "\n";
    for (const auto& [name, bag] : tables) out << "  table " << name << " = " << bag.show() << "\n";
    for (const auto& [name, p] : projMetas) out << "  proj " << name << " = " << sqlrw::show(p) << "\n";
    for (const auto& [name, set] : predMetas) {
        out << "  pred " << name << " = {";
        bool first = true;
        for (const auto& key : set) {
            out << (first ? " " : ", ") << key;
            first = false;
        }
        out << (first ? "}" : " }") << "\n";
    }
    for (const auto& [name, map] : exprMetas) {
        out << "  expr " << name << " = {";
        bool first = true;
        for (const auto& [key, v] : map) {
            out << (first ? " " : ", ") << key << " -> " << v.show();
            first = false;
        }
        out << (first ? "}" : " }") << "\n";
    }
    for (const auto& [name, map] : fns) {
        out << "  fn " << name << " = {";
        bool first = true;
        for (const auto& [key, v] : map) {
            out << (first ? " " : ", ") << key << " -> " << v.show();
            first = false;
        }
        out << (first ? "}" : " }") << "\n";
    }
    out << "end";
    return out.str();
}

// ---------------------------------------------------------------------------
// Enumeration of finite domains
// ---------------------------------------------------------------------------

namespace {

struct ActiveDomain {
    std::vector<Nat> ints;
    std::vector<std::string> strings;
};

void collect_value(const Value& v, ActiveDomain& acc) {
    if (v.kind == Value::Kind::Int)
        acc.ints.push_back(v.i);
    else if (v.kind == Value::Kind::Str)
        acc.strings.push_back(v.s);
}

void collect_tuple(const Tup& t, ActiveDomain& acc) {
    switch (t->kind) {
        case Tuple::Kind::Unit: return;
        case Tuple::Kind::Scalar: collect_value(t->v, acc); return;
        case Tuple::Kind::Pair:
            collect_tuple(t->a, acc);
            collect_tuple(t->b, acc);
            return;
    }
}

// Values reachable in query outputs: table contents plus fn/expr ranges.
ActiveDomain active_domain(const Instance& inst) {
    ActiveDomain acc;
    for (const auto& [name, bag] : inst.tables)
        for (const auto& [key, entry] : bag.m) collect_tuple(entry.first, acc);
    for (const auto& [name, map] : inst.exprMetas)
        for (const auto& [key, v] : map) collect_value(v, acc);
    for (const auto& [name, map] : inst.fns)
        for (const auto& [key, v] : map) collect_value(v, acc);
    std::sort(acc.ints.begin(), acc.ints.end());
    acc.ints.erase(std::unique(acc.ints.begin(), acc.ints.end()), acc.ints.end());
    std::sort(acc.strings.begin(), acc.strings.end());
    acc.strings.erase(std::unique(acc.strings.begin(), acc.strings.end()), acc.strings.end());
    return acc;
}

std::vector<Value> base_values(const Instance& inst, const BaseType& b) {
    std::vector<Value> out;
    switch (b.kind) {
        case BaseKind::Bool:
            out.push_back(Value::boolV(false));
            out.push_back(Value::boolV(true));
            return out;
        case BaseKind::Int: {
            std::vector<Nat> vals;
            auto it = inst.domains.find("int");
            if (it != inst.domains.end())
                for (long i = 0; i < it->second; i++) vals.emplace_back(i);
            ActiveDomain acc = active_domain(inst);
            vals.insert(vals.end(), acc.ints.begin(), acc.ints.end());
            std::sort(vals.begin(), vals.end());
            vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
            if (vals.empty() && it == inst.domains.end())
                throw EvalError(EvalError::Code::InfiniteDomain,
                                "no finite domain for int (no bound, no active values)");
            for (auto& v : vals) out.push_back(Value::intV(std::move(v)));
            return out;
        }
        case BaseKind::String: {
            std::vector<std::string> vals;
            auto it = inst.domains.find("string");
            if (it != inst.domains.end())
                for (long i = 0; i < it->second; i++) vals.push_back("s" + std::to_string(i));
            ActiveDomain acc = active_domain(inst);
            vals.insert(vals.end(), acc.strings.begin(), acc.strings.end());
            std::sort(vals.begin(), vals.end());
            vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
            if (vals.empty() && it == inst.domains.end())
                throw EvalError(EvalError::Code::InfiniteDomain,
                                "no finite domain for string (no bound, no active values)");
            for (auto& v : vals) out.push_back(Value::strV(std::move(v)));
            return out;
        }
        case BaseKind::Abstract: {
            auto it = inst.domains.find(b.name);
            if (it == inst.domains.end())
                throw EvalError(EvalError::Code::InfiniteDomain,
                                "no finite domain for abstract type '" + b.name + "'");
            for (long i = 0; i < it->second; i++) out.push_back(Value::absV(b.name, i));
            return out;
        }
    }
    return out;
}

}  // namespace

std::vector<Tup> tuple_space(const Instance& inst, const Schema& s0) {
    Schema s = resolve_schema(inst, s0);
    switch (s.kind()) {
        case Schema::Kind::Empty: return {Tuple::unit()};
        case Schema::Kind::Leaf: {
            std::vector<Tup> out;
            for (auto& v : base_values(inst, s.base())) out.push_back(Tuple::scalar(std::move(v)));
            return out;
        }
        case Schema::Kind::Node: {
            auto ls = tuple_space(inst, s.left());
            auto rs = tuple_space(inst, s.right());
            std::vector<Tup> out;
            out.reserve(ls.size() * rs.size());
            for (const auto& a : ls)
                for (const auto& b : rs) out.push_back(Tuple::pair(a, b));
            return out;
        }
        case Schema::Kind::Meta:
            throw EvalError(EvalError::Code::Malformed, "unresolved schema meta in tuple_space");
    }
    return {};
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

std::string fn_args_key(const std::vector<Value>& args) {
    std::string key = "(";
    for (size_t i = 0; i < args.size(); i++) {
        if (i) key += ", ";
        key += args[i].show();
    }
    return key + ")";
}

}  // namespace

Tup apply_proj(const Instance& inst, const ProjP& p, const Tup& t) {
    switch (p->kind) {
        case Proj::Kind::Star: return t;
        case Proj::Kind::Left:
            if (t->kind != Tuple::Kind::Pair)
                throw EvalError(EvalError::Code::Malformed, "left projection of a non-pair tuple");
            return t->a;
        case Proj::Kind::Right:
            if (t->kind != Tuple::Kind::Pair)
                throw EvalError(EvalError::Code::Malformed, "right projection of a non-pair tuple");
            return t->b;
        case Proj::Kind::Empty: return Tuple::unit();
        case Proj::Kind::Compose: return apply_proj(inst, p->b, apply_proj(inst, p->a, t));
        case Proj::Kind::Pair:
            return Tuple::pair(apply_proj(inst, p->a, t), apply_proj(inst, p->b, t));
        case Proj::Kind::Eval: return Tuple::scalar(eval_expr(inst, p->e, t));
        case Proj::Kind::Meta: {
            auto it = inst.projMetas.find(p->name);
            if (it == inst.projMetas.end())
                throw TypeError(TypeError::Code::UnboundMeta,
                                "proj meta '" + p->name + "' has no instance binding");
            return apply_proj(inst, it->second, t);
        }
    }
    throw EvalError(EvalError::Code::Malformed, "bad projection");
}

Value eval_expr(const Instance& inst, const ExprP& e, const Tup& ct) {
    switch (e->kind) {
        case Expr::Kind::Var: {
            Tup t = apply_proj(inst, e->path, ct);
            if (t->kind != Tuple::Kind::Scalar)
                throw EvalError(EvalError::Code::Malformed, "var path does not reach a column");
            return t->v;
        }
        case Expr::Kind::Apply: {
            std::vector<Value> args;
            for (const auto& a : e->args) args.push_back(eval_expr(inst, a, ct));
            auto fit = inst.fns.find(e->name);
            if (fit == inst.fns.end())
                throw TypeError(TypeError::Code::UnboundMeta,
                                "fn '" + e->name + "' has no instance binding");
            auto vit = fit->second.find(fn_args_key(args));
            if (vit == fit->second.end())
                throw EvalError(EvalError::Code::Malformed,
                                "fn '" + e->name + "' undefined at " + fn_args_key(args));
            return vit->second;
        }
        case Expr::Kind::Agg: return eval_agg(e->name, eval_query(inst, ct, e->q));
        case Expr::Kind::CastExpr: return eval_expr(inst, e->sub, apply_proj(inst, e->path, ct));
        case Expr::Kind::Meta: {
            auto eit = inst.exprMetas.find(e->name);
            if (eit == inst.exprMetas.end())
                throw TypeError(TypeError::Code::UnboundMeta,
                                "expr meta '" + e->name + "' has no instance binding");
            auto vit = eit->second.find(tuple_key(ct));
            if (vit == eit->second.end())
                throw EvalError(EvalError::Code::Malformed,
                                "expr meta '" + e->name + "' undefined at " + tuple_key(ct));
            return vit->second;
        }
    }
    throw EvalError(EvalError::Code::Malformed, "bad expression");
}

bool eval_pred(const Instance& inst, const PredP& b, const Tup& gt) {
    switch (b->kind) {
        case Pred::Kind::Eq: return eval_expr(inst, b->e1, gt) == eval_expr(inst, b->e2, gt);
        case Pred::Kind::And: return eval_pred(inst, b->p1, gt) && eval_pred(inst, b->p2, gt);
        case Pred::Kind::Or: return eval_pred(inst, b->p1, gt) || eval_pred(inst, b->p2, gt);
        case Pred::Kind::Not: return !eval_pred(inst, b->p1, gt);
        case Pred::Kind::True: return true;
        case Pred::Kind::False: return false;
        case Pred::Kind::Exists: return !eval_query(inst, gt, b->q).empty();
        case Pred::Kind::CastPred: return eval_pred(inst, b->p1, apply_proj(inst, b->path, gt));
        case Pred::Kind::Meta: {
            auto it = inst.predMetas.find(b->name);
            if (it == inst.predMetas.end())
                throw TypeError(TypeError::Code::UnboundMeta,
                                "pred meta '" + b->name + "' has no instance binding");
            return it->second.count(tuple_key(gt)) > 0;
        }
    }
    throw EvalError(EvalError::Code::Malformed, "bad predicate");
}

Value eval_agg(const std::string& aggName, const Bag& bag) {
    if (aggName == "count") {
        Nat n = 0;
        for (const auto& [key, entry] : bag.m) n += entry.second;
        return Value::intV(n);
    }
    // Remaining aggregates consume scalar int columns.
    std::vector<std::pair<Nat, Nat>> rows;  // value, multiplicity
    for (const auto& [key, entry] : bag.m) {
        if (entry.first->kind != Tuple::Kind::Scalar ||
            entry.first->v.kind != Value::Kind::Int)
            throw EvalError(EvalError::Code::Malformed,
                            "aggregate '" + aggName + "' over non-integer column");
        rows.emplace_back(entry.first->v.i, entry.second);
    }
    if (aggName == "sum") {
        Nat acc = 0;
        for (const auto& [v, m] : rows) acc += v * m;
        return Value::intV(acc);
    }
    if (rows.empty())
        throw EvalError(EvalError::Code::EmptyAggregate,
                        "aggregate '" + aggName + "' over an empty bag");
    if (aggName == "max" || aggName == "min") {
        Nat best = rows.front().first;
        for (const auto& [v, m] : rows)
            if (aggName == "max" ? v > best : v < best) best = v;
        return Value::intV(best);
    }
    if (aggName == "avg") {
        Nat total = 0, count = 0;
        for (const auto& [v, m] : rows) {
            total += v * m;
            count += m;
        }
        return Value::ratV(mpq_class(total) / mpq_class(count));
    }
    throw EvalError(EvalError::Code::Malformed, "unknown aggregate '" + aggName + "'");
}

Bag eval_query(const Instance& inst, const Tup& ctx, const QueryP& q) {
    switch (q->kind) {
        case Query::Kind::Table:
        case Query::Kind::TableMeta: {
            auto it = inst.tables.find(q->name);
            if (it == inst.tables.end())
                throw TypeError(TypeError::Code::UnboundMeta,
                                "table '" + q->name + "' has no instance binding");
            return it->second;
        }
        case Query::Kind::Select: {
            Bag src = eval_query(inst, ctx, q->q1);
            Bag out;
            for (const auto& [key, entry] : src.m)
                out.add(apply_proj(inst, q->proj, entry.first), entry.second);
            return out;
        }
        case Query::Kind::Product: {
            Bag l = eval_query(inst, ctx, q->q1);
            Bag r = eval_query(inst, ctx, q->q2);
            Bag out;
            for (const auto& [lk, le] : l.m)
                for (const auto& [rk, re] : r.m)
                    out.add(Tuple::pair(le.first, re.first), le.second * re.second);
            return out;
        }
        case Query::Kind::Where: {
            Bag src = eval_query(inst, ctx, q->q1);
            Bag out;
            for (const auto& [key, entry] : src.m)
                if (eval_pred(inst, q->pred, Tuple::pair(ctx, entry.first)))
                    out.add(entry.first, entry.second);
            return out;
        }
        case Query::Kind::UnionAll: {
            Bag out = eval_query(inst, ctx, q->q1);
            Bag r = eval_query(inst, ctx, q->q2);
            for (const auto& [key, entry] : r.m) out.add(entry.first, entry.second);
            return out;
        }
        case Query::Kind::Except: {
            Bag l = eval_query(inst, ctx, q->q1);
            Bag r = eval_query(inst, ctx, q->q2);
            Bag out;
            for (const auto& [key, entry] : l.m)
                if (r.mult(entry.first) == 0) out.add(entry.first, entry.second);
            return out;
        }
        case Query::Kind::Distinct: {
            Bag src = eval_query(inst, ctx, q->q1);
            Bag out;
            for (const auto& [key, entry] : src.m) out.add(entry.first, 1);
            return out;
        }
        case Query::Kind::GroupBy: return eval_query(inst, ctx, desugar_groupby(q));
    }
    throw EvalError(EvalError::Code::Malformed, "bad query");
}

// ---------------------------------------------------------------------------
// Semiring term evaluation
// ---------------------------------------------------------------------------

namespace {

Tup eval_tt(const Instance& inst, std::map<VarId, Tup>& env, const TT& t);

Nat eval_ut(const Instance& inst, std::map<VarId, Tup>& env, const UT& u) {
    switch (u->kind) {
        case UTerm::Kind::Zero: return 0;
        case UTerm::Kind::One: return 1;
        case UTerm::Kind::Plus:
            return eval_ut(inst, env, u->u1) + eval_ut(inst, env, u->u2);
        case UTerm::Kind::Times: {
            Nat a = eval_ut(inst, env, u->u1);
            if (a == 0) return 0;
            return a * eval_ut(inst, env, u->u2);
        }
        case UTerm::Kind::Squash: return eval_ut(inst, env, u->u1) > 0 ? 1 : 0;
        case UTerm::Kind::Negate: return eval_ut(inst, env, u->u1) == 0 ? 1 : 0;
        case UTerm::Kind::Sigma: {
            Nat acc = 0;
            for (const auto& t : tuple_space(inst, u->binderSchema)) {
                env[u->binder] = t;
                acc += eval_ut(inst, env, u->u1);
            }
            env.erase(u->binder);
            return acc;
        }
        case UTerm::Kind::RelAtom: {
            auto it = inst.tables.find(u->name);
            if (it == inst.tables.end())
                throw TypeError(TypeError::Code::UnboundMeta,
                                "table '" + u->name + "' has no instance binding");
            return it->second.mult(eval_tt(inst, env, u->t1));
        }
        case UTerm::Kind::EqAtom:
            return tuple_key(eval_tt(inst, env, u->t1)) == tuple_key(eval_tt(inst, env, u->t2))
                       ? 1
                       : 0;
        case UTerm::Kind::PredAtom: {
            auto it = inst.predMetas.find(u->name);
            if (it == inst.predMetas.end())
                throw TypeError(TypeError::Code::UnboundMeta,
                                "pred meta '" + u->name + "' has no instance binding");
            return it->second.count(tuple_key(eval_tt(inst, env, u->t1))) > 0 ? 1 : 0;
        }
        case UTerm::Kind::Lam:
            throw EvalError(EvalError::Code::Malformed, "cannot evaluate an unapplied lambda");
    }
    throw EvalError(EvalError::Code::Malformed, "bad semiring term");
}

Tup eval_tt(const Instance& inst, std::map<VarId, Tup>& env, const TT& t) {
    switch (t->kind) {
        case TupleTerm::Kind::Var: {
            auto it = env.find(t->var);
            if (it == env.end())
                throw EvalError(EvalError::Code::MissingBinding,
                                "unbound tuple variable t" + std::to_string(t->var));
            return it->second;
        }
        case TupleTerm::Kind::Unit: return Tuple::unit();
        case TupleTerm::Kind::Fst: {
            Tup a = eval_tt(inst, env, t->a);
            if (a->kind != Tuple::Kind::Pair)
                throw EvalError(EvalError::Code::Malformed, "fst of a non-pair tuple");
            return a->a;
        }
        case TupleTerm::Kind::Snd: {
            Tup a = eval_tt(inst, env, t->a);
            if (a->kind != Tuple::Kind::Pair)
                throw EvalError(EvalError::Code::Malformed, "snd of a non-pair tuple");
            return a->b;
        }
        case TupleTerm::Kind::Pair:
            return Tuple::pair(eval_tt(inst, env, t->a), eval_tt(inst, env, t->b));
        case TupleTerm::Kind::ProjMeta: {
            auto it = inst.projMetas.find(t->name);
            if (it == inst.projMetas.end())
                throw TypeError(TypeError::Code::UnboundMeta,
                                "proj meta '" + t->name + "' has no instance binding");
            return apply_proj(inst, it->second, eval_tt(inst, env, t->a));
        }
        case TupleTerm::Kind::FnApply: {
            std::vector<Value> args;
            for (const auto& a : t->args) {
                Tup av = eval_tt(inst, env, a);
                if (av->kind != Tuple::Kind::Scalar)
                    throw EvalError(EvalError::Code::Malformed, "fn argument is not a column");
                args.push_back(av->v);
            }
            auto fit = inst.fns.find(t->name);
            if (fit == inst.fns.end())
                throw TypeError(TypeError::Code::UnboundMeta,
                                "fn '" + t->name + "' has no instance binding");
            auto vit = fit->second.find(fn_args_key(args));
            if (vit == fit->second.end())
                throw EvalError(EvalError::Code::Malformed,
                                "fn '" + t->name + "' undefined at " + fn_args_key(args));
            return Tuple::scalar(vit->second);
        }
        case TupleTerm::Kind::AggApply: {
            Bag bag;
            for (const auto& bt : tuple_space(inst, t->aggSchema)) {
                env[t->aggBinder] = bt;
                Nat m = eval_ut(inst, env, t->aggBody);
                if (m > 0) bag.add(bt, m);
            }
            env.erase(t->aggBinder);
            return Tuple::scalar(eval_agg(t->name, bag));
        }
        case TupleTerm::Kind::ExprMeta: {
            auto eit = inst.exprMetas.find(t->name);
            if (eit == inst.exprMetas.end())
                throw TypeError(TypeError::Code::UnboundMeta,
                                "expr meta '" + t->name + "' has no instance binding");
            Tup ct = eval_tt(inst, env, t->a);
            auto vit = eit->second.find(tuple_key(ct));
            if (vit == eit->second.end())
                throw EvalError(EvalError::Code::Malformed,
                                "expr meta '" + t->name + "' undefined at " + tuple_key(ct));
            return Tuple::scalar(vit->second);
        }
    }
    throw EvalError(EvalError::Code::Malformed, "bad tuple term");
}

}  // namespace

Nat eval_uterm(const Instance& inst, std::map<VarId, Tup>& env, const UT& u) {
    return eval_ut(inst, env, u);
}

// ---------------------------------------------------------------------------
// Premises
// ---------------------------------------------------------------------------

bool premise_holds(const Instance& inst, const Premise& p) {
    auto it = inst.tables.find(p.table);
    if (it == inst.tables.end())
        throw TypeError(TypeError::Code::UnboundMeta,
                        "table '" + p.table + "' has no instance binding");
    const Bag& bag = it->second;
    const ProjP& c1 = p.p1;
    if (p.kind == Premise::Kind::Key) {
        // A key column determines the whole row and forces multiplicity one.
        for (const auto& [key, entry] : bag.m)
            if (entry.second != 1) return false;
        std::map<std::string, std::string> seen;
        for (const auto& [key, entry] : bag.m) {
            std::string kv = tuple_key(apply_proj(inst, c1, entry.first));
            auto [sit, inserted] = seen.emplace(kv, key);
            if (!inserted && sit->second != key) return false;
        }
        return true;
    }
    const ProjP& c2 = p.p2;
    std::map<std::string, std::string> seen;
    for (const auto& [key, entry] : bag.m) {
        std::string av = tuple_key(apply_proj(inst, c1, entry.first));
        std::string bv = tuple_key(apply_proj(inst, c2, entry.first));
        auto [sit, inserted] = seen.emplace(av, bv);
        if (!inserted && sit->second != bv) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Differential oracle
// ---------------------------------------------------------------------------

std::vector<Schema> schema_candidates(int depth) {
    if (depth <= 0) return {Schema::leaf(BaseType::intType())};
    std::vector<Schema> sub = schema_candidates(depth - 1);
    std::vector<Schema> out = {Schema::leaf(BaseType::intType())};
    for (const auto& a : sub)
        for (const auto& b : sub) out.push_back(Schema::node(a, b));
    // Drop duplicates introduced by the leaf appearing at every depth.
    std::vector<Schema> uniq;
    std::set<std::string> seen;
    for (const auto& s : out)
        if (seen.insert(s.show()).second) uniq.push_back(s);
    return uniq;
}

std::vector<ProjP> proj_paths(const Schema& from, const Schema& to) {
    // Structural rebuilds of the target from selector paths into the source.
    std::function<std::vector<ProjP>(const Schema&, const ProjP&, const Schema&)> go =
        [&](const Schema& src, const ProjP& prefix, const Schema& tgt) -> std::vector<ProjP> {
        std::vector<ProjP> out;
        switch (tgt.kind()) {
            case Schema::Kind::Empty: out.push_back(Proj::empty()); return out;
            case Schema::Kind::Leaf:
                if (src.kind() == Schema::Kind::Leaf && src.base() == tgt.base()) {
                    out.push_back(prefix);
                    return out;
                }
                if (src.kind() == Schema::Kind::Node) {
                    for (auto& p : go(src.left(), Proj::compose(prefix, Proj::left()), tgt))
                        out.push_back(std::move(p));
                    for (auto& p : go(src.right(), Proj::compose(prefix, Proj::right()), tgt))
                        out.push_back(std::move(p));
                }
                return out;
            case Schema::Kind::Node: {
                auto ls = go(src, prefix, tgt.left());
                auto rs = go(src, prefix, tgt.right());
                for (const auto& l : ls)
                    for (const auto& r : rs) out.push_back(Proj::pair(l, r));
                return out;
            }
            case Schema::Kind::Meta:
                throw EvalError(EvalError::Code::Malformed, "unresolved schema meta in proj_paths");
        }
        return out;
    };
    return go(from, Proj::star(), to);
}

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

long binom(long n, long k) {
    if (k < 0 || k > n) return 0;
    long r = 1;
    for (long i = 0; i < k; i++) r = r * (n - i) / (i + 1);
    return r;
}

long ipow(long b, long e) {
    long r = 1;
    while (e-- > 0) r *= b;
    return r;
}

// One enumerable meta dimension of the instance space.
struct Slot {
    long count = 0;
    std::function<void(Instance&, long)> apply;
};

// Bags over a fixed tuple list: support size <= maxTuples, each multiplicity
// in 1..maxMult, indexed deterministically.
Slot bag_slot(std::string table, std::vector<Tup> space, int maxTuples, int maxMult) {
    long s = static_cast<long>(space.size());
    long n = std::min<long>(maxTuples, s);
    long total = 0;
    for (long j = 0; j <= n; j++) total += binom(s, j) * ipow(maxMult, j);
    Slot slot;
    slot.count = total;
    slot.apply = [table = std::move(table), space = std::move(space), n, maxMult,
                  s](Instance& inst, long idx) {
        long j = 0;
        for (;; j++) {
            long block = binom(s, j) * ipow(maxMult, j);
            if (idx < block) break;
            idx -= block;
        }
        long combRank = j == 0 ? 0 : idx / ipow(maxMult, j);
        long multRank = j == 0 ? 0 : idx % ipow(maxMult, j);
        // Lexicographic combination unranking.
        Bag bag;
        long prev = -1;
        for (long pos = 0; pos < j; pos++) {
            for (long c = prev + 1;; c++) {
                long rest = binom(s - 1 - c, j - 1 - pos);
                if (combRank < rest) {
                    long mult = multRank % maxMult + 1;
                    multRank /= maxMult;
                    bag.add(space[c], mult);
                    prev = c;
                    break;
                }
                combRank -= rest;
            }
        }
        inst.tables[table] = std::move(bag);
    };
    return slot;
}

// Decision tables over a tuple space: exhaustive bitmask when small, else a
// canonical prefix (empty, full, singletons) padded with seeded tables.
Slot pred_slot(std::string name, std::vector<Tup> space, std::uint64_t seed) {
    long s = static_cast<long>(space.size());
    Slot slot;
    if (s <= 6) {
        slot.count = 1L << s;
        slot.apply = [name = std::move(name), space = std::move(space)](Instance& inst, long idx) {
            std::set<std::string> set;
            for (long i = 0; i < static_cast<long>(space.size()); i++)
                if (idx & (1L << i)) set.insert(tuple_key(space[i]));
            inst.predMetas[name] = std::move(set);
        };
        return slot;
    }
    long cap = 2 + s + 8;
    slot.count = cap;
    slot.apply = [name = std::move(name), space = std::move(space), seed, s](Instance& inst,
                                                                             long idx) {
        std::set<std::string> set;
        if (idx == 1) {
            for (const auto& t : space) set.insert(tuple_key(t));
        } else if (idx >= 2 && idx < 2 + s) {
            set.insert(tuple_key(space[idx - 2]));
        } else if (idx >= 2 + s) {
            std::uint64_t st = seed ^ (0x9e3779b97f4a7c15ULL * (idx + 1));
            for (const auto& t : space)
                if (splitmix64(st) & 1) set.insert(tuple_key(t));
        }
        inst.predMetas[name] = std::move(set);
    };
    return slot;
}

// Total maps from a key list into 0..range-1: exhaustive when small, else
// constant maps padded with seeded fills.
Slot map_slot(std::string name, bool isFn, std::vector<std::string> keys, long range,
              std::uint64_t seed) {
    long s = static_cast<long>(keys.size());
    auto store = [name, isFn](Instance& inst, std::map<std::string, Value> m) {
        if (isFn)
            inst.fns[name] = std::move(m);
        else
            inst.exprMetas[name] = std::move(m);
    };
    Slot slot;
    long total = ipow(range, s);
    if (s <= 4 && total <= 81) {
        slot.count = total;
        slot.apply = [keys = std::move(keys), range, store](Instance& inst, long idx) {
            std::map<std::string, Value> m;
            for (const auto& k : keys) {
                m.emplace(k, Value::intV(idx % range));
                idx /= range;
            }
            store(inst, std::move(m));
        };
        return slot;
    }
    long cap = range + 8;
    slot.count = cap;
    slot.apply = [keys = std::move(keys), range, seed, store](Instance& inst, long idx) {
        std::map<std::string, Value> m;
        if (idx < range) {
            for (const auto& k : keys) m.emplace(k, Value::intV(idx));
        } else {
            std::uint64_t st = seed ^ (0xbf58476d1ce4e5b9ULL * (idx + 1));
            for (const auto& k : keys)
                m.emplace(k, Value::intV(static_cast<long>(splitmix64(st) % range)));
        }
        store(inst, std::move(m));
    };
    return slot;
}

Schema resolve_by(const std::map<std::string, Schema>& assign, const Schema& s) {
    switch (s.kind()) {
        case Schema::Kind::Empty:
        case Schema::Kind::Leaf: return s;
        case Schema::Kind::Node:
            return Schema::node(resolve_by(assign, s.left()), resolve_by(assign, s.right()));
        case Schema::Kind::Meta: {
            auto it = assign.find(s.metaName());
            if (it == assign.end())
                throw TypeError(TypeError::Code::UnboundMeta,
                                "schema meta '" + s.metaName() + "' missing from assignment");
            return it->second;
        }
    }
    return s;
}

Declarations instantiate_decls(const Declarations& d, const std::map<std::string, Schema>& assign) {
    Declarations out = d;
    out.schemaMetas.clear();
    for (auto& [name, sig] : out.tables) sig.schema = resolve_by(assign, sig.schema);
    for (auto& [name, sig] : out.projs) {
        sig.from = resolve_by(assign, sig.from);
        sig.to = resolve_by(assign, sig.to);
    }
    for (auto& [name, over] : out.preds) over = resolve_by(assign, over);
    for (auto& [name, sig] : out.exprs) sig.over = resolve_by(assign, sig.over);
    return out;
}

}  // namespace

std::string CounterExample::show(const RewriteRule& rule) const {
    std::ostringstream out;
    out << "rule " << rule.name << ": left and right sides differ\n";
    out << inst.show(rule.name) << "\n";
    out << "context tuple: " << sqlrw::show(ctx) << "\n";
    out << "left:  " << left.show() << "\n";
    out << "right: " << right.show();
    return out.str();
}

bool for_each_instance(const RewriteRule& rule, const OracleConfig& cfg,
                       const std::function<bool(Instance&)>& fn) {
    bool exhausted = true;

    // Schema meta assignments form the outer product; slot shapes depend on
    // the resolved signatures.
    std::vector<std::string> metas(rule.decls.schemaMetas.begin(), rule.decls.schemaMetas.end());
    std::vector<Schema> cands = schema_candidates(cfg.depth);
    long assignTotal = 1;
    for (size_t i = 0; i < metas.size(); i++) {
        assignTotal *= static_cast<long>(cands.size());
        if (assignTotal > cfg.budget) break;
    }

    std::uint64_t rng = cfg.seed ^ 0x5851f42d4c957f2dULL;

    for (long assignIdx = 0; assignIdx < assignTotal; assignIdx++) {
        std::map<std::string, Schema> assign;
        long ai = assignIdx;
        for (const auto& m : metas) {
            assign[m] = cands[ai % cands.size()];
            ai /= cands.size();
        }

        Instance base;
        base.decls = instantiate_decls(rule.decls, assign);
        base.schemaMetas = assign;
        base.domains["int"] = cfg.domain;
        for (const auto& t : rule.decls.abstractTypes) base.domains[t] = cfg.domain;

        // Build slots in declaration order.
        std::vector<Slot> slots;
        bool dead = false;
        for (const auto& [name, sig] : base.decls.projs) {
            std::vector<ProjP> paths = proj_paths(sig.from, sig.to);
            if (paths.empty()) {
                dead = true;
                break;
            }
            Slot s;
            s.count = static_cast<long>(paths.size());
            s.apply = [name = name, paths = std::move(paths)](Instance& inst, long idx) {
                inst.projMetas[name] = paths[idx];
            };
            slots.push_back(std::move(s));
        }
        if (dead) continue;
        for (const auto& [name, sig] : base.decls.tables)
            slots.push_back(bag_slot(name, tuple_space(base, sig.schema), cfg.tuples, cfg.mult));
        for (const auto& [name, over] : base.decls.preds)
            slots.push_back(pred_slot(name, tuple_space(base, over), cfg.seed));
        for (const auto& [name, sig] : base.decls.exprs) {
            std::vector<std::string> keys;
            for (const auto& t : tuple_space(base, sig.over)) keys.push_back(tuple_key(t));
            slots.push_back(map_slot(name, false, std::move(keys), cfg.domain, cfg.seed));
        }
        for (const auto& [name, sig] : base.decls.fns) {
            std::vector<std::vector<Value>> argSpace = {{}};
            for (const auto& at : sig.args) {
                std::vector<std::vector<Value>> next;
                for (const auto& prefix : argSpace)
                    for (const auto& v : base_values(base, at)) {
                        auto row = prefix;
                        row.push_back(v);
                        next.push_back(std::move(row));
                    }
                argSpace = std::move(next);
            }
            std::vector<std::string> keys;
            for (const auto& args : argSpace) keys.push_back(fn_args_key(args));
            slots.push_back(map_slot(name, true, std::move(keys), cfg.domain, cfg.seed));
        }

        long total = 1;
        bool overflow = false;
        for (const auto& s : slots) {
            if (s.count == 0) {
                total = 0;
                break;
            }
            if (total > cfg.budget / s.count + 1) overflow = true;
            total *= s.count;
            if (total > cfg.budget) overflow = true;
        }
        if (total == 0) continue;

        bool sample = !cfg.exhaustive || overflow;
        if (sample) exhausted = false;
        long iterations = sample ? cfg.samples : total;

        for (long it = 0; it < iterations; it++) {
            Instance inst = base;
            if (sample) {
                for (auto& s : slots)
                    s.apply(inst, static_cast<long>(splitmix64(rng) % s.count));
            } else {
                long idx = it;
                for (auto& s : slots) {
                    s.apply(inst, idx % s.count);
                    idx /= s.count;
                }
            }
            if (!fn(inst)) return exhausted;
        }
    }
    return exhausted;
}

OracleResult differential_test(const RewriteRule& rule, const OracleConfig& cfg) {
    OracleResult res;
    res.exhausted = for_each_instance(rule, cfg, [&](Instance& inst) {
        for (const auto& prem : rule.premises)
            if (!premise_holds(inst, prem)) {
                res.skippedPremise++;
                return true;
            }
        try {
            for (const auto& ctx : tuple_space(inst, rule.context)) {
                Bag l = eval_query(inst, ctx, rule.lhs);
                Bag r = eval_query(inst, ctx, rule.rhs);
                if (!(l == r)) {
                    res.cex = CounterExample{std::move(inst), ctx, std::move(l), std::move(r)};
                    res.instancesChecked++;
                    return false;
                }
            }
        } catch (const EvalError& e) {
            if (e.code == EvalError::Code::EmptyAggregate) {
                res.skippedEmptyAgg++;
                return true;
            }
            throw;
        }
        res.instancesChecked++;
        return true;
    });
    return res;
}

}  // namespace sqlrw

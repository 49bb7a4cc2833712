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

#include "sqlrw/normalize.hpp"

#include <algorithm>
#include <functional>
#include <optional>

#include "sqlrw/denote.hpp"

namespace sqlrw {

namespace {

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

struct Ctx {
    TermCtx& tc;
    const Declarations& decls;
    const std::vector<Premise>& premises;
    Fuel& fuel;
};

Factor relF(std::string name, TT t) {
    Factor f;
    f.kind = Factor::Kind::Rel;
    f.name = std::move(name);
    f.t1 = std::move(t);
    return f;
}

Factor eqF(TT a, TT b) {
    Factor f;
    f.kind = Factor::Kind::Eq;
    if (tt_key(b) < tt_key(a)) std::swap(a, b);
    f.t1 = std::move(a);
    f.t2 = std::move(b);
    return f;
}

Factor predF(std::string name, TT t) {
    Factor f;
    f.kind = Factor::Kind::PredA;
    f.name = std::move(name);
    f.t1 = std::move(t);
    return f;
}

Factor squashF(std::shared_ptr<const NormalForm> sub) {
    Factor f;
    f.kind = Factor::Kind::Squash;
    f.sub = std::move(sub);
    return f;
}

Factor negF(std::shared_ptr<const NormalForm> sub) {
    Factor f;
    f.kind = Factor::Kind::Neg;
    f.sub = std::move(sub);
    return f;
}

long ut_nodes(const UT& u);

// Term size including aggregate bodies, so representative selection never
// mistakes an aggregate for an atom and splices it into its own body.
long tt_nodes(const TT& t) {
    long n = 1;
    if (t->a) n += tt_nodes(t->a);
    if (t->b) n += tt_nodes(t->b);
    for (const auto& a : t->args) n += tt_nodes(a);
    if (t->aggBody) n += ut_nodes(t->aggBody);
    return n;
}

long ut_nodes(const UT& u) {
    long n = 1;
    if (u->u1) n += ut_nodes(u->u1);
    if (u->u2) n += ut_nodes(u->u2);
    if (u->t1) n += tt_nodes(u->t1);
    if (u->t2) n += tt_nodes(u->t2);
    return n;
}

void nf_free_vars(const NormalForm& nf, std::set<VarId>& out);

void factor_free_vars(const Factor& f, std::set<VarId>& out) {
    if (f.t1) tt_free_vars(f.t1, out);
    if (f.t2) tt_free_vars(f.t2, out);
    if (f.sub) nf_free_vars(*f.sub, out);
}

void nf_free_vars(const NormalForm& nf, std::set<VarId>& out) {
    for (const auto& m : nf.monomials) {
        std::set<VarId> inner;
        for (const auto& f : m.factors) factor_free_vars(f, inner);
        for (const auto& [v, s] : m.binders) inner.erase(v);
        out.insert(inner.begin(), inner.end());
    }
}

NormalForm nf_subst(const NormalForm& nf, const std::map<VarId, TT>& sub);

// Applies a substitution; a reflexive equality disappears.
std::optional<Factor> factor_subst(const Factor& f, const std::map<VarId, TT>& sub) {
    Factor out = f;
    if (f.t1) out.t1 = tt_subst(f.t1, sub);
    if (f.t2) out.t2 = tt_subst(f.t2, sub);
    if (f.sub) out.sub = std::make_shared<const NormalForm>(nf_subst(*f.sub, sub));
    if (out.kind == Factor::Kind::Eq) {
        if (tt_key(out.t1) == tt_key(out.t2)) return std::nullopt;
        if (tt_key(out.t2) < tt_key(out.t1)) std::swap(out.t1, out.t2);
    }
    return out;
}

NormalForm nf_subst(const NormalForm& nf, const std::map<VarId, TT>& sub) {
    NormalForm out;
    for (const auto& m : nf.monomials) {
        Monomial nm;
        nm.binders = m.binders;
        for (const auto& f : m.factors)
            if (auto nf2 = factor_subst(f, sub)) nm.factors.push_back(std::move(*nf2));
        out.monomials.push_back(std::move(nm));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Canonical keys: alpha-invariant serialization with binder renumbering
// ---------------------------------------------------------------------------

using KeyEnv = std::map<VarId, int>;

std::string ut_ckey(const UT& u, const KeyEnv& env);

std::string tt_ckey(const TT& t, const KeyEnv& env) {
    switch (t->kind) {
        case TupleTerm::Kind::Var: {
            auto it = env.find(t->var);
            if (it != env.end()) return "b" + std::to_string(it->second);
            return "V" + std::to_string(t->var);
        }
        case TupleTerm::Kind::Unit: return "U";
        case TupleTerm::Kind::Fst: return "1(" + tt_ckey(t->a, env) + ")";
        case TupleTerm::Kind::Snd: return "2(" + tt_ckey(t->a, env) + ")";
        case TupleTerm::Kind::Pair:
            return "P(" + tt_ckey(t->a, env) + "," + tt_ckey(t->b, env) + ")";
        case TupleTerm::Kind::ProjMeta: return "M:" + t->name + "(" + tt_ckey(t->a, env) + ")";
        case TupleTerm::Kind::FnApply: {
            std::string out = "F:" + t->name + "(";
            for (size_t i = 0; i < t->args.size(); i++) {
                if (i) out += ";";
                out += tt_ckey(t->args[i], env);
            }
            return out + ")";
        }
        case TupleTerm::Kind::AggApply: {
            KeyEnv inner = env;
            inner[t->aggBinder] = static_cast<int>(env.size());
            return "A:" + t->name + "[" + t->aggSchema.show() + "]{" + ut_ckey(t->aggBody, inner) +
                   "}";
        }
        case TupleTerm::Kind::ExprMeta: return "E:" + t->name + "(" + tt_ckey(t->a, env) + ")";
    }
    return "?";
}

std::string ut_ckey(const UT& u, const KeyEnv& env) {
    switch (u->kind) {
        case UTerm::Kind::Zero: return "0";
        case UTerm::Kind::One: return "1";
        case UTerm::Kind::Plus:
            return "+(" + ut_ckey(u->u1, env) + "," + ut_ckey(u->u2, env) + ")";
        case UTerm::Kind::Times:
            return "*(" + ut_ckey(u->u1, env) + "," + ut_ckey(u->u2, env) + ")";
        case UTerm::Kind::Squash: return "|(" + ut_ckey(u->u1, env) + ")";
        case UTerm::Kind::Negate: return "!(" + ut_ckey(u->u1, env) + ")";
        case UTerm::Kind::Sigma:
        case UTerm::Kind::Lam: {
            KeyEnv inner = env;
            inner[u->binder] = static_cast<int>(env.size());
            return (u->kind == UTerm::Kind::Sigma ? "S[" : "L[") + u->binderSchema.show() + "](" +
                   ut_ckey(u->u1, inner) + ")";
        }
        case UTerm::Kind::RelAtom: return "R:" + u->name + "(" + tt_ckey(u->t1, env) + ")";
        case UTerm::Kind::EqAtom: {
            std::string a = tt_ckey(u->t1, env), b = tt_ckey(u->t2, env);
            if (b < a) std::swap(a, b);
            return "=(" + a + "," + b + ")";
        }
        case UTerm::Kind::PredAtom: return "B:" + u->name + "(" + tt_ckey(u->t1, env) + ")";
    }
    return "?";
}

std::string monomial_ckey(const Monomial& m, const KeyEnv& outer);

std::string nf_ckey(const NormalForm& nf, const KeyEnv& outer) {
    std::vector<std::string> keys;
    for (const auto& m : nf.monomials) keys.push_back(monomial_ckey(m, outer));
    std::sort(keys.begin(), keys.end());
    std::string out;
    for (size_t i = 0; i < keys.size(); i++) {
        if (i) out += " + ";
        out += keys[i];
    }
    return out.empty() ? "0" : out;
}

std::string factor_ckey(const Factor& f, const KeyEnv& env) {
    switch (f.kind) {
        case Factor::Kind::Rel: return "R:" + f.name + "(" + tt_ckey(f.t1, env) + ")";
        case Factor::Kind::Eq: {
            std::string a = tt_ckey(f.t1, env), b = tt_ckey(f.t2, env);
            if (b < a) std::swap(a, b);
            return "=(" + a + "," + b + ")";
        }
        case Factor::Kind::PredA: return "B:" + f.name + "(" + tt_ckey(f.t1, env) + ")";
        case Factor::Kind::Squash: return "|{" + nf_ckey(*f.sub, env) + "}";
        case Factor::Kind::Neg: return "!{" + nf_ckey(*f.sub, env) + "}";
    }
    return "?";
}

std::string monomial_key_under(const Monomial& m, const KeyEnv& outer,
                               const std::vector<size_t>& order) {
    KeyEnv env = outer;
    std::string head = "S[";
    for (size_t i = 0; i < order.size(); i++) {
        env[m.binders[order[i]].first] = static_cast<int>(outer.size() + i);
        if (i) head += ";";
        head += m.binders[order[i]].second.show();
    }
    head += "]";
    std::vector<std::string> keys;
    for (const auto& f : m.factors) keys.push_back(factor_ckey(f, env));
    std::sort(keys.begin(), keys.end());
    std::string out = head;
    for (const auto& k : keys) out += " " + k;
    return out;
}

std::string monomial_ckey(const Monomial& m, const KeyEnv& outer) {
    size_t n = m.binders.size();
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; i++) order[i] = i;
    if (n > 6) {
        // Too many binders for exhaustive search: one heuristic order.
        std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            const auto& [va, sa] = m.binders[a];
            const auto& [vb, sb] = m.binders[b];
            std::string ka = sa.show(), kb = sb.show();
            if (ka != kb) return ka < kb;
            return va < vb;
        });
        return monomial_key_under(m, outer, order);
    }
    std::string best;
    std::sort(order.begin(), order.end());
    do {
        std::string k = monomial_key_under(m, outer, order);
        if (best.empty() || k < best) best = std::move(k);
    } while (std::next_permutation(order.begin(), order.end()));
    return best.empty() ? monomial_key_under(m, outer, order) : best;
}

// ---------------------------------------------------------------------------
// Flattening into sum-of-products
// ---------------------------------------------------------------------------

NormalForm flatten(const UT& u) {
    NormalForm out;
    switch (u->kind) {
        case UTerm::Kind::Zero: return out;
        case UTerm::Kind::One:
            out.monomials.emplace_back();
            return out;
        case UTerm::Kind::Plus: {
            out = flatten(u->u1);
            NormalForm r = flatten(u->u2);
            for (auto& m : r.monomials) out.monomials.push_back(std::move(m));
            return out;
        }
        case UTerm::Kind::Times: {
            NormalForm l = flatten(u->u1);
            NormalForm r = flatten(u->u2);
            for (const auto& lm : l.monomials)
                for (const auto& rm : r.monomials) {
                    Monomial m = lm;
                    m.binders.insert(m.binders.end(), rm.binders.begin(), rm.binders.end());
                    m.factors.insert(m.factors.end(), rm.factors.begin(), rm.factors.end());
                    out.monomials.push_back(std::move(m));
                }
            return out;
        }
        case UTerm::Kind::Squash: {
            Monomial m;
            m.factors.push_back(squashF(std::make_shared<const NormalForm>(flatten(u->u1))));
            out.monomials.push_back(std::move(m));
            return out;
        }
        case UTerm::Kind::Negate: {
            const UT& inner = u->u1->kind == UTerm::Kind::Squash ? u->u1->u1 : u->u1;
            Monomial m;
            m.factors.push_back(negF(std::make_shared<const NormalForm>(flatten(inner))));
            out.monomials.push_back(std::move(m));
            return out;
        }
        case UTerm::Kind::Sigma: {
            out = flatten(u->u1);
            for (auto& m : out.monomials)
                m.binders.insert(m.binders.begin(), {u->binder, u->binderSchema});
            return out;
        }
        case UTerm::Kind::RelAtom: {
            Monomial m;
            m.factors.push_back(relF(u->name, u->t1));
            out.monomials.push_back(std::move(m));
            return out;
        }
        case UTerm::Kind::EqAtom: {
            Monomial m;
            m.factors.push_back(eqF(u->t1, u->t2));
            out.monomials.push_back(std::move(m));
            return out;
        }
        case UTerm::Kind::PredAtom: {
            Monomial m;
            m.factors.push_back(predF(u->name, u->t1));
            out.monomials.push_back(std::move(m));
            return out;
        }
        case UTerm::Kind::Lam:
            throw Error("cannot normalize an unapplied lambda");
    }
    return out;
}

// Splits a built equality into flat factors (node schemas decompose).
void add_eq_factors(std::vector<Factor>& out, const TT& a, const TT& b) {
    UT e = utEqAtom(a, b);
    std::function<void(const UT&)> walk = [&](const UT& u) {
        switch (u->kind) {
            case UTerm::Kind::One: return;
            case UTerm::Kind::Times:
                walk(u->u1);
                walk(u->u2);
                return;
            case UTerm::Kind::EqAtom:
                out.push_back(eqF(u->t1, u->t2));
                return;
            default:
                throw Error("unexpected equality decomposition");
        }
    };
    walk(e);
}

// ---------------------------------------------------------------------------
// Congruence closure
// ---------------------------------------------------------------------------

struct Closure {
    TermCtx& tc;
    std::vector<TT> terms;
    std::vector<int> parent;
    std::map<std::string, int> index;
    std::map<int, TT> reps;  // find-root -> minimal member

    explicit Closure(TermCtx& tc) : tc(tc) {}

    int find(int i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    }

    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[a] = b;
    }

    // Registers a term and its subterms (aggregate bodies stay opaque).
    int add(const TT& t) {
        std::string key = tt_key(t);
        auto it = index.find(key);
        if (it != index.end()) return it->second;
        if (t->a) add(t->a);
        if (t->b) add(t->b);
        for (const auto& a : t->args) add(a);
        int id = static_cast<int>(terms.size());
        terms.push_back(t);
        parent.push_back(id);
        index.emplace(std::move(key), id);
        return id;
    }

    int idOf(const TT& t) const {
        auto it = index.find(tt_key(t));
        return it == index.end() ? -1 : it->second;
    }

    bool same(const TT& a, const TT& b) {
        if (tt_key(a) == tt_key(b)) return true;
        int ia = idOf(a), ib = idOf(b);
        if (ia < 0 || ib < 0) return false;
        return find(ia) == find(ib);
    }

    // Structural comparison through the closure, for terms not registered.
    bool equalMod(const TT& a, const TT& b) {
        if (same(a, b)) return true;
        if (a->kind != b->kind || a->name != b->name || a->var != b->var) return false;
        if (a->args.size() != b->args.size()) return false;
        if (static_cast<bool>(a->a) != static_cast<bool>(b->a) ||
            static_cast<bool>(a->b) != static_cast<bool>(b->b))
            return false;
        if (a->kind == TupleTerm::Kind::AggApply) return false;  // key inequality settled above
        if (a->a && !equalMod(a->a, b->a)) return false;
        if (a->b && !equalMod(a->b, b->b)) return false;
        for (size_t i = 0; i < a->args.size(); i++)
            if (!equalMod(a->args[i], b->args[i])) return false;
        return !a->a && !a->b && a->args.empty() ? false : true;
    }

    static std::string head_key(const TT& t) {
        std::string h = std::to_string(static_cast<int>(t->kind));
        h += ":" + t->name;
        if (t->kind == TupleTerm::Kind::Var) h += "#" + std::to_string(t->var);
        return h;
    }

    static std::vector<TT> children(const TT& t) {
        std::vector<TT> out;
        if (t->kind == TupleTerm::Kind::AggApply) return out;  // opaque
        if (t->a) out.push_back(t->a);
        if (t->b) out.push_back(t->b);
        for (const auto& a : t->args) out.push_back(a);
        return out;
    }

    void fixpoint(Fuel& fuel, const std::function<bool(const TT&, const TT&)>& aggEq) {
        bool changed = true;
        while (changed && fuel.spend()) {
            changed = false;
            for (size_t i = 0; i < terms.size(); i++)
                for (size_t j = i + 1; j < terms.size(); j++) {
                    int a = find(static_cast<int>(i)), b = find(static_cast<int>(j));
                    if (a == b) continue;
                    const TT& ti = terms[i];
                    const TT& tj = terms[j];
                    if (head_key(ti) != head_key(tj)) continue;
                    if (ti->kind == TupleTerm::Kind::AggApply) {
                        if (!aggEq) continue;
                        if (!(ti->aggSchema == tj->aggSchema)) continue;
                        if (aggEq(ti, tj)) {
                            unite(a, b);
                            changed = true;
                        }
                        continue;
                    }
                    auto ci = children(ti);
                    auto cj = children(tj);
                    if (ci.empty() || ci.size() != cj.size()) continue;
                    bool ok = true;
                    for (size_t k = 0; k < ci.size(); k++)
                        if (find(add(ci[k])) != find(add(cj[k]))) {
                            ok = false;
                            break;
                        }
                    if (ok) {
                        unite(a, b);
                        changed = true;
                    }
                }
        }
        computeReps();
    }

    void computeReps() {
        reps.clear();
        for (size_t i = 0; i < terms.size(); i++) {
            int r = find(static_cast<int>(i));
            auto it = reps.find(r);
            if (it == reps.end()) {
                reps.emplace(r, terms[i]);
                continue;
            }
            long na = tt_nodes(terms[i]), nb = tt_nodes(it->second);
            if (na < nb || (na == nb && tt_key(terms[i]) < tt_key(it->second)))
                it->second = terms[i];
        }
    }

    // Bottom-up rewriting toward minimal representatives.
    TT rewrite(const TT& t) {
        TT reb = rebuildChildren(t);
        int id = idOf(reb);
        if (id >= 0) {
            const TT& r = reps.at(find(id));
            long na = tt_nodes(r), nb = tt_nodes(reb);
            if (na < nb || (na == nb && tt_key(r) < tt_key(reb))) return r;
        }
        return reb;
    }

    TT rebuildChildren(const TT& t) {
        switch (t->kind) {
            case TupleTerm::Kind::Var:
            case TupleTerm::Kind::Unit: return t;
            case TupleTerm::Kind::Fst: return ttFst(rewrite(t->a));
            case TupleTerm::Kind::Snd: return ttSnd(rewrite(t->a));
            case TupleTerm::Kind::Pair: return ttPair(rewrite(t->a), rewrite(t->b));
            case TupleTerm::Kind::ProjMeta:
                return ttProjMeta(t->name, rewrite(t->a), t->schema);
            case TupleTerm::Kind::FnApply: {
                std::vector<TT> args;
                for (const auto& a : t->args) args.push_back(rewrite(a));
                return ttFnApply(t->name, std::move(args), t->schema.base());
            }
            case TupleTerm::Kind::AggApply: {
                UT body = rewriteUT(t->aggBody);
                if (ut_key(body) == ut_key(t->aggBody)) return t;
                return ttAggApply(t->name, t->aggSchema, t->aggBinder, std::move(body));
            }
            case TupleTerm::Kind::ExprMeta:
                return ttExprMeta(t->name, rewrite(t->a), t->schema.base());
        }
        return t;
    }

    UT rewriteUT(const UT& u) {
        switch (u->kind) {
            case UTerm::Kind::Zero:
            case UTerm::Kind::One: return u;
            case UTerm::Kind::Plus: return utPlus(rewriteUT(u->u1), rewriteUT(u->u2));
            case UTerm::Kind::Times: return utTimes(rewriteUT(u->u1), rewriteUT(u->u2));
            case UTerm::Kind::Squash: return utSquash(rewriteUT(u->u1));
            case UTerm::Kind::Negate: return utNegate(rewriteUT(u->u1));
            case UTerm::Kind::Sigma:
                return utSigma(u->binder, u->binderSchema, rewriteUT(u->u1));
            case UTerm::Kind::Lam: return utLam(u->binder, u->binderSchema, rewriteUT(u->u1));
            case UTerm::Kind::RelAtom: return utRelAtom(u->name, rewrite(u->t1));
            case UTerm::Kind::EqAtom: return utEqAtom(rewrite(u->t1), rewrite(u->t2));
            case UTerm::Kind::PredAtom: return utPredAtom(u->name, rewrite(u->t1));
        }
        return u;
    }
};

std::shared_ptr<const NormalForm> nf_rewrite(const NormalForm& nf, Closure& cl);

std::optional<Factor> factor_rewrite(const Factor& f, Closure& cl) {
    Factor out = f;
    switch (f.kind) {
        case Factor::Kind::Rel:
        case Factor::Kind::PredA:
            out.t1 = cl.rewrite(f.t1);
            return out;
        case Factor::Kind::Eq: {
            out.t1 = cl.rewrite(f.t1);
            out.t2 = cl.rewrite(f.t2);
            if (tt_key(out.t1) == tt_key(out.t2)) return std::nullopt;
            if (tt_key(out.t2) < tt_key(out.t1)) std::swap(out.t1, out.t2);
            return out;
        }
        case Factor::Kind::Squash:
        case Factor::Kind::Neg:
            out.sub = nf_rewrite(*f.sub, cl);
            return out;
    }
    return out;
}

std::shared_ptr<const NormalForm> nf_rewrite(const NormalForm& nf, Closure& cl) {
    auto out = std::make_shared<NormalForm>();
    for (const auto& m : nf.monomials) {
        Monomial nm;
        nm.binders = m.binders;
        for (const auto& f : m.factors)
            if (auto rf = factor_rewrite(f, cl)) nm.factors.push_back(std::move(*rf));
        out->monomials.push_back(std::move(nm));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Monomial fixpoint
// ---------------------------------------------------------------------------

NormalForm normalize_nf(NormalForm nf, Ctx& cx, int depth);

enum class ContentVal { Zero, One, Other };

// Canonicalizes squash/negate content: nested squashes splice in (a product
// is nonzero exactly when each factor is), duplicates collapse, and a
// factorless monomial makes the content positive since every schema is
// inhabited.
ContentVal canon_content(NormalForm& nf, Ctx& cx) {
    std::vector<Monomial> work = std::move(nf.monomials);
    std::vector<Monomial> flat;
    while (!work.empty()) {
        if (!cx.fuel.spend()) {
            flat.insert(flat.end(), work.begin(), work.end());
            break;
        }
        Monomial m = std::move(work.back());
        work.pop_back();
        size_t si = m.factors.size();
        for (size_t i = 0; i < m.factors.size(); i++)
            if (m.factors[i].kind == Factor::Kind::Squash) {
                si = i;
                break;
            }
        if (si == m.factors.size()) {
            flat.push_back(std::move(m));
            continue;
        }
        Factor sq = m.factors[si];
        m.factors.erase(m.factors.begin() + si);
        for (const auto& sm : sq.sub->monomials) {
            Monomial merged = m;
            merged.binders.insert(merged.binders.end(), sm.binders.begin(), sm.binders.end());
            merged.factors.insert(merged.factors.end(), sm.factors.begin(), sm.factors.end());
            work.push_back(std::move(merged));
        }
    }
    // Inside a squash any duplicate factor collapses.
    std::vector<std::pair<std::string, Monomial>> keyed;
    for (auto& m : flat) {
        KeyEnv env;
        for (size_t i = 0; i < m.binders.size(); i++)
            env[m.binders[i].first] = static_cast<int>(i);
        std::vector<std::pair<std::string, Factor>> fs;
        for (auto& f : m.factors) fs.emplace_back(factor_ckey(f, env), std::move(f));
        std::sort(fs.begin(), fs.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        fs.erase(std::unique(fs.begin(), fs.end(),
                             [](const auto& a, const auto& b) { return a.first == b.first; }),
                 fs.end());
        m.factors.clear();
        for (auto& [k, f] : fs) m.factors.push_back(std::move(f));
        if (m.factors.empty()) return ContentVal::One;
        keyed.emplace_back(monomial_ckey(m, {}), std::move(m));
    }
    std::sort(keyed.begin(), keyed.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    keyed.erase(std::unique(keyed.begin(), keyed.end(),
                            [](const auto& a, const auto& b) { return a.first == b.first; }),
                keyed.end());
    nf.monomials.clear();
    for (auto& [k, m] : keyed) nf.monomials.push_back(std::move(m));
    if (nf.monomials.empty()) return ContentVal::Zero;
    return ContentVal::Other;
}

UT factor_to_uterm(const Factor& f);

std::string factor_raw_key(const Factor& f) {
    std::string out;
    if (f.t1) out += tt_key(f.t1);
    out += "#";
    if (f.t2) out += tt_key(f.t2);
    if (f.sub)
        for (const auto& sm : f.sub->monomials)
            for (const auto& sf : sm.factors) out += "#" + factor_raw_key(sf);
    return out;
}

using EnvFn = std::function<std::vector<Factor>(const TT&)>;

// Rebuilds t with every aggregate body normalized; squash-valued body
// conjuncts the enclosing monomial already guarantees are dropped, so
// congruent aggregates on the two sides of a rule serialize identically.
TT canon_agg_tt(const TT& t, Ctx& cx, int depth, const EnvFn& envFor, bool& changed) {
    switch (t->kind) {
        case TupleTerm::Kind::Var:
        case TupleTerm::Kind::Unit: return t;
        case TupleTerm::Kind::Fst: {
            TT a = canon_agg_tt(t->a, cx, depth, envFor, changed);
            return a == t->a ? t : ttFst(a);
        }
        case TupleTerm::Kind::Snd: {
            TT a = canon_agg_tt(t->a, cx, depth, envFor, changed);
            return a == t->a ? t : ttSnd(a);
        }
        case TupleTerm::Kind::Pair: {
            TT a = canon_agg_tt(t->a, cx, depth, envFor, changed);
            TT b = canon_agg_tt(t->b, cx, depth, envFor, changed);
            return a == t->a && b == t->b ? t : ttPair(a, b);
        }
        case TupleTerm::Kind::ProjMeta: {
            TT a = canon_agg_tt(t->a, cx, depth, envFor, changed);
            return a == t->a ? t : ttProjMeta(t->name, a, t->schema);
        }
        case TupleTerm::Kind::ExprMeta: {
            TT a = canon_agg_tt(t->a, cx, depth, envFor, changed);
            return a == t->a ? t : ttExprMeta(t->name, a, t->schema.base());
        }
        case TupleTerm::Kind::FnApply: {
            std::vector<TT> args;
            bool any = false;
            for (const auto& a : t->args) {
                args.push_back(canon_agg_tt(a, cx, depth, envFor, any));
            }
            if (!any) return t;
            changed = true;
            return ttFnApply(t->name, std::move(args), t->schema.base());
        }
        case TupleTerm::Kind::AggApply: {
            if (!cx.fuel.spend(20)) return t;
            NormalForm nf = normalize_nf(flatten(t->aggBody), cx, depth + 1);
            std::vector<Factor> env = envFor(t);
            for (auto& mo : nf.monomials) {
                for (size_t fi = 0; fi < mo.factors.size();) {
                    if (mo.factors[fi].kind == Factor::Kind::Squash) {
                        std::vector<Factor> hyps = env;
                        for (size_t fj = 0; fj < mo.factors.size(); fj++)
                            if (fj != fi) hyps.push_back(mo.factors[fj]);
                        if (discharge(hyps, *mo.factors[fi].sub, cx.tc, cx.decls, cx.premises,
                                      cx.fuel, depth + 1)) {
                            mo.factors.erase(mo.factors.begin() + fi);
                            continue;
                        }
                    }
                    fi++;
                }
            }
            UT body = nf_to_uterm(nf);
            if (ut_ckey(body, {}) == ut_ckey(t->aggBody, {})) return t;
            changed = true;
            return ttAggApply(t->name, t->aggSchema, t->aggBinder, body);
        }
    }
    return t;
}

std::optional<Monomial> process_monomial(Monomial m, Ctx& cx, int depth) {
    auto factorsKey = [&]() {
        KeyEnv env;
        for (size_t i = 0; i < m.binders.size(); i++)
            env[m.binders[i].first] = static_cast<int>(i);
        std::vector<std::string> ks;
        for (const auto& f : m.factors) ks.push_back(factor_ckey(f, env));
        std::sort(ks.begin(), ks.end());
        std::string out;
        for (const auto& k : ks) out += k + "&";
        return out;
    };

    for (int round = 0; round < 64 && cx.fuel.spend(); round++) {
        bool changed = false;

        // (a) binder splitting: pair binders become component binders, empty
        // binders disappear.
        for (size_t i = 0; i < m.binders.size(); i++) {
            const Schema s = m.binders[i].second;
            VarId v = m.binders[i].first;
            if (s.kind() == Schema::Kind::Empty) {
                std::map<VarId, TT> sub{{v, ttUnit()}};
                Monomial nm;
                nm.binders = m.binders;
                nm.binders.erase(nm.binders.begin() + i);
                for (const auto& f : m.factors)
                    if (auto sf = factor_subst(f, sub)) nm.factors.push_back(std::move(*sf));
                m = std::move(nm);
                changed = true;
                break;
            }
            if (s.kind() == Schema::Kind::Node) {
                VarId vl = cx.tc.fresh(s.left());
                VarId vr = cx.tc.fresh(s.right());
                std::map<VarId, TT> sub{{v, ttPair(ttVar(cx.tc, vl), ttVar(cx.tc, vr))}};
                Monomial nm;
                nm.binders = m.binders;
                nm.binders[i] = {vl, s.left()};
                nm.binders.insert(nm.binders.begin() + i + 1, {vr, s.right()});
                for (const auto& f : m.factors)
                    if (auto sf = factor_subst(f, sub)) nm.factors.push_back(std::move(*sf));
                m = std::move(nm);
                changed = true;
                break;
            }
        }
        if (changed) continue;

        // (e) sub-normal-form canonicalization: squash and negate contents.
        for (size_t i = 0; i < m.factors.size() && !changed; i++) {
            Factor& f = m.factors[i];
            if (f.kind != Factor::Kind::Squash && f.kind != Factor::Kind::Neg) continue;
            NormalForm sub = normalize_nf(*f.sub, cx, depth + 1);
            ContentVal val = canon_content(sub, cx);
            if (f.kind == Factor::Kind::Squash) {
                if (val == ContentVal::Zero) return std::nullopt;
                if (val == ContentVal::One) {
                    m.factors.erase(m.factors.begin() + i);
                    changed = true;
                    break;
                }
                // A one-monomial content splits into binder-connected
                // components: the squash distributes over them, unused
                // binders drop (schemas are inhabited), and a lone 0/1
                // component sheds its squash.
                if (sub.monomials.size() == 1) {
                    Monomial& sm = sub.monomials[0];
                    std::vector<int> comp(sm.factors.size());
                    for (size_t fi = 0; fi < comp.size(); fi++) comp[fi] = static_cast<int>(fi);
                    std::function<int(int)> find = [&](int x) {
                        while (comp[x] != x) x = comp[x] = comp[comp[x]];
                        return x;
                    };
                    std::set<VarId> bound;
                    for (const auto& [v, s] : sm.binders) bound.insert(v);
                    std::map<VarId, int> owner;
                    for (size_t fi = 0; fi < sm.factors.size(); fi++) {
                        std::set<VarId> fv;
                        factor_free_vars(sm.factors[fi], fv);
                        for (VarId v : fv) {
                            if (!bound.count(v)) continue;
                            auto [it, fresh] = owner.emplace(v, static_cast<int>(fi));
                            if (!fresh) comp[find(static_cast<int>(fi))] = find(it->second);
                        }
                    }
                    std::map<int, std::vector<size_t>> groups;
                    for (size_t fi = 0; fi < sm.factors.size(); fi++)
                        groups[find(static_cast<int>(fi))].push_back(fi);
                    bool shrank = groups.size() > 1;
                    std::vector<Factor> pieces;
                    for (auto& [root, idxs] : groups) {
                        std::set<VarId> used;
                        for (size_t fi : idxs) factor_free_vars(sm.factors[fi], used);
                        Monomial piece;
                        for (const auto& bv : sm.binders)
                            if (used.count(bv.first)) piece.binders.push_back(bv);
                        if (piece.binders.size() != sm.binders.size()) shrank = true;
                        for (size_t fi : idxs) piece.factors.push_back(sm.factors[fi]);
                        if (piece.binders.empty() && piece.factors.size() == 1 &&
                            piece.factors[0].squashValued()) {
                            shrank = true;
                            pieces.push_back(std::move(piece.factors[0]));
                        } else {
                            auto pnf = std::make_shared<NormalForm>();
                            pnf->monomials.push_back(std::move(piece));
                            pieces.push_back(squashF(std::move(pnf)));
                        }
                    }
                    if (shrank) {
                        m.factors.erase(m.factors.begin() + i);
                        for (auto& pc : pieces) m.factors.push_back(std::move(pc));
                        changed = true;
                        break;
                    }
                }
                auto canon = std::make_shared<const NormalForm>(std::move(sub));
                KeyEnv env;
                if (factor_ckey(f, env) != factor_ckey(squashF(canon), env)) {
                    f.sub = canon;
                    changed = true;
                }
            } else {
                if (val == ContentVal::Zero) {
                    m.factors.erase(m.factors.begin() + i);
                    changed = true;
                    break;
                }
                if (val == ContentVal::One) return std::nullopt;
                // Double negation: not(not(C)) is squash(C).
                if (sub.monomials.size() == 1 && sub.monomials[0].binders.empty() &&
                    sub.monomials[0].factors.size() == 1 &&
                    sub.monomials[0].factors[0].kind == Factor::Kind::Neg) {
                    Factor inner = sub.monomials[0].factors[0];
                    m.factors[i] = squashF(inner.sub);
                    changed = true;
                    break;
                }
                auto canon = std::make_shared<const NormalForm>(std::move(sub));
                KeyEnv env;
                if (factor_ckey(f, env) != factor_ckey(negF(canon), env)) {
                    f.sub = canon;
                    changed = true;
                }
            }
        }
        if (changed) continue;

        // (f) aggregate bodies canonicalize in place, with sibling factors
        // that do not mention the aggregate as discharge context.
        if (depth < 2) {
            for (size_t i = 0; i < m.factors.size() && !changed; i++) {
                Factor& f = m.factors[i];
                if (f.kind == Factor::Kind::Squash || f.kind == Factor::Kind::Neg) continue;
                EnvFn envFor = [&](const TT& agg) {
                    std::vector<Factor> env;
                    std::string ka = tt_key(agg);
                    for (size_t j = 0; j < m.factors.size(); j++) {
                        if (j == i) continue;
                        const Factor& g = m.factors[j];
                        if (g.kind == Factor::Kind::Neg) continue;
                        if (factor_raw_key(g).find(ka) != std::string::npos) continue;
                        env.push_back(g);
                    }
                    return env;
                };
                if (f.t1) {
                    TT nt = canon_agg_tt(f.t1, cx, depth, envFor, changed);
                    if (changed) f.t1 = nt;
                }
                if (f.t2 && !changed) {
                    TT nt = canon_agg_tt(f.t2, cx, depth, envFor, changed);
                    if (changed) f.t2 = nt;
                }
            }
        }
        if (changed) continue;

        // (b) congruence closure over top-level equalities.
        Closure cl(cx.tc);
        std::vector<std::pair<int, int>> eqPairs;
        for (const auto& f : m.factors) {
            if (f.t1) cl.add(f.t1);
            if (f.t2) cl.add(f.t2);
            if (f.kind == Factor::Kind::Eq) eqPairs.emplace_back(cl.add(f.t1), cl.add(f.t2));
        }
        // Premise columns join the term pool so key applications compare.
        for (const auto& prem : cx.premises)
            for (const auto& f : m.factors) {
                if (f.kind != Factor::Kind::Rel || f.name != prem.table) continue;
                cl.add(denote_proj_at(cx.decls, prem.p1, cx.tc, f.t1));
                if (prem.kind == Premise::Kind::Fd)
                    cl.add(denote_proj_at(cx.decls, prem.p2, cx.tc, f.t1));
            }
        for (auto [a, b] : eqPairs) cl.unite(a, b);

        cl.fixpoint(cx.fuel, nullptr);

        std::string before = factorsKey();
        std::vector<Factor> rewritten;
        for (const auto& f : m.factors) {
            if (f.kind == Factor::Kind::Eq) continue;  // re-emitted from classes
            if (auto rf = factor_rewrite(f, cl)) rewritten.push_back(std::move(*rf));
        }
        // Spanning equalities: per class, congruence-redundant members drop.
        std::map<int, std::vector<TT>> classes;
        for (size_t i = 0; i < cl.terms.size(); i++)
            classes[cl.find(static_cast<int>(i))].push_back(cl.terms[i]);
        for (auto& [root, members] : classes) {
            if (members.size() < 2) continue;
            std::map<std::string, TT> uniq;
            for (const auto& mem : members) {
                TT cr = cl.rebuildChildren(mem);
                uniq.emplace(tt_key(cr), cr);
            }
            if (uniq.size() < 2) continue;
            std::vector<std::pair<std::pair<long, std::string>, TT>> sorted;
            for (auto& [k, t] : uniq) sorted.push_back({{tt_nodes(t), k}, t});
            std::sort(sorted.begin(), sorted.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            for (size_t i = 1; i < sorted.size(); i++)
                add_eq_factors(rewritten, sorted[0].second, sorted[i].second);
        }
        m.factors = std::move(rewritten);

        // Dedupe 0/1-valued factors.
        {
            KeyEnv env;
            for (size_t i = 0; i < m.binders.size(); i++)
                env[m.binders[i].first] = static_cast<int>(i);
            std::set<std::string> seen;
            std::vector<Factor> kept;
            for (auto& f : m.factors) {
                if (f.squashValued()) {
                    std::string k = factor_ckey(f, env);
                    if (!seen.insert(std::move(k)).second) continue;
                }
                kept.push_back(std::move(f));
            }
            m.factors = std::move(kept);
        }
        if (factorsKey() != before) {
            continue;
        }

        // (d) saturation from premises.
        for (const auto& prem : cx.premises) {
            std::vector<size_t> rels;
            for (size_t i = 0; i < m.factors.size(); i++)
                if (m.factors[i].kind == Factor::Kind::Rel && m.factors[i].name == prem.table)
                    rels.push_back(i);
            if (prem.kind == Premise::Kind::Key) {
                // Two rows sharing a key value are the same row; a keyed
                // relation holds each row at most once.
                for (size_t x = 0; x < rels.size() && !changed; x++)
                    for (size_t y = x + 1; y < rels.size() && !changed; y++) {
                        const TT& tx = m.factors[rels[x]].t1;
                        const TT& ty = m.factors[rels[y]].t1;
                        if (tt_key(tx) == tt_key(ty)) {
                            m.factors.erase(m.factors.begin() + rels[y]);
                            changed = true;
                            break;
                        }
                        if (cl.same(tx, ty)) continue;
                        TT kx = denote_proj_at(cx.decls, prem.p1, cx.tc, tx);
                        TT ky = denote_proj_at(cx.decls, prem.p1, cx.tc, ty);
                        if (!cl.same(kx, ky)) continue;
                        add_eq_factors(m.factors, tx, ty);
                        changed = true;
                    }
            } else {
                for (size_t x = 0; x < rels.size() && !changed; x++)
                    for (size_t y = x + 1; y < rels.size() && !changed; y++) {
                        const TT& tx = m.factors[rels[x]].t1;
                        const TT& ty = m.factors[rels[y]].t1;
                        TT ax = denote_proj_at(cx.decls, prem.p1, cx.tc, tx);
                        TT ay = denote_proj_at(cx.decls, prem.p1, cx.tc, ty);
                        if (!cl.same(ax, ay)) continue;
                        TT bx = denote_proj_at(cx.decls, prem.p2, cx.tc, tx);
                        TT by = denote_proj_at(cx.decls, prem.p2, cx.tc, ty);
                        if (cl.same(bx, by)) continue;
                        std::vector<Factor> added;
                        add_eq_factors(added, bx, by);
                        KeyEnv env;
                        for (size_t i = 0; i < m.binders.size(); i++)
                            env[m.binders[i].first] = static_cast<int>(i);
                        std::set<std::string> have;
                        for (const auto& f : m.factors)
                            if (f.kind == Factor::Kind::Eq) have.insert(factor_ckey(f, env));
                        for (auto& f : added)
                            if (!have.count(factor_ckey(f, env))) {
                                m.factors.push_back(std::move(f));
                                changed = true;
                            }
                    }
            }
        }
        if (changed) continue;

        // (c) one-point elimination: a binder pinned by an equality to a term
        // not containing it disappears, innermost first.
        for (size_t bi = m.binders.size(); bi-- > 0 && !changed;) {
            VarId v = m.binders[bi].first;
            std::optional<std::pair<size_t, TT>> pick;
            for (size_t i = 0; i < m.factors.size(); i++) {
                const Factor& f = m.factors[i];
                if (f.kind != Factor::Kind::Eq) continue;
                TT other;
                if (f.t1->kind == TupleTerm::Kind::Var && f.t1->var == v)
                    other = f.t2;
                else if (f.t2->kind == TupleTerm::Kind::Var && f.t2->var == v)
                    other = f.t1;
                else
                    continue;
                std::set<VarId> fv;
                tt_free_vars(other, fv);
                if (fv.count(v)) continue;
                if (!pick || tt_key(other) < tt_key(pick->second)) pick = {{i, other}};
            }
            if (!pick) continue;
            std::map<VarId, TT> sub{{v, pick->second}};
            Monomial nm;
            nm.binders = m.binders;
            nm.binders.erase(nm.binders.begin() + bi);
            for (size_t i = 0; i < m.factors.size(); i++) {
                if (i == pick->first) continue;
                if (auto sf = factor_subst(m.factors[i], sub)) nm.factors.push_back(std::move(*sf));
            }
            m = std::move(nm);
            changed = true;
        }
        if (changed) continue;

        break;
    }

    // Canonical factor order.
    KeyEnv env;
    for (size_t i = 0; i < m.binders.size(); i++)
        env[m.binders[i].first] = static_cast<int>(i);
    std::stable_sort(m.factors.begin(), m.factors.end(), [&](const Factor& a, const Factor& b) {
        return factor_ckey(a, env) < factor_ckey(b, env);
    });
    return m;
}

NormalForm normalize_nf(NormalForm nf, Ctx& cx, int depth) {
    NormalForm out;
    for (auto& m : nf.monomials)
        if (auto pm = process_monomial(std::move(m), cx, depth)) out.monomials.push_back(std::move(*pm));
    std::stable_sort(out.monomials.begin(), out.monomials.end(),
                     [](const Monomial& a, const Monomial& b) {
                         return monomial_ckey(a, {}) < monomial_ckey(b, {});
                     });
    return out;
}

}  // namespace

NormalForm normalize(const UT& u, TermCtx& tc, const Declarations& decls,
                     const std::vector<Premise>& premises, Fuel& fuel) {
    Ctx cx{tc, decls, premises, fuel};
    return normalize_nf(flatten(u), cx, 0);
}

std::string canonical_key(const NormalForm& nf) { return nf_ckey(nf, {}); }

bool ac_equal(const NormalForm& a, const NormalForm& b) {
    return canonical_key(a) == canonical_key(b);
}

// ---------------------------------------------------------------------------
// Rebuilding terms
// ---------------------------------------------------------------------------

namespace {

UT factor_to_uterm(const Factor& f) {
    switch (f.kind) {
        case Factor::Kind::Rel: return utRelAtom(f.name, f.t1);
        case Factor::Kind::Eq: return utEqAtom(f.t1, f.t2);
        case Factor::Kind::PredA: return utPredAtom(f.name, f.t1);
        case Factor::Kind::Squash: return utSquash(nf_to_uterm(*f.sub));
        case Factor::Kind::Neg: return utNegate(nf_to_uterm(*f.sub));
    }
    throw Error("bad factor");
}

}  // namespace

UT nf_to_uterm(const NormalForm& nf) {
    UT acc = utZero();
    for (const auto& m : nf.monomials) {
        UT prod = utOne();
        for (const auto& f : m.factors) prod = utTimes(prod, factor_to_uterm(f));
        for (size_t i = m.binders.size(); i-- > 0;)
            prod = utSigma(m.binders[i].first, m.binders[i].second, std::move(prod));
        acc = utPlus(std::move(acc), std::move(prod));
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Entailment
// ---------------------------------------------------------------------------

namespace {

struct Solver {
    const std::vector<Factor>& hyps;
    Closure& cl;
    Ctx& cx;
    int depth;
    std::map<VarId, TT> assign;
    std::set<VarId> unassigned;

    bool hasUnassigned(const TT& t) {
        std::set<VarId> fv;
        tt_free_vars(t, fv);
        for (VarId v : fv)
            if (unassigned.count(v)) return true;
        return false;
    }

    TT substNow(const TT& t) { return assign.empty() ? t : tt_subst(t, assign); }

    bool unify(const TT& goal, const TT& hyp, std::vector<VarId>& trail) {
        TT g = substNow(goal);
        if (!hasUnassigned(g)) return cl.equalMod(g, hyp);
        if (g->kind == TupleTerm::Kind::Var && unassigned.count(g->var)) {
            if (!(g->schema == hyp->schema)) return false;
            assign[g->var] = hyp;
            unassigned.erase(g->var);
            trail.push_back(g->var);
            return true;
        }
        switch (g->kind) {
            case TupleTerm::Kind::Pair:
                return unify(g->a, ttFst(hyp), trail) && unify(g->b, ttSnd(hyp), trail);
            case TupleTerm::Kind::Fst:
                return hyp->kind == TupleTerm::Kind::Fst && unify(g->a, hyp->a, trail);
            case TupleTerm::Kind::Snd:
                return hyp->kind == TupleTerm::Kind::Snd && unify(g->a, hyp->a, trail);
            case TupleTerm::Kind::ProjMeta:
                return hyp->kind == TupleTerm::Kind::ProjMeta && hyp->name == g->name &&
                       unify(g->a, hyp->a, trail);
            case TupleTerm::Kind::ExprMeta:
                return hyp->kind == TupleTerm::Kind::ExprMeta && hyp->name == g->name &&
                       unify(g->a, hyp->a, trail);
            case TupleTerm::Kind::FnApply: {
                if (hyp->kind != TupleTerm::Kind::FnApply || hyp->name != g->name ||
                    hyp->args.size() != g->args.size())
                    return false;
                for (size_t i = 0; i < g->args.size(); i++)
                    if (!unify(g->args[i], hyp->args[i], trail)) return false;
                return true;
            }
            default: return false;
        }
    }

    void undo(std::vector<VarId>& trail, size_t mark) {
        while (trail.size() > mark) {
            VarId v = trail.back();
            trail.pop_back();
            assign.erase(v);
            unassigned.insert(v);
        }
    }

    std::vector<TT> candidates(const Schema& s) {
        std::vector<TT> pool;
        std::set<std::string> seen;
        std::function<void(const TT&)> put = [&](const TT& t) {
            if (pool.size() >= 24) return;
            if (t->schema == s && seen.insert(tt_key(t)).second) pool.push_back(t);
        };
        std::function<void(const TT&)> walk = [&](const TT& t) {
            put(t);
            if (t->kind == TupleTerm::Kind::AggApply) return;
            if (t->a) walk(t->a);
            if (t->b) walk(t->b);
            for (const auto& a : t->args) walk(a);
        };
        for (const auto& h : hyps) {
            if (h.t1) walk(h.t1);
            if (h.t2) walk(h.t2);
        }
        // One level of projections off pair-shaped hypothesis terms.
        std::vector<TT> base;
        for (const auto& h : hyps) {
            if (h.t1) base.push_back(h.t1);
            if (h.t2) base.push_back(h.t2);
        }
        for (const auto& t : base)
            if (t->schema.kind() == Schema::Kind::Node) {
                put(ttFst(t));
                put(ttSnd(t));
            }
        if (s.kind() == Schema::Kind::Node && pool.size() < 24) {
            auto ls = candidates(s.left());
            auto rs = candidates(s.right());
            for (const auto& a : ls)
                for (const auto& b : rs) {
                    if (pool.size() >= 24) break;
                    put(ttPair(a, b));
                }
        }
        if (s.kind() == Schema::Kind::Empty) put(ttUnit());
        return pool;
    }

    bool verify(const std::vector<Factor>& goalFactors) {
        for (const auto& f : goalFactors) {
            switch (f.kind) {
                case Factor::Kind::Rel: {
                    TT g = substNow(f.t1);
                    bool ok = false;
                    for (const auto& h : hyps)
                        if (h.kind == Factor::Kind::Rel && h.name == f.name &&
                            cl.equalMod(g, h.t1)) {
                            ok = true;
                            break;
                        }
                    if (!ok) return false;
                    break;
                }
                case Factor::Kind::PredA: {
                    TT g = substNow(f.t1);
                    bool ok = false;
                    for (const auto& h : hyps)
                        if (h.kind == Factor::Kind::PredA && h.name == f.name &&
                            cl.equalMod(g, h.t1)) {
                            ok = true;
                            break;
                        }
                    if (!ok) return false;
                    break;
                }
                case Factor::Kind::Eq:
                    if (!cl.equalMod(substNow(f.t1), substNow(f.t2))) return false;
                    break;
                case Factor::Kind::Squash: {
                    NormalForm inst = nf_subst(*f.sub, assign);
                    if (!discharge(hyps, inst, cx.tc, cx.decls, cx.premises, cx.fuel, depth + 1))
                        return false;
                    break;
                }
                case Factor::Kind::Neg: {
                    NormalForm inst = nf_subst(*f.sub, assign);
                    std::string key = nf_ckey(inst, {});
                    bool ok = false;
                    for (const auto& h : hyps)
                        if (h.kind == Factor::Kind::Neg && nf_ckey(*h.sub, {}) == key) {
                            ok = true;
                            break;
                        }
                    if (!ok) return false;
                    break;
                }
            }
        }
        return true;
    }

    bool solve(const std::vector<Factor>& goalFactors) {
        if (!cx.fuel.spend()) return false;
        if (unassigned.empty()) return verify(goalFactors);

        // Forced assignments from equalities with one open side.
        for (const auto& f : goalFactors) {
            if (f.kind != Factor::Kind::Eq) continue;
            TT a = substNow(f.t1), b = substNow(f.t2);
            for (int flip = 0; flip < 2; flip++) {
                const TT& va = flip ? b : a;
                const TT& ob = flip ? a : b;
                if (va->kind == TupleTerm::Kind::Var && unassigned.count(va->var) &&
                    !hasUnassigned(ob)) {
                    assign[va->var] = ob;
                    unassigned.erase(va->var);
                    bool ok = solve(goalFactors);
                    if (!ok) {
                        assign.erase(va->var);
                        unassigned.insert(va->var);
                    }
                    return ok;
                }
            }
        }

        // Branch on an atom that still has open variables.
        for (const auto& f : goalFactors) {
            if (f.kind != Factor::Kind::Rel && f.kind != Factor::Kind::PredA) continue;
            if (!hasUnassigned(substNow(f.t1))) continue;
            for (const auto& h : hyps) {
                if (h.kind != f.kind || h.name != f.name) continue;
                std::vector<VarId> trail;
                if (unify(f.t1, h.t1, trail)) {
                    if (solve(goalFactors)) return true;
                }
                undo(trail, 0);
            }
            return false;
        }

        // Remaining binders are unconstrained by atoms: enumerate candidates.
        VarId v = *unassigned.begin();
        Schema s = cx.tc.schemaOf(v);
        for (const auto& c : candidates(s)) {
            assign[v] = c;
            unassigned.erase(v);
            if (solve(goalFactors)) return true;
            assign.erase(v);
            unassigned.insert(v);
        }
        return false;
    }
};

}  // namespace

bool discharge(const std::vector<Factor>& hyps, const NormalForm& goal, TermCtx& tc,
               const Declarations& decls, const std::vector<Premise>& premises, Fuel& fuel,
               int depth) {
    if (depth > 8 || !fuel.spend()) return false;

    // Destruct one squash hypothesis: its content is inhabited, so each of
    // its monomials is a case that must prove the goal.
    for (size_t i = 0; i < hyps.size(); i++) {
        if (hyps[i].kind != Factor::Kind::Squash) continue;
        std::vector<Factor> rest;
        for (size_t j = 0; j < hyps.size(); j++)
            if (j != i) rest.push_back(hyps[j]);
        for (const auto& sm : hyps[i].sub->monomials) {
            std::vector<Factor> ext = rest;
            for (const auto& f : sm.factors) ext.push_back(f);
            if (!discharge(ext, goal, tc, decls, premises, fuel, depth + 1)) return false;
        }
        return true;
    }

    Ctx cx{tc, decls, premises, fuel};
    Closure cl(tc);
    for (const auto& h : hyps) {
        if (h.t1) cl.add(h.t1);
        if (h.t2) cl.add(h.t2);
        if (h.kind == Factor::Kind::Eq) cl.unite(cl.add(h.t1), cl.add(h.t2));
    }
    cl.fixpoint(fuel, nullptr);

    for (const auto& gm : goal.monomials) {
        Solver s{hyps, cl, cx, depth, {}, {}};
        for (const auto& [v, sch] : gm.binders) s.unassigned.insert(v);
        if (s.solve(gm.factors)) return true;
    }
    return false;
}

NormalForm hprop_eliminate(NormalForm nf, TermCtx& tc, const Declarations& decls,
                           const std::vector<Premise>& premises, Fuel& fuel) {
    for (auto& m : nf.monomials) {
        bool changed = true;
        while (changed && fuel.spend()) {
            changed = false;
            for (size_t i = 0; i < m.factors.size(); i++) {
                if (m.factors[i].kind != Factor::Kind::Squash) continue;
                std::vector<Factor> rest;
                for (size_t j = 0; j < m.factors.size(); j++)
                    if (j != i) rest.push_back(m.factors[j]);
                if (discharge(rest, *m.factors[i].sub, tc, decls, premises, fuel)) {
                    m.factors.erase(m.factors.begin() + i);
                    changed = true;
                    break;
                }
            }
        }
    }
    std::stable_sort(nf.monomials.begin(), nf.monomials.end(),
                     [](const Monomial& a, const Monomial& b) {
                         return monomial_ckey(a, {}) < monomial_ckey(b, {});
                     });
    return nf;
}

// ---------------------------------------------------------------------------
// Lemmas
// ---------------------------------------------------------------------------

namespace {

UT child_of(const UT& u, int idx) {
    switch (u->kind) {
        case UTerm::Kind::Plus:
        case UTerm::Kind::Times:
            if (idx == 0) return u->u1;
            if (idx == 1) return u->u2;
            break;
        case UTerm::Kind::Squash:
        case UTerm::Kind::Negate:
        case UTerm::Kind::Sigma:
        case UTerm::Kind::Lam:
            if (idx == 0) return u->u1;
            break;
        default: break;
    }
    throw LemmaError(LemmaError::Code::ShapeMismatch,
                     "no child " + std::to_string(idx) + " at this position");
}

UT rebuild_with(const UT& u, int idx, const UT& child) {
    switch (u->kind) {
        case UTerm::Kind::Plus:
            return idx == 0 ? utPlus(child, u->u2) : utPlus(u->u1, child);
        case UTerm::Kind::Times:
            return idx == 0 ? utTimes(child, u->u2) : utTimes(u->u1, child);
        case UTerm::Kind::Squash: return utSquash(child);
        case UTerm::Kind::Negate: return utNegate(child);
        case UTerm::Kind::Sigma: return utSigma(u->binder, u->binderSchema, child);
        case UTerm::Kind::Lam: return utLam(u->binder, u->binderSchema, child);
        default: break;
    }
    throw LemmaError(LemmaError::Code::ShapeMismatch, "cannot rebuild at this position");
}

bool squash_valued(const UT& u) {
    switch (u->kind) {
        case UTerm::Kind::Zero:
        case UTerm::Kind::One:
        case UTerm::Kind::Squash:
        case UTerm::Kind::Negate:
        case UTerm::Kind::EqAtom:
        case UTerm::Kind::PredAtom: return true;
        default: return false;
    }
}

}  // namespace

UT apply_lemma(Lemma lem, const UT& u, const TermPos& pos, TermCtx& tc) {
    if (!pos.empty()) {
        UT child = child_of(u, pos.front());
        TermPos rest(pos.begin() + 1, pos.end());
        return rebuild_with(u, pos.front(), apply_lemma(lem, child, rest, tc));
    }
    switch (lem) {
        case Lemma::SumPair: {
            if (u->kind != UTerm::Kind::Sigma)
                throw LemmaError(LemmaError::Code::ShapeMismatch, "not a sum");
            if (u->binderSchema.kind() != Schema::Kind::Node)
                throw LemmaError(LemmaError::Code::ShapeMismatch,
                                 "sum binder is not pair-shaped");
            VarId vl = tc.fresh(u->binderSchema.left());
            VarId vr = tc.fresh(u->binderSchema.right());
            UT body = ut_subst(u->u1, {{u->binder, ttPair(ttVar(tc, vl), ttVar(tc, vr))}});
            return utSigma(vl, u->binderSchema.left(),
                           utSigma(vr, u->binderSchema.right(), std::move(body)));
        }
        case Lemma::PairEq: {
            if (u->kind != UTerm::Kind::EqAtom)
                throw LemmaError(LemmaError::Code::ShapeMismatch, "not an equality");
            if (u->t1->schema.kind() != Schema::Kind::Node)
                throw LemmaError(LemmaError::Code::ShapeMismatch,
                                 "equality is not over a pair schema");
            return utEqAtom(u->t1, u->t2);
        }
        case Lemma::HpropProd: {
            if (u->kind != UTerm::Kind::Times)
                throw LemmaError(LemmaError::Code::ShapeMismatch, "not a product");
            if (ut_key(u->u1) != ut_key(u->u2))
                throw LemmaError(LemmaError::Code::ShapeMismatch,
                                 "product sides are not identical");
            if (!squash_valued(u->u1))
                throw LemmaError(LemmaError::Code::SideConditionUnproved,
                                 "factor is not 0/1-valued");
            return u->u1;
        }
    }
    throw LemmaError(LemmaError::Code::ShapeMismatch, "unknown lemma");
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

std::string show(const Factor& f) {
    switch (f.kind) {
        case Factor::Kind::Rel: return f.name + "(" + show(f.t1) + ")";
        case Factor::Kind::Eq: return "(" + show(f.t1) + " = " + show(f.t2) + ")";
        case Factor::Kind::PredA: return f.name + "[" + show(f.t1) + "]";
        case Factor::Kind::Squash: return "‖" + show(*f.sub) + "‖";
        case Factor::Kind::Neg: return "¬(" + show(*f.sub) + ")";
    }
    return "?";
}

std::string show(const Monomial& m) {
    std::string out;
    for (const auto& [v, s] : m.binders)
        out += "Σ t" + std::to_string(v) + ":" + s.show() + ". ";
    if (m.factors.empty()) return out + "1";
    for (size_t i = 0; i < m.factors.size(); i++) {
        if (i) out += " × ";
        out += show(m.factors[i]);
    }
    return out;
}

std::string show(const NormalForm& nf) {
    if (nf.monomials.empty()) return "0";
    std::string out;
    for (size_t i = 0; i < nf.monomials.size(); i++) {
        if (i) out += "  +  ";
        out += show(nf.monomials[i]);
    }
    return out;
}

}  // namespace sqlrw

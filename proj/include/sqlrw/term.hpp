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

#ifndef SQLRW_TERM_HPP
#define SQLRW_TERM_HPP

#include <functional>
#include <map>

#include "sqlrw/ast.hpp"

namespace sqlrw {

// ---------------------------------------------------------------------------
// Tuple terms and cardinality terms
//
// Queries denote to lam(g) lam(t) body, where body is a term of the semiring
// algebra (0, 1, +, x, squash, negate, sigma) over tuple-valued atoms.
// Binders carry globally unique ids from a TermCtx (no de Bruijn shifting);
// alpha-equality is recovered by canonical renumbering in canonical_key.
// ---------------------------------------------------------------------------

using VarId = int;

struct TupleTerm;
struct UTerm;
using TT = std::shared_ptr<const TupleTerm>;
using UT = std::shared_ptr<const UTerm>;

// Registry of binder schemas; owns fresh-id allocation for one proof goal.
struct TermCtx {
    std::map<VarId, Schema> schemas;
    VarId next = 0;

    VarId fresh(const Schema& s) {
        VarId v = next++;
        schemas[v] = s;
        return v;
    }
    const Schema& schemaOf(VarId v) const;
};

struct TupleTerm {
    enum class Kind { Var, Fst, Snd, Pair, Unit, ProjMeta, FnApply, AggApply, ExprMeta };
    Kind kind;
    VarId var = -1;       // Var
    TT a, b;              // Fst/Snd/ProjMeta/ExprMeta argument in a; Pair uses a,b
    std::string name;     // ProjMeta / FnApply / AggApply / ExprMeta
    std::vector<TT> args; // FnApply
    Schema aggSchema;     // AggApply: inner query output schema (binder's)
    VarId aggBinder = -1; // AggApply: the aggregated tuple's binder
    UT aggBody;           // AggApply: inner denotation body (free: aggBinder + outer vars)
    Schema schema;        // every term knows its schema
};

// Smart constructors.  ttFst/ttSnd reduce over pairs, ttPair eta-contracts
// (fst x, snd x) to x, and any term of empty schema collapses to unit.
TT ttVar(const TermCtx& ctx, VarId v);
TT ttUnit();
TT ttFst(TT t);
TT ttSnd(TT t);
TT ttPair(TT a, TT b);
TT ttProjMeta(std::string name, TT arg, Schema to);
TT ttFnApply(std::string name, std::vector<TT> args, BaseType ret);
TT ttAggApply(std::string name, Schema aggSchema, VarId binder, UT body);
TT ttExprMeta(std::string name, TT arg, BaseType type);

struct UTerm {
    enum class Kind { Zero, One, Plus, Times, Squash, Negate, Sigma, RelAtom, EqAtom, PredAtom, Lam };
    Kind kind;
    UT u1, u2;           // Plus/Times both; Squash/Negate/Sigma/Lam body in u1
    VarId binder = -1;   // Sigma / Lam
    Schema binderSchema; // Sigma / Lam
    std::string name;    // RelAtom: table; PredAtom: predicate meta
    TT t1, t2;           // RelAtom/PredAtom argument in t1; EqAtom both
};

UT utZero();
UT utOne();
UT utPlus(UT a, UT b);
UT utTimes(UT a, UT b);
UT utSquash(UT a);
UT utNegate(UT a);
UT utSigma(VarId binder, Schema s, UT body);
UT utLam(VarId binder, Schema s, UT body);
UT utRelAtom(std::string table, TT t);
UT utEqAtom(TT a, TT b);
UT utPredAtom(std::string pred, TT t);

// Substitution of tuple terms for variables; descends into AggApply bodies.
TT tt_subst(const TT& t, const std::map<VarId, TT>& sub);
UT ut_subst(const UT& u, const std::map<VarId, TT>& sub);

// Free variables (AggApply binders excluded from their body's frees).
void tt_free_vars(const TT& t, std::set<VarId>& out);
void ut_free_vars(const UT& u, std::set<VarId>& out);

// Structural serialization with raw var ids; same string <=> same term.
std::string tt_key(const TT& t);
std::string ut_key(const UT& u);

// Pretty-printers for proof logs (sigma/lam rendered with invented names).
std::string show(const TT& t);
std::string show(const UT& u);

}  // namespace sqlrw

#endif

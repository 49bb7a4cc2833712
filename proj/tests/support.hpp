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

// Shared test fixtures: a deterministic generator of random ground semiring
// terms with a matching evaluation instance, and the semiring identity
// checker run over all multiplicity valuations.

#ifndef SQLRW_TESTS_SUPPORT_HPP
#define SQLRW_TESTS_SUPPORT_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "sqlrw/interp.hpp"
#include "sqlrw/term.hpp"

namespace sqlrw::testsupport {

struct Rng {
    std::uint64_t s;
    explicit Rng(std::uint64_t seed) : s(seed) {}
    std::uint64_t next() {
        s += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = s;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    long pick(long n) { return static_cast<long>(next() % static_cast<std::uint64_t>(n)); }
};

// ---------------------------------------------------------------------------
// Random ground terms.  The generator and the instance share one vocabulary:
// tables T1 : int and T2 : (int, int), predicate pb over int, constant c0.
// ---------------------------------------------------------------------------

inline Declarations genDecls() {
    Declarations d;
    Schema intS = Schema::leaf(BaseType::intType());
    d.tables["T1"] = TableSig{intS, true};
    d.tables["T2"] = TableSig{Schema::node(intS, intS), true};
    d.preds["pb"] = intS;
    d.fns["c0"] = FnSig{{}, BaseType::intType()};
    return d;
}

inline Instance genInstance() {
    Instance inst;
    inst.decls = genDecls();
    inst.domains["int"] = 2;
    Bag t1;
    t1.add(Tuple::scalar(Value::intV(0)), 2);
    t1.add(Tuple::scalar(Value::intV(1)), 1);
    inst.tables["T1"] = t1;
    Bag t2;
    t2.add(Tuple::pair(Tuple::scalar(Value::intV(0)), Tuple::scalar(Value::intV(1))), 1);
    t2.add(Tuple::pair(Tuple::scalar(Value::intV(1)), Tuple::scalar(Value::intV(1))), 2);
    inst.tables["T2"] = t2;
    inst.predMetas["pb"] = {tuple_key(Tuple::scalar(Value::intV(0)))};
    inst.fns["c0"] = {{"()", Value::intV(1)}};
    return inst;
}

// A tuple term of the wanted schema built from the variables in scope plus
// the constant; pairs recurse, scalars pick among paths reaching an int.
inline TT genTT(Rng& rng, TermCtx& tc, const Schema& want,
                const std::vector<std::pair<VarId, Schema>>& scope, int depth) {
    if (want.isEmpty()) return ttUnit();
    if (want.isNode() && (depth <= 0 || rng.pick(2) == 0))
        return ttPair(genTT(rng, tc, want.left(), scope, depth - 1),
                      genTT(rng, tc, want.right(), scope, depth - 1));

    // Collect access paths of the wanted schema: whole bound variables and
    // their components, one selector deep.
    std::vector<TT> cands;
    for (const auto& [v, s] : scope) {
        if (s == want) cands.push_back(ttVar(tc, v));
        if (s.isNode()) {
            if (s.left() == want) cands.push_back(ttFst(ttVar(tc, v)));
            if (s.right() == want) cands.push_back(ttSnd(ttVar(tc, v)));
        }
    }
    if (want.isLeaf() && want.base() == BaseType::intType())
        cands.push_back(ttFnApply("c0", {}, BaseType::intType()));
    if (cands.empty())
        return ttPair(genTT(rng, tc, want.left(), scope, depth - 1),
                      genTT(rng, tc, want.right(), scope, depth - 1));
    return cands[rng.pick(static_cast<long>(cands.size()))];
}

inline UT genUT(Rng& rng, TermCtx& tc, std::vector<std::pair<VarId, Schema>>& scope, int depth) {
    Schema intS = Schema::leaf(BaseType::intType());
    Schema pairS = Schema::node(intS, intS);
    long r = rng.pick(depth <= 0 ? 6 : 12);
    switch (r) {
        case 0: return utZero();
        case 1: return utOne();
        case 2: return utRelAtom("T1", genTT(rng, tc, intS, scope, 2));
        case 3: return utRelAtom("T2", genTT(rng, tc, pairS, scope, 2));
        case 4: return utPredAtom("pb", genTT(rng, tc, intS, scope, 2));
        case 5:
            return utEqAtom(genTT(rng, tc, intS, scope, 2), genTT(rng, tc, intS, scope, 2));
        case 6: return utPlus(genUT(rng, tc, scope, depth - 1), genUT(rng, tc, scope, depth - 1));
        case 7: return utTimes(genUT(rng, tc, scope, depth - 1), genUT(rng, tc, scope, depth - 1));
        case 8: return utSquash(genUT(rng, tc, scope, depth - 1));
        case 9: return utNegate(genUT(rng, tc, scope, depth - 1));
        case 10: {
            Schema s = rng.pick(2) == 0 ? intS : pairS;
            VarId v = tc.fresh(s);
            scope.emplace_back(v, s);
            UT body = genUT(rng, tc, scope, depth - 1);
            scope.pop_back();
            return utSigma(v, s, body);
        }
        default: {
            // An aggregate of the first table folded into an equality; half
            // the bodies carry an equality factor of their own.
            VarId v = tc.fresh(intS);
            std::vector<std::pair<VarId, Schema>> inner = scope;
            inner.emplace_back(v, intS);
            UT body = utRelAtom("T1", genTT(rng, tc, intS, inner, 1));
            if (rng.pick(2) == 0)
                body = utTimes(std::move(body), utEqAtom(genTT(rng, tc, intS, inner, 1),
                                                         genTT(rng, tc, intS, inner, 1)));
            TT agg = ttAggApply(rng.pick(2) == 0 ? "sum" : "count", intS, v, body);
            return utEqAtom(agg, genTT(rng, tc, intS, scope, 2));
        }
    }
}

inline UT genGroundUT(Rng& rng, TermCtx& tc, int depth = 4) {
    std::vector<std::pair<VarId, Schema>> scope;
    return genUT(rng, tc, scope, depth);
}

// ---------------------------------------------------------------------------
// Semiring identities checked pointwise over multiplicity valuations.
// Variables are encoded as relation atoms whose table holds one tuple with
// the valuation's multiplicity.
// ---------------------------------------------------------------------------

struct IdentityCheck {
    std::string name;
    // Builds (lhs, rhs) from the three variable atoms.
    std::function<std::pair<UT, UT>(const UT&, const UT&, const UT&, TermCtx&)> make;
};

inline std::vector<IdentityCheck> semiringIdentities() {
    auto two = [](UT l, UT r) { return std::make_pair(std::move(l), std::move(r)); };
    Schema intS = Schema::leaf(BaseType::intType());
    return {
        {"plus commutes", [=](const UT& a, const UT& b, const UT&, TermCtx&) {
             return two(utPlus(a, b), utPlus(b, a));
         }},
        {"plus associates", [=](const UT& a, const UT& b, const UT& c, TermCtx&) {
             return two(utPlus(utPlus(a, b), c), utPlus(a, utPlus(b, c)));
         }},
        {"plus unit", [=](const UT& a, const UT&, const UT&, TermCtx&) {
             return two(utPlus(a, utZero()), a);
         }},
        {"times commutes", [=](const UT& a, const UT& b, const UT&, TermCtx&) {
             return two(utTimes(a, b), utTimes(b, a));
         }},
        {"times associates", [=](const UT& a, const UT& b, const UT& c, TermCtx&) {
             return two(utTimes(utTimes(a, b), c), utTimes(a, utTimes(b, c)));
         }},
        {"times unit", [=](const UT& a, const UT&, const UT&, TermCtx&) {
             return two(utTimes(a, utOne()), a);
         }},
        {"times absorbs zero", [=](const UT& a, const UT&, const UT&, TermCtx&) {
             return two(utTimes(a, utZero()), utZero());
         }},
        {"times distributes", [=](const UT& a, const UT& b, const UT& c, TermCtx&) {
             return two(utTimes(a, utPlus(b, c)), utPlus(utTimes(a, b), utTimes(a, c)));
         }},
        {"squash of zero", [=](const UT&, const UT&, const UT&, TermCtx&) {
             return two(utSquash(utZero()), utZero());
         }},
        {"squash of one", [=](const UT&, const UT&, const UT&, TermCtx&) {
             return two(utSquash(utOne()), utOne());
         }},
        {"squash splits products", [=](const UT& a, const UT& b, const UT&, TermCtx&) {
             return two(utSquash(utTimes(a, b)), utTimes(utSquash(a), utSquash(b)));
         }},
        {"squash collapses sums", [=](const UT& a, const UT& b, const UT&, TermCtx&) {
             return two(utSquash(utPlus(a, b)), utSquash(utPlus(utSquash(a), utSquash(b))));
         }},
        {"squash idempotent", [=](const UT& a, const UT&, const UT&, TermCtx&) {
             return two(utSquash(utSquash(a)), utSquash(a));
         }},
        {"squash absorbed by its factor", [=](const UT& a, const UT&, const UT&, TermCtx&) {
             return two(utTimes(a, utSquash(a)), a);
         }},
        {"negation of zero", [=](const UT&, const UT&, const UT&, TermCtx&) {
             return two(utNegate(utZero()), utOne());
         }},
        {"negation annihilates its term", [=](const UT& a, const UT&, const UT&, TermCtx&) {
             return two(utTimes(a, utNegate(a)), utZero());
         }},
        {"triple negation", [=](const UT& a, const UT&, const UT&, TermCtx&) {
             return two(utNegate(utNegate(utNegate(a))), utNegate(a));
         }},
        {"sum splits over plus", [=](const UT& a, const UT& b, const UT&, TermCtx& tc) {
             VarId x = tc.fresh(intS);
             return two(utSigma(x, intS, utPlus(a, b)),
                        utPlus(utSigma(x, intS, a), utSigma(x, intS, b)));
         }},
        {"constant factors hoist from sums", [=](const UT& a, const UT& b, const UT&, TermCtx& tc) {
             VarId x = tc.fresh(intS);
             return two(utSigma(x, intS, utTimes(a, b)), utTimes(a, utSigma(x, intS, b)));
         }},
    };
}

// Runs every identity over all valuations of (a, b, c) in {0..maxMult}^3.
// report receives one line per failing identity and valuation.
inline bool checkSemiringIdentities(int maxMult,
                                    const std::function<void(const std::string&)>& report) {
    bool ok = true;
    for (const auto& idc : semiringIdentities()) {
        for (int ma = 0; ma <= maxMult; ma++)
            for (int mb = 0; mb <= maxMult; mb++)
                for (int mc = 0; mc <= maxMult; mc++) {
                    Instance inst;
                    Schema intS = Schema::leaf(BaseType::intType());
                    inst.decls.tables["A"] = TableSig{intS, true};
                    inst.decls.tables["B"] = TableSig{intS, true};
                    inst.decls.tables["C"] = TableSig{intS, true};
                    inst.domains["int"] = 2;
                    Bag ba, bb, bc;
                    if (ma > 0) ba.add(Tuple::scalar(Value::intV(0)), ma);
                    if (mb > 0) bb.add(Tuple::scalar(Value::intV(0)), mb);
                    if (mc > 0) bc.add(Tuple::scalar(Value::intV(0)), mc);
                    inst.tables["A"] = ba;
                    inst.tables["B"] = bb;
                    inst.tables["C"] = bc;
                    inst.fns["z"] = {{"()", Value::intV(0)}};
                    inst.decls.fns["z"] = FnSig{{}, BaseType::intType()};

                    TermCtx tc;
                    TT zero = ttFnApply("z", {}, BaseType::intType());
                    UT a = utRelAtom("A", zero);
                    UT b = utRelAtom("B", zero);
                    UT c = utRelAtom("C", zero);
                    auto [l, r] = idc.make(a, b, c, tc);
                    std::map<VarId, Tup> env;
                    Nat lv = eval_uterm(inst, env, l);
                    Nat rv = eval_uterm(inst, env, r);
                    if (lv != rv) {
                        ok = false;
                        report(idc.name + " fails at (" + std::to_string(ma) + "," +
                               std::to_string(mb) + "," + std::to_string(mc) + "): " +
                               lv.get_str() + " vs " + rv.get_str());
                    }
                }
    }
    return ok;
}

}  // namespace sqlrw::testsupport

#endif

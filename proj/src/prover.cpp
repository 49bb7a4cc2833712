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

#include "sqlrw/prover.hpp"

#include "sqlrw/denote.hpp"

namespace sqlrw {

namespace {

Verdict oracle_finish(const RewriteRule& rule, const ProverConfig& cfg, Verdict v,
                      const std::string& reason) {
    v.kind = VerdictKind::Unknown;
    v.reason = reason;
    if (cfg.runOracle) {
        OracleResult r = differential_test(rule, cfg.oracle);
        v.instancesChecked = r.instancesChecked;
        if (r.cex) {
            v.kind = VerdictKind::Refuted;
            v.cex = r.cex;
            v.reason.clear();
            v.trace.steps.push_back("oracle: counterexample found");
        } else if (r.instancesChecked > 0) {
            v.corroborated = true;
            v.trace.steps.push_back("oracle: no counterexample in " +
                                    std::to_string(r.instancesChecked) + " instances");
        }
    }
    return v;
}

bool biimpl_applicable(const NormalForm& nf) {
    if (nf.monomials.size() != 1) return false;
    const Monomial& m = nf.monomials[0];
    if (!m.binders.empty()) return false;
    for (const auto& f : m.factors)
        if (!f.squashValued()) return false;
    return true;
}

bool implies(const Monomial& hyp, const Monomial& goal, TermCtx& tc, const Declarations& decls,
             const std::vector<Premise>& premises, Fuel& fuel) {
    NormalForm goalNF;
    goalNF.monomials.push_back(goal);
    return discharge(hyp.factors, goalNF, tc, decls, premises, fuel);
}

struct Normalized {
    TermCtx tc;
    NormalForm left, right;
    bool ok = false;
    std::string error;
};

Normalized normalize_sides(const RewriteRule& rule, Fuel& fuel) {
    Normalized out;
    try {
        Denoted dl = denote_query(rule.decls, rule.context, rule.lhs, out.tc);
        Denoted dr = denote_query(rule.decls, rule.context, rule.rhs, out.tc);
        UT br = ut_subst(dr.body, {{dr.g, ttVar(out.tc, dl.g)}, {dr.t, ttVar(out.tc, dl.t)}});
        out.left = normalize(dl.body, out.tc, rule.decls, rule.premises, fuel);
        out.right = normalize(br, out.tc, rule.decls, rule.premises, fuel);
        out.ok = true;
    } catch (const Error& e) {
        out.error = e.what();
    }
    return out;
}

}  // namespace

Verdict prove_equiv(const RewriteRule& rule, const ProverConfig& cfg) {
    Verdict v;
    rule_wellformed(rule);
    v.trace.steps.push_back("typecheck: ok");

    // Flat select-product-where queries have complete decision procedures.
    if (rule.premises.empty()) {
        std::optional<CQ> cl, cr;
        try {
            cl = to_cq(rule.lhs, rule.decls);
            cr = to_cq(rule.rhs, rule.decls);
        } catch (const Error&) {
        }
        if (cl && cr && cl->distinct == cr->distinct) {
            if (cl->distinct) {
                CqEquivResult r = decide_set_equiv(*cl, *cr);
                if (r.equivalent) {
                    v.kind = VerdictKind::Proved;
                    v.trace.method = "cq-set";
                    v.trace.cqForward = r.forward;
                    v.trace.cqBackward = r.backward;
                    v.trace.steps.push_back("cq: homomorphisms in both directions");
                    return v;
                }
                v.trace.steps.push_back("cq: no homomorphism pair, inequivalent as sets");
                return oracle_finish(rule, cfg, std::move(v), "fragment");
            }
            if (decide_bag_equiv(*cl, *cr)) {
                v.kind = VerdictKind::Proved;
                v.trace.method = "cq-bag";
                v.trace.steps.push_back("cq: equality-preserving atom bijection");
                return v;
            }
            v.trace.steps.push_back("cq: no atom bijection, inequivalent as bags");
            return oracle_finish(rule, cfg, std::move(v), "fragment");
        }
    }

    Fuel fuel{cfg.fuel * 7 / 10};
    Normalized n = normalize_sides(rule, fuel);
    if (!n.ok) {
        v.trace.steps.push_back("normalize: " + n.error);
        return oracle_finish(rule, cfg, std::move(v), "fragment");
    }
    v.trace.leftKey = canonical_key(n.left);
    v.trace.rightKey = canonical_key(n.right);
    v.leftNormal = show(n.left);
    v.rightNormal = show(n.right);
    if (ac_equal(n.left, n.right)) {
        v.kind = VerdictKind::Proved;
        v.trace.method = "normal-form";
        v.trace.steps.push_back("normalize: canonical keys agree");
        return v;
    }
    v.trace.steps.push_back("normalize: canonical keys differ");

    n.left = hprop_eliminate(std::move(n.left), n.tc, rule.decls, rule.premises, fuel);
    n.right = hprop_eliminate(std::move(n.right), n.tc, rule.decls, rule.premises, fuel);
    v.trace.leftKey = canonical_key(n.left);
    v.trace.rightKey = canonical_key(n.right);
    v.leftNormal = show(n.left);
    v.rightNormal = show(n.right);
    if (ac_equal(n.left, n.right)) {
        v.kind = VerdictKind::Proved;
        v.trace.method = "hprop";
        v.trace.steps.push_back("hprop: redundant squashes removed, keys agree");
        return v;
    }
    v.trace.steps.push_back("hprop: keys still differ");

    Fuel bifuel{cfg.fuel * 3 / 10};
    if (biimpl_applicable(n.left) && biimpl_applicable(n.right)) {
        bool lr = implies(n.left.monomials[0], n.right.monomials[0], n.tc, rule.decls,
                          rule.premises, bifuel);
        bool rl = lr && implies(n.right.monomials[0], n.left.monomials[0], n.tc, rule.decls,
                                rule.premises, bifuel);
        if (lr && rl) {
            v.kind = VerdictKind::Proved;
            v.trace.method = "biimpl";
            v.trace.steps.push_back("biimpl: mutual entailment of 0/1 factors");
            return v;
        }
        v.trace.steps.push_back("biimpl: entailment not shown");
    }

    std::string reason = (fuel.exhausted || bifuel.exhausted) ? "fuel" : "fragment";
    return oracle_finish(rule, cfg, std::move(v), reason);
}

bool replay_trace(const RewriteRule& rule, const ProofTrace& trace, const ProverConfig& cfg) {
    try {
        rule_wellformed(rule);
        if (trace.method == "cq-set") {
            auto cl = to_cq(rule.lhs, rule.decls);
            auto cr = to_cq(rule.rhs, rule.decls);
            if (!cl || !cr || !cl->distinct || !cr->distinct) return false;
            return verify_homomorphism(*cl, *cr, trace.cqForward) &&
                   verify_homomorphism(*cr, *cl, trace.cqBackward);
        }
        if (trace.method == "cq-bag") {
            auto cl = to_cq(rule.lhs, rule.decls);
            auto cr = to_cq(rule.rhs, rule.decls);
            if (!cl || !cr || cl->distinct || cr->distinct) return false;
            return decide_bag_equiv(*cl, *cr);
        }
        if (trace.method == "normal-form" || trace.method == "hprop" ||
            trace.method == "biimpl") {
            Fuel fuel{cfg.fuel * 7 / 10};
            Normalized n = normalize_sides(rule, fuel);
            if (!n.ok) return false;
            if (trace.method == "normal-form")
                return canonical_key(n.left) == trace.leftKey &&
                       canonical_key(n.right) == trace.rightKey &&
                       trace.leftKey == trace.rightKey;
            n.left = hprop_eliminate(std::move(n.left), n.tc, rule.decls, rule.premises, fuel);
            n.right = hprop_eliminate(std::move(n.right), n.tc, rule.decls, rule.premises, fuel);
            if (trace.method == "hprop")
                return canonical_key(n.left) == trace.leftKey &&
                       canonical_key(n.right) == trace.rightKey &&
                       trace.leftKey == trace.rightKey;
            Fuel bifuel{cfg.fuel * 3 / 10};
            return biimpl_applicable(n.left) && biimpl_applicable(n.right) &&
                   implies(n.left.monomials[0], n.right.monomials[0], n.tc, rule.decls,
                           rule.premises, bifuel) &&
                   implies(n.right.monomials[0], n.left.monomials[0], n.tc, rule.decls,
                           rule.premises, bifuel);
        }
    } catch (const Error&) {
        return false;
    }
    return false;
}

std::string verdict_name(const Verdict& v) {
    switch (v.kind) {
        case VerdictKind::Proved: return "proved";
        case VerdictKind::Refuted: return "refuted";
        case VerdictKind::Unknown: return v.corroborated ? "corroborated" : "unknown";
    }
    return "unknown";
}

bool verdict_meets(const Verdict& v, const std::string& expect) {
    auto rank = [](const std::string& name) {
        if (name == "refuted") return 0;
        if (name == "unknown") return 1;
        if (name == "corroborated") return 2;
        return 3;
    };
    std::string name = verdict_name(v);
    if (expect == "refuted") return name == "refuted";
    std::string want = expect.empty() ? "corroborated" : expect;
    return rank(name) >= rank(want);
}

}  // namespace sqlrw

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

#ifndef SQLRW_NORMALIZE_HPP
#define SQLRW_NORMALIZE_HPP

#include "sqlrw/term.hpp"

namespace sqlrw {

struct Fuel {
    long remaining = 10000;
    bool exhausted = false;
    bool spend(long n = 1) {
        if (remaining < n) {
            exhausted = true;
            return false;
        }
        remaining -= n;
        return true;
    }
};

struct NormalForm;

// One multiplicand of a monomial.  Eq, PredA, Squash, and Neg are 0/1-valued;
// Neg stores its content before squashing (Neg(B) is 1 exactly when B is 0).
struct Factor {
    enum class Kind { Rel, Eq, PredA, Squash, Neg };
    Kind kind;
    std::string name;  // Rel / PredA
    TT t1, t2;         // Rel and PredA use t1; Eq uses both
    std::shared_ptr<const NormalForm> sub;  // Squash / Neg content

    bool squashValued() const { return kind != Kind::Rel; }
};

// A product of factors under a prenex block of tuple binders (outermost
// first).  Unused binders multiply by their domain size and are never
// dropped.
struct Monomial {
    std::vector<std::pair<VarId, Schema>> binders;
    std::vector<Factor> factors;
};

// A sum of monomials.  Duplicates are kept: the top level is bag-valued.
struct NormalForm {
    std::vector<Monomial> monomials;
};

// Rewrites a semiring term into canonical sum-of-products form: binder
// splitting, congruence closure over equalities, one-point elimination,
// premise saturation (keys and functional dependencies), and squash/negate
// content canonicalization, run to a fuel-bounded fixpoint.
NormalForm normalize(const UT& u, TermCtx& tc, const Declarations& decls,
                     const std::vector<Premise>& premises, Fuel& fuel);

// Alpha-invariant serialization: binders are renumbered per monomial, taking
// the minimum over binder orderings.  Two normal forms denote syntactically
// identical sums exactly when their keys match.
std::string canonical_key(const NormalForm& nf);
bool ac_equal(const NormalForm& a, const NormalForm& b);

// Rebuilds a term denoting the same function, for evaluation-based checks.
UT nf_to_uterm(const NormalForm& nf);

// Entailment: from the hypothesis factors (squash hypotheses are destructed,
// splitting into cases that must all succeed), prove some monomial of the
// goal inhabited by finding witnesses for its binders.
bool discharge(const std::vector<Factor>& hyps, const NormalForm& goal, TermCtx& tc,
               const Declarations& decls, const std::vector<Premise>& premises, Fuel& fuel,
               int depth = 0);

// Deletes squash factors that are entailed by their sibling factors.
NormalForm hprop_eliminate(NormalForm nf, TermCtx& tc, const Declarations& decls,
                           const std::vector<Premise>& premises, Fuel& fuel);

// Single equational steps applied at a position (child indices from the
// root), for replaying proofs without search.
//   SumPair:   a sum over a pair schema becomes two nested sums
//   PairEq:    an equality over a pair schema splits componentwise
//   HpropProd: a product of two identical 0/1-valued terms collapses
enum class Lemma { SumPair, PairEq, HpropProd };
using TermPos = std::vector<int>;
UT apply_lemma(Lemma lem, const UT& u, const TermPos& pos, TermCtx& tc);

std::string show(const Factor& f);
std::string show(const Monomial& m);
std::string show(const NormalForm& nf);

}  // namespace sqlrw

#endif

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

// Conjunctive-query fragment: flat select / product / equality-where queries
// with decision procedures for set and bag equivalence, plus a canonical
// database containment oracle.

#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sqlrw/ast.hpp"
#include "sqlrw/interp.hpp"

namespace sqlrw {

// A column access: an atom of the query body plus a path into its tuple.
// Path steps are "L", "R", or "#name" for a projection meta.
struct Access {
    int atom = 0;
    std::vector<std::string> path;

    std::string key() const;
};

struct HeadTree;
using HeadTreeP = std::shared_ptr<const HeadTree>;

// Shape of the query head: a tree of accesses.
struct HeadTree {
    enum class Kind { Unit, Leaf, Pair };
    Kind kind = Kind::Unit;
    Access acc;       // Leaf
    HeadTreeP l, r;   // Pair

    static HeadTreeP unit();
    static HeadTreeP leaf(Access a);
    static HeadTreeP pair(HeadTreeP a, HeadTreeP b);
};

struct CQ {
    bool distinct = false;
    std::vector<std::string> atomTables;
    std::vector<Schema> atomSchemas;
    // Equalities at atom level, node schemas already split componentwise.
    std::vector<std::pair<Access, Access>> eqs;
    HeadTreeP head;
    const Declarations* decls = nullptr;
};

// Recognizes [DISTINCT] SELECT p FROM t1, ..., tn [WHERE eq-conjunction].
// Returns nothing when the query falls outside the fragment.
std::optional<CQ> to_cq(const QueryP& q, const Declarations& decls);

// Atom mapping from one query's body into another's that preserves tables,
// equalities, and the head.  Its existence proves `to` is contained in
// `from` under set semantics.
struct HomResult {
    bool found = false;
    std::vector<int> mapping;  // index in `from` -> index in `to`
};
HomResult find_homomorphism(const CQ& from, const CQ& to);

// Checks a concrete mapping without searching.
bool verify_homomorphism(const CQ& from, const CQ& to, const std::vector<int>& mapping);

struct CqEquivResult {
    bool equivalent = false;
    std::vector<int> forward;   // a's atoms into b's
    std::vector<int> backward;  // b's atoms into a's
};

// Set equivalence: homomorphisms in both directions.
CqEquivResult decide_set_equiv(const CQ& a, const CQ& b);

// Bag equivalence: an atom bijection preserving the equality closure and
// the head exactly.
bool decide_bag_equiv(const CQ& a, const CQ& b);

// Canonical database: one row per atom, one fresh constant per equality
// class.  Requires concrete schemas with int, string, or abstract columns.
Instance canonical_database(const CQ& q);

// The head tuple the canonical database's identity assignment produces.
Tup canonical_head(const CQ& q);

// All head tuples (set semantics) the query produces over an instance built
// by canonical_database.
std::set<std::string> cq_eval(const CQ& q, const Instance& db);

// Containment oracle by canonical-database evaluation: sub contained in sup.
bool cq_contained_in(const CQ& sub, const CQ& sup);

}  // namespace sqlrw

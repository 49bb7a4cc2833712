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

#ifndef SQLRW_INTERP_HPP
#define SQLRW_INTERP_HPP

#include <gmpxx.h>

#include <cstdint>
#include <optional>

#include "sqlrw/term.hpp"

namespace sqlrw {

using Nat = mpz_class;

// ---------------------------------------------------------------------------
// Values, tuples, bags
// ---------------------------------------------------------------------------

struct Value {
    enum class Kind { Int, Bool, Str, Abs, Rat };
    Kind kind = Kind::Int;
    Nat i;
    bool b = false;
    std::string s;
    std::string absType;  // Abs: carrier name
    long absIndex = 0;    // Abs: element index in the enumerated domain
    mpq_class r;          // Rat only, always with denominator > 1

    static Value intV(Nat n);
    static Value boolV(bool v);
    static Value strV(std::string v);
    static Value absV(std::string type, long index);
    // Canonicalizes: a rational with denominator 1 becomes an Int.
    static Value ratV(mpq_class q);

    bool operator==(const Value& o) const;
    std::string show() const;
};

struct Tuple;
using Tup = std::shared_ptr<const Tuple>;

struct Tuple {
    enum class Kind { Unit, Scalar, Pair };
    Kind kind = Kind::Unit;
    Value v;     // Scalar
    Tup a, b;    // Pair

    static Tup unit();
    static Tup scalar(Value v);
    static Tup pair(Tup a, Tup b);
};

// Canonical serialization; bag keys and instance tables are keyed by it.
std::string tuple_key(const Tup& t);
std::string show(const Tup& t);

// Multiset of tuples with arbitrary-precision multiplicities, canonically
// ordered by tuple_key.
struct Bag {
    std::map<std::string, std::pair<Tup, Nat>> m;

    void add(const Tup& t, const Nat& mult);
    Nat mult(const Tup& t) const;
    bool empty() const { return m.empty(); }
    bool operator==(const Bag& o) const;
    std::string show() const;
};

// ---------------------------------------------------------------------------
// Instances: concrete bindings for every meta-variable of a rule
// ---------------------------------------------------------------------------

struct Instance {
    Declarations decls;  // schemas fully resolved (no schema metas remain)
    std::map<std::string, Schema> schemaMetas;
    std::map<std::string, long> domains;  // base-type name ("int", "string", carrier) -> size
    std::map<std::string, Bag> tables;
    std::map<std::string, ProjP> projMetas;                       // concrete path
    std::map<std::string, std::set<std::string>> predMetas;       // tuple keys mapped to true
    std::map<std::string, std::map<std::string, Value>> exprMetas;  // tuple key -> value
    std::map<std::string, std::map<std::string, Value>> fns;        // args key -> value

    // Instance-block DSL syntax, replayable; a nonempty name targets the rule
    // of that name on replay.
    std::string show(const std::string& name = "") const;
};

// Resolve schema metas against inst.schemaMetas (deep).
Schema resolve_schema(const Instance& inst, const Schema& s);

// All tuples of a resolved schema under the instance's finite domains, in a
// deterministic order.  Int and string leaves range over {0..k-1} plus every
// value of that type appearing in the instance (active domain).
// Throws EvalError(InfiniteDomain) when a leaf type has no finite domain.
std::vector<Tup> tuple_space(const Instance& inst, const Schema& s);

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

Bag eval_query(const Instance& inst, const Tup& ctx, const QueryP& q);
bool eval_pred(const Instance& inst, const PredP& b, const Tup& gt);
Value eval_expr(const Instance& inst, const ExprP& e, const Tup& ct);
Tup apply_proj(const Instance& inst, const ProjP& p, const Tup& t);

// Aggregate over a bag of scalar tuples (COUNT accepts any tuples).
// SUM/COUNT of an empty bag are 0; MAX/MIN/AVG throw EvalError(EmptyAggregate).
Value eval_agg(const std::string& aggName, const Bag& bag);

// Cardinality of a ground semiring term under env (binder -> tuple).
Nat eval_uterm(const Instance& inst, std::map<VarId, Tup>& env, const UT& u);

// Direct check of a premise on an instance (the encoded query equation is
// cross-validated against this in tests).
bool premise_holds(const Instance& inst, const Premise& p);

// ---------------------------------------------------------------------------
// Differential oracle
// ---------------------------------------------------------------------------

struct OracleConfig {
    int depth = 1;    // schema meta tree depth
    int domain = 2;   // base-type domain size k
    int tuples = 2;   // max tuples per relation
    int mult = 2;     // max multiplicity
    bool exhaustive = true;
    std::uint64_t seed = 0;
    long budget = 200000;  // instance limit for exhaustive mode
    long samples = 2000;   // instances examined in random mode
};

struct CounterExample {
    Instance inst;
    Tup ctx;
    Bag left, right;
    std::string show(const RewriteRule& rule) const;
};

struct OracleResult {
    std::optional<CounterExample> cex;
    long instancesChecked = 0;
    long skippedPremise = 0;
    long skippedEmptyAgg = 0;
    bool exhausted = false;  // whole instance space covered
};

OracleResult differential_test(const RewriteRule& rule, const OracleConfig& cfg);

// Instance enumeration behind differential_test: every slot assignment of the
// rule's declarations within bounds, premises not consulted.  fn returns
// false to stop early.  Returns true when the bounded space was exhaustively
// covered rather than sampled.
bool for_each_instance(const RewriteRule& rule, const OracleConfig& cfg,
                       const std::function<bool(Instance&)>& fn);

// Enumeration helpers shared with tests and the CQ canonical-database check.
std::vector<Schema> schema_candidates(int depth);
std::vector<ProjP> proj_paths(const Schema& from, const Schema& to);

}  // namespace sqlrw

#endif

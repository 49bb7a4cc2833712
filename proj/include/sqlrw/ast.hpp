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

#ifndef SQLRW_AST_HPP
#define SQLRW_AST_HPP

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace sqlrw {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TypeError : Error {
    enum class Code { PathMismatch, SchemaMismatch, UnboundMeta, UnsupportedSugar };
    Code code;
    TypeError(Code c, const std::string& msg) : Error(msg), code(c) {}
};

struct EvalError : Error {
    enum class Code { InfiniteDomain, EmptyAggregate, MissingBinding, Malformed };
    Code code;
    EvalError(Code c, const std::string& msg) : Error(msg), code(c) {}
};

struct LemmaError : Error {
    enum class Code { ShapeMismatch, SideConditionUnproved };
    Code code;
    LemmaError(Code c, const std::string& msg) : Error(msg), code(c) {}
};

// ---------------------------------------------------------------------------
// Base types and schemas
//
// Schemas are unnamed binary trees: a schema is empty, a single value of a
// base type, a pair of schemas, or a schema meta-variable standing for an
// arbitrary schema.  Tuples follow the same shape, so attribute access is by
// position (left/right paths), never by name.
// ---------------------------------------------------------------------------

enum class BaseKind { Int, Bool, String, Abstract };

struct BaseType {
    BaseKind kind = BaseKind::Int;
    std::string name;  // Abstract only: the declared carrier name

    static BaseType intType() { return {BaseKind::Int, {}}; }
    static BaseType boolType() { return {BaseKind::Bool, {}}; }
    static BaseType stringType() { return {BaseKind::String, {}}; }
    static BaseType abstract(std::string n) { return {BaseKind::Abstract, std::move(n)}; }

    bool operator==(const BaseType& o) const { return kind == o.kind && name == o.name; }
    bool operator<(const BaseType& o) const {
        if (kind != o.kind) return kind < o.kind;
        return name < o.name;
    }
    std::string show() const;
};

class Schema {
public:
    enum class Kind { Empty, Leaf, Node, Meta };

    Schema() : rep_(emptyRep()) {}

    static Schema empty() { return Schema(emptyRep()); }
    static Schema leaf(BaseType t);
    static Schema node(Schema l, Schema r);
    static Schema meta(std::string name);

    Kind kind() const { return rep_->kind; }
    bool isEmpty() const { return kind() == Kind::Empty; }
    bool isLeaf() const { return kind() == Kind::Leaf; }
    bool isNode() const { return kind() == Kind::Node; }
    bool isMeta() const { return kind() == Kind::Meta; }

    const BaseType& base() const;       // Leaf only
    Schema left() const;                // Node only
    Schema right() const;               // Node only
    const std::string& metaName() const;  // Meta only

    bool operator==(const Schema& o) const;
    bool operator!=(const Schema& o) const { return !(*this == o); }

    std::string show() const;

private:
    struct Rep {
        Kind kind;
        BaseType base;
        std::shared_ptr<const Rep> l, r;
        std::string name;
    };
    explicit Schema(std::shared_ptr<const Rep> r) : rep_(std::move(r)) {}
    static std::shared_ptr<const Rep> emptyRep();
    std::shared_ptr<const Rep> rep_;
};

// ---------------------------------------------------------------------------
// Query AST
//
// Proj / Expr / Pred / Query are mutually recursive immutable trees.
// Composition `a.b` navigates a first, then b, so the leftmost selector of a
// written path is applied first (right.left.k picks the left component of the
// right component, then applies k).
// ---------------------------------------------------------------------------

struct Proj;
struct Expr;
struct Pred;
struct Query;
using ProjP = std::shared_ptr<const Proj>;
using ExprP = std::shared_ptr<const Expr>;
using PredP = std::shared_ptr<const Pred>;
using QueryP = std::shared_ptr<const Query>;

struct Proj {
    enum class Kind { Star, Left, Right, Empty, Compose, Pair, Eval, Meta };
    Kind kind;
    ProjP a, b;        // Compose: a then b.  Pair: components.
    ExprP e;           // Eval
    std::string name;  // Meta

    static ProjP star();
    static ProjP left();
    static ProjP right();
    static ProjP empty();
    static ProjP compose(ProjP a, ProjP b);
    static ProjP pair(ProjP a, ProjP b);
    static ProjP eval(ExprP e);
    static ProjP meta(std::string name);
};

struct Expr {
    enum class Kind { Var, Apply, Agg, CastExpr, Meta };
    Kind kind;
    ProjP path;               // Var; CastExpr cast path
    std::string name;         // Apply: function; Agg: aggregate; Meta
    std::vector<ExprP> args;  // Apply
    QueryP q;                 // Agg
    ExprP sub;                // CastExpr

    static ExprP var(ProjP p);
    static ExprP apply(std::string fn, std::vector<ExprP> args);
    static ExprP agg(std::string aggName, QueryP q);
    static ExprP castExpr(ProjP p, ExprP e);
    static ExprP meta(std::string name);
};

struct Pred {
    enum class Kind { Eq, And, Or, Not, True, False, Exists, CastPred, Meta };
    Kind kind;
    ExprP e1, e2;      // Eq
    PredP p1, p2;      // And/Or; Not and CastPred use p1
    QueryP q;          // Exists
    ProjP path;        // CastPred
    std::string name;  // Meta

    static PredP eq(ExprP a, ExprP b);
    static PredP conj(PredP a, PredP b);
    static PredP disj(PredP a, PredP b);
    static PredP negate(PredP a);
    static PredP tru();
    static PredP fls();
    static PredP exists(QueryP q);
    static PredP castPred(ProjP p, PredP b);
    static PredP meta(std::string name);
};

struct Query {
    enum class Kind { Table, TableMeta, Select, Product, Where, UnionAll, Except, Distinct, GroupBy };
    Kind kind;
    std::string name;   // Table / TableMeta
    ProjP proj;         // Select projection; GroupBy key
    QueryP q1, q2;      // operands
    PredP pred;         // Where
    std::string aggName;  // GroupBy
    ProjP aggArg;         // GroupBy aggregate argument

    static QueryP table(std::string name);
    static QueryP tableMeta(std::string name);
    static QueryP select(ProjP p, QueryP q);
    static QueryP product(QueryP a, QueryP b);
    static QueryP where(QueryP q, PredP b);
    static QueryP unionAll(QueryP a, QueryP b);
    static QueryP except(QueryP a, QueryP b);
    static QueryP distinct(QueryP q);
    static QueryP groupBy(ProjP key, std::string aggName, ProjP aggArg, QueryP q);
};

// ---------------------------------------------------------------------------
// Declarations: the meta-variable environment of a rule file
// ---------------------------------------------------------------------------

struct ProjSig {
    Schema from, to;
};
struct ExprSig {
    BaseType type;
    Schema over;
};
struct FnSig {
    std::vector<BaseType> args;
    BaseType ret;
};
struct TableSig {
    Schema schema;
    bool meta = true;
};

struct Declarations {
    std::set<std::string> abstractTypes;
    std::set<std::string> schemaMetas;
    std::map<std::string, TableSig> tables;
    std::map<std::string, ProjSig> projs;
    std::map<std::string, Schema> preds;  // declared context schema
    std::map<std::string, ExprSig> exprs;
    std::map<std::string, FnSig> fns;

    bool knownName(const std::string& n) const;
    const TableSig& table(const std::string& n) const;
    const ProjSig& proj(const std::string& n) const;
    const Schema& pred(const std::string& n) const;
    const ExprSig& expr(const std::string& n) const;
    const FnSig& fn(const std::string& n) const;
};

// ---------------------------------------------------------------------------
// Rewrite rules
// ---------------------------------------------------------------------------

struct Premise {
    enum class Kind { Key, Fd };
    Kind kind;
    ProjP p1;  // key column / fd antecedent
    ProjP p2;  // fd consequent
    std::string table;
};

struct RewriteRule {
    std::string name;
    Declarations decls;
    Schema context;  // ambient context schema, empty unless stated
    QueryP lhs, rhs;
    std::vector<Premise> premises;
    std::string expect;      // "", "proved", "refuted", "corroborated"
    std::string provenance;  // "", "reconstructed"
    std::string category;    // basic | aggregation | subquery | magicset | index | cq
};

// ---------------------------------------------------------------------------
// Typechecking.  All functions throw TypeError on failure.
// ---------------------------------------------------------------------------

// Result schema of applying p to a tuple of schema `from`.
Schema proj_typecheck(const Declarations& d, const ProjP& p, const Schema& from);

// Base type of e in context schema ctx.
BaseType expr_typecheck(const Declarations& d, const ExprP& e, const Schema& ctx);

// Predicates are boolean-valued; checks well-formedness under ctx.
void pred_typecheck(const Declarations& d, const PredP& b, const Schema& ctx);

// Output schema of q under ambient context schema ctx.
Schema query_typecheck(const Declarations& d, const QueryP& q, const Schema& ctx);

// Whole-rule check: both sides typecheck under rule.context with equal output
// schemas, premises refer to declared tables with well-typed columns.
void rule_wellformed(const RewriteRule& rule);

// Aggregate names understood by the evaluator and the group-by sugar.
bool is_aggregate_name(const std::string& n);

// ---------------------------------------------------------------------------
// Printing (canonical concrete syntax; the parser round-trips these)
// ---------------------------------------------------------------------------

std::string show(const Schema& s);
std::string show(const ProjP& p);
std::string show(const ExprP& e);
std::string show(const PredP& b);
std::string show(const QueryP& q);
std::string show(const RewriteRule& r);

// Structural equality via canonical printing.
bool same_query(const QueryP& a, const QueryP& b);

}  // namespace sqlrw

#endif

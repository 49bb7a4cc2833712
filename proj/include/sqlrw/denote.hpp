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

#ifndef SQLRW_DENOTE_HPP
#define SQLRW_DENOTE_HPP

#include "sqlrw/term.hpp"

namespace sqlrw {

// Queries denote to lam(g: ctx) lam(t: out) body.  Group-by sugar is
// desugared before denotation.  Predicates and expressions thread the context
// tuple explicitly:
//   - a WHERE predicate runs over node(ctx, sourceSchema), applied to (g, t')
//   - a SELECT projection is source-relative: it sees only the source tuple
//   - EXISTS extends the query context with the predicate's context tuple
struct Denoted {
    VarId g = -1, t = -1;
    Schema ctxSchema, outSchema;
    UT body;  // free vars: g and t

    UT lam() const { return utLam(g, ctxSchema, utLam(t, outSchema, body)); }
};

Denoted denote_query(const Declarations& d, const Schema& ctx, const QueryP& q, TermCtx& tc);

// lam(gt: ctx) body form of a predicate denotation (squash-valued body).
UT denote_pred(const Declarations& d, const Schema& ctx, const PredP& b, TermCtx& tc);

// Open-term forms used by recursion and by the premise machinery.
UT denote_query_at(const Declarations& d, const Schema& ctx, const QueryP& q, TermCtx& tc, TT g, TT t);
UT denote_pred_at(const Declarations& d, const PredP& b, TermCtx& tc, TT gt);
TT denote_expr_at(const Declarations& d, const ExprP& e, TermCtx& tc, TT ct);
TT denote_proj_at(const Declarations& d, const ProjP& p, TermCtx& tc, TT t);

}  // namespace sqlrw

#endif

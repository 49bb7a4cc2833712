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

#include "sqlrw/parser.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace sqlrw {

namespace {

std::string joined(const std::vector<std::string>& parts) {
    std::string out;
    for (size_t i = 0; i < parts.size(); i++) {
        if (i) out += i + 1 == parts.size() ? " or " : ", ";
        out += parts[i];
    }
    return out;
}

}  // namespace

ParseError::ParseError(int line, int col, std::vector<std::string> exp, const std::string& found)
    : Error("parse error at " + std::to_string(line) + ":" + std::to_string(col) + ": expected " +
            joined(exp) + "; found " + found),
      line(line),
      col(col),
      expected(std::move(exp)) {}

ParseError::ParseError(int line, int col, const std::string& msg)
    : Error("parse error at " + std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
      line(line),
      col(col) {}

namespace {

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

enum class TK {
    Ident, Int, Str, Kw,
    LParen, RParen, LBrace, RBrace,
    Comma, Dot, Colon, Arrow, Equal, Star, Unit, Hash,
    Eof
};

struct Tok {
    TK k;
    std::string text;  // keywords lowercased; idents verbatim
    long num = 0;
    int line = 1, col = 1;
};

const std::set<std::string>& keywords() {
    static const std::set<std::string> kws = {
        "type", "schema", "table", "proj", "pred", "expr", "fn", "over",
        "rule", "category", "provenance", "expect", "context", "assume", "key", "fd",
        "equiv", "end", "select", "distinct", "from", "where", "group", "by",
        "union", "all", "except", "semijoin", "on", "exists", "castpred", "castexpr",
        "var", "true", "false", "and", "or", "not",
        "int", "bool", "string", "eval", "pragma", "instance", "domain",
        "left", "right"};
    return kws;
}

std::string lowered(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::vector<Tok> lex(const std::string& src) {
    std::vector<Tok> out;
    int line = 1, col = 1;
    size_t i = 0;
    auto advance = [&](size_t n) {
        for (size_t j = 0; j < n; j++, i++) {
            if (src[i] == '\n') {
                line++;
                col = 1;
            } else {
                col++;
            }
        }
    };
    while (i < src.size()) {
        char c = src[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            advance(1);
            continue;
        }
        if (c == '-' && i + 1 < src.size() && src[i + 1] == '-') {
            while (i < src.size() && src[i] != '\n') advance(1);
            continue;
        }
        Tok t;
        t.line = line;
        t.col = col;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t j = i;
            while (j < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
                j++;
            std::string word = src.substr(i, j - i);
            std::string low = lowered(word);
            if (keywords().count(low)) {
                t.k = TK::Kw;
                t.text = low;
            } else {
                t.k = TK::Ident;
                t.text = word;
            }
            advance(j - i);
            out.push_back(std::move(t));
            continue;
        }
        bool neg = c == '-' && i + 1 < src.size() &&
                   std::isdigit(static_cast<unsigned char>(src[i + 1]));
        if (std::isdigit(static_cast<unsigned char>(c)) || neg) {
            size_t j = i + (neg ? 1 : 0);
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) j++;
            t.k = TK::Int;
            t.text = src.substr(i, j - i);
            t.num = std::stol(t.text);
            advance(j - i);
            out.push_back(std::move(t));
            continue;
        }
        if (c == '"') {
            std::string val;
            size_t j = i + 1;
            while (j < src.size() && src[j] != '"') {
                if (src[j] == '\\' && j + 1 < src.size()) j++;
                val += src[j++];
            }
            if (j >= src.size()) throw ParseError(line, col, "unterminated string literal");
            t.k = TK::Str;
            t.text = std::move(val);
            advance(j + 1 - i);
            out.push_back(std::move(t));
            continue;
        }
        if (c == '-' && i + 1 < src.size() && src[i + 1] == '>') {
            t.k = TK::Arrow;
            t.text = "->";
            advance(2);
            out.push_back(std::move(t));
            continue;
        }
        if (c == '<') {
            if (i + 1 >= src.size() || src[i + 1] != '>')
                throw ParseError(line, col, "stray '<'");
            t.k = TK::Unit;
            t.text = "<>";
            advance(2);
            out.push_back(std::move(t));
            continue;
        }
        TK k;
        switch (c) {
            case '(': k = TK::LParen; break;
            case ')': k = TK::RParen; break;
            case '{': k = TK::LBrace; break;
            case '}': k = TK::RBrace; break;
            case ',': k = TK::Comma; break;
            case '.': k = TK::Dot; break;
            case ':': k = TK::Colon; break;
            case '=': k = TK::Equal; break;
            case '*': k = TK::Star; break;
            case '#': k = TK::Hash; break;
            default:
                throw ParseError(line, col, std::string("unexpected character '") + c + "'");
        }
        t.k = k;
        t.text = std::string(1, c);
        advance(1);
        out.push_back(std::move(t));
    }
    Tok eof;
    eof.k = TK::Eof;
    eof.text = "end of input";
    eof.line = line;
    eof.col = col;
    out.push_back(std::move(eof));
    return out;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
    std::vector<Tok> toks;
    size_t pos = 0;
    Declarations decls;

    explicit Parser(const std::string& src) : toks(lex(src)) {}

    const Tok& peek(size_t ahead = 0) const {
        size_t i = std::min(pos + ahead, toks.size() - 1);
        return toks[i];
    }
    const Tok& eat() { return toks[std::min(pos++, toks.size() - 1)]; }
    bool at(TK k) const { return peek().k == k; }
    bool atKw(const std::string& s) const { return peek().k == TK::Kw && peek().text == s; }
    bool acceptKw(const std::string& s) {
        if (!atKw(s)) return false;
        pos++;
        return true;
    }
    bool accept(TK k) {
        if (!at(k)) return false;
        pos++;
        return true;
    }
    [[noreturn]] void fail(std::vector<std::string> expected) const {
        const Tok& t = peek();
        std::string found = t.k == TK::Eof ? t.text : "'" + t.text + "'";
        throw ParseError(t.line, t.col, std::move(expected), found);
    }
    [[noreturn]] void failMsg(const std::string& msg) const {
        throw ParseError(peek().line, peek().col, msg);
    }
    const Tok& expect(TK k, const std::string& what) {
        if (!at(k)) fail({what});
        return toks[pos++];
    }
    void expectKw(const std::string& s) {
        if (!atKw(s)) fail({"'" + s + "'"});
        pos++;
    }
    std::string ident(const std::string& what) {
        if (!at(TK::Ident)) fail({what});
        return toks[pos++].text;
    }

    // --- schemas -----------------------------------------------------------

    Schema parseSchema() {
        if (acceptKw("int")) return Schema::leaf(BaseType::intType());
        if (acceptKw("bool")) return Schema::leaf(BaseType::boolType());
        if (acceptKw("string")) return Schema::leaf(BaseType::stringType());
        if (accept(TK::Unit)) return Schema::empty();
        if (at(TK::Ident)) {
            const Tok& t = eat();
            if (decls.schemaMetas.count(t.text)) return Schema::meta(t.text);
            if (decls.abstractTypes.count(t.text))
                return Schema::leaf(BaseType::abstract(t.text));
            throw ParseError(t.line, t.col, "unknown schema or type '" + t.text + "'");
        }
        if (accept(TK::LParen)) {
            Schema a = parseSchema();
            expect(TK::Comma, "','");
            Schema b = parseSchema();
            expect(TK::RParen, "')'");
            return Schema::node(a, b);
        }
        fail({"a schema"});
    }

    BaseType parseBaseType() {
        if (acceptKw("int")) return BaseType::intType();
        if (acceptKw("bool")) return BaseType::boolType();
        if (acceptKw("string")) return BaseType::stringType();
        if (at(TK::Ident)) {
            const Tok& t = eat();
            if (decls.abstractTypes.count(t.text)) return BaseType::abstract(t.text);
            throw ParseError(t.line, t.col, "unknown base type '" + t.text + "'");
        }
        fail({"a base type"});
    }

    // --- projections -------------------------------------------------------

    ProjP parseProjAtom(bool concrete) {
        if (accept(TK::Star)) return Proj::star();
        if (acceptKw("left")) return Proj::left();
        if (acceptKw("right")) return Proj::right();
        if (accept(TK::Unit)) return Proj::empty();
        if (!concrete && acceptKw("eval")) {
            expect(TK::LParen, "'('");
            ExprP e = parseExpr();
            expect(TK::RParen, "')'");
            return Proj::eval(e);
        }
        if (!concrete && at(TK::Ident)) {
            const Tok& t = eat();
            if (!decls.projs.count(t.text))
                throw ParseError(t.line, t.col, "unknown projection '" + t.text + "'");
            return Proj::meta(t.text);
        }
        if (accept(TK::LParen)) {
            ProjP a = parseProj(concrete);
            if (accept(TK::Comma)) {
                ProjP b = parseProj(concrete);
                expect(TK::RParen, "')'");
                return Proj::pair(a, b);
            }
            expect(TK::RParen, "')'");
            return a;
        }
        fail({"a projection"});
    }

    ProjP parseProj(bool concrete = false) {
        ProjP p = parseProjAtom(concrete);
        while (accept(TK::Dot)) p = Proj::compose(p, parseProjAtom(concrete));
        return p;
    }

    // --- expressions -------------------------------------------------------

    ExprP parseExpr() {
        if (acceptKw("var")) {
            expect(TK::LParen, "'('");
            ProjP p = parseProj();
            expect(TK::RParen, "')'");
            return Expr::var(p);
        }
        if (acceptKw("castexpr")) {
            expect(TK::LParen, "'('");
            ProjP p = parseProj();
            expect(TK::Comma, "','");
            ExprP e = parseExpr();
            expect(TK::RParen, "')'");
            return Expr::castExpr(p, e);
        }
        if (at(TK::Ident)) {
            const Tok& t = eat();
            std::string low = lowered(t.text);
            if (is_aggregate_name(low) && at(TK::LParen)) {
                eat();
                QueryP q = parseQuery();
                expect(TK::RParen, "')'");
                return Expr::agg(low, q);
            }
            if (at(TK::LParen)) {
                if (!decls.fns.count(t.text))
                    throw ParseError(t.line, t.col, "unknown fn '" + t.text + "'");
                eat();
                std::vector<ExprP> args;
                if (!at(TK::RParen)) {
                    args.push_back(parseExpr());
                    while (accept(TK::Comma)) args.push_back(parseExpr());
                }
                expect(TK::RParen, "')'");
                return Expr::apply(t.text, std::move(args));
            }
            if (!decls.exprs.count(t.text))
                throw ParseError(t.line, t.col, "unknown expression '" + t.text + "'");
            return Expr::meta(t.text);
        }
        fail({"an expression"});
    }

    // --- predicates --------------------------------------------------------

    PredP parsePred() { return parseOr(); }

    PredP parseOr() {
        PredP p = parseAnd();
        while (acceptKw("or")) p = Pred::disj(p, parseAnd());
        return p;
    }

    PredP parseAnd() {
        PredP p = parseNot();
        while (acceptKw("and")) p = Pred::conj(p, parseNot());
        return p;
    }

    PredP parseNot() {
        if (acceptKw("not")) return Pred::negate(parseNot());
        return parsePredAtom();
    }

    PredP parsePredAtom() {
        if (acceptKw("true")) return Pred::tru();
        if (acceptKw("false")) return Pred::fls();
        if (acceptKw("exists")) {
            expect(TK::LParen, "'('");
            QueryP q = parseQuery();
            expect(TK::RParen, "')'");
            return Pred::exists(q);
        }
        if (acceptKw("castpred")) {
            expect(TK::LParen, "'('");
            ProjP p = parseProj();
            expect(TK::Comma, "','");
            PredP b = parsePred();
            expect(TK::RParen, "')'");
            return Pred::castPred(p, b);
        }
        if (at(TK::LParen)) {
            eat();
            PredP p = parsePred();
            expect(TK::RParen, "')'");
            return p;
        }
        if (at(TK::Ident) && decls.preds.count(peek().text) && peek(1).k != TK::LParen &&
            peek(1).k != TK::Equal) {
            return Pred::meta(eat().text);
        }
        ExprP e1 = parseExpr();
        expect(TK::Equal, "'='");
        ExprP e2 = parseExpr();
        return Pred::eq(e1, e2);
    }

    // --- queries -----------------------------------------------------------

    QueryP parseQuery() {
        QueryP q = parseSimple();
        for (;;) {
            if (atKw("union")) {
                eat();
                expectKw("all");
                q = Query::unionAll(q, parseSimple());
            } else if (acceptKw("except")) {
                q = Query::except(q, parseSimple());
            } else {
                return q;
            }
        }
    }

    QueryP parseSimple() {
        if (acceptKw("distinct")) return Query::distinct(parseSimple());
        if (atKw("select")) return parseSelect();
        if (atKw("from")) {
            eat();
            QueryP src = parseFromList();
            if (acceptKw("where")) src = Query::where(src, parsePred());
            return src;
        }
        return parseSemijoinChain();
    }

    QueryP parseAtom() {
        if (accept(TK::LParen)) {
            QueryP q = parseQuery();
            expect(TK::RParen, "')'");
            return q;
        }
        if (at(TK::Ident)) {
            const Tok& t = eat();
            if (!decls.tables.count(t.text))
                throw ParseError(t.line, t.col, "unknown table '" + t.text + "'");
            return Query::table(t.text);
        }
        fail({"a table", "'('"});
    }

    // A semijoin is shorthand for filtering the left side by a matching row
    // on the right; the cast reshapes ((g, a), b) into (g, (a, b)).
    static QueryP semijoin(QueryP a, QueryP b, PredP theta) {
        ProjP reshape =
            Proj::pair(Proj::compose(Proj::left(), Proj::left()),
                       Proj::pair(Proj::compose(Proj::left(), Proj::right()), Proj::right()));
        QueryP inner =
            Query::select(Proj::star(), Query::where(b, Pred::castPred(reshape, theta)));
        return Query::select(Proj::star(), Query::where(a, Pred::exists(inner)));
    }

    QueryP parseSemijoinChain() {
        QueryP q = parseAtom();
        while (acceptKw("semijoin")) {
            QueryP b = parseAtom();
            expectKw("on");
            q = semijoin(q, b, parsePred());
        }
        return q;
    }

    QueryP parseFromList() {
        QueryP q = parseSemijoinChain();
        while (accept(TK::Comma)) q = Query::product(q, parseSemijoinChain());
        return q;
    }

    QueryP parseSelect() {
        expectKw("select");
        ProjP head = parseProj();
        if (accept(TK::Comma)) {
            const Tok& aggTok = peek();
            std::string agg = lowered(ident("an aggregate"));
            if (!is_aggregate_name(agg))
                throw ParseError(aggTok.line, aggTok.col, "unknown aggregate '" + agg + "'");
            expect(TK::LParen, "'('");
            ProjP arg = parseProj();
            expect(TK::RParen, "')'");
            expectKw("from");
            QueryP src = parseFromList();
            if (acceptKw("where")) src = Query::where(src, parsePred());
            expectKw("group");
            expectKw("by");
            const Tok& keyTok = peek();
            ProjP keyRef = parseProj();
            if (show(keyRef) != show(head))
                throw ParseError(keyTok.line, keyTok.col,
                                 "group by column must match the select head");
            return Query::groupBy(head, agg, arg, src);
        }
        expectKw("from");
        QueryP src = parseFromList();
        if (acceptKw("where")) src = Query::where(src, parsePred());
        if (atKw("group"))
            failMsg("group by requires an aggregate column in the select head");
        return Query::select(head, src);
    }

    // --- declarations ------------------------------------------------------

    void checkFresh(const Tok& t) {
        if (decls.knownName(t.text))
            throw ParseError(t.line, t.col, "duplicate declaration '" + t.text + "'");
    }

    void parseDecl() {
        if (acceptKw("type")) {
            const Tok& t = peek();
            std::string n = ident("a type name");
            checkFresh(t);
            decls.abstractTypes.insert(n);
            return;
        }
        if (acceptKw("schema")) {
            const Tok& t = peek();
            std::string n = ident("a schema name");
            checkFresh(t);
            decls.schemaMetas.insert(n);
            return;
        }
        if (acceptKw("table")) {
            const Tok& t = peek();
            std::string n = ident("a table name");
            checkFresh(t);
            expect(TK::LParen, "'('");
            Schema s = parseSchema();
            expect(TK::RParen, "')'");
            decls.tables.emplace(n, TableSig{s, true});
            return;
        }
        if (acceptKw("proj")) {
            const Tok& t = peek();
            std::string n = ident("a projection name");
            checkFresh(t);
            expect(TK::Colon, "':'");
            Schema from = parseSchema();
            expect(TK::Arrow, "'->'");
            Schema to = parseSchema();
            decls.projs.emplace(n, ProjSig{from, to});
            return;
        }
        if (acceptKw("pred")) {
            const Tok& t = peek();
            std::string n = ident("a predicate name");
            checkFresh(t);
            expectKw("over");
            decls.preds.emplace(n, parseSchema());
            return;
        }
        if (acceptKw("expr")) {
            const Tok& t = peek();
            std::string n = ident("an expression name");
            checkFresh(t);
            expect(TK::Colon, "':'");
            BaseType ty = parseBaseType();
            expectKw("over");
            decls.exprs.emplace(n, ExprSig{ty, parseSchema()});
            return;
        }
        if (acceptKw("fn")) {
            const Tok& t = peek();
            std::string n = ident("a fn name");
            checkFresh(t);
            expect(TK::LParen, "'('");
            std::vector<BaseType> args;
            if (!at(TK::RParen)) {
                args.push_back(parseBaseType());
                while (accept(TK::Comma)) args.push_back(parseBaseType());
            }
            expect(TK::RParen, "')'");
            expect(TK::Arrow, "'->'");
            BaseType ret = parseBaseType();
            decls.fns.emplace(n, FnSig{std::move(args), ret});
            return;
        }
        fail({"a declaration"});
    }

    // --- rules -------------------------------------------------------------

    RewriteRule parseRule() {
        expectKw("rule");
        RewriteRule r;
        r.name = ident("a rule name");
        r.context = Schema::empty();
        for (;;) {
            if (acceptKw("category")) {
                const Tok& t = peek();
                r.category = ident("a category");
                static const std::set<std::string> cats = {"basic",    "aggregation", "subquery",
                                                           "magicset", "index",       "cq"};
                if (!cats.count(r.category))
                    throw ParseError(t.line, t.col, "unknown category '" + r.category + "'");
                continue;
            }
            if (acceptKw("provenance")) {
                const Tok& t = peek();
                r.provenance = ident("a provenance");
                if (r.provenance != "reconstructed")
                    throw ParseError(t.line, t.col, "unknown provenance '" + r.provenance + "'");
                continue;
            }
            if (acceptKw("expect")) {
                const Tok& t = peek();
                r.expect = ident("a verdict");
                static const std::set<std::string> verdicts = {"proved", "corroborated", "unknown",
                                                               "refuted"};
                if (!verdicts.count(r.expect))
                    throw ParseError(t.line, t.col, "unknown verdict '" + r.expect + "'");
                continue;
            }
            if (acceptKw("context")) {
                r.context = parseSchema();
                continue;
            }
            if (acceptKw("assume")) {
                Premise prem;
                if (acceptKw("key")) {
                    prem.kind = Premise::Kind::Key;
                    expect(TK::LParen, "'('");
                    prem.p1 = parseProj();
                    expect(TK::Comma, "','");
                    const Tok& t = peek();
                    prem.table = ident("a table name");
                    if (!decls.tables.count(prem.table))
                        throw ParseError(t.line, t.col, "unknown table '" + prem.table + "'");
                    expect(TK::RParen, "')'");
                } else if (acceptKw("fd")) {
                    prem.kind = Premise::Kind::Fd;
                    expect(TK::LParen, "'('");
                    prem.p1 = parseProj();
                    expect(TK::Comma, "','");
                    prem.p2 = parseProj();
                    expect(TK::Comma, "','");
                    const Tok& t = peek();
                    prem.table = ident("a table name");
                    if (!decls.tables.count(prem.table))
                        throw ParseError(t.line, t.col, "unknown table '" + prem.table + "'");
                    expect(TK::RParen, "')'");
                } else {
                    fail({"'key'", "'fd'"});
                }
                r.premises.push_back(std::move(prem));
                continue;
            }
            break;
        }
        r.lhs = parseQuery();
        expectKw("equiv");
        r.rhs = parseQuery();
        expectKw("end");
        r.decls = decls;
        return r;
    }

    // --- instances ---------------------------------------------------------

    Value parseValue() {
        if (at(TK::Int)) return Value::intV(eat().num);
        if (acceptKw("true")) return Value::boolV(true);
        if (acceptKw("false")) return Value::boolV(false);
        if (at(TK::Str)) return Value::strV(eat().text);
        if (at(TK::Ident)) {
            const Tok& t = eat();
            expect(TK::Hash, "'#'");
            long idx = expect(TK::Int, "an index").num;
            return Value::absV(t.text, idx);
        }
        fail({"a value"});
    }

    Tup parseTuple() {
        if (accept(TK::LParen)) {
            if (accept(TK::RParen)) return Tuple::unit();
            Tup a = parseTuple();
            expect(TK::Comma, "','");
            Tup b = parseTuple();
            expect(TK::RParen, "')'");
            return Tuple::pair(a, b);
        }
        return Tuple::scalar(parseValue());
    }

    std::string parseFnArgsKey() {
        expect(TK::LParen, "'('");
        std::vector<Value> args;
        if (!at(TK::RParen)) {
            args.push_back(parseValue());
            while (accept(TK::Comma)) args.push_back(parseValue());
        }
        expect(TK::RParen, "')'");
        std::string key = "(";
        for (size_t i = 0; i < args.size(); i++) {
            if (i) key += ", ";
            key += args[i].show();
        }
        return key + ")";
    }

    ParsedInstance parseInstance() {
        expectKw("instance");
        ParsedInstance pi;
        if (at(TK::Ident)) pi.name = eat().text;
        Instance& inst = pi.inst;
        while (!atKw("end")) {
            if (acceptKw("domain")) {
                std::string n;
                if (acceptKw("int"))
                    n = "int";
                else if (acceptKw("string"))
                    n = "string";
                else
                    n = ident("a type name");
                expect(TK::Equal, "'='");
                inst.domains[n] = expect(TK::Int, "a size").num;
                continue;
            }
            if (acceptKw("schema")) {
                const Tok& t = peek();
                std::string n = ident("a schema name");
                if (!decls.schemaMetas.count(n))
                    throw ParseError(t.line, t.col, "unknown schema '" + n + "'");
                expect(TK::Equal, "'='");
                inst.schemaMetas[n] = parseSchema();
                continue;
            }
            if (acceptKw("table")) {
                const Tok& t = peek();
                std::string n = ident("a table name");
                if (!decls.tables.count(n))
                    throw ParseError(t.line, t.col, "unknown table '" + n + "'");
                expect(TK::Equal, "'='");
                expect(TK::LBrace, "'{'");
                Bag bag;
                if (!at(TK::RBrace)) {
                    do {
                        Tup tup = parseTuple();
                        Nat mult = 1;
                        if (accept(TK::Star)) mult = expect(TK::Int, "a multiplicity").num;
                        bag.add(tup, mult);
                    } while (accept(TK::Comma));
                }
                expect(TK::RBrace, "'}'");
                inst.tables[n] = std::move(bag);
                continue;
            }
            if (acceptKw("proj")) {
                const Tok& t = peek();
                std::string n = ident("a projection name");
                if (!decls.projs.count(n))
                    throw ParseError(t.line, t.col, "unknown projection '" + n + "'");
                expect(TK::Equal, "'='");
                inst.projMetas[n] = parseProj(/*concrete=*/true);
                continue;
            }
            if (acceptKw("pred")) {
                const Tok& t = peek();
                std::string n = ident("a predicate name");
                if (!decls.preds.count(n))
                    throw ParseError(t.line, t.col, "unknown predicate '" + n + "'");
                expect(TK::Equal, "'='");
                expect(TK::LBrace, "'{'");
                std::set<std::string> set;
                if (!at(TK::RBrace)) {
                    do {
                        set.insert(tuple_key(parseTuple()));
                    } while (accept(TK::Comma));
                }
                expect(TK::RBrace, "'}'");
                inst.predMetas[n] = std::move(set);
                continue;
            }
            if (acceptKw("expr")) {
                const Tok& t = peek();
                std::string n = ident("an expression name");
                if (!decls.exprs.count(n))
                    throw ParseError(t.line, t.col, "unknown expression '" + n + "'");
                expect(TK::Equal, "'='");
                expect(TK::LBrace, "'{'");
                std::map<std::string, Value> map;
                if (!at(TK::RBrace)) {
                    do {
                        std::string key = tuple_key(parseTuple());
                        expect(TK::Arrow, "'->'");
                        map.emplace(std::move(key), parseValue());
                    } while (accept(TK::Comma));
                }
                expect(TK::RBrace, "'}'");
                inst.exprMetas[n] = std::move(map);
                continue;
            }
            if (acceptKw("fn")) {
                const Tok& t = peek();
                std::string n = ident("a fn name");
                if (!decls.fns.count(n))
                    throw ParseError(t.line, t.col, "unknown fn '" + n + "'");
                expect(TK::Equal, "'='");
                expect(TK::LBrace, "'{'");
                std::map<std::string, Value> map;
                if (!at(TK::RBrace)) {
                    do {
                        std::string key = parseFnArgsKey();
                        expect(TK::Arrow, "'->'");
                        map.emplace(std::move(key), parseValue());
                    } while (accept(TK::Comma));
                }
                expect(TK::RBrace, "'}'");
                inst.fns[n] = std::move(map);
                continue;
            }
            fail({"an instance binding", "'end'"});
        }
        expectKw("end");
        // Resolve declaration schemas through the block's schema bindings.
        Declarations resolved = decls;
        resolved.schemaMetas.clear();
        for (auto& [name, sig] : resolved.tables) sig.schema = resolve_schema(inst, sig.schema);
        for (auto& [name, sig] : resolved.projs) {
            sig.from = resolve_schema(inst, sig.from);
            sig.to = resolve_schema(inst, sig.to);
        }
        for (auto& [name, over] : resolved.preds) over = resolve_schema(inst, over);
        for (auto& [name, sig] : resolved.exprs) sig.over = resolve_schema(inst, sig.over);
        inst.decls = std::move(resolved);
        return pi;
    }

    // --- files -------------------------------------------------------------

    RuleFile parseFile() {
        RuleFile file;
        while (!at(TK::Eof)) {
            if (atKw("rule")) {
                file.rules.push_back(parseRule());
                continue;
            }
            if (acceptKw("pragma")) {
                std::string key = ident("a pragma name");
                std::string val;
                if (at(TK::Ident) || at(TK::Str))
                    val = eat().text;
                else if (at(TK::Int))
                    val = eat().text;
                else
                    fail({"a pragma value"});
                file.pragmas[key] = std::move(val);
                continue;
            }
            if (atKw("instance")) {
                file.instances.push_back(parseInstance());
                continue;
            }
            parseDecl();
        }
        file.decls = decls;
        return file;
    }
};

}  // namespace

RuleFile parse_rule_file(const std::string& text) {
    Parser p(text);
    RuleFile file = p.parseFile();
    for (const auto& r : file.rules) rule_wellformed(r);
    return file;
}

QueryP parse_query(const Declarations& decls, const std::string& text) {
    Parser p(text);
    p.decls = decls;
    QueryP q = p.parseQuery();
    if (!p.at(TK::Eof)) p.fail({"end of input"});
    return q;
}

ProjP parse_proj_text(const Declarations& decls, const std::string& text) {
    Parser p(text);
    p.decls = decls;
    ProjP r = p.parseProj();
    if (!p.at(TK::Eof)) p.fail({"end of input"});
    return r;
}

PredP parse_pred_text(const Declarations& decls, const std::string& text) {
    Parser p(text);
    p.decls = decls;
    PredP r = p.parsePred();
    if (!p.at(TK::Eof)) p.fail({"end of input"});
    return r;
}

}  // namespace sqlrw

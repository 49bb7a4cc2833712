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

#include "sqlrw/cq.hpp"

#include <algorithm>
#include <functional>
#include <map>

namespace sqlrw {

std::string Access::key() const {
    std::string out = "a" + std::to_string(atom);
    for (const auto& s : path) out += "." + s;
    return out;
}

HeadTreeP HeadTree::unit() {
    auto t = std::make_shared<HeadTree>();
    t->kind = Kind::Unit;
    return t;
}

HeadTreeP HeadTree::leaf(Access a) {
    auto t = std::make_shared<HeadTree>();
    t->kind = Kind::Leaf;
    t->acc = std::move(a);
    return t;
}

HeadTreeP HeadTree::pair(HeadTreeP a, HeadTreeP b) {
    auto t = std::make_shared<HeadTree>();
    t->kind = Kind::Pair;
    t->l = std::move(a);
    t->r = std::move(b);
    return t;
}

namespace {

Access extend(Access a, const std::string& step) {
    a.path.push_back(step);
    return a;
}

Schema schema_of_access(const CQ& cq, const Access& a) {
    Schema s = cq.atomSchemas[a.atom];
    for (const auto& step : a.path) {
        if (step == "L")
            s = s.left();
        else if (step == "R")
            s = s.right();
        else
            s = cq.decls->projs.at(step.substr(1)).to;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Equality closure with one-step congruence over access extensions
// ---------------------------------------------------------------------------

struct CqClosure {
    const CQ& cq;
    std::vector<Access> nodes;
    std::vector<int> parent;
    std::map<std::string, int> idx;
    std::map<int, std::map<std::string, int>> ext;

    explicit CqClosure(const CQ& cq) : cq(cq) {}

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

    int add(const Access& a) {
        auto it = idx.find(a.key());
        if (it != idx.end()) return it->second;
        int pre = -1;
        std::string last;
        if (!a.path.empty()) {
            Access p = a;
            last = p.path.back();
            p.path.pop_back();
            pre = add(p);
        }
        int id = static_cast<int>(nodes.size());
        nodes.push_back(a);
        parent.push_back(id);
        idx.emplace(a.key(), id);
        if (pre >= 0) ext[pre][last] = id;
        return id;
    }

    // Equal accesses have equal extensions along the same step.
    void close() {
        bool changed = true;
        while (changed) {
            changed = false;
            std::map<int, std::vector<int>> classes;
            for (size_t i = 0; i < nodes.size(); i++)
                classes[find(static_cast<int>(i))].push_back(static_cast<int>(i));
            for (const auto& [root, members] : classes)
                for (size_t x = 0; x < members.size(); x++)
                    for (size_t y = x + 1; y < members.size(); y++) {
                        auto ix = ext.find(members[x]);
                        auto iy = ext.find(members[y]);
                        if (ix == ext.end() || iy == ext.end()) continue;
                        for (const auto& [step, ei] : ix->second) {
                            auto jt = iy->second.find(step);
                            if (jt == iy->second.end()) continue;
                            if (find(ei) != find(jt->second)) {
                                unite(ei, jt->second);
                                changed = true;
                            }
                        }
                    }
        }
    }

    bool same(const Access& a, const Access& b) {
        int ia = add(a), ib = add(b);
        close();
        return find(ia) == find(ib);
    }

    bool same_deep(const Access& a, const Access& b, const Schema& s) {
        if (s.kind() == Schema::Kind::Empty) return true;
        if (s.kind() == Schema::Kind::Node)
            return same_deep(extend(a, "L"), extend(b, "L"), s.left()) &&
                   same_deep(extend(a, "R"), extend(b, "R"), s.right());
        return same(a, b);
    }
};

CqClosure build_closure(const CQ& cq) {
    CqClosure cl(cq);
    for (const auto& [a, b] : cq.eqs) cl.unite(cl.add(a), cl.add(b));
    cl.close();
    return cl;
}

// ---------------------------------------------------------------------------
// Recognition
// ---------------------------------------------------------------------------

// Binary shape of the FROM product; leaves carry atom indices.
struct PNode {
    int atom = -1;
    std::shared_ptr<PNode> l, r;
};
using PNodeP = std::shared_ptr<PNode>;

std::optional<std::vector<std::string>> flat_path(const ProjP& p) {
    switch (p->kind) {
        case Proj::Kind::Star: return std::vector<std::string>{};
        case Proj::Kind::Left: return std::vector<std::string>{"L"};
        case Proj::Kind::Right: return std::vector<std::string>{"R"};
        case Proj::Kind::Meta: return std::vector<std::string>{"#" + p->name};
        case Proj::Kind::Compose: {
            auto a = flat_path(p->a);
            auto b = flat_path(p->b);
            if (!a || !b) return std::nullopt;
            a->insert(a->end(), b->begin(), b->end());
            return a;
        }
        default: return std::nullopt;
    }
}

// A resolved position: inside an atom, or a whole product subtree.
struct Pos {
    Access acc;
    PNodeP node;  // set when the steps stop at a product node
};

std::optional<Pos> resolve_steps(const PNodeP& root, const std::vector<std::string>& steps) {
    PNodeP cur = root;
    size_t i = 0;
    while (cur->atom < 0) {
        if (i == steps.size()) return Pos{{}, cur};
        const std::string& s = steps[i];
        if (s == "L")
            cur = cur->l;
        else if (s == "R")
            cur = cur->r;
        else
            return std::nullopt;
        i++;
    }
    Pos out;
    out.acc.atom = cur->atom;
    out.acc.path.assign(steps.begin() + i, steps.end());
    return out;
}

HeadTreeP expand_node(const PNodeP& n) {
    if (n->atom >= 0) return HeadTree::leaf(Access{n->atom, {}});
    return HeadTree::pair(expand_node(n->l), expand_node(n->r));
}

HeadTreeP pos_tree(const Pos& p) {
    if (p.node) return expand_node(p.node);
    return HeadTree::leaf(p.acc);
}

std::optional<HeadTreeP> head_tree(const CQ& cq, const PNodeP& root, const ProjP& p,
                                   std::vector<std::string> base) {
    switch (p->kind) {
        case Proj::Kind::Empty: return HeadTree::unit();
        case Proj::Kind::Star:
        case Proj::Kind::Left:
        case Proj::Kind::Right:
        case Proj::Kind::Meta: {
            auto steps = flat_path(p);
            base.insert(base.end(), steps->begin(), steps->end());
            auto pos = resolve_steps(root, base);
            if (!pos) return std::nullopt;
            return pos_tree(*pos);
        }
        case Proj::Kind::Compose: {
            auto a = flat_path(p->a);
            if (!a) return std::nullopt;
            base.insert(base.end(), a->begin(), a->end());
            return head_tree(cq, root, p->b, std::move(base));
        }
        case Proj::Kind::Pair: {
            auto l = head_tree(cq, root, p->a, base);
            auto r = head_tree(cq, root, p->b, base);
            if (!l || !r) return std::nullopt;
            return HeadTree::pair(*l, *r);
        }
        default: return std::nullopt;
    }
}

// Splits an equality between two positions down to leaf or meta accesses.
bool split_eq(const CQ& cq, const HeadTreeP& a, const HeadTreeP& b,
              std::vector<std::pair<Access, Access>>& out) {
    if (a->kind == HeadTree::Kind::Pair || b->kind == HeadTree::Kind::Pair) {
        auto component = [&](const HeadTreeP& t, bool left) -> std::optional<HeadTreeP> {
            if (t->kind == HeadTree::Kind::Pair) return left ? t->l : t->r;
            if (t->kind != HeadTree::Kind::Leaf) return std::nullopt;
            Schema s = schema_of_access(cq, t->acc);
            if (s.kind() != Schema::Kind::Node) return std::nullopt;
            return HeadTree::leaf(extend(t->acc, left ? "L" : "R"));
        };
        auto al = component(a, true), ar = component(a, false);
        auto bl = component(b, true), br = component(b, false);
        if (!al || !ar || !bl || !br) return false;
        return split_eq(cq, *al, *bl, out) && split_eq(cq, *ar, *br, out);
    }
    if (a->kind == HeadTree::Kind::Unit && b->kind == HeadTree::Kind::Unit) return true;
    if (a->kind != HeadTree::Kind::Leaf || b->kind != HeadTree::Kind::Leaf) return false;
    Schema s = schema_of_access(cq, a->acc);
    switch (s.kind()) {
        case Schema::Kind::Empty: return true;
        case Schema::Kind::Node:
            return split_eq(cq, HeadTree::leaf(extend(a->acc, "L")),
                            HeadTree::leaf(extend(b->acc, "L")), out) &&
                   split_eq(cq, HeadTree::leaf(extend(a->acc, "R")),
                            HeadTree::leaf(extend(b->acc, "R")), out);
        default:
            out.emplace_back(a->acc, b->acc);
            return true;
    }
}

bool collect_eqs(const CQ& cq, const PNodeP& root, const PredP& b,
                 std::vector<std::pair<Access, Access>>& out) {
    switch (b->kind) {
        case Pred::Kind::True: return true;
        case Pred::Kind::And:
            return collect_eqs(cq, root, b->p1, out) && collect_eqs(cq, root, b->p2, out);
        case Pred::Kind::Eq: {
            if (b->e1->kind != Expr::Kind::Var || b->e2->kind != Expr::Kind::Var) return false;
            auto side = [&](const ExprP& e) -> std::optional<HeadTreeP> {
                auto steps = flat_path(e->path);
                if (!steps || steps->empty() || (*steps)[0] != "R") return std::nullopt;
                steps->erase(steps->begin());
                auto pos = resolve_steps(root, *steps);
                if (!pos) return std::nullopt;
                return pos_tree(*pos);
            };
            auto l = side(b->e1), r = side(b->e2);
            if (!l || !r) return false;
            return split_eq(cq, *l, *r, out);
        }
        default: return false;
    }
}

bool collect_atoms(const Declarations& decls, const QueryP& q, CQ& cq, PNodeP& out) {
    if (q->kind == Query::Kind::Product) {
        PNodeP l, r;
        if (!collect_atoms(decls, q->q1, cq, l)) return false;
        if (!collect_atoms(decls, q->q2, cq, r)) return false;
        out = std::make_shared<PNode>();
        out->l = std::move(l);
        out->r = std::move(r);
        return true;
    }
    if (q->kind == Query::Kind::Table || q->kind == Query::Kind::TableMeta) {
        auto it = decls.tables.find(q->name);
        if (it == decls.tables.end()) return false;
        out = std::make_shared<PNode>();
        out->atom = static_cast<int>(cq.atomTables.size());
        cq.atomTables.push_back(q->name);
        cq.atomSchemas.push_back(it->second.schema);
        return true;
    }
    return false;
}

}  // namespace

std::optional<CQ> to_cq(const QueryP& q, const Declarations& decls) {
    CQ cq;
    cq.decls = &decls;
    QueryP cur = q;
    if (cur->kind == Query::Kind::Distinct) {
        cq.distinct = true;
        cur = cur->q1;
    }
    ProjP head = Proj::star();
    if (cur->kind == Query::Kind::Select) {
        head = cur->proj;
        cur = cur->q1;
    }
    PredP pred;
    if (cur->kind == Query::Kind::Where) {
        pred = cur->pred;
        cur = cur->q1;
    }
    PNodeP root;
    if (!collect_atoms(decls, cur, cq, root)) return std::nullopt;
    if (pred && !collect_eqs(cq, root, pred, cq.eqs)) return std::nullopt;
    auto h = head_tree(cq, root, head, {});
    if (!h) return std::nullopt;
    cq.head = *h;
    return cq;
}

// ---------------------------------------------------------------------------
// Homomorphisms
// ---------------------------------------------------------------------------

namespace {

Access map_access(const Access& a, const std::vector<int>& mapping) {
    Access out = a;
    out.atom = mapping[a.atom];
    return out;
}

HeadTreeP map_head(const HeadTreeP& h, const std::vector<int>& mapping) {
    switch (h->kind) {
        case HeadTree::Kind::Unit: return h;
        case HeadTree::Kind::Leaf: return HeadTree::leaf(map_access(h->acc, mapping));
        case HeadTree::Kind::Pair:
            return HeadTree::pair(map_head(h->l, mapping), map_head(h->r, mapping));
    }
    return h;
}

// Compares two head trees over `target`, leaves modulo its closure.
bool heads_match(const CQ& target, CqClosure& cl, const HeadTreeP& x, const HeadTreeP& y) {
    if (x->kind == HeadTree::Kind::Unit || y->kind == HeadTree::Kind::Unit) {
        auto trivial = [&](const HeadTreeP& t) {
            if (t->kind == HeadTree::Kind::Unit) return true;
            if (t->kind != HeadTree::Kind::Leaf) return false;
            return schema_of_access(target, t->acc).kind() == Schema::Kind::Empty;
        };
        return trivial(x) && trivial(y);
    }
    if (x->kind == HeadTree::Kind::Leaf && y->kind == HeadTree::Kind::Leaf)
        return cl.same_deep(x->acc, y->acc, schema_of_access(target, x->acc));
    auto component = [&](const HeadTreeP& t, bool left) -> std::optional<HeadTreeP> {
        if (t->kind == HeadTree::Kind::Pair) return left ? t->l : t->r;
        Schema s = schema_of_access(target, t->acc);
        if (s.kind() != Schema::Kind::Node) return std::nullopt;
        return HeadTree::leaf(extend(t->acc, left ? "L" : "R"));
    };
    auto xl = component(x, true), xr = component(x, false);
    auto yl = component(y, true), yr = component(y, false);
    if (!xl || !xr || !yl || !yr) return false;
    return heads_match(target, cl, *xl, *yl) && heads_match(target, cl, *xr, *yr);
}

bool hom_ok(const CQ& from, const CQ& to, const std::vector<int>& mapping, CqClosure& clTo) {
    for (const auto& [a, b] : from.eqs)
        if (!clTo.same(map_access(a, mapping), map_access(b, mapping))) return false;
    return heads_match(to, clTo, map_head(from.head, mapping), to.head);
}

}  // namespace

bool verify_homomorphism(const CQ& from, const CQ& to, const std::vector<int>& mapping) {
    if (mapping.size() != from.atomTables.size()) return false;
    for (size_t i = 0; i < mapping.size(); i++) {
        if (mapping[i] < 0 || mapping[i] >= static_cast<int>(to.atomTables.size())) return false;
        if (to.atomTables[mapping[i]] != from.atomTables[i]) return false;
    }
    CqClosure cl = build_closure(to);
    return hom_ok(from, to, mapping, cl);
}

HomResult find_homomorphism(const CQ& from, const CQ& to) {
    CqClosure cl = build_closure(to);
    size_t n = from.atomTables.size();
    std::vector<int> mapping(n, -1);
    std::function<bool(size_t)> go = [&](size_t i) -> bool {
        if (i == n) return hom_ok(from, to, mapping, cl);
        for (size_t j = 0; j < to.atomTables.size(); j++) {
            if (to.atomTables[j] != from.atomTables[i]) continue;
            mapping[i] = static_cast<int>(j);
            if (go(i + 1)) return true;
        }
        mapping[i] = -1;
        return false;
    };
    if (go(0)) return {true, mapping};
    return {false, {}};
}

CqEquivResult decide_set_equiv(const CQ& a, const CQ& b) {
    CqEquivResult out;
    HomResult f = find_homomorphism(a, b);
    HomResult g = find_homomorphism(b, a);
    out.equivalent = f.found && g.found;
    out.forward = f.mapping;
    out.backward = g.mapping;
    return out;
}

bool decide_bag_equiv(const CQ& a, const CQ& b) {
    size_t n = a.atomTables.size();
    if (b.atomTables.size() != n) return false;
    CqClosure clA = build_closure(a);
    CqClosure clB = build_closure(b);
    std::vector<int> mapping(n, -1);
    std::vector<bool> used(n, false);

    auto check = [&]() -> bool {
        std::vector<int> inverse(n, -1);
        for (size_t i = 0; i < n; i++) inverse[mapping[i]] = static_cast<int>(i);
        std::vector<Access> pool;
        for (const auto& [x, y] : a.eqs) {
            pool.push_back(x);
            pool.push_back(y);
        }
        for (const auto& [x, y] : b.eqs) {
            pool.push_back(map_access(x, inverse));
            pool.push_back(map_access(y, inverse));
        }
        for (size_t i = 0; i < pool.size(); i++)
            for (size_t j = i + 1; j < pool.size(); j++) {
                bool inA = clA.same(pool[i], pool[j]);
                bool inB =
                    clB.same(map_access(pool[i], mapping), map_access(pool[j], mapping));
                if (inA != inB) return false;
            }
        if (!heads_match(b, clB, map_head(a.head, mapping), b.head)) return false;
        if (!heads_match(a, clA, map_head(b.head, inverse), a.head)) return false;
        return true;
    };

    std::function<bool(size_t)> go = [&](size_t i) -> bool {
        if (i == n) return check();
        for (size_t j = 0; j < n; j++) {
            if (used[j] || b.atomTables[j] != a.atomTables[i]) continue;
            used[j] = true;
            mapping[i] = static_cast<int>(j);
            if (go(i + 1)) return true;
            used[j] = false;
        }
        mapping[i] = -1;
        return false;
    };
    return go(0);
}

// ---------------------------------------------------------------------------
// Canonical database
// ---------------------------------------------------------------------------

namespace {

void leaf_accesses(const CQ& cq, const Access& cur, const Schema& s,
                   std::vector<Access>& out) {
    switch (s.kind()) {
        case Schema::Kind::Empty: return;
        case Schema::Kind::Node:
            leaf_accesses(cq, extend(cur, "L"), s.left(), out);
            leaf_accesses(cq, extend(cur, "R"), s.right(), out);
            return;
        case Schema::Kind::Leaf: out.push_back(cur); return;
        case Schema::Kind::Meta:
            throw Error("canonical database requires concrete schemas");
    }
}

struct CanonParts {
    Instance inst;
    Tup head;
};

Value class_value(const Schema& s, long id) {
    BaseType t = s.base();
    switch (t.kind) {
        case BaseKind::Int: return Value::intV(id);
        case BaseKind::String: return Value::strV("v" + std::to_string(id));
        case BaseKind::Abstract: return Value::absV(t.name, id);
        case BaseKind::Bool: throw Error("canonical database cannot assign bool columns");
    }
    throw Error("bad base type");
}

CanonParts canon_parts(const CQ& q) {
    CqClosure cl = build_closure(q);
    std::vector<std::vector<Access>> leaves(q.atomTables.size());
    for (size_t i = 0; i < q.atomTables.size(); i++)
        leaf_accesses(q, Access{static_cast<int>(i), {}}, q.atomSchemas[i], leaves[i]);
    for (const auto& ls : leaves)
        for (const auto& a : ls) cl.add(a);
    cl.close();

    // Deterministic class numbering by least member key.
    std::map<int, std::string> least;
    for (size_t i = 0; i < cl.nodes.size(); i++) {
        Schema s = schema_of_access(q, cl.nodes[i]);
        if (s.kind() != Schema::Kind::Leaf) continue;
        int r = cl.find(static_cast<int>(i));
        std::string k = cl.nodes[i].key();
        auto it = least.find(r);
        if (it == least.end() || k < it->second) least[r] = k;
    }
    std::vector<std::pair<std::string, int>> order;
    for (const auto& [r, k] : least) order.emplace_back(k, r);
    std::sort(order.begin(), order.end());
    std::map<int, long> classId;
    for (size_t i = 0; i < order.size(); i++) classId[order[i].second] = static_cast<long>(i);

    auto value_of = [&](const Access& a) -> Value {
        Schema s = schema_of_access(q, a);
        int id = cl.add(a);
        return class_value(s, classId.at(cl.find(id)));
    };
    std::function<Tup(const Access&, const Schema&)> build = [&](const Access& a,
                                                                 const Schema& s) -> Tup {
        switch (s.kind()) {
            case Schema::Kind::Empty: return Tuple::unit();
            case Schema::Kind::Node:
                return Tuple::pair(build(extend(a, "L"), s.left()),
                                   build(extend(a, "R"), s.right()));
            case Schema::Kind::Leaf: return Tuple::scalar(value_of(a));
            case Schema::Kind::Meta:
                throw Error("canonical database requires concrete schemas");
        }
        return Tuple::unit();
    };

    CanonParts out;
    out.inst.decls = *q.decls;
    for (size_t i = 0; i < q.atomTables.size(); i++) {
        Tup row = build(Access{static_cast<int>(i), {}}, q.atomSchemas[i]);
        out.inst.tables[q.atomTables[i]].add(row, 1);
    }
    std::function<Tup(const HeadTreeP&)> headv = [&](const HeadTreeP& h) -> Tup {
        switch (h->kind) {
            case HeadTree::Kind::Unit: return Tuple::unit();
            case HeadTree::Kind::Pair: return Tuple::pair(headv(h->l), headv(h->r));
            case HeadTree::Kind::Leaf:
                return build(h->acc, schema_of_access(q, h->acc));
        }
        return Tuple::unit();
    };
    out.head = headv(q.head);
    return out;
}

Tup value_at(const Tup& row, const std::vector<std::string>& path) {
    Tup cur = row;
    for (const auto& s : path) {
        if (s == "L")
            cur = cur->a;
        else if (s == "R")
            cur = cur->b;
        else
            throw Error("projection metas not supported in canonical evaluation");
    }
    return cur;
}

}  // namespace

Instance canonical_database(const CQ& q) { return canon_parts(q).inst; }

Tup canonical_head(const CQ& q) { return canon_parts(q).head; }

std::set<std::string> cq_eval(const CQ& q, const Instance& db) {
    size_t n = q.atomTables.size();
    std::vector<std::vector<Tup>> choices(n);
    for (size_t i = 0; i < n; i++) {
        auto it = db.tables.find(q.atomTables[i]);
        if (it == db.tables.end()) return {};
        for (const auto& [k, e] : it->second.m)
            if (e.second > 0) choices[i].push_back(e.first);
        if (choices[i].empty()) return {};
    }
    std::set<std::string> out;
    std::vector<size_t> pick(n, 0);
    std::vector<Tup> rows(n);
    std::function<void(size_t)> go = [&](size_t i) {
        if (i == n) {
            for (const auto& [a, b] : q.eqs)
                if (tuple_key(value_at(rows[a.atom], a.path)) !=
                    tuple_key(value_at(rows[b.atom], b.path)))
                    return;
            std::function<Tup(const HeadTreeP&)> headv = [&](const HeadTreeP& h) -> Tup {
                switch (h->kind) {
                    case HeadTree::Kind::Unit: return Tuple::unit();
                    case HeadTree::Kind::Pair:
                        return Tuple::pair(headv(h->l), headv(h->r));
                    case HeadTree::Kind::Leaf: return value_at(rows[h->acc.atom], h->acc.path);
                }
                return Tuple::unit();
            };
            out.insert(tuple_key(headv(q.head)));
            return;
        }
        for (const auto& r : choices[i]) {
            rows[i] = r;
            go(i + 1);
        }
    };
    go(0);
    return out;
}

bool cq_contained_in(const CQ& sub, const CQ& sup) {
    CanonParts parts = canon_parts(sub);
    auto outs = cq_eval(sup, parts.inst);
    return outs.count(tuple_key(parts.head)) > 0;
}

}  // namespace sqlrw

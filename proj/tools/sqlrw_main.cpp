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

#include <atomic>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "sqlrw/interp.hpp"
#include "sqlrw/parser.hpp"
#include "sqlrw/prover.hpp"
#include "sqlrw/report.hpp"
#include "sqlrw/rules.hpp"

namespace {

struct Options {
    std::vector<std::string> paths;
    bool builtin = false;
    bool mutants = false;
    int fuel = 10000;
    sqlrw::OracleConfig oracle;
    std::string mode = "exhaustive";
    int jobs = 1;
    std::string format = "text";
    bool trace = false;
};

struct Loaded {
    std::vector<sqlrw::RewriteRule> rules;
    std::vector<sqlrw::RuleFile> files;
};

// Exit 2 on unreadable or malformed files.  With no paths the builtin corpus
// is the default selection; --mutants alone selects only the mutants.
int load_rules(const Options& opt, Loaded& out) {
    for (const auto& path : opt.paths) {
        std::ifstream in(path);
        if (!in) {
            std::cerr << "error: cannot open " << path << "\n";
            return 2;
        }
        std::ostringstream text;
        text << in.rdbuf();
        try {
            sqlrw::RuleFile file = sqlrw::parse_rule_file(text.str());
            out.rules.insert(out.rules.end(), file.rules.begin(), file.rules.end());
            out.files.push_back(std::move(file));
        } catch (const sqlrw::Error& e) {
            std::cerr << path << ": " << e.what() << "\n";
            return 2;
        }
    }
    if (opt.builtin || (opt.paths.empty() && !opt.mutants)) {
        auto b = sqlrw::builtin_rules().rules;
        out.rules.insert(out.rules.end(), b.begin(), b.end());
    }
    if (opt.mutants) {
        auto m = sqlrw::seeded_mutants();
        out.rules.insert(out.rules.end(), m.begin(), m.end());
    }
    return 0;
}

// Workers pull rule indices from a shared counter; the report vector is
// pre-sized so assembly order is independent of scheduling.
sqlrw::Report run_report(const std::vector<sqlrw::RewriteRule>& rules,
                         const sqlrw::ProverConfig& cfg, bool oracleOnly, int jobs) {
    sqlrw::Report rep;
    rep.mode = oracleOnly ? "oracle" : "check";
    rep.rules.resize(rules.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= rules.size()) return;
            try {
                rep.rules[i] = sqlrw::run_rule(rules[i], cfg, oracleOnly);
            } catch (const std::exception& e) {
                sqlrw::RuleReport rr;
                rr.name = rules[i].name;
                rr.category = rules[i].category;
                rr.expect = rules[i].expect;
                rr.verdict = "unknown";
                rr.reason = e.what();
                rep.rules[i] = std::move(rr);
            }
        }
    };
    if (jobs < 1) jobs = 1;
    if (static_cast<std::size_t>(jobs) > rules.size()) jobs = static_cast<int>(rules.size());
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < jobs; i++) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return rep;
}

int cmd_check(const Options& opt, bool oracleOnly) {
    Loaded ld;
    if (int rc = load_rules(opt, ld)) return rc;
    sqlrw::ProverConfig cfg;
    cfg.fuel = opt.fuel;
    cfg.oracle = opt.oracle;
    cfg.oracle.exhaustive = opt.mode == "exhaustive";
    sqlrw::Report rep = run_report(ld.rules, cfg, oracleOnly, opt.jobs);
    std::cout << (opt.format == "json" ? sqlrw::render_json(rep, opt.trace)
                                       : sqlrw::render_text(rep, opt.trace));
    return rep.allMatched() ? 0 : 1;
}

int cmd_dump(bool mutants) {
    std::cout << (mutants ? sqlrw::seeded_mutants_text() : sqlrw::builtin_rules_text());
    return 0;
}

// Re-evaluates both sides of each rule on each instance block.  A named
// instance targets the rule of that name; an anonymous one is tried against
// every rule in its file.  DIFFER is information, not failure: replaying a
// counterexample is supposed to differ.
int cmd_replay(const Options& opt) {
    Loaded ld;
    if (int rc = load_rules(opt, ld)) return rc;
    for (const auto& file : ld.files) {
        for (const auto& pi : file.instances) {
            std::vector<const sqlrw::RewriteRule*> targets;
            for (const auto& r : file.rules)
                if (r.name == pi.name) targets.push_back(&r);
            if (targets.empty())
                for (const auto& r : file.rules) targets.push_back(&r);
            for (const sqlrw::RewriteRule* r : targets) {
                std::cout << r->name << ": ";
                try {
                    bool prem = true;
                    for (const auto& p : r->premises)
                        if (!sqlrw::premise_holds(pi.inst, p)) {
                            prem = false;
                            break;
                        }
                    if (!prem) {
                        std::cout << "premise not satisfied, skipped\n";
                        continue;
                    }
                    sqlrw::Schema ctxSchema = sqlrw::resolve_schema(pi.inst, r->context);
                    bool differed = false;
                    for (const sqlrw::Tup& ctx : sqlrw::tuple_space(pi.inst, ctxSchema)) {
                        sqlrw::Bag l = sqlrw::eval_query(pi.inst, ctx, r->lhs);
                        sqlrw::Bag rt = sqlrw::eval_query(pi.inst, ctx, r->rhs);
                        if (!(l == rt)) {
                            std::cout << "DIFFER at context " << sqlrw::show(ctx) << "\n";
                            std::cout << "    left:  " << l.show() << "\n";
                            std::cout << "    right: " << rt.show() << "\n";
                            differed = true;
                            break;
                        }
                    }
                    if (!differed) std::cout << "MATCH\n";
                } catch (const std::exception& e) {
                    std::cout << "not evaluable on this instance (" << e.what() << ")\n";
                }
            }
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Equivalence checker for a compositional SQL fragment"};
    app.set_version_flag("--version", std::string(sqlrw::kToolName) + " " + sqlrw::kToolVersion);
    app.require_subcommand(1);
    Options opt;

    auto addSelection = [&](CLI::App* c) {
        c->add_option("paths", opt.paths, "rule files (default: builtin corpus)");
        c->add_flag("--builtin", opt.builtin, "include the builtin corpus");
        c->add_flag("--mutants", opt.mutants, "include the seeded invalid mutants");
    };
    auto addCommon = [&](CLI::App* c) {
        c->add_option("--oracle-depth", opt.oracle.depth, "schema meta tree depth")
            ->envname("SQLRW_ORACLE_DEPTH");
        c->add_option("--oracle-domain", opt.oracle.domain, "base type domain size")
            ->envname("SQLRW_ORACLE_DOMAIN");
        c->add_option("--oracle-tuples", opt.oracle.tuples, "max tuples per relation")
            ->envname("SQLRW_ORACLE_TUPLES");
        c->add_option("--oracle-mult", opt.oracle.mult, "max multiplicity")
            ->envname("SQLRW_ORACLE_MULT");
        c->add_option("--mode", opt.mode, "instance enumeration mode")
            ->check(CLI::IsMember({"exhaustive", "random"}))
            ->envname("SQLRW_MODE");
        c->add_option("--seed", opt.oracle.seed, "random mode seed")->envname("SQLRW_SEED");
        c->add_option("--jobs", opt.jobs, "worker threads")->envname("SQLRW_JOBS");
        c->add_option("--format", opt.format, "report format")
            ->check(CLI::IsMember({"text", "json"}))
            ->envname("SQLRW_FORMAT");
        c->add_flag("--trace", opt.trace, "include proof steps in the report");
    };

    CLI::App* check = app.add_subcommand("check", "prove or refute rules, oracle fallback");
    addSelection(check);
    addCommon(check);
    check->add_option("--fuel", opt.fuel, "normalization fuel")->envname("SQLRW_FUEL");

    CLI::App* oracle = app.add_subcommand("oracle", "differential testing only, no proving");
    addSelection(oracle);
    addCommon(oracle);

    CLI::App* dump = app.add_subcommand("dump-corpus", "print the builtin corpus as rule-DSL");
    bool dumpMutants = false;
    dump->add_flag("--mutants", dumpMutants, "print the seeded mutants instead");

    CLI::App* replay = app.add_subcommand("replay", "evaluate instance blocks against rules");
    replay->add_option("paths", opt.paths, "rule files with instance blocks")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (check->parsed()) return cmd_check(opt, false);
        if (oracle->parsed()) return cmd_check(opt, true);
        if (dump->parsed()) return cmd_dump(dumpMutants);
        if (replay->parsed()) return cmd_replay(opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

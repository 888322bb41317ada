#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>

#include "modlang/engine.hpp"
#include "modlang/parser.hpp"
#include "modlang/pretty.hpp"
#include "modlang/registry.hpp"
#include "modlang/trace.hpp"
#include "modlang/weaken.hpp"

using namespace modlang;

namespace {

struct Options {
    std::vector<std::string> paths;
    bool trace = false;
    std::string clause_order = "newest";
    int max_depth = 10000;
};

EngineConfig engine_config(const Options& o) {
    EngineConfig cfg;
    cfg.max_depth = o.max_depth;
    cfg.trace_enabled = o.trace;
    cfg.clause_order =
        o.clause_order == "oldest" ? ClauseOrder::OldestFirst : ClauseOrder::NewestFirst;
    return cfg;
}

// Search order: --path entries, then MODLANG_PATH, then the working dir.
Registry make_registry(const Options& o) {
    Registry reg;
    for (const auto& p : o.paths) reg.add_search_dir(p);
    if (const char* env = std::getenv("MODLANG_PATH")) {
        std::stringstream ss(env);
        std::string part;
        while (std::getline(ss, part, ':'))
            if (!part.empty()) reg.add_search_dir(part);
    }
    reg.add_search_dir(".");
    return reg;
}

int report_failure(const Failure& f) {
    std::cerr << "evaluation failed: " << f.detail << "\n";
    return 1;
}

// Installs a module as the initial program: top-level imports spliced and
// top-level queries instantiated (the preprocessing step), so backchaining
// sees every declaration.
int install(const EngineConfig& cfg, Registry& reg, const Program& raw, Program& out) {
    auto processed = process_declarations(cfg, reg, raw, ImportPolicy::Expand);
    if (auto* f = std::get_if<Failure>(&processed)) return report_failure(*f);
    out = std::move(std::get<Program>(processed));
    return 0;
}

int print_outcome(const EngineConfig& cfg, const EvalOutcome& out) {
    if (!out.ok()) return report_failure(out.failure());
    std::cout << to_string(out.value()) << "\n";
    if (cfg.trace_enabled && out.trace()) std::cerr << render_trace(*out.trace());
    return 0;
}

int cmd_eval(const Options& opts, const std::string& module, const std::string& expr_text) {
    EngineConfig cfg = engine_config(opts);
    Registry reg = make_registry(opts);
    Program program;
    if (!module.empty()) {
        int rc = install(cfg, reg, reg.resolve(ModuleName(module)), program);
        if (rc) return rc;
    }
    Expr e = parse_expr(expr_text);
    return print_outcome(cfg, eval(cfg, reg, program, e));
}

int cmd_run(const Options& opts, const std::string& file, const std::string& expr_text) {
    EngineConfig cfg = engine_config(opts);
    Registry reg = make_registry(opts);
    std::ifstream in(file);
    if (!in) {
        std::cerr << "cannot read " << file << "\n";
        return 2;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    auto [name, raw] = parse_module_file(buf.str());
    reg.register_inline(name, raw);
    auto parent = std::filesystem::path(file).parent_path();
    if (!parent.empty()) reg.add_search_dir(parent);
    Program program;
    int rc = install(cfg, reg, raw, program);
    if (rc) return rc;
    if (expr_text.empty()) return 0;
    return print_outcome(cfg, eval(cfg, reg, program, parse_expr(expr_text)));
}

int cmd_weaken(const Options& opts, const std::vector<std::string>& query_texts,
               const std::string& out_path, std::string name) {
    EngineConfig cfg = engine_config(opts);
    Registry reg = make_registry(opts);
    if (name.empty()) name = std::filesystem::path(out_path).stem().string();
    if (!is_identifier(name)) {
        std::cerr << "'" << name << "' is not a valid module name; use --name\n";
        return 2;
    }
    WeakenRequest req{{}, &reg, ModuleName(name)};
    for (const auto& text : query_texts) {
        Decl d = parse_decl(text);
        auto* q = std::get_if<QueryDecl>(&d);
        if (!q) {
            std::cerr << "not a query declaration: " << text << "\n";
            return 2;
        }
        req.queries.push_back(QueryRequest{std::move(*q), text});
    }
    auto result = weaken_module(req, cfg);
    if (auto* f = std::get_if<Failure>(&result)) return report_failure(*f);
    auto& rm = std::get<ResidualModule>(result);
    std::ofstream out(out_path);
    if (!out) {
        std::cerr << "cannot write " << out_path << "\n";
        return 2;
    }
    out << emit(rm);
    std::cout << rm.facts.size() << " fact(s) written to " << out_path << "\n";
    return 0;
}

int cmd_repl(const Options& opts) {
    EngineConfig cfg = engine_config(opts);
    Registry reg = make_registry(opts);
    Program session;
    Bindings session_bindings;
    const bool tty = isatty(fileno(stdin));

    auto append = [&](const Decl& entered) -> bool {
        Program one;
        one.decls.push_back(substitute(session_bindings, entered));
        auto processed = process_declarations(cfg, reg, one, ImportPolicy::Expand);
        if (auto* f = std::get_if<Failure>(&processed)) {
            report_failure(*f);
            return false;
        }
        auto& decls = std::get<Program>(processed).decls;
        if (const auto* q = std::get_if<QueryDecl>(&one.decls[0])) {
            // a query instantiates to a single fact; keep the binding alive
            // for later lines
            const auto& fact = std::get<FunDef>(decls.at(0));
            session_bindings[q->result_var] = std::get<ConstExpr>(fact.body->node).value;
        }
        for (auto& d : decls) session.decls.push_back(std::move(d));
        return true;
    };

    std::string line;
    while (true) {
        if (tty) std::cout << "> " << std::flush;
        if (!std::getline(std::cin, line)) break;
        size_t a = line.find_first_not_of(" \t\r");
        size_t b = line.find_last_not_of(" \t\r");
        if (a == std::string::npos) continue;
        line = line.substr(a, b - a + 1);
        if (line[0] == '%') continue;
        if (line == ":quit" || line == ":q") return 0;
        if (line == ":program") {
            std::cout << pretty(session);
            continue;
        }
        if (line == ":trace on") {
            cfg.trace_enabled = true;
            continue;
        }
        if (line == ":trace off") {
            cfg.trace_enabled = false;
            continue;
        }
        if (line[0] == ':') {
            std::cerr << "unknown command " << line
                      << " (try :program, :trace on|off, :quit)\n";
            continue;
        }
        try {
            if (line.back() == '.') {
                for (const auto& d : parse_decls(line).decls)
                    if (!append(d)) break;
            } else {
                Expr e = substitute(session_bindings, parse_expr(line));
                EvalOutcome out = eval(cfg, reg, session, e);
                if (out.ok()) {
                    std::cout << to_string(out.value()) << "\n";
                    if (cfg.trace_enabled && out.trace())
                        std::cerr << render_trace(*out.trace());
                } else {
                    report_failure(out.failure());
                }
            }
        } catch (const ParseError& e) {
            std::cerr << "parse error: " << e.what() << "\n";
        } catch (const RegistryError& e) {
            std::cerr << "module error: " << e.what() << "\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"modlang — a small functional language with module imports (/m), module "
                 "queries ((f(args)=v)^/m), and local declarations (D -o E)"};
    app.require_subcommand(1);
    app.fallthrough();

    Options opts;
    app.add_option("--path", opts.paths, "module search directory (repeatable)");
    app.add_flag("--trace", opts.trace, "print the derivation trace to stderr");
    app.add_option("--clause-order", opts.clause_order, "clause search order")
        ->check(CLI::IsMember({"newest", "oldest"}));
    app.add_option("--max-depth", opts.max_depth, "derivation depth bound")
        ->check(CLI::PositiveNumber);

    auto* eval_cmd = app.add_subcommand("eval", "evaluate an expression");
    std::string eval_module, eval_expr;
    eval_cmd->add_option("-m,--module", eval_module, "module to load as the initial program");
    eval_cmd->add_option("expr", eval_expr, "expression to evaluate")->required();

    auto* run_cmd = app.add_subcommand("run", "load a module file and evaluate against it");
    std::string run_file, run_expr;
    run_cmd->add_option("file", run_file, "module file")->required();
    run_cmd->add_option("-e,--expr", run_expr, "expression to evaluate after loading");

    auto* weaken_cmd = app.add_subcommand("weaken", "instantiate queries into a residual module");
    std::vector<std::string> weaken_queries;
    std::string weaken_out, weaken_name;
    weaken_cmd->add_option("-q,--query", weaken_queries, "query like '(fib(3)=v)^/mf'")
        ->required();
    weaken_cmd->add_option("-o,--output", weaken_out, "output .mod file")->required();
    weaken_cmd->add_option("--name", weaken_name, "residual module name (default: file stem)");

    auto* repl_cmd = app.add_subcommand("repl", "interactive session");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(eval_cmd)) return cmd_eval(opts, eval_module, eval_expr);
        if (app.got_subcommand(run_cmd)) return cmd_run(opts, run_file, run_expr);
        if (app.got_subcommand(weaken_cmd))
            return cmd_weaken(opts, weaken_queries, weaken_out, weaken_name);
        if (app.got_subcommand(repl_cmd)) return cmd_repl(opts);
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const RegistryError& e) {
        std::cerr << "module error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

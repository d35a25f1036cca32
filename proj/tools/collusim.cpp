// collusim: exact payoffs, asymptotics, maximin games, and Monte Carlo
// simulation for multi-channel collusion fingerprinting.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "collusim/asymptotics.hpp"
#include "collusim/config.hpp"
#include "collusim/game.hpp"
#include "collusim/jsonio.hpp"
#include "collusim/montecarlo.hpp"
#include "collusim/payoff.hpp"

namespace {

using namespace collusim;
using nlohmann::json;

struct CommonArgs {
    int k = 100;
    int l = 2;
    int order = 128;
    std::string bias = "arcsine";
    std::string attack = "interleaving";
    std::string load = "equal";
    std::string config_path;
    std::string out_path;
    std::string format = "json";
    int threads = 0;
    std::uint64_t seed = 1;
};

json spec_from_string(const std::string& s, const std::string& field) {
    if (!s.empty() && s.front() == '{') {
        try {
            return json::parse(s);
        } catch (const std::exception& e) {
            throw InvalidConfig("bad JSON for " + field + ": " + e.what());
        }
    }
    if (field == "bias") return json{{"kind", s}};
    if (field == "attack") return json{{"attack", s}};
    return json{{"load", s}};
}

// defaults < config file < explicit flags
void apply_config_file(CLI::App* cmd, CommonArgs& a) {
    if (a.config_path.empty()) return;
    std::ifstream in(a.config_path);
    if (!in) throw InvalidConfig("cannot open config file " + a.config_path);
    json cfg;
    try {
        in >> cfg;
    } catch (const std::exception& e) {
        throw InvalidConfig(std::string("bad config file: ") + e.what());
    }
    detail::check_keys(cfg,
                       {"k", "l", "order", "bias", "attack", "load", "seed", "threads",
                        "m", "n", "grid", "restarts", "tol", "format"},
                       "config file");
    auto unset = [&](const std::string& flag) {
        auto* opt = cmd->get_option_no_throw(flag);
        return opt == nullptr || opt->count() == 0;
    };
    if (cfg.contains("k") && unset("--k")) a.k = cfg["k"].get<int>();
    if (cfg.contains("l") && unset("--l")) a.l = cfg["l"].get<int>();
    if (cfg.contains("order") && unset("--order")) a.order = cfg["order"].get<int>();
    if (cfg.contains("seed") && unset("--seed")) a.seed = cfg["seed"].get<std::uint64_t>();
    if (cfg.contains("threads") && unset("--threads")) a.threads = cfg["threads"].get<int>();
    if (cfg.contains("format") && unset("--format")) a.format = cfg["format"].get<std::string>();
    if (cfg.contains("bias") && unset("--bias")) a.bias = cfg["bias"].dump();
    if (cfg.contains("attack") && unset("--attack")) a.attack = cfg["attack"].dump();
    if (cfg.contains("load") && unset("--load")) a.load = cfg["load"].dump();
}

int resolve_threads(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("COLLUSIM_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 0;
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::fwrite(text.data(), 1, text.size(), stdout);
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw InvalidConfig("cannot open output file " + out_path);
        out << text;
    }
}

struct Resolved {
    BiasDistribution bias = BiasDistribution::arcsine();
    NamedAttack attack = NamedAttack::interleaving();
    ChannelLoad load;
    json bias_spec, attack_spec, load_spec;
};

Resolved resolve(const CommonArgs& a) {
    Resolved r;
    r.bias_spec = spec_from_string(a.bias, "bias");
    r.attack_spec = spec_from_string(a.attack, "attack");
    r.load_spec = spec_from_string(a.load, "load");
    r.bias = parse_bias(r.bias_spec);
    r.attack = parse_attack(r.attack_spec, r.bias);
    r.load = parse_load(r.load_spec, a.k, a.l);
    return r;
}

JsonValue config_json(const std::string& command, const CommonArgs& a, const Resolved& r) {
    JsonValue cfg = JsonValue::object();
    cfg.set("command", command);
    cfg.set("k", a.k);
    cfg.set("l", a.l);
    cfg.set("order", a.order);
    cfg.set("bias", bias_to_json(r.bias));
    cfg.set("attack", attack_to_json(r.attack));
    cfg.set("load", load_to_json(r.load));
    cfg.set("seed", a.seed);
    cfg.set("threads", a.threads);
    return cfg;
}

std::string csv_num(double v) { return JsonValue::format_double(v); }

int run_payoff(const CommonArgs& a) {
    const Resolved r = resolve(a);
    const AttackTable table = realize(r.attack, a.k - a.l + 1);
    const PayoffReport rep = payoff_j(a.k, a.l, r.bias, table, r.load, a.order);
    if (a.format == "csv") {
        std::string out = "k,L,attack,bias,value,term1,term2\n";
        out += std::to_string(a.k) + "," + std::to_string(a.l) + "," + r.attack.name() + "," +
               r.bias.name() + "," + csv_num(rep.value) + "," +
               csv_num(rep.components.at("I(Y;Z|C,W)") / a.k) + "," +
               csv_num(rep.components.at("I(Y;C|W)") / a.k) + "\n";
        emit(out, a.out_path);
        return 0;
    }
    JsonValue j = JsonValue::object();
    j.set("command", "payoff");
    j.set("config", config_json("payoff", a, r));
    j.set("value", rep.value);
    JsonValue comp = JsonValue::object();
    for (const auto& [name, v] : rep.components) comp.set(name, v);
    j.set("components", std::move(comp));
    j.set("quadrature_order", rep.quadrature_order);
    j.set("method", rep.method == PayoffReport::Method::Exact ? "exact" : "bruteforce");
    emit(j.dump() + "\n", a.out_path);
    return 0;
}

std::vector<int> parse_int_list(const std::string& s, const std::string& what) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw InvalidConfig("bad integer in " + what + ": '" + item + "'");
        }
    }
    if (out.empty()) throw InvalidConfig(what + " list is empty");
    return out;
}

int run_sweep(const CommonArgs& a, const std::string& klist, const std::string& llist) {
    const std::vector<int> ks = parse_int_list(klist, "--k");
    const std::vector<int> ls = parse_int_list(llist, "--l");
    std::string csv = "k,L,attack,bias,value,term1,term2,ratio_to_limit\n";
    JsonValue rows = JsonValue::array();
    for (int l : ls) {
        for (int k : ks) {
            if (k < l) continue;
            CommonArgs point = a;
            point.k = k;
            point.l = l;
            const Resolved r = resolve(point);
            const AttackTable table = realize(r.attack, k - l + 1);
            const PayoffReport rep = payoff_j(k, l, r.bias, table, r.load, a.order);
            csv += std::to_string(k) + "," + std::to_string(l) + "," + r.attack.name() + "," +
                   r.bias.name() + "," + csv_num(rep.value) + "," +
                   csv_num(rep.components.at("I(Y;Z|C,W)") / k) + "," +
                   csv_num(rep.components.at("I(Y;C|W)") / k) + "," +
                   csv_num(rep.value / asymptotic_value(k, l)) + "\n";
            JsonValue row = JsonValue::object();
            row.set("k", k);
            row.set("l", l);
            row.set("value", rep.value);
            row.set("term1", rep.components.at("I(Y;Z|C,W)") / k);
            row.set("term2", rep.components.at("I(Y;C|W)") / k);
            row.set("ratio_to_limit", rep.value / asymptotic_value(k, l));
            rows.push(std::move(row));
        }
    }
    if (a.format == "csv") {
        emit(csv, a.out_path);
        return 0;
    }
    CommonArgs echo = a;
    echo.k = ks.front();
    echo.l = ls.front();
    const Resolved r0 = resolve(echo);
    JsonValue j = JsonValue::object();
    j.set("command", "sweep");
    JsonValue cfg = config_json("sweep", echo, r0);
    JsonValue kv = JsonValue::array(), lv = JsonValue::array();
    for (int k : ks) kv.push(k);
    for (int l : ls) lv.push(l);
    cfg.set("k_list", std::move(kv));
    cfg.set("l_list", std::move(lv));
    j.set("config", std::move(cfg));
    j.set("rows", std::move(rows));
    emit(j.dump() + "\n", a.out_path);
    return 0;
}

int run_asymptote(const CommonArgs& a, const std::string& klist) {
    const std::vector<int> ks = parse_int_list(klist, "--k");
    CommonArgs first = a;
    first.k = ks.front();
    const Resolved r0 = resolve(first);

    const ContinuumAttack g = ContinuumAttack::from_named(r0.attack, a.order);
    const double jb = jbar(g, r0.bias, a.order);
    const double fisher = fisher_integral(r0.bias, a.order);
    const double bound = std::isfinite(fisher) ? kPi * kPi / fisher : 0.0;

    std::string csv = "k,ratio_to_limit,jbar,bound\n";
    JsonValue rows = JsonValue::array();
    for (int k : ks) {
        if (k < a.l) continue;
        CommonArgs point = a;
        point.k = k;
        const Resolved r = resolve(point);
        const AttackTable table = realize(r.attack, k - a.l + 1);
        const double ratio = convergence_ratio(k, a.l, r.bias, table, r.load, a.order);
        csv += std::to_string(k) + "," + csv_num(ratio) + "," + csv_num(jb) + "," +
               csv_num(bound) + "\n";
        JsonValue row = JsonValue::object();
        row.set("k", k);
        row.set("ratio_to_limit", ratio);
        row.set("jbar", jb);
        row.set("bound", bound);
        rows.push(std::move(row));
    }
    if (a.format == "csv") {
        emit(csv, a.out_path);
        return 0;
    }
    JsonValue j = JsonValue::object();
    j.set("command", "asymptote");
    JsonValue cfg = config_json("asymptote", first, r0);
    JsonValue kv = JsonValue::array();
    for (int k : ks) kv.push(k);
    cfg.set("k_list", std::move(kv));
    j.set("config", std::move(cfg));
    j.set("rows", std::move(rows));
    emit(j.dump() + "\n", a.out_path);
    return 0;
}

int run_game(const CommonArgs& a, int grid, int restarts, double tol) {
    GameOptions opts;
    opts.seed = a.seed;
    opts.tol = tol;
    opts.threads = resolve_threads(a.threads);
    const GameResult res = outer_max(a.k, a.l, grid, a.order, restarts, opts);

    JsonValue j = JsonValue::object();
    j.set("command", "game");
    JsonValue cfg = JsonValue::object();
    cfg.set("command", "game");
    cfg.set("k", a.k);
    cfg.set("l", a.l);
    cfg.set("grid", grid);
    cfg.set("order", a.order);
    cfg.set("restarts", restarts);
    cfg.set("seed", a.seed);
    cfg.set("tol", tol);
    cfg.set("threads", a.threads);
    j.set("config", std::move(cfg));
    j.set("value", res.value);
    j.set("iterations", res.iterations);
    j.set("inner_gap", res.inner_gap);
    j.set("converged", res.converged);
    j.set("f_w", bias_to_json(res.f_w));
    j.set("attack", attack_table_to_json(res.attack));
    j.set("load", load_to_json(res.load));
    JsonValue prof = JsonValue::array();
    for (const auto& [it, v] : res.outer_profile) {
        JsonValue p = JsonValue::array();
        p.push(it);
        p.push(v);
        prof.push(std::move(p));
    }
    j.set("outer_profile", std::move(prof));
    emit(j.dump() + "\n", a.out_path);
    return res.converged ? 0 : 3;
}

int run_conjecture(const CommonArgs& a) {
    const Resolved r = resolve(a);
    const AttackTable table = realize(r.attack, a.k - a.l + 1);
    const PayoffReport rep = payoff_r_bruteforce(a.k, a.l, r.bias, table, r.load, a.order);
    JsonValue j = JsonValue::object();
    j.set("command", "conjecture");
    j.set("config", config_json("conjecture", a, r));
    j.set("value", rep.value);
    JsonValue comp = JsonValue::object();
    for (const auto& [name, v] : rep.components) comp.set(name, v);
    j.set("components", std::move(comp));
    j.set("quadrature_order", rep.quadrature_order);
    j.set("method", "bruteforce");
    j.set("r_le_j", rep.value <= rep.components.at("J") + 1e-10);
    emit(j.dump() + "\n", a.out_path);
    return 0;
}

int run_mc(const CommonArgs& a, int m, long long n, const std::string& trace_out,
           bool full_matrix, bool miller_madow) {
    const Resolved r = resolve(a);
    SimConfig cfg;
    cfg.m = m > 0 ? m : a.k;
    cfg.n = n;
    cfg.k = a.k;
    cfg.l = a.l;
    cfg.bias = r.bias;
    cfg.attack = r.attack;
    cfg.load = r.load;
    cfg.seed = a.seed;
    const std::vector<TraceSample> samples = generate(cfg);

    if (!trace_out.empty()) {
        std::ofstream out(trace_out, std::ios::binary);
        if (!out) throw InvalidConfig("cannot open trace file " + trace_out);
        const CounterRng rng(cfg.seed);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const TraceSample& s = samples[i];
            JsonValue rec = JsonValue::object();
            rec.set("segment", static_cast<std::int64_t>(i));
            JsonValue w = JsonValue::array(), c = JsonValue::array(), z = JsonValue::array(),
                      y = JsonValue::array(), sv = JsonValue::array(), x = JsonValue::array();
            for (int ch = 0; ch < cfg.l; ++ch) {
                w.push(s.w[ch]);
                c.push(s.c[ch]);
                z.push(s.z[ch]);
                y.push(static_cast<int>(s.y[ch]));
                x.push(JsonValue::uinteger(s.code[ch]));
            }
            for (int j = 0; j < cfg.k; ++j) sv.push(s.channel_of[j]);
            rec.set("w", std::move(w));
            rec.set("c", std::move(c));
            rec.set("z", std::move(z));
            rec.set("y", std::move(y));
            rec.set("s", std::move(sv));
            rec.set("x_coalition", std::move(x));
            if (full_matrix && cfg.m > cfg.k) {
                // innocent users drawn from the same counter stream
                JsonValue inn = JsonValue::array();
                for (int ch = 0; ch < cfg.l; ++ch) {
                    std::uint64_t bits = 0;
                    for (int j = cfg.k; j < cfg.m && j < 64; ++j)
                        if (rng.uniform(i, ch, CounterRng::kCode, j) < s.w[ch])
                            bits |= 1ull << (j - cfg.k);
                    inn.push(JsonValue::uinteger(bits));
                }
                rec.set("x_innocent", std::move(inn));
            }
            out << rec.dump() << "\n";
        }
    }

    JsonValue j = JsonValue::object();
    j.set("command", "mc");
    JsonValue cj = config_json("mc", a, r);
    cj.set("m", cfg.m);
    cj.set("n", static_cast<std::int64_t>(cfg.n));
    j.set("config", std::move(cj));
    j.set("samples", static_cast<std::int64_t>(samples.size()));
    j.set("marking_violations", 0);  // generate() hard-asserts

    if (!cfg.bias.has_density() && cfg.n >= 10000) {
        JsonValue est = JsonValue::object();
        const struct {
            MiTarget t;
            const char* name;
        } targets[] = {{MiTarget::YZCgivenW, "I(Y;Z,C|W)"},
                       {MiTarget::YCgivenW, "I(Y;C|W)"},
                       {MiTarget::YSgivenX, "I(Y;S|X)"}};
        for (const auto& tg : targets) {
            const MiEstimate e = estimate_mi(samples, tg.t, cfg, 200, miller_madow);
            JsonValue ev = JsonValue::object();
            ev.set("estimate", e.estimate);
            ev.set("std_error", e.std_error);
            ev.set("table_cells", e.table_cells);
            est.set(tg.name, std::move(ev));
        }
        j.set("estimates", std::move(est));
    }

    JsonValue marg = JsonValue::array();
    for (const auto& mp : verify_identical_marginals(samples)) {
        JsonValue e = JsonValue::object();
        e.set("channel_a", mp.channel_a);
        e.set("channel_b", mp.channel_b);
        e.set("chi2_zc", mp.chi2_zc);
        e.set("p_zc", mp.p_zc);
        e.set("chi2_y", mp.chi2_y);
        e.set("p_y", mp.p_y);
        marg.push(std::move(e));
    }
    j.set("marginals", std::move(marg));
    emit(j.dump() + "\n", a.out_path);
    return 0;
}

int exit_code_for(const Error& e) {
    const std::string& c = e.code();
    if (c == "invalid_config" || c == "invalid_args" || c == "not_normalized" ||
        c == "unsupported_order")
        return 2;
    return 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-channel collusion fingerprinting toolkit"};
    app.require_subcommand(1);

    CommonArgs a;
    std::string klist = "100", llist = "2";
    int grid = 32, restarts = 4, m = 0;
    long long n = 100000;
    double tol = 1e-8;
    std::string trace_out;
    bool full_matrix = false, miller_madow = false;

    auto add_common = [&](CLI::App* cmd, bool with_kl = true) {
        if (with_kl) {
            cmd->add_option("--k", a.k, "coalition size");
            cmd->add_option("--l", a.l, "number of channels");
        }
        cmd->add_option("--order", a.order, "quadrature order");
        cmd->add_option("--bias", a.bias, "bias distribution (name or JSON)");
        cmd->add_option("--attack", a.attack, "attack (name or JSON)");
        cmd->add_option("--load", a.load, "channel load (equal or JSON)");
        cmd->add_option("--config", a.config_path, "JSON config file; flags override");
        cmd->add_option("--out", a.out_path, "output path (default stdout)");
        cmd->add_option("--format", a.format, "json or csv")
            ->check(CLI::IsMember({"json", "csv"}));
        cmd->add_option("--threads", a.threads, "worker cap (env COLLUSIM_THREADS)");
        cmd->add_option("--seed", a.seed, "random seed");
    };

    auto* payoff_cmd = app.add_subcommand("payoff", "exact multi-channel payoff J");
    add_common(payoff_cmd);

    auto* sweep_cmd = app.add_subcommand("sweep", "payoff over a k and/or L grid (CSV)");
    sweep_cmd->add_option("--k", klist, "comma-separated k values");
    sweep_cmd->add_option("--l", llist, "comma-separated L values");
    add_common(sweep_cmd, false);

    auto* asym_cmd = app.add_subcommand("asymptote", "convergence ratios toward the limit");
    asym_cmd->add_option("--k", klist, "comma-separated k values");
    asym_cmd->add_option("--l", a.l, "number of channels");
    add_common(asym_cmd, false);

    auto* game_cmd = app.add_subcommand("game", "finite-k maximin solver");
    game_cmd->add_option("--grid", grid, "bias grid size");
    game_cmd->add_option("--restarts", restarts, "outer restarts");
    game_cmd->add_option("--tol", tol, "inner tolerance");
    add_common(game_cmd);

    auto* conj_cmd = app.add_subcommand("conjecture", "brute-force R vs J report");
    add_common(conj_cmd);

    auto* mc_cmd = app.add_subcommand("mc", "Monte Carlo simulation + estimators");
    mc_cmd->add_option("--m", m, "user count (default k)");
    mc_cmd->add_option("--n", n, "segment count");
    mc_cmd->add_option("--trace-out", trace_out, "NDJSON trace output path");
    mc_cmd->add_flag("--full-matrix", full_matrix, "emit innocent users' code bits too");
    mc_cmd->add_flag("--miller-madow", miller_madow, "bias-corrected MI estimates");
    add_common(mc_cmd);

    CLI11_PARSE(app, argc, argv);

    try {
        CLI::App* active = app.get_subcommands().front();
        apply_config_file(active, a);
        a.threads = resolve_threads(a.threads);
        if (active == payoff_cmd) return run_payoff(a);
        if (active == sweep_cmd) return run_sweep(a, klist, llist);
        if (active == asym_cmd) return run_asymptote(a, klist);
        if (active == game_cmd) return run_game(a, grid, restarts, tol);
        if (active == conj_cmd) return run_conjecture(a);
        if (active == mc_cmd) return run_mc(a, m, n, trace_out, full_matrix, miller_madow);
        return 2;
    } catch (const Error& e) {
        JsonValue err = JsonValue::object();
        err.set("error", e.code());
        err.set("message", e.what());
        std::cerr << err.dump() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        JsonValue err = JsonValue::object();
        err.set("error", "internal");
        err.set("message", e.what());
        std::cerr << err.dump() << "\n";
        return 3;
    }
}

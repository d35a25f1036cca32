#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "collusim/bias.hpp"
#include "collusim/common.hpp"
#include "collusim/jsonio.hpp"
#include "collusim/strategy.hpp"

namespace collusim {

// JSON schemas used by the CLI and config files:
//   bias:   {"kind":"arcsine"} | {"kind":"uniform"} | {"kind":"point","w":0.5}
//           | {"kind":"grid","nodes":[...],"weights":[...]}
//   attack: {"attack":"interleaving"|"majority"|"minority"|"coinflip"|"gopt"}
//           | {"attack":"custom","rows":{"2":[0,0.5,1],...}}
//   load:   {"load":"equal"} | {"load":"partitions","partitions":[{"parts":[3,1],"p":0.5},...]}
// Unknown keys are rejected.

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                       const std::string& what) {
    if (!j.is_object()) throw InvalidConfig(what + " must be a JSON object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) throw InvalidConfig("unknown key '" + key + "' in " + what);
}

}  // namespace detail

inline BiasDistribution parse_bias(const nlohmann::json& j) {
    detail::check_keys(j, {"kind", "w", "nodes", "weights"}, "bias spec");
    if (!j.contains("kind")) throw InvalidConfig("bias spec needs \"kind\"");
    const std::string kind = j.at("kind").get<std::string>();
    try {
        if (kind == "arcsine") return BiasDistribution::arcsine();
        if (kind == "uniform") return BiasDistribution::uniform();
        if (kind == "point") return BiasDistribution::point_mass(j.at("w").get<double>());
        if (kind == "grid")
            return BiasDistribution::grid(j.at("nodes").get<std::vector<double>>(),
                                          j.at("weights").get<std::vector<double>>());
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw InvalidConfig(std::string("bad bias spec: ") + e.what());
    }
    throw InvalidConfig("unknown bias kind '" + kind + "'");
}

inline NamedAttack parse_attack(const nlohmann::json& j, const BiasDistribution& bias) {
    detail::check_keys(j, {"attack", "rows"}, "attack spec");
    if (!j.contains("attack")) throw InvalidConfig("attack spec needs \"attack\"");
    const std::string name = j.at("attack").get<std::string>();
    if (name == "interleaving") return NamedAttack::interleaving();
    if (name == "majority") return NamedAttack::majority();
    if (name == "minority") return NamedAttack::minority();
    if (name == "coinflip") return NamedAttack::coin_flip();
    if (name == "gopt") return NamedAttack::g_opt(bias);
    if (name == "custom") {
        if (!j.contains("rows")) throw InvalidConfig("custom attack needs \"rows\"");
        std::map<int, std::vector<double>> rows;
        try {
            for (const auto& [key, value] : j.at("rows").items())
                rows[std::stoi(key)] = value.get<std::vector<double>>();
        } catch (const std::exception& e) {
            throw InvalidConfig(std::string("bad custom rows: ") + e.what());
        }
        if (rows.empty()) throw InvalidConfig("custom attack rows are empty");
        const int cmax = rows.rbegin()->first;
        std::vector<std::vector<double>> table;
        for (int c = 1; c <= cmax; ++c) {
            auto it = rows.find(c);
            if (it == rows.end())
                throw InvalidConfig("custom attack missing row for c=" + std::to_string(c));
            table.push_back(it->second);
        }
        try {
            return NamedAttack::custom(AttackTable(cmax, std::move(table)));
        } catch (const Error& e) {
            throw InvalidConfig(std::string("bad custom table: ") + e.what());
        }
    }
    throw InvalidConfig("unknown attack '" + name + "'");
}

inline ChannelLoad parse_load(const nlohmann::json& j, int k, int l) {
    detail::check_keys(j, {"load", "partitions"}, "load spec");
    if (!j.contains("load")) throw InvalidConfig("load spec needs \"load\"");
    const std::string name = j.at("load").get<std::string>();
    if (name == "equal") return equal_split(k, l);
    if (name == "partitions") {
        if (!j.contains("partitions")) throw InvalidConfig("load spec needs \"partitions\"");
        std::map<Partition, double> parts;
        for (const auto& entry : j.at("partitions")) {
            detail::check_keys(entry, {"parts", "p"}, "partition entry");
            try {
                parts[entry.at("parts").get<std::vector<int>>()] += entry.at("p").get<double>();
            } catch (const std::exception& e) {
                throw InvalidConfig(std::string("bad partition entry: ") + e.what());
            }
        }
        try {
            return ChannelLoad(l, k, std::move(parts));
        } catch (const Error& e) {
            throw InvalidConfig(std::string("bad load: ") + e.what());
        }
    }
    throw InvalidConfig("unknown load '" + name + "'");
}

// echo helpers: the resolved config rendered back into output

inline JsonValue bias_to_json(const BiasDistribution& b) {
    JsonValue j = JsonValue::object();
    j.set("kind", b.name());
    if (b.kind() == BiasKind::PointMass) j.set("w", b.atom_nodes()[0]);
    if (b.kind() == BiasKind::Grid) {
        JsonValue nodes = JsonValue::array(), weights = JsonValue::array();
        for (double v : b.atom_nodes()) nodes.push(v);
        for (double v : b.atom_weights()) weights.push(v);
        j.set("nodes", std::move(nodes));
        j.set("weights", std::move(weights));
    }
    return j;
}

inline JsonValue attack_to_json(const NamedAttack& a) {
    JsonValue j = JsonValue::object();
    j.set("attack", a.name());
    if (a.kind() == NamedAttack::Kind::Custom) {
        JsonValue rows = JsonValue::object();
        const AttackTable& t = a.custom_table();
        for (int c = 1; c <= t.c_max; ++c) {
            JsonValue row = JsonValue::array();
            for (double v : t.row(c)) row.push(v);
            rows.set(std::to_string(c), std::move(row));
        }
        j.set("rows", std::move(rows));
    }
    return j;
}

inline JsonValue load_to_json(const ChannelLoad& load) {
    JsonValue j = JsonValue::object();
    j.set("load", "partitions");
    JsonValue parts = JsonValue::array();
    for (const auto& [p, pr] : load.on_partitions) {
        JsonValue entry = JsonValue::object();
        JsonValue pv = JsonValue::array();
        for (int x : p) pv.push(x);
        entry.set("parts", std::move(pv));
        entry.set("p", pr);
        parts.push(std::move(entry));
    }
    j.set("partitions", std::move(parts));
    return j;
}

inline JsonValue attack_table_to_json(const AttackTable& t) {
    JsonValue rows = JsonValue::object();
    for (int c = 1; c <= t.c_max; ++c) {
        JsonValue row = JsonValue::array();
        for (double v : t.row(c)) row.push(v);
        rows.set(std::to_string(c), std::move(row));
    }
    return rows;
}

}  // namespace collusim

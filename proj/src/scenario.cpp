#include "ratsim/scenario.hpp"

#include <fstream>
#include <sstream>
#include <variant>

namespace ratsim {

namespace {

using Value = std::variant<std::int64_t, bool, std::string, std::vector<std::int64_t>>;

struct ParsedConfig {
    std::map<std::string, Value> kv;  // "section.key"
    std::string origin;

    bool has(const std::string& key) const { return kv.count(key) > 0; }

    template <typename T>
    T get(const std::string& key) const {
        auto it = kv.find(key);
        if (it == kv.end()) throw Error(ErrorCode::ConfigError, origin + ": missing key " + key);
        if (!std::holds_alternative<T>(it->second))
            throw Error(ErrorCode::ConfigError, origin + ": wrong type for " + key);
        return std::get<T>(it->second);
    }

    template <typename T>
    T get_or(const std::string& key, T def) const {
        return has(key) ? get<T>(key) : def;
    }
};

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

Value parse_value(const std::string& raw, const std::string& where) {
    std::string v = trim(raw);
    if (v.empty()) throw Error(ErrorCode::ConfigError, where + ": empty value");
    if (v == "true") return true;
    if (v == "false") return false;
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"')
            throw Error(ErrorCode::ConfigError, where + ": unterminated string");
        return v.substr(1, v.size() - 2);
    }
    if (v.front() == '[') {
        if (v.back() != ']') throw Error(ErrorCode::ConfigError, where + ": unterminated array");
        std::vector<std::int64_t> out;
        std::string body = v.substr(1, v.size() - 2);
        std::istringstream is(body);
        std::string tok;
        while (std::getline(is, tok, ',')) {
            tok = trim(tok);
            if (tok.empty()) continue;
            try {
                out.push_back(std::stoll(tok));
            } catch (...) {
                throw Error(ErrorCode::ConfigError, where + ": bad array element '" + tok + "'");
            }
        }
        return out;
    }
    try {
        std::size_t used = 0;
        std::int64_t n = std::stoll(v, &used);
        if (used == v.size()) return n;
    } catch (...) {
    }
    throw Error(ErrorCode::ConfigError, where + ": unparseable value '" + v + "'");
}

ParsedConfig parse_config(const std::string& text, const std::string& origin) {
    ParsedConfig cfg;
    cfg.origin = origin;
    std::istringstream is(text);
    std::string line, section;
    int ln = 0;
    while (std::getline(is, line)) {
        ++ln;
        // Strip comments (quotes in values never contain '#').
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::string where = origin + ":" + std::to_string(ln);
        if (line.front() == '[') {
            if (line.back() != ']') throw Error(ErrorCode::ConfigError, where + ": bad section");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::ConfigError, where + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw Error(ErrorCode::ConfigError, where + ": empty key");
        std::string full = section.empty() ? key : section + "." + key;
        cfg.kv[full] = parse_value(line.substr(eq + 1), where);
    }
    return cfg;
}

Topology topology_from(const ParsedConfig& c) {
    if (c.has("topology.ring")) {
        auto n = static_cast<std::size_t>(c.get<std::int64_t>("topology.ring"));
        std::vector<AgentId> ids;
        if (c.has("topology.ids")) {
            for (std::int64_t v : c.get<std::vector<std::int64_t>>("topology.ids"))
                ids.push_back(static_cast<AgentId>(v));
        } else {
            for (std::size_t i = 1; i <= n; ++i) ids.push_back(i);
        }
        return build_ring(n, ids);
    }
    if (c.has("topology.nodes")) {
        std::vector<AgentId> nodes;
        for (std::int64_t v : c.get<std::vector<std::int64_t>>("topology.nodes"))
            nodes.push_back(static_cast<AgentId>(v));
        std::vector<std::pair<AgentId, AgentId>> edges;
        std::istringstream es(c.get<std::string>("topology.edges"));
        std::string tok;
        while (es >> tok) {
            auto dash = tok.find('-');
            if (dash == std::string::npos)
                throw Error(ErrorCode::ConfigError, "bad edge token '" + tok + "'");
            edges.emplace_back(std::stoull(tok.substr(0, dash)), std::stoull(tok.substr(dash + 1)));
        }
        std::optional<std::vector<AgentId>> layout;
        if (c.has("topology.layout")) {
            layout.emplace();
            for (std::int64_t v : c.get<std::vector<std::int64_t>>("topology.layout"))
                layout->push_back(static_cast<AgentId>(v));
        }
        return Topology(std::move(nodes), std::move(edges), std::move(layout));
    }
    throw Error(ErrorCode::ConfigError, "topology: need ring = n or nodes/edges");
}

std::map<AgentId, std::int64_t> by_node(const ParsedConfig& c, const std::string& key,
                                        const Topology& t, std::int64_t skip) {
    std::map<AgentId, std::int64_t> out;
    if (!c.has(key)) return out;
    auto vals = c.get<std::vector<std::int64_t>>(key);
    if (vals.size() != t.size())
        throw Error(ErrorCode::ConfigError, key + ": need one entry per node");
    for (std::size_t i = 0; i < vals.size(); ++i)
        if (vals[i] != skip) out[t.nodes()[i]] = vals[i];
    return out;
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin) {
    ParsedConfig c = parse_config(text, origin);
    Scenario s;
    s.name = c.get_or<std::string>("name", origin);
    s.topology = topology_from(c);
    s.cfg.key = c.get<std::string>("problem.protocol");
    problem_of_protocol(s.cfg.key);  // validate early
    s.cfg.k = static_cast<int>(c.get_or<std::int64_t>("problem.k", 2));
    s.cfg.pad_field = static_cast<int>(c.get_or<std::int64_t>("problem.pad_field", 2));
    if (s.cfg.k < 2 || s.cfg.pad_field < 1)
        throw Error(ErrorCode::ConfigError, "problem: need k >= 2 and pad_field >= 1");
    s.prefs = by_node(c, "problem.prefs", s.topology, INT64_MIN);
    s.inputs = by_node(c, "problem.inputs", s.topology, -1);
    if (c.has("problem.alpha") || c.has("problem.beta")) {
        KnowledgeBound b{static_cast<int>(c.get<std::int64_t>("problem.alpha")),
                         static_cast<int>(c.get<std::int64_t>("problem.beta"))};
        validate_bound(b);
        s.bound = b;
    }
    if (c.has("cheater.position")) {
        CheaterSpec ch;
        ch.position = static_cast<AgentId>(c.get<std::int64_t>("cheater.position"));
        ch.d = static_cast<int>(c.get_or<std::int64_t>("cheater.d", 1));
        ch.strategy = c.get_or<std::string>("cheater.strategy", "dup");
        if (!s.topology.has_node(ch.position))
            throw Error(ErrorCode::ConfigError, "cheater.position is not a node");
        if (ch.d < 1) throw Error(ErrorCode::ConfigError, "cheater.d >= 1");
        s.cheater = ch;
    }
    s.seed = static_cast<std::uint64_t>(c.get_or<std::int64_t>("run.seed", 1));
    s.enumerate = c.get_or<bool>("run.enumerate", false);
    s.trials = static_cast<std::size_t>(c.get_or<std::int64_t>("run.trials", 10'000));
    s.catalog_max_d = static_cast<int>(c.get_or<std::int64_t>("run.catalog_max_d", 0));

    auto inputs = s.inputs;
    s.cfg.input_of = [inputs](AgentId a) -> std::optional<std::int64_t> {
        auto it = inputs.find(a);
        if (it == inputs.end()) return std::nullopt;
        return it->second;
    };
    auto prefs = s.prefs;
    std::int64_t def = problem_of_protocol(s.cfg.key) == ProblemKind::Coloring ? 1 : 0;
    s.cfg.pref_of = [prefs, def](AgentId a) -> std::int64_t {
        auto it = prefs.find(a);
        return it == prefs.end() ? def : it->second;
    };
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorCode::ConfigError, "cannot open scenario file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_scenario(ss.str(), path);
}

std::function<OutputValue(AgentId)> scenario_pref_of(const Scenario& s) {
    auto pref = s.cfg.pref_of;
    return [pref](AgentId a) { return OutputValue(pref(a)); };
}

DeviationSpec scenario_deviation(const Scenario& s) {
    if (!s.cheater) throw Error(ErrorCode::ConfigError, "scenario has no cheater section");
    const CheaterSpec& ch = *s.cheater;
    if (ch.strategy == "sybil")
        return sybil_emulation_strategy(problem_of_protocol(s.cfg.key), s.topology, ch.position,
                                        s.cfg.k, scenario_pref_of(s));
    if (ch.strategy == "dup") {
        if (!s.topology.layout())
            throw Error(ErrorCode::ConfigError, "dup strategy needs a ring layout");
        AgentId fresh = 0;
        for (AgentId a : s.topology.nodes()) fresh = std::max(fresh, a);
        std::vector<AgentId> ids;
        for (int j = 1; j <= ch.d; ++j) ids.push_back(fresh + j);
        DeviationSpec spec;
        spec.name = "dup-d" + std::to_string(ch.d) + "@" + std::to_string(ch.position);
        spec.scheme = DuplicationScheme::ring_segment(s.topology, ch.position, std::move(ids));
        return spec;
    }
    auto cat = standard_catalog(s.topology, s.cfg, std::max(ch.d, 1), scenario_pref_of(s));
    std::string want = ch.strategy + "@" + std::to_string(ch.position);
    for (auto& d : cat)
        if (d.name == want) return d;
    throw Error(ErrorCode::ConfigError, "unknown cheater strategy '" + ch.strategy + "'");
}

}  // namespace ratsim

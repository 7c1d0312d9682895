#include "ratsim/engine.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <sstream>

namespace ratsim {

const char* tag_name(Tag t) {
    switch (t) {
        case Tag::Hello: return "hello";
        case Tag::Rec: return "rec";
        case Tag::Piece: return "piece";
        case Tag::Reveal: return "reveal";
        case Tag::Open: return "open";
        case Tag::Pref: return "pref";
        case Tag::DrawR: return "draw_r";
        case Tag::NameClaim: return "name_claim";
        case Tag::SVal: return "s_val";
        case Tag::SDirect: return "s_direct";
        case Tag::SPath: return "s_path";
        case Tag::Color: return "color";
        case Tag::Token: return "token";
        case Tag::PBit: return "p_bit";
        case Tag::LeadDraw: return "lead_draw";
        case Tag::OBit: return "o_bit";
    }
    return "?";
}

Verdict classify_output(const Topology& original, const OutputVector& o, const ProblemSpec& p) {
    for (AgentId a : original.nodes()) {
        auto it = o.find(a);
        if (it == o.end() || !it->second.has_value()) return Verdict::Erroneous;
    }
    return p.legal(original, o) ? Verdict::Legal : Verdict::Erroneous;
}

// ---------------------------------------------------------------------------
// Randomness sources

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t s = seed ^ (0xD1B54A32D192ED03ULL * (salt + 1));
    return splitmix64(s);
}

}  // namespace

std::uint32_t SeededSource::draw(AgentId agent, std::uint32_t domain) {
    if (domain <= 1) return 0;
    auto [it, fresh] = states_.try_emplace(agent, 0);
    if (fresh) it->second = mix_seed(seed_, agent);
    // Rejection sampling keeps the draw unbiased for any domain.
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % domain;
    std::uint64_t x;
    do {
        x = splitmix64(it->second);
    } while (x >= limit);
    return static_cast<std::uint32_t>(x % domain);
}

std::uint32_t OdometerSource::draw(AgentId, std::uint32_t domain) {
    if (domain <= 1) return 0;
    if (pos_ < stack_.size()) {
        if (stack_[pos_].domain != domain)
            throw Error(ErrorCode::DomainError,
                        "choice domain depends on earlier drawn values");
        return stack_[pos_++].choice;
    }
    stack_.push_back({0, domain});
    return stack_[pos_++].choice;
}

Rat OdometerSource::branch_probability() const {
    BigInt den = 1;
    for (std::size_t i = 0; i < pos_; ++i) den *= stack_[i].domain;
    return Rat(BigInt(1), den);
}

bool OdometerSource::advance() {
    stack_.resize(pos_);  // drop choices the last branch never consumed
    while (!stack_.empty() && stack_.back().choice + 1 == stack_.back().domain)
        stack_.pop_back();
    if (stack_.empty()) return false;
    ++stack_.back().choice;
    return true;
}

std::uint32_t FlatSource::draw(AgentId, std::uint32_t domain) {
    if (domain <= 1) return 0;
    if (pos_ >= shape_.size()) {
        overflow_ = true;
        return 0;
    }
    if (shape_[pos_] != domain)
        throw Error(ErrorCode::DomainError, "choice domain depends on earlier drawn values");
    auto digit = static_cast<std::uint32_t>(quotient_ % domain);
    quotient_ /= domain;
    ++pos_;
    return digit;
}

std::uint32_t GrowSource::draw(AgentId, std::uint32_t domain) {
    if (domain <= 1) return 0;
    if (pos_ < shape_.size()) {
        if (shape_[pos_] != domain)
            throw Error(ErrorCode::DomainError, "choice domain depends on earlier drawn values");
        auto digit = static_cast<std::uint32_t>(quotient_ % domain);
        quotient_ /= domain;
        ++pos_;
        return digit;
    }
    shape_.push_back(domain);
    ++pos_;
    return 0;  // quotient_ has no digits beyond the previously known shape
}

// ---------------------------------------------------------------------------
// Execution engine

namespace {

// Deviations may bias every local coin to 0; such draws consume no entropy
// from the enumeration tree.
class ZeroSource : public RandomnessSource {
public:
    std::uint32_t draw(AgentId, std::uint32_t) override { return 0; }
};

// Optional tap recording every entropy-consuming draw into the current round.
class RecordingSource : public RandomnessSource {
public:
    explicit RecordingSource(RandomnessSource& inner) : inner_(inner) {}
    std::uint32_t draw(AgentId agent, std::uint32_t domain) override {
        std::uint32_t c = inner_.draw(agent, domain);
        if (domain > 1 && sink_) sink_->push_back({agent, domain, c});
        return c;
    }
    void set_sink(std::vector<DrawRecord>* s) { sink_ = s; }

private:
    RandomnessSource& inner_;
    std::vector<DrawRecord>* sink_ = nullptr;
};

struct NodeRt {
    AgentId id;
    std::vector<AgentId> port_neighbors;   // sorted
    std::vector<int> port_clockwise;       // 1/0 ring labels, -1 otherwise
    std::unique_ptr<AgentProgram> program;
    bool cheater_owned = false;
    std::vector<AgentCtx::Incoming> inbox;
    std::optional<OutputValue> output;
};

}  // namespace

ExecutionTrace run_execution(const ExecutionPlan& plan, RandomnessSource& rand) {
    ExecutionTrace trace;
    std::vector<AgentId> cheater_nodes;
    if (plan.cheater) {
        trace.execution_topology = apply_duplication(plan.original, plan.cheater->scheme);
        cheater_nodes = plan.cheater->scheme.virtual_ids;
    } else {
        trace.execution_topology = plan.original;
    }
    const Topology& g = trace.execution_topology;
    for (AgentId a : plan.original.nodes())
        if (!plan.cheater || a != plan.cheater->scheme.cheater) trace.node_to_original[a] = a;
    for (AgentId v : cheater_nodes) trace.node_to_original[v] = plan.cheater->scheme.cheater;

    std::map<AgentId, NodeRt> nodes;
    std::map<std::pair<AgentId, AgentId>, std::uint32_t> port_of;  // (node, neighbor) -> port
    for (AgentId a : g.nodes()) {
        NodeRt rt;
        rt.id = a;
        rt.port_neighbors = g.neighbors(a);
        for (std::uint32_t p = 0; p < rt.port_neighbors.size(); ++p) {
            AgentId b = rt.port_neighbors[p];
            port_of[{a, b}] = p;
            int cw = -1;
            if (g.layout() && rt.port_neighbors.size() == 2)
                cw = (g.ring_step(a, RingDirection::Clockwise) == b) ? 1 : 0;
            rt.port_clockwise.push_back(cw);
        }
        bool owned = std::find(cheater_nodes.begin(), cheater_nodes.end(), a) != cheater_nodes.end();
        rt.cheater_owned = owned;
        rt.program = owned ? plan.cheater->honest_factory(a) : plan.honest_factory(a);
        nodes.emplace(a, std::move(rt));
    }

    std::unique_ptr<DeviationProgram> deviation;
    if (plan.cheater && plan.cheater->deviation) {
        deviation = plan.cheater->deviation();
        std::vector<AgentProgram*> progs;
        for (AgentId v : cheater_nodes) progs.push_back(nodes.at(v).program.get());
        deviation->configure(progs);
    }
    ZeroSource zero;
    RandomnessSource* cheater_rand = &rand;
    if (deviation && deviation->bias_draws()) cheater_rand = &zero;
    RecordingSource honest_tap(rand), cheater_tap(*cheater_rand);
    RandomnessSource* honest_src = &rand;
    if (plan.record_draws) {
        honest_src = &honest_tap;
        cheater_rand = &cheater_tap;
    }

    // Stepping order: honest nodes in id order, then the cheater's segment.
    std::vector<AgentId> honest_order, step_order;
    for (AgentId a : g.nodes())
        if (!nodes.at(a).cheater_owned) honest_order.push_back(a);
    step_order = honest_order;
    step_order.insert(step_order.end(), cheater_nodes.begin(), cheater_nodes.end());

    std::vector<Message> pending;
    std::optional<OutputValue> cheater_output;
    for (int round = 1; round <= plan.round_limit; ++round) {
        for (auto& [id, rt] : nodes) rt.inbox.clear();
        for (const Message& m : pending)
            nodes.at(m.dst).inbox.push_back({port_of.at({m.dst, m.src}), m.payload});
        pending.clear();
        trace.rounds.emplace_back();
        if (plan.record_draws) {
            honest_tap.set_sink(&trace.rounds.back().draws);
            cheater_tap.set_sink(&trace.rounds.back().draws);
        }

        std::vector<std::unique_ptr<AgentCtx>> ctx_store;
        std::map<AgentId, AgentCtx*> ctx_of;
        for (AgentId a : step_order) {
            NodeRt& rt = nodes.at(a);
            RandomnessSource& src = rt.cheater_owned ? *cheater_rand : *honest_src;
            ctx_store.push_back(std::make_unique<AgentCtx>(a, round, rt.port_neighbors,
                                                           rt.port_clockwise, rt.inbox, src));
            ctx_of[a] = ctx_store.back().get();
            rt.program->step(*ctx_of[a]);
        }

        if (deviation) {
            std::vector<std::vector<AgentCtx::Incoming>> inboxes;
            std::vector<AgentCtx*> ctxs;
            std::vector<AgentProgram*> progs;
            for (AgentId v : cheater_nodes) {
                inboxes.push_back(nodes.at(v).inbox);
                ctxs.push_back(ctx_of.at(v));
                progs.push_back(nodes.at(v).program.get());
            }
            CheaterRound rt{round, &cheater_nodes, &inboxes, &ctxs, &progs};
            deviation->on_round(rt);
        }

        // Commit the round: aborts, outputs, then sends.
        std::optional<AbortInfo> abort;
        for (AgentId a : step_order) {
            AgentCtx& ctx = *ctx_of.at(a);
            if (ctx.abort_reason() && !abort) abort = AbortInfo{round, a, *ctx.abort_reason()};
            if (ctx.staged_output()) {
                NodeRt& rt = nodes.at(a);
                if (rt.cheater_owned) cheater_output = ctx.staged_output();
                else rt.output = ctx.staged_output();
            }
            for (auto& out : ctx.staged_sends()) {
                if (out.port >= nodes.at(a).port_neighbors.size())
                    throw Error(ErrorCode::Precondition, "send on unknown port");
                Message m{a, nodes.at(a).port_neighbors[out.port], round, std::move(out.payload)};
                ++trace.message_count;
                if (plan.record_messages) trace.rounds.back().messages.push_back(m);
                pending.push_back(std::move(m));
            }
        }
        if (plan.record_states)
            for (AgentId a : step_order)
                trace.rounds.back().states.emplace_back(a, nodes.at(a).program->state_summary());

        if (abort) {
            // The detecting agent outputs bottom; the run ends here.
            trace.abort = abort;
            nodes.at(abort->detector).output.reset();
            if (nodes.at(abort->detector).cheater_owned) cheater_output.reset();
            break;
        }
        bool all_done = true;
        for (AgentId a : honest_order)
            if (!nodes.at(a).output) {
                all_done = false;
                break;
            }
        if (plan.cheater && !cheater_output) all_done = false;
        if (all_done) break;
        if (round == plan.round_limit)
            throw Error(ErrorCode::RoundLimitExceeded, "round limit exceeded");
    }

    if (deviation) deviation->on_output(cheater_output);
    for (AgentId a : plan.original.nodes()) {
        if (plan.cheater && a == plan.cheater->scheme.cheater)
            trace.outputs[a] = cheater_output;
        else
            trace.outputs[a] = nodes.at(a).output;
    }
    return trace;
}

void enumerate_executions(const ExecutionPlan& plan,
                          const std::function<void(const Rat&, const ExecutionTrace&)>& cb,
                          std::uint64_t cap) {
    OdometerSource src;
    std::uint64_t leaves = 0;
    while (true) {
        if (++leaves > cap) throw Error(ErrorCode::ExplosionCap, "enumeration exceeds cap");
        src.begin_run();
        ExecutionTrace t = run_execution(plan, src);
        cb(src.branch_probability(), t);
        if (!src.advance()) break;
    }
}

std::string trace_to_jsonl(const ExecutionTrace& t) {
    using json = nlohmann::ordered_json;
    std::ostringstream os;
    json meta;
    meta["type"] = "meta";
    meta["nodes"] = t.execution_topology.nodes();
    json edges = json::array();
    for (const auto& e : t.execution_topology.edges()) edges.push_back({e.first, e.second});
    meta["edges"] = edges;
    if (t.execution_topology.layout()) meta["layout"] = *t.execution_topology.layout();
    json mapping = json::object();
    for (const auto& [node, orig] : t.node_to_original) mapping[std::to_string(node)] = orig;
    meta["node_to_original"] = mapping;
    os << meta.dump() << "\n";
    for (std::size_t r = 0; r < t.rounds.size(); ++r) {
        for (const Message& m : t.rounds[r].messages) {
            json jm;
            jm["type"] = "msg";
            jm["round"] = m.round;
            jm["src"] = m.src;
            jm["dst"] = m.dst;
            jm["tag"] = tag_name(m.payload.tag);
            jm["vals"] = std::vector<std::int64_t>(m.payload.vals.begin(), m.payload.vals.end());
            os << jm.dump() << "\n";
        }
        for (const auto& [agent, state] : t.rounds[r].states) {
            json js;
            js["type"] = "state";
            js["round"] = static_cast<int>(r + 1);
            js["agent"] = agent;
            js["state"] = state;
            os << js.dump() << "\n";
        }
    }
    json res;
    res["type"] = "result";
    json outs = json::object();
    for (const auto& [agent, val] : t.outputs) {
        if (val)
            outs[std::to_string(agent)] = std::vector<std::int64_t>(val->vals.begin(), val->vals.end());
        else
            outs[std::to_string(agent)] = nullptr;
    }
    res["outputs"] = outs;
    if (t.abort) {
        res["abort"] =
            json{{"round", t.abort->round}, {"agent", t.abort->detector}, {"reason", t.abort->reason}};
    } else {
        res["abort"] = nullptr;
    }
    res["messages"] = t.message_count;
    os << res.dump() << "\n";
    return os.str();
}

}  // namespace ratsim

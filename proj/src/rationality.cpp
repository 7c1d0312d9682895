#include "ratsim/rationality.hpp"

#include <omp.h>

#include <cmath>
#include <nlohmann/json.hpp>
#include <sstream>

#include "ratsim/parallel.hpp"

namespace ratsim {

int utility(const OutputVector& o, const Preference& pref, const Topology& original,
            const ProblemSpec& p) {
    if (classify_output(original, o, p) != Verdict::Legal) return 0;
    const auto& mine = o.at(pref.agent);
    return (mine && *mine == pref.value) ? 1 : 0;
}

// ---------------------------------------------------------------------------
// Plan construction

ExecutionPlan honest_plan(const Topology& original, const ProtocolConfig& cfg) {
    ExecutionPlan plan;
    plan.original = original;
    plan.honest_factory = make_agent_factory(cfg);
    plan.round_limit = round_limit_hint(cfg.key, original.size());
    return plan;
}

ExecutionPlan deviation_plan(const Topology& original, const ProtocolConfig& cfg,
                             const DeviationSpec& dev) {
    ExecutionPlan plan = honest_plan(original, cfg);
    plan.round_limit = round_limit_hint(cfg.key, original.size() + dev.scheme.d() - 1);
    CheaterPlan cp;
    cp.scheme = dev.scheme;
    cp.honest_factory = make_agent_factory(cfg);
    cp.deviation = dev.factory;
    plan.cheater = std::move(cp);
    return plan;
}

ProblemSpec problem_for(const ProtocolConfig& cfg, const DuplicationScheme* scheme) {
    std::map<AgentId, AgentId> id_map;
    if (scheme)
        for (AgentId v : scheme->virtual_ids) id_map[v] = scheme->cheater;
    return make_problem(problem_of_protocol(cfg.key), cfg.k, std::move(id_map));
}

// ---------------------------------------------------------------------------
// Estimators

static bool prefix_matches(const ExecutionTrace& t, const ExecutionTrace& ref, int rounds) {
    for (int r = 0; r < rounds; ++r) {
        bool te = static_cast<std::size_t>(r) >= t.rounds.size();
        bool re = static_cast<std::size_t>(r) >= ref.rounds.size();
        if (te != re) return false;
        if (te) return true;
        const TraceRound& a = t.rounds[r];
        const TraceRound& b = ref.rounds[r];
        if (a.messages.size() != b.messages.size() || a.draws.size() != b.draws.size())
            return false;
        for (std::size_t i = 0; i < a.messages.size(); ++i) {
            const Message &m = a.messages[i], &n = b.messages[i];
            if (m.src != n.src || m.dst != n.dst || !(m.payload == n.payload)) return false;
        }
        for (std::size_t i = 0; i < a.draws.size(); ++i) {
            const DrawRecord &x = a.draws[i], &y = b.draws[i];
            if (x.agent != y.agent || x.domain != y.domain || x.choice != y.choice) return false;
        }
    }
    return true;
}

Rat expected_utility_exact(const ExecutionPlan& plan, const ProblemSpec& problem,
                           const Preference& pref, int from_round,
                           const ExecutionTrace* reference, std::uint64_t cap) {
    ExecutionPlan p = plan;
    bool conditioned = from_round > 0 && reference != nullptr;
    p.record_messages = conditioned;
    p.record_draws = conditioned;
    if (conditioned && (plan.record_messages == false || plan.record_draws == false))
        throw Error(ErrorCode::Precondition, "conditioning requires recorded messages and draws");
    Rat num = 0, den = 0;
    enumerate_executions(
        p,
        [&](const Rat& prob, const ExecutionTrace& t) {
            if (conditioned && !prefix_matches(t, *reference, from_round)) return;
            den += prob;
            if (utility(t.outputs, pref, plan.original, problem)) num += prob;
        },
        cap);
    if (den == 0) throw Error(ErrorCode::Precondition, "conditioning event has probability zero");
    return num / den;
}

McEstimate expected_utility_mc(const ExecutionPlan& plan, const ProblemSpec& problem,
                               const Preference& pref, std::size_t samples, std::uint64_t seed,
                               int jobs) {
    if (samples < 1) throw Error(ErrorCode::Precondition, "samples >= 1");
    ExecutionPlan p = plan;
    p.record_messages = false;
    std::uint64_t hits = 0;
    bool failed = false;
    std::string fail_what;
#pragma omp parallel for schedule(static) reduction(+ : hits) \
    num_threads(jobs > 0 ? jobs : omp_get_max_threads())
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(samples); ++i) {
        try {
            SeededSource src(seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(i) + 1)));
            ExecutionTrace t = run_execution(p, src);
            hits += static_cast<std::uint64_t>(utility(t.outputs, pref, plan.original, problem));
        } catch (const std::exception& e) {
#pragma omp critical
            {
                failed = true;
                fail_what = e.what();
            }
        }
    }
    if (failed) throw Error(ErrorCode::Precondition, fail_what);
    McEstimate e;
    e.samples = samples;
    e.mean = static_cast<double>(hits) / static_cast<double>(samples);
    double half = 1.96 * std::sqrt(e.mean * (1.0 - e.mean) / static_cast<double>(samples));
    e.ci_low = std::max(0.0, e.mean - half);
    e.ci_high = std::min(1.0, e.mean + half);
    return e;
}

std::string group_view_key(const ExecutionTrace& t, const std::set<AgentId>& group, int round) {
    std::ostringstream os;
    for (int r = 0; r < round && static_cast<std::size_t>(r) < t.rounds.size(); ++r) {
        for (const DrawRecord& d : t.rounds[r].draws)
            if (group.count(d.agent))
                os << "d" << r << ":" << d.agent << ":" << d.domain << ":" << d.choice << ";";
        for (const Message& m : t.rounds[r].messages)
            if (group.count(m.dst)) {
                os << "m" << r << ":" << m.src << ">" << m.dst << ":"
                   << tag_name(m.payload.tag);
                for (std::int64_t v : m.payload.vals) os << "," << v;
                os << ";";
            }
    }
    return os.str();
}

Rat group_expected_utility(const ExecutionPlan& plan, const ProblemSpec& problem,
                           const std::set<AgentId>& group, const Preference& target_pref,
                           int round, const ExecutionTrace* reference, std::uint64_t cap) {
    if (round <= 0 || reference == nullptr)
        return expected_utility_exact(plan, problem, target_pref, 0, nullptr, cap);
    ExecutionPlan p = plan;
    p.record_messages = true;
    p.record_draws = true;
    std::string want = group_view_key(*reference, group, round);
    Rat num = 0, den = 0;
    enumerate_executions(
        p,
        [&](const Rat& prob, const ExecutionTrace& t) {
            if (group_view_key(t, group, round) != want) return;
            den += prob;
            if (utility(t.outputs, target_pref, plan.original, problem)) num += prob;
        },
        cap);
    if (den == 0) throw Error(ErrorCode::Precondition, "view has probability zero");
    return num / den;
}

// ---------------------------------------------------------------------------
// Deviation programs

namespace {

// Adds one to the openly circulated own-input record; the secret-committed
// copies still carry the truth, so holders can catch the lie.
class LieAboutInput : public DeviationProgram {
public:
    LieAboutInput(AgentId virt, int k) : virt_(virt), k_(k) {}
    void on_round(CheaterRound& rt) override {
        for (std::size_t i = 0; i < rt.node_ids->size(); ++i) {
            if ((*rt.node_ids)[i] != virt_) continue;
            for (auto& out : (*rt.ctxs)[i]->staged_sends())
                if (out.payload.tag == Tag::Open &&
                    static_cast<AgentId>(out.payload.vals[0]) == virt_)
                    out.payload.vals[1] = (out.payload.vals[1] + 1) % k_;
        }
    }

private:
    AgentId virt_;
    int k_;
};

// Holds the n-th sending round's messages back by one round.
class DelayByOne : public DeviationProgram {
public:
    explicit DelayByOne(int nth) : nth_(nth) {}
    void on_round(CheaterRound& rt) override {
        AgentCtx& ctx = *(*rt.ctxs)[0];
        if (!held_.empty()) {
            for (auto& h : held_) ctx.staged_sends().push_back(std::move(h));
            held_.clear();
        }
        if (!ctx.staged_sends().empty() && ++send_rounds_ == nth_) {
            held_ = std::move(ctx.staged_sends());
            ctx.staged_sends().clear();
        }
    }

private:
    int nth_, send_rounds_ = 0;
    std::vector<AgentCtx::Outgoing> held_;
};

// Drops the n-th sending round's messages entirely.
class WithholdNth : public DeviationProgram {
public:
    explicit WithholdNth(int nth) : nth_(nth) {}
    void on_round(CheaterRound& rt) override {
        AgentCtx& ctx = *(*rt.ctxs)[0];
        if (!ctx.staged_sends().empty() && ++send_rounds_ == nth_) ctx.staged_sends().clear();
    }

private:
    int nth_, send_rounds_ = 0;
};

class OutputOverride : public DeviationProgram {
public:
    explicit OutputOverride(OutputValue pref) : pref_(std::move(pref)) {}
    void on_output(std::optional<OutputValue>& out) override {
        if (out) out = pref_;
    }

private:
    OutputValue pref_;
};

class BiasedDraw : public DeviationProgram {
public:
    bool bias_draws() const override { return true; }
};

// Theorem-1-style segment emulation: run every virtual agent honestly with
// biased (deterministic) local draws; when the segment's back node is about to
// forward the target node's open record into the honest region, substitute
// the value that makes the circulated sum equal the preferred output. The
// target sits just behind the front, so both of its secret learners are
// segment-internal and no honest holder can object; by the time its record
// leaves the segment, every honest input has already reached the pool.
class SybilSubstitute : public DeviationProgram {
public:
    SybilSubstitute(AgentId target, AgentId back, std::int64_t pref, int k)
        : target_(target), back_(back), pref_(pref), k_(k) {}

    bool bias_draws() const override { return true; }

    void on_round(CheaterRound& rt) override {
        for (std::size_t i = 0; i < rt.node_ids->size(); ++i) {
            if ((*rt.node_ids)[i] != back_) continue;
            for (auto& out : (*rt.ctxs)[i]->staged_sends()) {
                if (out.payload.tag != Tag::Open ||
                    static_cast<AgentId>(out.payload.vals[0]) != target_)
                    continue;
                auto v = substituted_value(rt);
                if (v) out.payload.vals[1] = *v;
            }
        }
        // The emulated honest programs inside the segment may flag the
        // substituted record; the cheater simply discards those reports.
        for (AgentCtx* ctx : *rt.ctxs)
            if (ctx->abort_reason()) ctx->clear_abort();
    }

    void on_output(std::optional<OutputValue>& out) override {
        if (out) out = OutputValue(pref_);
    }

private:
    std::optional<std::int64_t> substituted_value(CheaterRound& rt) const {
        // Pool the segment's knowledge of everyone else's input.
        std::vector<const KsView*> views;
        for (AgentProgram* p : *rt.programs)
            if (auto* v = dynamic_cast<const KsView*>(p)) views.push_back(v);
        if (views.empty()) return std::nullopt;
        std::int64_t sum = 0;
        for (AgentId o : views.front()->ks_agents()) {
            if (o == target_) continue;
            std::optional<std::int64_t> known;
            for (const KsView* v : views)
                if ((known = v->ks_known_input(o))) break;
            if (!known) return std::nullopt;
            sum = (sum + *known) % k_;
        }
        return ((pref_ - sum) % k_ + k_) % k_;
    }

    AgentId target_, back_;
    std::int64_t pref_;
    int k_;
};

AgentId fresh_id(const Topology& t, std::size_t offset = 1) {
    AgentId m = 0;
    for (AgentId a : t.nodes()) m = std::max(m, a);
    return m + offset;
}

}  // namespace

// ---------------------------------------------------------------------------
// Catalogs

std::vector<DeviationSpec> standard_catalog(const Topology& original, const ProtocolConfig& cfg,
                                            int max_d,
                                            const std::function<OutputValue(AgentId)>& pref_of) {
    std::vector<DeviationSpec> cat;
    bool ring = original.layout().has_value();
    bool ks_family = cfg.key == "ks" || cfg.key == "ks2" || cfg.key == "color-ring";
    for (AgentId a : original.nodes()) {
        std::string at = "@" + std::to_string(a);
        for (int d = 2; d <= max_d && ring; ++d) {
            std::vector<AgentId> ids;
            for (int j = 0; j < d; ++j) ids.push_back(fresh_id(original, 1 + j));
            cat.push_back({"dup-d" + std::to_string(d) + at,
                           DuplicationScheme::ring_segment(original, a, std::move(ids)), nullptr});
        }
        auto self = DuplicationScheme::honest_shape(a, a);
        if (ks_family) {
            int k = cfg.key == "ks" ? cfg.k : 2;
            cat.push_back({"lie-input" + at, self,
                           [a, k]() { return std::make_unique<LieAboutInput>(a, k); }});
        }
        for (int nth : {1, 3}) {
            cat.push_back({"delay-by-one-s" + std::to_string(nth) + at, self,
                           [nth]() { return std::make_unique<DelayByOne>(nth); }});
            cat.push_back({"withhold-s" + std::to_string(nth) + at, self,
                           [nth]() { return std::make_unique<WithholdNth>(nth); }});
        }
        cat.push_back({"output-override" + at, self, [pref = pref_of(a)]() {
                           return std::make_unique<OutputOverride>(pref);
                       }});
        cat.push_back(
            {"biased-draw" + at, self, []() { return std::make_unique<BiasedDraw>(); }});
    }
    return cat;
}

DeviationSpec sybil_emulation_strategy(ProblemKind problem, const Topology& original,
                                       AgentId cheater, int k,
                                       const std::function<OutputValue(AgentId)>& pref_of) {
    if (problem != ProblemKind::KnowledgeSharing && problem != ProblemKind::TwoKnowledgeSharing)
        throw Error(ErrorCode::NotApplicable,
                    "segment emulation needs the late-binding open-record structure");
    if (!original.layout())
        throw Error(ErrorCode::Precondition, "segment emulation targets ring topologies");
    if (original.degree(cheater) < 2)
        throw Error(ErrorCode::Precondition, "cheater degree >= 2 required");
    auto d = original.size() + 1;
    std::vector<AgentId> ids;
    for (std::size_t j = 0; j < d; ++j) ids.push_back(fresh_id(original, 1 + j));
    AgentId target = ids[1], back = ids.back();
    std::int64_t pref = pref_of(cheater).scalar();
    if (problem == ProblemKind::TwoKnowledgeSharing) k = 2;
    if (k < 2) throw Error(ErrorCode::Precondition, "field size k >= 2 required");
    DeviationSpec spec;
    spec.name = "sybil-emulation-d" + std::to_string(d) + "@" + std::to_string(cheater);
    spec.scheme = DuplicationScheme::ring_segment(original, cheater, std::move(ids));
    spec.factory = [target, back, pref, k]() {
        return std::make_unique<SybilSubstitute>(target, back, pref, k);
    };
    return spec;
}

// ---------------------------------------------------------------------------
// Equilibrium checker

EquilibriumReport check_equilibrium(const EquilibriumJob& job) {
    EquilibriumReport rep;
    rep.scenario = job.scenario_name;
    rep.mode = job.mode;

    ExecutionPlan honest = honest_plan(job.original, job.cfg);
    ProblemSpec honest_problem = problem_for(job.cfg, nullptr);

    std::map<AgentId, McEstimate> honest_mc;
    for (AgentId a : job.original.nodes()) {
        Preference pref{a, job.pref_of(a)};
        if (job.mode == EstimationMode::Exact) {
            if (job.use_parallel_exact) {
                auto fc = parallel_flat_counts(
                    honest, 2,
                    [&](const ExecutionTrace& t) {
                        return static_cast<std::size_t>(
                            utility(t.outputs, pref, job.original, honest_problem));
                    },
                    job.jobs, job.cap);
                rep.honest_eu[a] = Rat(BigInt(fc.counts[1]), BigInt(fc.total));
            } else {
                rep.honest_eu[a] =
                    expected_utility_exact(honest, honest_problem, pref, 0, nullptr, job.cap);
            }
        } else {
            auto e = expected_utility_mc(honest, honest_problem, pref, job.trials, job.seed,
                                         job.jobs);
            honest_mc[a] = e;
            rep.honest_eu[a] = Rat(static_cast<std::int64_t>(e.mean * 1e9), 1'000'000'000);
        }
    }

    for (const DeviationSpec& dev : job.catalog) {
        DeviationResult res;
        res.name = dev.name;
        res.cheater = dev.scheme.cheater;
        res.d = static_cast<int>(dev.scheme.d());
        ExecutionPlan plan = deviation_plan(job.original, job.cfg, dev);
        ProblemSpec problem = problem_for(job.cfg, &dev.scheme);
        Preference pref{dev.scheme.cheater, job.pref_of(dev.scheme.cheater)};
        if (job.mode == EstimationMode::Exact) {
            if (job.use_parallel_exact) {
                auto fc = parallel_flat_counts(
                    plan, 2,
                    [&](const ExecutionTrace& t) {
                        return static_cast<std::size_t>(
                            utility(t.outputs, pref, job.original, problem));
                    },
                    job.jobs, job.cap);
                res.eu = Rat(BigInt(fc.counts[1]), BigInt(fc.total));
            } else {
                res.eu = expected_utility_exact(plan, problem, pref, 0, nullptr, job.cap);
            }
            res.margin = res.eu - rep.honest_eu.at(pref.agent);
            res.profitable = res.margin > 0;
        } else {
            res.mc = expected_utility_mc(plan, problem, pref, job.trials, job.seed + 1, job.jobs);
            const McEstimate& h = honest_mc.at(pref.agent);
            // Conservative margin CI: deviation lower bound minus honest upper bound.
            res.profitable = res.mc.ci_low > h.ci_high;
        }
        rep.deviations.push_back(res);
        if (res.profitable && !rep.deviation_found) {
            rep.deviation_found = true;
            rep.witness = res;
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Report rendering

std::string EquilibriumReport::to_json() const {
    using json = nlohmann::ordered_json;
    json j;
    j["scenario"] = scenario;
    j["mode"] = mode == EstimationMode::Exact ? "exact" : "monte_carlo";
    json h = json::object();
    for (const auto& [a, eu] : honest_eu) h[std::to_string(a)] = rat_str(eu);
    j["honest_expected_utility"] = h;
    json devs = json::array();
    for (const DeviationResult& r : deviations) {
        json d;
        d["name"] = r.name;
        d["cheater"] = r.cheater;
        d["d"] = r.d;
        if (mode == EstimationMode::Exact) {
            d["expected_utility"] = rat_str(r.eu);
            d["margin"] = rat_str(r.margin);
        } else {
            d["estimate"] = r.mc.mean;
            d["ci"] = {r.mc.ci_low, r.mc.ci_high};
            d["samples"] = r.mc.samples;
        }
        d["profitable"] = r.profitable;
        devs.push_back(d);
    }
    j["deviations"] = devs;
    j["verdict"] = deviation_found ? "DeviationFound" : "NoProfitableDeviation";
    if (witness) j["witness"] = witness->name;
    return j.dump(2);
}

std::string EquilibriumReport::to_table() const {
    std::ostringstream os;
    os << "scenario: " << scenario << "\n";
    for (const auto& [a, eu] : honest_eu)
        os << "  honest EU[" << a << "] = " << rat_str(eu) << "\n";
    for (const DeviationResult& r : deviations) {
        os << "  " << r.name << ": ";
        if (mode == EstimationMode::Exact)
            os << "EU = " << rat_str(r.eu) << ", margin = " << rat_str(r.margin);
        else
            os << "EU ~ " << r.mc.mean << " [" << r.mc.ci_low << ", " << r.mc.ci_high << "]";
        os << (r.profitable ? "  PROFITABLE" : "") << "\n";
    }
    os << "verdict: " << (deviation_found ? "DeviationFound" : "NoProfitableDeviation");
    if (witness) os << " (witness: " << witness->name << ")";
    os << "\n";
    return os.str();
}

}  // namespace ratsim

#pragma once
#include <boost/container/small_vector.hpp>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ratsim/rational.hpp"
#include "ratsim/topology.hpp"

namespace ratsim {

// ---------------------------------------------------------------------------
// Messages

enum class Tag : std::uint8_t {
    Hello,      // wake-up id exchange: [id]
    Rec,        // wake-up adjacency record: [id, nbr...]
    Piece,      // secret-transmit piece: [origin, target, dir, value, hops]
    Reveal,     // secret-transmit reveal: [origin, value]
    Open,       // open circulation of inputs: [origin, value]
    Pref,       // circulation of color preferences: [origin, value]
    DrawR,      // witnessed draw contribution: [subject, r]
    NameClaim,  // renaming result flood: [subject, name, claimant]
    SVal,       // rank publication to neighbors: [subject, s]
    SDirect,    // rank verification, direct copy: [subject, s]
    SPath,      // rank verification, witness-path copy: [subject, s, dest, hop]
    Color,      // color decision: [value]
    Token,      // partition token: [mark]
    PBit,       // partition pair bit: [bit]
    LeadDraw,   // leader draw flood: [subject, value]
    OBit,       // orientation bit exchange: [bit, id]
};

const char* tag_name(Tag t);

struct Payload {
    Tag tag{};
    boost::container::small_vector<std::int64_t, 8> vals;

    Payload() = default;
    Payload(Tag t, std::initializer_list<std::int64_t> v) : tag(t), vals(v) {}
    bool operator==(const Payload& o) const { return tag == o.tag && vals == o.vals; }
};

struct Message {
    AgentId src = 0;
    AgentId dst = 0;
    int round = 0;  // round in which the message was sent; delivered at round+1
    Payload payload;
};

// ---------------------------------------------------------------------------
// Outputs

struct OutputValue {
    boost::container::small_vector<std::int64_t, 4> vals;

    OutputValue() = default;
    explicit OutputValue(std::int64_t scalar) : vals{scalar} {}
    OutputValue(std::initializer_list<std::int64_t> v) : vals(v) {}
    std::int64_t scalar() const { return vals.empty() ? 0 : vals[0]; }
    bool operator==(const OutputValue& o) const { return vals == o.vals; }
    bool operator<(const OutputValue& o) const {
        return std::lexicographical_compare(vals.begin(), vals.end(), o.vals.begin(), o.vals.end());
    }
};

// One entry per *original* agent; nullopt is the bottom output.
using OutputVector = std::map<AgentId, std::optional<OutputValue>>;

enum class Verdict { Legal, Erroneous };

struct ProblemSpec {
    std::string name;
    int k = 2;  // size of the output range where meaningful
    std::function<bool(const Topology& original, const OutputVector&)> legal;
};

Verdict classify_output(const Topology& original, const OutputVector& o, const ProblemSpec& p);

// ---------------------------------------------------------------------------
// Randomness

// All protocol randomness flows through draw(domain) -> [0, domain).
// domain <= 1 never consumes entropy.
class RandomnessSource {
public:
    virtual ~RandomnessSource() = default;
    virtual std::uint32_t draw(AgentId agent, std::uint32_t domain) = 0;
};

// Seeded mode: per-agent independent splitmix64 streams; identical seed and
// scenario give a bit-identical trace.
class SeededSource : public RandomnessSource {
public:
    explicit SeededSource(std::uint64_t seed) : seed_(seed) {}
    std::uint32_t draw(AgentId agent, std::uint32_t domain) override;

private:
    std::uint64_t seed_;
    std::map<AgentId, std::uint64_t> states_;
};

// Depth-first enumeration over the tree of finite random choices.
// Domains at a given draw position must not depend on earlier drawn values.
class OdometerSource : public RandomnessSource {
public:
    std::uint32_t draw(AgentId agent, std::uint32_t domain) override;

    void begin_run() { pos_ = 0; }
    // Probability of the branch just executed; call after the run.
    Rat branch_probability() const;
    // Advance to the next branch; false when the tree is exhausted.
    bool advance();

private:
    struct Slot {
        std::uint32_t choice;
        std::uint32_t domain;
    };
    std::vector<Slot> stack_;
    std::size_t pos_ = 0;
};

// Flat mixed-radix assignment: digit j of `index` over the discovered shape.
// Used by the parallel enumerator; overflow is reported, not fatal.
class FlatSource : public RandomnessSource {
public:
    FlatSource(const std::vector<std::uint32_t>& shape, std::uint64_t index)
        : shape_(shape), quotient_(index) {}
    std::uint32_t draw(AgentId agent, std::uint32_t domain) override;
    bool overflowed() const { return overflow_; }
    std::size_t consumed() const { return pos_; }

private:
    const std::vector<std::uint32_t>& shape_;
    std::uint64_t quotient_;
    std::size_t pos_ = 0;
    bool overflow_ = false;
};

// Discovery helper: replays the flat digits of `index` over the known shape
// and appends newly seen domains (choosing 0 there).
class GrowSource : public RandomnessSource {
public:
    GrowSource(std::vector<std::uint32_t>& shape, std::uint64_t index)
        : shape_(shape), quotient_(index) {}
    std::uint32_t draw(AgentId agent, std::uint32_t domain) override;

private:
    std::vector<std::uint32_t>& shape_;
    std::uint64_t quotient_;
    std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Agents and controllers

class AgentCtx {
public:
    struct Incoming {
        std::uint32_t port;
        Payload payload;
    };

    AgentCtx(AgentId self, int round, const std::vector<AgentId>& port_neighbors,
             const std::vector<int>& port_clockwise, const std::vector<Incoming>& inbox,
             RandomnessSource& rand)
        : self_(self), round_(round), port_neighbors_(port_neighbors),
          port_clockwise_(port_clockwise), inbox_(inbox), rand_(rand) {}

    AgentId self() const { return self_; }
    int round() const { return round_; }
    std::uint32_t num_ports() const { return static_cast<std::uint32_t>(port_neighbors_.size()); }
    const std::vector<Incoming>& inbox() const { return inbox_; }

    // Global orientation label: 1 if the port faces the clockwise neighbor,
    // 0 if counter-clockwise, -1 when the execution topology is not a ring.
    int port_clockwise(std::uint32_t port) const { return port_clockwise_[port]; }

    void send(std::uint32_t port, Payload p) { sends_.push_back({port, std::move(p)}); }
    void set_output(OutputValue v) { output_ = std::move(v); }
    void abort(std::string reason) { abort_reason_ = std::move(reason); }
    // Deviations may cancel a staged abort of a node they control; a cheater
    // never reports itself.
    void clear_abort() { abort_reason_.reset(); }
    std::uint32_t draw(std::uint32_t domain) { return rand_.draw(self_, domain); }

    struct Outgoing {
        std::uint32_t port;
        Payload payload;
    };
    std::vector<Outgoing>& staged_sends() { return sends_; }
    std::optional<OutputValue>& staged_output() { return output_; }
    const std::optional<std::string>& abort_reason() const { return abort_reason_; }

private:
    AgentId self_;
    int round_;
    const std::vector<AgentId>& port_neighbors_;
    const std::vector<int>& port_clockwise_;
    const std::vector<Incoming>& inbox_;
    RandomnessSource& rand_;
    std::vector<Outgoing> sends_;
    std::optional<OutputValue> output_;
    std::optional<std::string> abort_reason_;
};

// Per-node protocol logic. State lives in the program instance; one instance
// per node per execution.
class AgentProgram {
public:
    virtual ~AgentProgram() = default;
    virtual void step(AgentCtx& ctx) = 0;
    virtual std::string state_summary() const { return {}; }
};

using AgentFactory = std::function<std::unique_ptr<AgentProgram>(AgentId)>;

// A cheater program sees the pooled per-round staging of all its virtual
// agents and may rewrite it before the engine commits the round.
struct CheaterRound {
    int round;
    const std::vector<AgentId>* node_ids;  // virtual segment, engine order
    std::vector<std::vector<AgentCtx::Incoming>>* inboxes;
    std::vector<AgentCtx*>* ctxs;           // per-node contexts (staged sends/output)
    std::vector<AgentProgram*>* programs;   // honest emulation programs
};

class DeviationProgram {
public:
    virtual ~DeviationProgram() = default;
    virtual void configure(std::vector<AgentProgram*>& programs) {}
    virtual bool bias_draws() const { return false; }
    virtual void on_round(CheaterRound& rt) {}
    // Final say on the single output attributed to the original cheater.
    virtual void on_output(std::optional<OutputValue>& out) {}
};

using DeviationFactory = std::function<std::unique_ptr<DeviationProgram>()>;

struct CheaterPlan {
    DuplicationScheme scheme;
    AgentFactory honest_factory;  // honest emulation per virtual node
    DeviationFactory deviation;   // may be null (pure duplication)
};

// ---------------------------------------------------------------------------
// Execution

struct ExecutionPlan {
    Topology original;
    AgentFactory honest_factory;
    std::optional<CheaterPlan> cheater;
    int round_limit = 1000;
    bool record_messages = true;
    bool record_states = false;
    bool record_draws = false;  // needed for view-based (group) utilities
};

struct AbortInfo {
    int round;
    AgentId detector;
    std::string reason;
};

struct DrawRecord {
    AgentId agent;
    std::uint32_t domain;
    std::uint32_t choice;
};

struct TraceRound {
    std::vector<Message> messages;  // sent during this round
    std::vector<std::pair<AgentId, std::string>> states;
    std::vector<DrawRecord> draws;  // when plan.record_draws
};

struct ExecutionTrace {
    Topology execution_topology;  // G' (equals original without a cheater)
    std::map<AgentId, AgentId> node_to_original;
    std::vector<TraceRound> rounds;
    OutputVector outputs;
    std::optional<AbortInfo> abort;
    std::size_t message_count = 0;

    bool aborted() const { return abort.has_value(); }
};

ExecutionTrace run_execution(const ExecutionPlan& plan, RandomnessSource& rand);

// ---------------------------------------------------------------------------
// Enumeration (serial reference)

// Streams every joint randomness assignment exactly once with its exact
// probability; probabilities sum to 1.
void enumerate_executions(const ExecutionPlan& plan,
                          const std::function<void(const Rat&, const ExecutionTrace&)>& cb,
                          std::uint64_t cap = 10'000'000);

std::string trace_to_jsonl(const ExecutionTrace& t);

}  // namespace ratsim

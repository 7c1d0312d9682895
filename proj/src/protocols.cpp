#include "ratsim/protocols.hpp"

#include <algorithm>

namespace ratsim {

ProblemKind problem_of_protocol(const std::string& key) {
    if (key == "ks") return ProblemKind::KnowledgeSharing;
    if (key == "ks2") return ProblemKind::TwoKnowledgeSharing;
    if (key == "color-renaming" || key == "color-orient" || key == "color-ring")
        return ProblemKind::Coloring;
    if (key == "partition") return ProblemKind::RingPartition;
    if (key == "orientation") return ProblemKind::Orientation;
    if (key == "leader") return ProblemKind::LeaderElection;
    throw Error(ErrorCode::UnknownProblem, "unknown protocol key: " + key);
}

namespace {

using Incoming = AgentCtx::Incoming;

// Shared skeleton: wake-up first, then protocol phases addressed by the
// relative round rho = round - W.
class RingAgentBase : public AgentProgram {
public:
    explicit RingAgentBase(AgentId self) : self_(self) {}

    void step(AgentCtx& ctx) final {
        std::vector<Incoming> inbox = ctx.inbox();
        bool done_now = wake_.step(ctx, inbox);
        if (ctx.abort_reason()) return;
        if (!wake_done_) {
            if (done_now) {
                wake_done_ = true;
                on_wake_done(ctx);
            }
        } else {
            phase_step(ctx, ctx.round() - wake_.w(), inbox);
        }
        if (!ctx.abort_reason() && !inbox.empty()) ctx.abort("unexpected message");
    }

protected:
    virtual void on_wake_done(AgentCtx& ctx) {}
    virtual void phase_step(AgentCtx& ctx, int rho, std::vector<Incoming>& inbox) = 0;

    AgentId self_;
    WakeUpPhase wake_;
    bool wake_done_ = false;
};

// Pops the unique inbox entry matching pred; false if absent.
bool take_one(std::vector<Incoming>& inbox, const std::function<bool(const Incoming&)>& pred,
              Incoming& out) {
    for (auto it = inbox.begin(); it != inbox.end(); ++it)
        if (pred(*it)) {
            out = *it;
            inbox.erase(it);
            return true;
        }
    return false;
}

// ---------------------------------------------------------------------------
// Knowledge Sharing in a ring (with secret transmission)

class KsAgent : public RingAgentBase, public KsView {
public:
    KsAgent(AgentId self, const ProtocolConfig& cfg) : RingAgentBase(self), cfg_(cfg) {}

    std::int64_t ks_input() const override { return input_; }
    std::optional<std::int64_t> ks_known_input(AgentId origin) const override {
        if (origin == self_) return input_;
        auto it = open_.find(origin);
        if (it != open_.end()) return it->second;
        auto jt = learned_.find(origin);
        if (jt != learned_.end()) return jt->second;
        return std::nullopt;
    }
    int ks_nprime() const override { return np_; }
    std::vector<AgentId> ks_agents() const override { return wake_.believed().nodes(); }

protected:
    void on_wake_done(AgentCtx& ctx) override {
        if (!wake_.is_ring() || wake_.n_prime() < 4) {
            ctx.abort("knowledge sharing requires a ring with n' >= 4");
            return;
        }
        np_ = wake_.n_prime();
        fl_ = np_ / 2;
        cl_ = np_ - fl_;
    }

    struct Held {
        AgentId origin;
        std::int64_t value;
        bool to_cw;  // reveal port
    };

    void phase_step(AgentCtx& ctx, int rho, std::vector<Incoming>& inbox) override {
        const auto& ring = wake_.ring_cw();
        auto at = [&](int idx) { return ring[static_cast<std::size_t>(((idx % np_) + np_) % np_)]; };
        std::uint32_t cw = wake_.cw_port(), ccw = wake_.ccw_port();

        if (rho > 2 * np_) {
            post_phase(ctx, rho, inbox);
            return;
        }
        if (rho == 1) {
            auto scripted = cfg_.input_of ? cfg_.input_of(self_) : std::nullopt;
            input_ = scripted ? *scripted
                              : static_cast<std::int64_t>(ctx.draw(static_cast<std::uint32_t>(cfg_.k)));
            std::int64_t r1 = ctx.draw(static_cast<std::uint32_t>(cfg_.pad_field));
            std::int64_t r2 = ctx.draw(static_cast<std::uint32_t>(cfg_.pad_field));
            std::int64_t x1 = r1 ^ input_, x2 = r2 ^ input_;
            // Both pads stay with the sender until the reveal round; the
            // masked halves travel to the two agents adjacent to a learner.
            // Any consecutive segment excluding the sender then sees at most
            // one half of each pair before the reveals land.
            held_.push_back({self_, r1, true});
            held_.push_back({self_, r2, false});
            auto sid = static_cast<std::int64_t>(self_);
            ctx.send(ccw, Payload(Tag::Piece, {sid, static_cast<std::int64_t>(at(1)), 1, x1, 1}));
            ctx.send(ccw,
                     Payload(Tag::Piece, {sid, static_cast<std::int64_t>(at(np_ - 1)), 1, x2, 1}));
            return;
        }
        if (rho <= np_ - 1) {
            int h = rho - 1;
            struct Want {
                std::uint32_t port;
                AgentId origin, target;
                int dir;
                bool hold;
                bool reveal_cw;
            };
            std::vector<Want> wants;
            if (h <= np_ - 2)  // X1: counter-clockwise the long way, held two cw of the origin
                wants.push_back({cw, at(h), at(h + 1), 1, h == np_ - 2, false});
            if (h <= 2)  // X2: two counter-clockwise hops, held two ccw of the origin
                wants.push_back({cw, at(h), at(h - 1), 1, h == 2, true});
            std::vector<bool> got(wants.size(), false);
            for (auto it = inbox.begin(); it != inbox.end();) {
                if (it->payload.tag != Tag::Piece) {
                    ++it;
                    continue;
                }
                const auto& v = it->payload.vals;
                bool matched = false;
                if (v.size() == 5 && v[4] == h) {
                    for (std::size_t w = 0; w < wants.size(); ++w) {
                        if (got[w] || it->port != wants[w].port) continue;
                        if (static_cast<AgentId>(v[0]) != wants[w].origin ||
                            static_cast<AgentId>(v[1]) != wants[w].target ||
                            v[2] != wants[w].dir)
                            continue;
                        got[w] = matched = true;
                        if (wants[w].hold) {
                            held_.push_back({wants[w].origin, v[3], wants[w].reveal_cw});
                        } else {
                            Payload fwd = it->payload;
                            fwd.vals[4] = h + 1;
                            ctx.send(v[2] == 0 ? cw : ccw, fwd);
                        }
                        break;
                    }
                }
                if (!matched) {
                    ctx.abort("secret transmission: unscheduled piece");
                    return;
                }
                it = inbox.erase(it);
            }
            for (bool g : got)
                if (!g) {
                    ctx.abort("secret transmission: missing piece");
                    return;
                }
            if (rho == np_ - 1) {
                if (held_.size() != 4) {
                    ctx.abort("secret transmission: wrong number of held pieces");
                    return;
                }
                for (const Held& hd : held_)
                    ctx.send(hd.to_cw ? cw : ccw,
                             Payload(Tag::Reveal,
                                     {static_cast<std::int64_t>(hd.origin), hd.value}));
            }
            return;
        }
        if (rho == np_) {
            // Each agent reconstructs the inputs of its two ring neighbors:
            // per origin, one half arrives on each port.
            AgentId o1 = at(np_ - 1), o2 = at(1);
            std::map<std::pair<std::uint32_t, AgentId>, std::int64_t> parts;
            for (auto it = inbox.begin(); it != inbox.end();) {
                if (it->payload.tag != Tag::Reveal) {
                    ++it;
                    continue;
                }
                const auto& v = it->payload.vals;
                auto origin = static_cast<AgentId>(v[0]);
                if (v.size() != 2 || (origin != o1 && origin != o2) ||
                    parts.count({it->port, origin})) {
                    ctx.abort("secret transmission: unexpected reveal");
                    return;
                }
                parts[{it->port, origin}] = v[1];
                it = inbox.erase(it);
            }
            if (parts.size() != 4) {
                ctx.abort("secret transmission: missing reveal");
                return;
            }
            learned_[o1] = parts.at({ccw, o1}) ^ parts.at({cw, o1});
            learned_[o2] = parts.at({ccw, o2}) ^ parts.at({cw, o2});
            return;
        }
        if (rho == np_ + 1) {
            open_[self_] = input_;
            std::int64_t shown = ((input_ + cfg_.open_lie_delta) % cfg_.k + cfg_.k) % cfg_.k;
            ctx.send(cw, Payload(Tag::Open, {static_cast<std::int64_t>(self_), shown}));
            return;
        }
        // rho in [np+2, 2np]: open circulation clockwise, one record per round.
        int h = rho - (np_ + 1);
        Incoming msg;
        AgentId origin = at(np_ - h);
        if (!take_one(inbox,
                      [&](const Incoming& m) {
                          return m.payload.tag == Tag::Open && m.port == ccw &&
                                 m.payload.vals.size() == 2 &&
                                 static_cast<AgentId>(m.payload.vals[0]) == origin;
                      },
                      msg)) {
            ctx.abort("open circulation: missing record");
            return;
        }
        std::int64_t v = msg.payload.vals[1];
        if (v < 0 || v >= cfg_.k) {
            ctx.abort("open circulation: value out of field");
            return;
        }
        auto held = learned_.find(origin);
        if (held != learned_.end() && held->second != v) {
            ctx.abort("open circulation: mismatch with secret-committed input");
            return;
        }
        open_[origin] = v;
        if (h < np_ - 1) ctx.send(cw, msg.payload);
        if (rho == 2 * np_) {
            std::int64_t sum = 0;
            for (const auto& [a, val] : open_) sum += val;
            on_result(ctx, ((sum % cfg_.k) + cfg_.k) % cfg_.k);
        }
    }

    virtual void on_result(AgentCtx& ctx, std::int64_t q) { ctx.set_output(OutputValue(q)); }
    virtual void post_phase(AgentCtx& ctx, int rho, std::vector<Incoming>& inbox) {}

    ProtocolConfig cfg_;
    int np_ = 0, fl_ = 0, cl_ = 0;
    std::int64_t input_ = 0;
    std::vector<Held> held_;
    std::map<AgentId, std::int64_t> learned_;  // secret-reconstructed inputs
    std::map<AgentId, std::int64_t> open_;     // openly circulated inputs

public:
    int np() const { return np_; }
};

// ---------------------------------------------------------------------------
// Coloring in a ring via 2-Knowledge-Sharing

class RingColor2KsAgent : public KsAgent {
public:
    RingColor2KsAgent(AgentId self, const ProtocolConfig& cfg) : KsAgent(self, cfg) {
        cfg_.k = 2;  // the shared bit comes from 2-KS regardless of palette size
    }

protected:
    void on_result(AgentCtx& ctx, std::int64_t q) override { bit_ = static_cast<int>(q); }

    void post_phase(AgentCtx& ctx, int rho, std::vector<Incoming>& inbox) override {
        const auto& ring = wake_.ring_cw();
        auto at = [&](int idx) { return ring[static_cast<std::size_t>(((idx % np_) + np_) % np_)]; };
        std::uint32_t cw = wake_.cw_port(), ccw = wake_.ccw_port();
        if (rho == 2 * np_ + 1) {
            pref_ = cfg_.pref_of(self_);
            prefs_[self_] = pref_;
            ctx.send(cw, Payload(Tag::Pref, {static_cast<std::int64_t>(self_), pref_}));
            return;
        }
        if (rho > 3 * np_) return;
        int h = rho - (2 * np_ + 1);
        AgentId origin = at(np_ - h);
        Incoming msg;
        if (!take_one(inbox,
                      [&](const Incoming& m) {
                          return m.payload.tag == Tag::Pref && m.port == ccw &&
                                 m.payload.vals.size() == 2 &&
                                 static_cast<AgentId>(m.payload.vals[0]) == origin;
                      },
                      msg)) {
            ctx.abort("preference circulation: missing record");
            return;
        }
        if (msg.payload.vals[1] < 1) {
            ctx.abort("preference circulation: invalid color");
            return;
        }
        prefs_[origin] = msg.payload.vals[1];
        if (h < np_ - 1) ctx.send(cw, msg.payload);
        if (rho == 3 * np_) {
            // Anchor global positions at the minimal-id agent and resolve the
            // run decomposition locally; everything is public from here on.
            AgentId min_id = *std::min_element(ring.begin(), ring.end());
            std::size_t min_idx = 0;
            for (std::size_t j = 0; j < ring.size(); ++j)
                if (ring[j] == min_id) min_idx = j;
            std::vector<std::int64_t> by_pos(static_cast<std::size_t>(np_));
            for (std::size_t j = 0; j < ring.size(); ++j) {
                std::size_t pos = (j + static_cast<std::size_t>(np_) - min_idx) %
                                  static_cast<std::size_t>(np_);
                by_pos[pos] = prefs_.at(ring[j]);
            }
            auto winners = run_decomposition_winners(by_pos, bit_);
            auto colors = greedy_ring_colors(by_pos, winners);
            std::size_t my_pos =
                (static_cast<std::size_t>(np_) - min_idx) % static_cast<std::size_t>(np_);
            ctx.set_output(OutputValue(colors[my_pos]));
        }
    }

private:
    int bit_ = 0;
    std::int64_t pref_ = 0;
    std::map<AgentId, std::int64_t> prefs_;
};

// ---------------------------------------------------------------------------
// Coloring via Renaming (general graphs)

class ColorRenamingAgent : public RingAgentBase {
public:
    ColorRenamingAgent(AgentId self, const ProtocolConfig& cfg) : RingAgentBase(self), cfg_(cfg) {}

protected:
    void phase_step(AgentCtx& ctx, int rho, std::vector<Incoming>& inbox) override {
        int ren_len = ren_.length(wake_);
        if (rho <= ren_len) {
            ren_.step(ctx, inbox, wake_, rho);
            return;
        }
        int turn = rho - ren_len;  // the agent named `turn` decides this round
        if (turn > wake_.n_prime()) return;
        const auto& names = ren_.names();
        // Colors sent by agents named turn-1 arrive now.
        for (const auto& [port, nbr] : wake_.port_ids()) {
            if (names.at(nbr) != turn - 1) continue;
            Incoming msg;
            if (!take_one(inbox,
                          [&](const Incoming& m) {
                              return m.payload.tag == Tag::Color && m.port == port &&
                                     m.payload.vals.size() == 1;
                          },
                          msg) ||
                msg.payload.vals[0] < 1) {
                ctx.abort("coloring: neighbor missed its decision slot");
                return;
            }
            nbr_colors_.insert(msg.payload.vals[0]);
        }
        if (names.at(self_) == turn) {
            std::int64_t pref = cfg_.pref_of(self_);
            std::int64_t c = pref;
            if (nbr_colors_.count(c)) {
                c = 1;
                while (nbr_colors_.count(c)) ++c;
            }
            Payload col(Tag::Color, {c});
            for (std::uint32_t p = 0; p < ctx.num_ports(); ++p) ctx.send(p, col);
            ctx.set_output(OutputValue(c));
        }
    }

    ProtocolConfig cfg_;
    RenamingPhase ren_;
    std::set<std::int64_t> nbr_colors_;
};

// ---------------------------------------------------------------------------
// Leader election: renaming + one global joint draw

class LeaderAgent : public RingAgentBase {
public:
    explicit LeaderAgent(AgentId self) : RingAgentBase(self) {}

protected:
    void phase_step(AgentCtx& ctx, int rho, std::vector<Incoming>& inbox) override {
        int ren_len = ren_.length(wake_);
        if (rho <= ren_len) {
            ren_.step(ctx, inbox, wake_, rho);
            return;
        }
        int lr = rho - ren_len;
        if (lead_.done()) return;
        if (lead_.step(ctx, inbox, wake_, lr)) {
            std::int64_t leader = lead_.leader_name(wake_);
            ctx.set_output(OutputValue(ren_.names().at(self_) == leader ? 1 : 0));
        }
    }

    RenamingPhase ren_;
    LeaderDrawPhase lead_;
};

// ---------------------------------------------------------------------------
// Coloring via Acyclic Orientation (witnessed draws + prompt verification)

class ColorOrientAgent : public RingAgentBase {
public:
    ColorOrientAgent(AgentId self, const ProtocolConfig& cfg) : RingAgentBase(self), cfg_(cfg) {}

protected:
    void on_wake_done(AgentCtx& ctx) override {
        const Topology& g = wake_.believed();
        order_ = g.nodes();
        std::sort(order_.begin(), order_.end(), std::greater<>());
        vmax_ = 1;
        for (AgentId u : g.nodes()) {
            AgentId w = witness_of(g, u);
            for (AgentId v : g.neighbors(u)) {
                if (v == w) continue;
                auto path = canonical_prompt_path(g, w, v, u);
                vmax_ = std::max(vmax_, static_cast<int>(path.size()) - 1);
            }
        }
    }

    void phase_step(AgentCtx& ctx, int rho, std::vector<Incoming>& inbox) override {
        const Topology& g = wake_.believed();
        int np = wake_.n_prime();
        consume_svals(ctx, inbox);
        if (ctx.abort_reason()) return;
        if (rho <= 2 * np) {
            auto i = static_cast<std::size_t>((rho - 1) / 2);  // 0-based rank
            int sub = (rho - 1) % 2 + 1;
            AgentId drawer = order_[i];
            AgentId wit = witness_of(g, drawer);
            if (sub == 1) {
                if (self_ == drawer) {
                    // Choice set: names 1..n' minus the ranks already published
                    // by neighbors (non-adjacent agents may share a rank).
                    std::vector<std::int64_t> x;
                    std::set<std::int64_t> taken;
                    for (AgentId nb : g.neighbors(self_)) {
                        auto it = nbr_s_.find(nb);
                        if (it != nbr_s_.end()) taken.insert(it->second);
                    }
                    for (std::int64_t v = 1; v <= np; ++v)
                        if (!taken.count(v)) x.push_back(v);
                    x_ = x;
                    my_r_ = 1 + ctx.draw(static_cast<std::uint32_t>(x.size()));
                    Payload p(Tag::DrawR, {static_cast<std::int64_t>(drawer), my_r_});
                    p.vals.insert(p.vals.end(), x.begin(), x.end());
                    ctx.send(wake_.port_to(wit), p);
                } else if (self_ == wit) {
                    // The witness does not know the drawer's choice set yet;
                    // it contributes over the full name range. The joint value
                    // stays uniform because the drawer's share is uniform.
                    my_r_ = 1 + ctx.draw(static_cast<std::uint32_t>(np));
                    ctx.send(wake_.port_to(drawer),
                             Payload(Tag::DrawR, {static_cast<std::int64_t>(drawer), my_r_}));
                }
            } else {  // sub == 2
                if (self_ == drawer) {
                    Incoming msg;
                    if (!take_one(inbox,
                                  [&](const Incoming& m) {
                                      return m.payload.tag == Tag::DrawR &&
                                             m.port == wake_.port_to(wit) &&
                                             m.payload.vals.size() == 2 &&
                                             static_cast<AgentId>(m.payload.vals[0]) == drawer;
                                  },
                                  msg)) {
                        ctx.abort("rank draw: missing witness contribution");
                        return;
                    }
                    std::int64_t rw = msg.payload.vals[1];
                    if (rw < 1 || rw > np) {
                        ctx.abort("rank draw: contribution out of range");
                        return;
                    }
                    my_s_ = joint_draw_value(my_r_, rw, x_);
                    Payload sv(Tag::SVal, {static_cast<std::int64_t>(self_), my_s_});
                    for (std::uint32_t p = 0; p < ctx.num_ports(); ++p) ctx.send(p, sv);
                } else if (self_ == wit) {
                    Incoming msg;
                    if (!take_one(inbox,
                                  [&](const Incoming& m) {
                                      return m.payload.tag == Tag::DrawR &&
                                             m.port == wake_.port_to(drawer) &&
                                             m.payload.vals.size() >= 3 &&
                                             static_cast<AgentId>(m.payload.vals[0]) == drawer;
                                  },
                                  msg)) {
                        ctx.abort("rank draw: missing drawer contribution");
                        return;
                    }
                    std::int64_t ra = msg.payload.vals[1];
                    std::vector<std::int64_t> x(msg.payload.vals.begin() + 2,
                                                msg.payload.vals.end());
                    if (ra < 1 || ra > static_cast<std::int64_t>(x.size()) ||
                        !std::is_sorted(x.begin(), x.end()) || x.front() < 1 || x.back() > np ||
                        (my_s_ != 0 && std::binary_search(x.begin(), x.end(), my_s_))) {
                        ctx.abort("rank draw: malformed choice set");
                        return;
                    }
                    wit_s_[drawer] = joint_draw_value(ra, my_r_, x);
                }
            }
            return;
        }
        int vr = rho - 2 * np;  // verification phase round
        if (vr <= vmax_ + 1) {
            if (vr == 1) {
                Payload d(Tag::SDirect, {static_cast<std::int64_t>(self_), my_s_});
                for (std::uint32_t p = 0; p < ctx.num_ports(); ++p) ctx.send(p, d);
                for (const auto& [u, s] : wit_s_) {
                    for (AgentId v : g.neighbors(u)) {
                        if (v == self_ || v == u) continue;
                        auto path = canonical_prompt_path(g, self_, v, u);
                        ctx.send(wake_.port_to(path[1]),
                                 Payload(Tag::SPath,
                                         {static_cast<std::int64_t>(u), s,
                                          static_cast<std::int64_t>(v), 1}));
                    }
                }
            }
            for (auto it = inbox.begin(); it != inbox.end();) {
                if (it->payload.tag == Tag::SDirect) {
                    auto subject = static_cast<AgentId>(it->payload.vals[0]);
                    if (vr != 2 || it->payload.vals.size() != 2 ||
                        wake_.port_ids().at(it->port) != subject || direct_s_.count(subject)) {
                        ctx.abort("prompt: malformed direct copy");
                        return;
                    }
                    direct_s_[subject] = it->payload.vals[1];
                    it = inbox.erase(it);
                } else if (it->payload.tag == Tag::SPath) {
                    const auto& v = it->payload.vals;
                    if (v.size() != 4) {
                        ctx.abort("prompt: malformed path copy");
                        return;
                    }
                    auto subject = static_cast<AgentId>(v[0]);
                    auto dest = static_cast<AgentId>(v[2]);
                    auto hop = static_cast<std::size_t>(v[3]);
                    AgentId w = witness_of(g, subject);
                    auto path = canonical_prompt_path(g, w, dest, subject);
                    if (hop + 1 > path.size() || path[hop] != self_ ||
                        wake_.port_ids().at(it->port) != path[hop - 1] ||
                        vr != static_cast<int>(hop) + 1) {
                        ctx.abort("prompt: relay off the canonical path");
                        return;
                    }
                    if (self_ == dest) {
                        if (path_s_.count(subject)) {
                            ctx.abort("prompt: duplicate path copy");
                            return;
                        }
                        path_s_[subject] = v[1];
                    } else {
                        Payload fwd = it->payload;
                        fwd.vals[3] = static_cast<std::int64_t>(hop) + 1;
                        ctx.send(wake_.port_to(path[hop + 1]), fwd);
                    }
                    it = inbox.erase(it);
                } else {
                    ++it;
                }
            }
            if (vr == vmax_ + 1) {
                for (const auto& [port, nbr] : wake_.port_ids()) {
                    auto d = direct_s_.find(nbr);
                    auto p = nbr_s_.find(nbr);
                    if (d == direct_s_.end() || p == nbr_s_.end() || d->second != p->second) {
                        ctx.abort("prompt: direct copy missing or inconsistent");
                        return;
                    }
                    std::int64_t via_witness;
                    if (witness_of(g, nbr) == self_) {
                        via_witness = wit_s_.at(nbr);
                    } else {
                        auto w = path_s_.find(nbr);
                        if (w == path_s_.end()) {
                            ctx.abort("prompt: witness copy missing");
                            return;
                        }
                        via_witness = w->second;
                    }
                    if (via_witness != d->second) {
                        ctx.abort("prompt: witness copy mismatch");
                        return;
                    }
                }
            }
            return;
        }
        int turn = rho - 2 * np - (vmax_ + 1);  // agents decide in rank order S
        if (turn > np) return;
        for (const auto& [port, nbr] : wake_.port_ids()) {
            if (nbr_s_.at(nbr) != turn - 1) continue;
            Incoming msg;
            if (!take_one(inbox,
                          [&](const Incoming& m) {
                              return m.payload.tag == Tag::Color && m.port == port &&
                                     m.payload.vals.size() == 1;
                          },
                          msg) ||
                msg.payload.vals[0] < 1) {
                ctx.abort("coloring: neighbor missed its decision slot");
                return;
            }
            nbr_colors_.insert(msg.payload.vals[0]);
        }
        if (my_s_ == turn) {
            std::int64_t pref = cfg_.pref_of(self_);
            std::int64_t c = pref;
            if (nbr_colors_.count(c)) {
                c = 1;
                while (nbr_colors_.count(c)) ++c;
            }
            Payload col(Tag::Color, {c});
            for (std::uint32_t p = 0; p < ctx.num_ports(); ++p) ctx.send(p, col);
            ctx.set_output(OutputValue(c));
        }
    }

private:
    void consume_svals(AgentCtx& ctx, std::vector<Incoming>& inbox) {
        for (auto it = inbox.begin(); it != inbox.end();) {
            if (it->payload.tag != Tag::SVal) {
                ++it;
                continue;
            }
            auto subject = static_cast<AgentId>(it->payload.vals[0]);
            if (it->payload.vals.size() != 2 || wake_.port_ids().at(it->port) != subject ||
                nbr_s_.count(subject)) {
                ctx.abort("rank publication: malformed");
                return;
            }
            std::int64_t s = it->payload.vals[1];
            if (s < 1 || s > wake_.n_prime()) {
                ctx.abort("rank publication: out of range");
                return;
            }
            auto w = wit_s_.find(subject);
            if (w != wit_s_.end() && w->second != s) {
                ctx.abort("rank publication: differs from the witnessed draw");
                return;
            }
            nbr_s_[subject] = s;
            it = inbox.erase(it);
        }
    }

    ProtocolConfig cfg_;
    std::vector<AgentId> order_;
    int vmax_ = 1;
    std::vector<std::int64_t> x_;
    std::int64_t my_r_ = 0, my_s_ = 0;
    std::map<AgentId, std::int64_t> nbr_s_;     // published ranks of neighbors
    std::map<AgentId, std::int64_t> wit_s_;     // ranks this agent witnessed
    std::map<AgentId, std::int64_t> direct_s_;  // verification: direct copies
    std::map<AgentId, std::int64_t> path_s_;    // verification: witness-path copies
    std::set<std::int64_t> nbr_colors_;
};

// ---------------------------------------------------------------------------
// Ring Partition

class PartitionAgent : public RingAgentBase {
public:
    PartitionAgent(AgentId self, const ProtocolConfig& cfg) : RingAgentBase(self), cfg_(cfg) {}

protected:
    void on_wake_done(AgentCtx& ctx) override {
        if (!wake_.is_ring()) {
            ctx.abort("partition requires a ring");
            return;
        }
        np_ = wake_.n_prime();
        const auto& ring = wake_.ring_cw();
        AgentId init = *std::min_element(ring.begin(), ring.end());
        std::size_t j = 0;
        while (ring[j] != init) ++j;
        pos_ = static_cast<int>((static_cast<std::size_t>(np_) - j) % static_cast<std::size_t>(np_));
        m_ = pos_ == 0 ? 0 : pos_ % 2;
    }

    void phase_step(AgentCtx& ctx, int rho, std::vector<Incoming>& inbox) override {
        std::uint32_t cw = wake_.cw_port(), ccw = wake_.ccw_port();
        if (pos_ == 0 && rho == 1) {
            ctx.send(cw, Payload(Tag::Token, {1}));
            return;
        }
        int token_round = pos_ == 0 ? np_ + 1 : pos_ + 1;
        if (rho == token_round) {
            Incoming msg;
            if (!take_one(inbox,
                          [&](const Incoming& m) {
                              return m.payload.tag == Tag::Token && m.port == ccw &&
                                     m.payload.vals.size() == 1;
                          },
                          msg)) {
                ctx.abort("partition: token missed its slot");
                return;
            }
            std::int64_t mark = msg.payload.vals[0];
            if (pos_ == 0) {
                // The returning mark must be the opposite of the 1 sent out.
                if (mark != 0) {
                    ctx.abort("partition: token parity mismatch (odd ring)");
                    return;
                }
            } else {
                if (mark != m_) {
                    ctx.abort("partition: unexpected token mark");
                    return;
                }
                ctx.send(cw, Payload(Tag::Token, {1 - mark}));
            }
            if (m_ == 0) {  // pair with the predecessor, immediately
                t_own_ = ctx.draw(2);
                ctx.send(ccw, Payload(Tag::PBit, {t_own_}));
            }
            return;
        }
        if (m_ == 1 && rho == pos_ + 2) {  // pair with the successor, one round later
            t_own_ = ctx.draw(2);
            ctx.send(cw, Payload(Tag::PBit, {t_own_}));
            return;
        }
        int bit_round = m_ == 1 ? pos_ + 3 : token_round + 1;
        if (rho == bit_round) {
            std::uint32_t from = m_ == 1 ? cw : ccw;
            Incoming msg;
            if (!take_one(inbox,
                          [&](const Incoming& m) {
                              return m.payload.tag == Tag::PBit && m.port == from &&
                                     m.payload.vals.size() == 1;
                          },
                          msg) ||
                (msg.payload.vals[0] != 0 && msg.payload.vals[0] != 1)) {
                ctx.abort("partition: pair bit missed its slot");
                return;
            }
            std::int64_t o = (t_own_ + msg.payload.vals[0] + m_) % 2;
            ctx.set_output(OutputValue(o));
        }
    }

    ProtocolConfig cfg_;
    int np_ = 0, pos_ = 0, m_ = 0;
    std::int64_t t_own_ = 0;
};

// ---------------------------------------------------------------------------
// Edge orientation (two rounds, no wake-up)

class OrientationAgent : public AgentProgram {
public:
    explicit OrientationAgent(AgentId self) : self_(self) {}

    void step(AgentCtx& ctx) override {
        if (ctx.round() == 1) {
            bits_.resize(ctx.num_ports());
            for (std::uint32_t p = 0; p < ctx.num_ports(); ++p) {
                bits_[p] = ctx.draw(2);
                ctx.send(p, Payload(Tag::OBit, {bits_[p], static_cast<std::int64_t>(self_)}));
            }
            return;
        }
        if (ctx.round() != 2) return;
        std::vector<std::optional<std::pair<std::int64_t, AgentId>>> got(ctx.num_ports());
        std::set<AgentId> seen;
        for (const auto& m : ctx.inbox()) {
            if (m.payload.tag != Tag::OBit || m.payload.vals.size() != 2 || got[m.port]) {
                ctx.abort("orientation: malformed bit exchange");
                return;
            }
            auto id = static_cast<AgentId>(m.payload.vals[1]);
            std::int64_t b = m.payload.vals[0];
            if ((b != 0 && b != 1) || id == self_ || !seen.insert(id).second) {
                ctx.abort("orientation: inconsistent neighbor ids");
                return;
            }
            got[m.port] = {b, id};
        }
        std::vector<std::pair<AgentId, AgentId>> entries;  // (neighbor, toward)
        for (std::uint32_t p = 0; p < ctx.num_ports(); ++p) {
            if (!got[p]) {
                ctx.abort("orientation: missing bit on an edge");
                return;
            }
            auto [b, id] = *got[p];
            AgentId toward = (bits_[p] ^ b) ? std::max(self_, id) : std::min(self_, id);
            entries.emplace_back(id, toward);
        }
        std::sort(entries.begin(), entries.end());
        OutputValue out;
        for (const auto& [nbr, toward] : entries) {
            out.vals.push_back(static_cast<std::int64_t>(nbr));
            out.vals.push_back(static_cast<std::int64_t>(toward));
        }
        ctx.set_output(out);
    }

private:
    AgentId self_;
    std::vector<std::int64_t> bits_;
};

}  // namespace

AgentFactory make_agent_factory(const ProtocolConfig& cfg) {
    if (cfg.key == "ks" || cfg.key == "ks2") {
        ProtocolConfig c = cfg;
        if (cfg.key == "ks2") c.k = 2;
        return [c](AgentId id) { return std::make_unique<KsAgent>(id, c); };
    }
    if (cfg.key == "color-ring")
        return [cfg](AgentId id) { return std::make_unique<RingColor2KsAgent>(id, cfg); };
    if (cfg.key == "color-renaming")
        return [cfg](AgentId id) { return std::make_unique<ColorRenamingAgent>(id, cfg); };
    if (cfg.key == "color-orient")
        return [cfg](AgentId id) { return std::make_unique<ColorOrientAgent>(id, cfg); };
    if (cfg.key == "partition")
        return [cfg](AgentId id) { return std::make_unique<PartitionAgent>(id, cfg); };
    if (cfg.key == "orientation")
        return [](AgentId id) { return std::make_unique<OrientationAgent>(id); };
    if (cfg.key == "leader")
        return [](AgentId id) { return std::make_unique<LeaderAgent>(id); };
    throw Error(ErrorCode::UnknownProblem, "unknown protocol key: " + cfg.key);
}

int round_limit_hint(const std::string& key, std::size_t n_exec) {
    auto n = static_cast<int>(n_exec);
    if (key == "orientation") return 4;
    // Wake-up plus renaming-style phases dominate: O(n * (diameter + 2)).
    return 2 * (n + 2) * (n + 2) + 40;
}

}  // namespace ratsim

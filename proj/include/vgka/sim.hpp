#pragma once

// Deterministic discrete-event simulation of vehicles driving through RSU
// ranges and running the full protocol stack with real cryptography.
//
// Model:
//  * One-directional road [0, L); RSUs evenly spaced; a vehicle passing L
//    re-enters at 0 (constant density). Constant speed.
//  * One shared wireless channel, FIFO: a transmission starts when the channel
//    is free and lasts bytes*8/bandwidth, plus a fixed propagation delay.
//    RSU-to-RSU links are wired with a fixed latency.
//  * Every node has one CPU, FIFO. Computation is charged from the analytic
//    primitive timings, not wall clock.
//  * Vehicles broadcast a data message every interval +- variance once they
//    belong to a group; the delay metric averages create + transmit + verify.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <queue>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "vgka/group_comm.hpp"
#include "vgka/cost.hpp"
#include "vgka/gka.hpp"

namespace vgka::sim {

using crypto::ChannelKeys;

struct ScenarioConfig {
  double road_length_m = 1000;
  double sim_time_s = 20;
  std::uint32_t message_size_bytes = 200;
  double broadcast_interval_ms = 300;
  double interval_variance_s = 0.05;
  double rsu_range_m = 600;
  double vehicle_range_m = 300;
  double bandwidth_mbps = 6;
  std::uint32_t n_vehicles = 50;
  std::uint32_t n_rsus = 2;
  double vehicle_speed_mps = 20;
  double illegal_fraction = 0.05;
  std::uint64_t rng_seed = 1;
  cost::PrimitiveTimings timings;

  std::string profile = "default";
  double delta_max_ms = static_cast<double>(auth::kDefaultDeltaMaxMs);
  double beacon_period_ms = static_cast<double>(auth::kDefaultBeaconPeriodMs);
  double propagation_ms = 0.002;
  double wired_latency_ms = 1.0;
  bool gk_transfer = true;
  double to_rsu_fraction = 0.25;
  std::uint32_t max_auth_attempts = 3;
  double auth_timeout_ms = 1000;
  double liveness_min_dwell_ms = 2000;
  double warmup_s = 0;  // data messages created earlier are not sampled
};

inline void validate(const ScenarioConfig& c) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0) || !std::isfinite(v)) throw Error(Errc::Config, std::string(name) + " must be positive");
  };
  auto nonneg = [](double v, const char* name) {
    if (!(v >= 0) || !std::isfinite(v)) throw Error(Errc::Config, std::string(name) + " must be non-negative");
  };
  auto fraction = [](double v, const char* name) {
    if (!(v >= 0 && v <= 1)) throw Error(Errc::Config, std::string(name) + " must lie in [0, 1]");
  };
  positive(c.road_length_m, "road_length_m");
  positive(c.sim_time_s, "sim_time_s");
  positive(c.message_size_bytes, "message_size_bytes");
  positive(c.broadcast_interval_ms, "broadcast_interval_ms");
  nonneg(c.interval_variance_s, "interval_variance_s");
  if (c.interval_variance_s * 1000 >= c.broadcast_interval_ms)
    throw Error(Errc::Config, "interval_variance_s must be smaller than the broadcast interval");
  positive(c.rsu_range_m, "rsu_range_m");
  positive(c.vehicle_range_m, "vehicle_range_m");
  positive(c.bandwidth_mbps, "bandwidth_mbps");
  if (c.n_rsus == 0) throw Error(Errc::Config, "n_rsus must be positive");
  positive(c.vehicle_speed_mps, "vehicle_speed_mps");
  fraction(c.illegal_fraction, "illegal_fraction");
  fraction(c.to_rsu_fraction, "to_rsu_fraction");
  for (auto [v, n] : {std::pair{c.timings.t_par, "t_par"}, {c.timings.t_mul, "t_mul"}, {c.timings.t_mp, "t_mp"},
                      {c.timings.t_hmac, "t_hmac"}, {c.timings.t_sym, "t_sym"}})
    nonneg(v, n);
  positive(c.delta_max_ms, "delta_max_ms");
  positive(c.beacon_period_ms, "beacon_period_ms");
  nonneg(c.propagation_ms, "propagation_ms");
  nonneg(c.wired_latency_ms, "wired_latency_ms");
  if (c.max_auth_attempts == 0) throw Error(Errc::Config, "max_auth_attempts must be positive");
  positive(c.auth_timeout_ms, "auth_timeout_ms");
  nonneg(c.liveness_min_dwell_ms, "liveness_min_dwell_ms");
  nonneg(c.warmup_s, "warmup_s");
  if (c.warmup_s >= c.sim_time_s) throw Error(Errc::Config, "warmup_s must be shorter than sim_time_s");
  crypto::parse_profile(c.profile);
}

// ---- config JSON --------------------------------------------------------------------

#define VGKA_SCENARIO_FIELDS(X)                                                                                     \
  X(road_length_m) X(sim_time_s) X(message_size_bytes) X(broadcast_interval_ms) X(interval_variance_s)              \
  X(rsu_range_m) X(vehicle_range_m) X(bandwidth_mbps) X(n_vehicles) X(n_rsus) X(vehicle_speed_mps)                  \
  X(illegal_fraction) X(rng_seed) X(profile) X(delta_max_ms) X(beacon_period_ms) X(propagation_ms)                  \
  X(wired_latency_ms) X(gk_transfer) X(to_rsu_fraction) X(max_auth_attempts) X(auth_timeout_ms)                     \
  X(liveness_min_dwell_ms) X(warmup_s)

#define VGKA_TIMING_FIELDS(X) X(t_par) X(t_mul) X(t_mp) X(t_hmac) X(t_sym)

inline nlohmann::json to_json(const ScenarioConfig& c) {
  nlohmann::json j;
#define X(f) j[#f] = c.f;
  VGKA_SCENARIO_FIELDS(X)
#undef X
  nlohmann::json t;
#define X(f) t[#f] = c.timings.f;
  VGKA_TIMING_FIELDS(X)
#undef X
  j["timings"] = t;
  return j;
}

/// Fields absent from the document keep their defaults. Unknown keys listed in
/// `extra_keys` are tolerated (e.g. a sweep's n_list); any other unknown key is an error.
inline ScenarioConfig config_from_json(const nlohmann::json& j, std::initializer_list<std::string_view> extra_keys = {}) {
  if (!j.is_object()) throw Error(Errc::Config, "scenario config must be a JSON object");
  ScenarioConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      bool known = key == "timings" || std::find(extra_keys.begin(), extra_keys.end(), key) != extra_keys.end();
#define X(f) known = known || key == #f;
      VGKA_SCENARIO_FIELDS(X)
#undef X
      if (!known) throw Error(Errc::Config, "unknown config key '" + key + "'");
    }
#define X(f) \
  if (j.contains(#f)) j.at(#f).get_to(c.f);
    VGKA_SCENARIO_FIELDS(X)
#undef X
    if (j.contains("timings")) {
      const auto& t = j.at("timings");
#define X(f) \
  if (t.contains(#f)) t.at(#f).get_to(c.timings.f);
      VGKA_TIMING_FIELDS(X)
#undef X
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Config, std::string("bad config value: ") + e.what());
  }
  validate(c);
  return c;
}

// ---- report ---------------------------------------------------------------------------

struct MetricsReport {
  std::uint32_t n_vehicles = 0;
  std::optional<double> average_delay_ms;
  std::uint64_t total_overhead_bytes = 0;
  std::uint64_t obu_to_rsu_messages = 0;
  std::uint64_t overhead_mismatches = 0;  // OBU->RSU messages whose overhead != 58
  std::uint64_t auth_count = 0;           // admissions through the full handshake
  std::uint64_t fastpath_count = 0;       // admissions through the neighbour-GK fast path
  std::uint64_t admissions = 0;
  std::uint64_t rekey_count = 0;
  std::uint64_t failed_auths = 0;  // Meg4 rejected by key confirmation
  std::uint64_t rejected_hellos = 0;
  std::uint64_t range_entries = 0;
  std::uint64_t admission_misses = 0;     // entries with dwell >= min dwell that never joined
  std::uint64_t fastpath_violations = 0;  // a current neighbour GK was presented but not accepted
  std::uint64_t gk_desyncs = 0;           // Pag3 / Bm1 a member could not apply
  std::uint64_t data_messages = 0;
  std::uint64_t data_deliveries = 0;
  std::uint64_t stale_drops = 0;
  std::uint64_t deliveries_scheduled = 0;
  std::uint64_t deliveries_processed = 0;
  std::uint64_t deliveries_pending = 0;
  std::uint64_t events = 0;
  std::uint32_t max_full_auths_per_vehicle = 0;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

inline nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json j = {
      {"n_vehicles", r.n_vehicles},
      {"total_overhead_bytes", r.total_overhead_bytes},
      {"obu_to_rsu_messages", r.obu_to_rsu_messages},
      {"overhead_mismatches", r.overhead_mismatches},
      {"auth_count", r.auth_count},
      {"fastpath_count", r.fastpath_count},
      {"admissions", r.admissions},
      {"rekey_count", r.rekey_count},
      {"failed_auths", r.failed_auths},
      {"rejected_hellos", r.rejected_hellos},
      {"range_entries", r.range_entries},
      {"admission_misses", r.admission_misses},
      {"fastpath_violations", r.fastpath_violations},
      {"gk_desyncs", r.gk_desyncs},
      {"data_messages", r.data_messages},
      {"data_deliveries", r.data_deliveries},
      {"stale_drops", r.stale_drops},
      {"deliveries_scheduled", r.deliveries_scheduled},
      {"deliveries_processed", r.deliveries_processed},
      {"deliveries_pending", r.deliveries_pending},
      {"events", r.events},
      {"max_full_auths_per_vehicle", r.max_full_auths_per_vehicle},
  };
  j["average_delay_ms"] = r.average_delay_ms ? nlohmann::json(*r.average_delay_ms) : nlohmann::json(nullptr);
  return j;
}

/// Shortest decimal that reads back as the same double.
inline std::string format_ms(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// ---- simulator ------------------------------------------------------------------------

class Simulator {
 public:
  explicit Simulator(ScenarioConfig cfg, std::ostream* trace = nullptr)
      : cfg_(std::move(cfg)),
        trace_(trace),
        crypto_rng_(derive_seed(cfg_.rng_seed, kCryptoStream)),
        ta_(ta::ta_init(crypto::parse_profile(cfg_.profile), crypto_rng_)),
        sp_(ta_.params) {
    validate(cfg_);
    setup();
  }

  MetricsReport run() {
    const double end = cfg_.sim_time_s * 1000;
    while (!queue_.empty() && queue_.top().t <= end) {
      Event ev = queue_.top();
      queue_.pop();
      now_ = ev.t;
      ++report_.events;
      if (trace_) log_event(ev);
      std::visit([&](auto& p) { handle(p); }, ev.payload);
    }
    report_.deliveries_pending = report_.deliveries_scheduled - report_.deliveries_processed;
    finish(end);
    return report_;
  }

  const std::vector<cost::DelaySample>& samples() const { return samples_; }
  std::uint32_t rsu_count() const { return cfg_.n_rsus; }

 private:
  // -- event plumbing --
  struct DataMeta {
    std::uint64_t creator = 0;
    std::uint64_t message = 0;
    std::uint32_t group = 0;  // RSU whose group the message belongs to
    double t_create = 0;
    double sent_at = 0;
  };
  struct EvBeacon {
    std::uint32_t rsu;
  };
  struct EvEnter {
    std::uint32_t veh, rsu;
  };
  struct EvLeave {
    std::uint32_t veh, rsu;
  };
  struct EvDelivery {
    std::uint32_t src, dst;  // node ids: [0, n_rsus) RSUs, then vehicles
    std::shared_ptr<const WireMessage> msg;
    std::shared_ptr<const DataMeta> meta;
  };
  struct EvTimer {
    std::uint32_t veh, rsu;
    std::uint64_t attempt;
  };
  struct EvBroadcast {
    std::uint32_t veh;
  };
  struct EvWired {
    std::uint32_t src, dst;
    msg::GkTransfer msg;
  };
  struct EvTransmit {
    std::uint32_t src;
    std::vector<std::uint32_t> dsts;
    std::shared_ptr<const WireMessage> msg;
    std::shared_ptr<const DataMeta> meta;
  };
  using Payload = std::variant<EvBeacon, EvEnter, EvLeave, EvDelivery, EvTimer, EvBroadcast, EvWired, EvTransmit>;
  struct Event {
    double t;
    std::uint64_t seq;
    Payload payload;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const { return a.t != b.t ? a.t > b.t : a.seq > b.seq; }
  };

  void schedule(double t, Payload p) { queue_.push(Event{t, seq_++, std::move(p)}); }

  // -- nodes --
  enum class Phase { Out, AwaitBeacon, Authenticating, Joining, Member, GaveUp };

  struct Link {
    bool in_range = false;
    double entered_at = 0;
    bool admitted = false;
    Phase phase = Phase::Out;
    std::uint32_t attempts = 0;
    std::uint64_t attempt_id = 0;
    std::optional<ta::VehicleEpoch> epoch;
    std::optional<auth::VehicleSession> session;
    std::optional<group::GroupMember> member;
    std::optional<GElem> presented_gk;
    std::optional<ChannelKeys> prev_keys;  // accepted for messages sealed before the latest rekey
  };

  struct Vehicle {
    Rng rng{0};
    ta::NodeCredentials creds;
    double x0 = 0;
    bool illegal = false;
    double cpu_free = 0;
    std::uint64_t next_msg = 0;
    std::uint32_t full_auths = 0;
    std::vector<Link> links;
  };

  // Channel keys of an RSU-side group key, recomputed only when the key changes.
  struct KeyCache {
    std::optional<GElem> gk;
    ChannelKeys keys{};
    const ChannelKeys* get(const SystemParams& sp, const std::optional<GElem>& now) {
      if (!now) return nullptr;
      if (!gk || *gk != *now) {
        gk = now;
        keys = group::gk_keys(sp, *now);
      }
      return &keys;
    }
  };

  struct Rsu {
    ta::NodeCredentials creds;
    double x = 0;
    msg::Beacon beacon;
    auth::RsuAuthenticator auth;
    group::RsuGroup group;
    double cpu_free = 0;
    std::map<Pseudonym, std::uint32_t> owner;  // fid -> vehicle index
    KeyCache current, previous;
  };

  std::uint32_t vnode(std::uint32_t v) const { return cfg_.n_rsus + v; }
  bool is_rsu(std::uint32_t node) const { return node < cfg_.n_rsus; }

  double position(const Vehicle& v, double t) const {
    return std::fmod(v.x0 + cfg_.vehicle_speed_mps * t / 1000.0, cfg_.road_length_m);
  }

  double run_cpu(double& cpu_free, double cost) {
    const double end = std::max(now_, cpu_free) + cost;
    cpu_free = end;
    return end;
  }

  void log_event(const Event& ev) {
    static constexpr const char* kNames[] = {"beacon", "enter", "leave", "delivery", "timer", "broadcast", "wired", "transmit"};
    std::string line = std::string("event #") + std::to_string(ev.seq) + " " + kNames[ev.payload.index()];
    if (const auto* d = std::get_if<EvDelivery>(&ev.payload))
      line += " " + std::to_string(d->src) + "->" + std::to_string(d->dst) + " " + std::string(tag_name(tag_of(*d->msg)));
    log(line);
  }

  void log(const std::string& what) {
    if (trace_) *trace_ << "t=" << std::fixed << std::setprecision(4) << now_ << " " << what << "\n";
  }

  // -- setup --
  void setup() {
    const double L = cfg_.road_length_m;
    for (std::uint32_t k = 0; k < cfg_.n_rsus; ++k) {
      const double x = (k + 0.5) * L / cfg_.n_rsus;
      const Location loc{static_cast<std::int64_t>(std::llround(x * 1000)), 0};
      auto reg = ta::register_rsu(ta_, to_bytes("RSU-" + std::to_string(k)), loc, crypto_rng_);
      auth::RsuAuthenticator a(sp_, reg.creds, static_cast<std::uint64_t>(cfg_.delta_max_ms));
      rsus_.push_back(Rsu{reg.creds, x, reg.beacon, std::move(a), group::RsuGroup(sp_), 0, {}, {}, {}});
    }
    if (cfg_.n_rsus >= 2) {
      std::vector<gka::Member> roster;
      std::vector<Scalar> secrets;
      for (const auto& r : rsus_) {
        roster.push_back({r.creds.tid, r.creds.pk});
        secrets.push_back(r.creds.sk);
      }
      auto run = gka::run_all(sp_, roster, secrets, crypto_rng_);
      for (const auto& k : run.keys)
        if (k != run.keys.front()) throw Error(Errc::ChainBreak, "RSU key agreement disagreed");
      rsu_sk_ = run.keys.front();
    }

    // Every vehicle draws from its own stream, so vehicle i moves, transmits and
    // is (il)legal identically whatever n_vehicles is (common random numbers).
    for (std::uint32_t i = 0; i < cfg_.n_vehicles; ++i) {
      Vehicle v;
      v.rng = Rng(derive_seed(cfg_.rng_seed, kVehicleStreams + i));
      v.creds = ta::register_vehicle(ta_, to_bytes("V-" + std::to_string(i)));
      v.x0 = v.rng.uniform(0, L);
      v.illegal = v.rng.uniform(0, 1) < cfg_.illegal_fraction;
      if (v.illegal) v.creds.s_u = crypto::random_g1(sp_, crypto_rng_);  // never issued by the TA
      v.links.resize(cfg_.n_rsus);
      vehicles_.push_back(std::move(v));
    }

    for (std::uint32_t k = 0; k < cfg_.n_rsus; ++k) {
      Rng phase(derive_seed(cfg_.rng_seed, kRsuStreams + k));
      schedule(phase.uniform(0, cfg_.beacon_period_ms), EvBeacon{k});
    }
    const double end = cfg_.sim_time_s * 1000;
    for (std::uint32_t i = 0; i < cfg_.n_vehicles; ++i) {
      schedule_range_events(i, end);
      schedule(vehicles_[i].rng.uniform(0, cfg_.broadcast_interval_ms), EvBroadcast{i});
    }
  }

  void schedule_range_events(std::uint32_t vi, double end) {
    const auto& v = vehicles_[vi];
    const double L = cfg_.road_length_m, speed = cfg_.vehicle_speed_mps / 1000.0;  // m per ms
    const double u_end = v.x0 + speed * end;
    for (std::uint32_t k = 0; k < cfg_.n_rsus; ++k) {
      const double a = std::max(0.0, rsus_[k].x - cfg_.rsu_range_m);
      const double b = std::min(L, rsus_[k].x + cfg_.rsu_range_m);
      if (a <= 0 && b >= L) {
        schedule(0, EvEnter{vi, k});
        continue;
      }
      for (double lap = 0; lap * L <= u_end; ++lap) {
        const double ua = lap * L + a, ub = lap * L + b;
        if (ub <= v.x0) continue;
        const double t_in = ua <= v.x0 ? 0 : (ua - v.x0) / speed;
        const double t_out = (ub - v.x0) / speed;
        if (t_in <= end) schedule(t_in, EvEnter{vi, k});
        if (t_out <= end) schedule(t_out, EvLeave{vi, k});
      }
    }
  }

  // -- transmission --
  // The message is handed to the radio once the sender's CPU is done with it; the
  // channel is claimed in time order when that moment is reached.
  void transmit(double ready, std::uint32_t src, const std::vector<std::uint32_t>& dsts,
                std::shared_ptr<const WireMessage> m, std::shared_ptr<const DataMeta> meta = {}) {
    if (!is_rsu(src) && is_obu_to_rsu(tag_of(*m))) {
      const auto o = measure_overhead(*m);
      report_.total_overhead_bytes += o;
      ++report_.obu_to_rsu_messages;
      if (o != cost::overhead_per_message(cost::Scheme::Ours)) ++report_.overhead_mismatches;
    }
    schedule(ready, EvTransmit{src, dsts, std::move(m), std::move(meta)});
  }

  void handle(EvTransmit& e) {
    const auto bytes = encode_message(sp_, *e.msg).size();
    const double start = std::max(now_, channel_free_);
    const double dur = static_cast<double>(bytes) * 8.0 / (cfg_.bandwidth_mbps * 1000.0);  // ms
    channel_free_ = start + dur;
    for (auto d : e.dsts) {
      ++report_.deliveries_scheduled;
      schedule(start + dur + cfg_.propagation_ms, EvDelivery{e.src, d, e.msg, e.meta});
    }
  }

  template <class M>
  void send(double ready, std::uint32_t src, std::vector<std::uint32_t> dsts, M m) {
    transmit(ready, src, dsts, std::make_shared<const WireMessage>(std::move(m)));
  }

  std::vector<std::uint32_t> members_of(std::uint32_t rsu, const std::vector<Pseudonym>& fids) const {
    std::vector<std::uint32_t> out;
    for (const auto& f : fids) {
      auto it = rsus_[rsu].owner.find(f);
      if (it != rsus_[rsu].owner.end()) out.push_back(vnode(it->second));
    }
    return out;
  }

  void push_gk(std::uint32_t k, double ready) {
    auto& r = rsus_[k];
    if (!cfg_.gk_transfer || !rsu_sk_ || !r.group.gk()) return;
    for (std::uint32_t d = 0; d < cfg_.n_rsus; ++d) {
      if (d == k) continue;
      schedule(ready + cfg_.wired_latency_ms, EvWired{k, d, r.group.transfer_gk(rsu_sk_, r.creds.tid, crypto_rng_)});
    }
  }

  // -- range events --
  void handle(EvEnter& e) {
    auto& l = vehicles_[e.veh].links[e.rsu];
    if (l.in_range) return;
    l = Link{};
    l.in_range = true;
    l.entered_at = now_;
    l.phase = Phase::AwaitBeacon;
    l.epoch = ta::refresh_vehicle_epoch(vehicles_[e.veh].creds, sp_, crypto_rng_);
    ++report_.range_entries;
    log("enter v" + std::to_string(e.veh) + " rsu" + std::to_string(e.rsu));
  }

  void handle(EvLeave& e) {
    auto& l = vehicles_[e.veh].links[e.rsu];
    if (!l.in_range) return;
    auto& r = rsus_[e.rsu];
    log("leave v" + std::to_string(e.veh) + " rsu" + std::to_string(e.rsu));
    if (!l.admitted && now_ - l.entered_at >= cfg_.liveness_min_dwell_ms && !vehicles_[e.veh].illegal)
      ++report_.admission_misses;
    const auto fid = l.epoch->fid;
    if (r.group.contains(fid)) {
      const auto& t = cfg_.timings;
      auto bm1 = r.group.handle_leave(fid, crypto_rng_);
      ++report_.rekey_count;
      const double end = run_cpu(r.cpu_free, (r.group.size() + 1) * t.t_mul + t.t_sym + t.t_hmac);
      if (bm1) {
        std::vector<Pseudonym> fids;
        for (const auto& [f, m] : r.group.members()) fids.push_back(f);
        send(end, e.rsu, members_of(e.rsu, fids), std::move(*bm1));
      }
      push_gk(e.rsu, end);
    }
    r.auth.drop_session(fid);
    r.owner.erase(fid);
    l = Link{};
  }

  // -- protocol timers --
  void handle(EvTimer& e) {
    auto& l = vehicles_[e.veh].links[e.rsu];
    if (!l.in_range || l.attempt_id != e.attempt) return;
    if (l.phase != Phase::Authenticating && l.phase != Phase::Joining) return;
    auto& r = rsus_[e.rsu];
    if (r.group.contains(l.epoch->fid)) return;  // admission in flight
    r.auth.drop_session(l.epoch->fid);
    l.session.reset();
    l.member.reset();
    l.phase = ++l.attempts < cfg_.max_auth_attempts ? Phase::AwaitBeacon : Phase::GaveUp;
    log("timeout v" + std::to_string(e.veh) + " rsu" + std::to_string(e.rsu));
  }

  void handle(EvBeacon& e) {
    auto& r = rsus_[e.rsu];
    std::vector<std::uint32_t> dsts;
    for (std::uint32_t i = 0; i < vehicles_.size(); ++i)
      if (vehicles_[i].links[e.rsu].phase == Phase::AwaitBeacon) dsts.push_back(vnode(i));
    if (!dsts.empty()) send(now_, e.rsu, std::move(dsts), r.beacon);
    schedule(now_ + cfg_.beacon_period_ms, EvBeacon{e.rsu});
  }

  void handle(EvWired& e) {
    auto& r = rsus_[e.dst];
    run_cpu(r.cpu_free, cfg_.timings.t_sym + cfg_.timings.t_hmac);
    group::receive_gk_transfer(sp_, r.auth.neighbors(), e.msg, *rsu_sk_);
  }

  // -- data traffic --
  void handle(EvBroadcast& e) {
    const double jitter = cfg_.interval_variance_s * 1000;
    auto& v = vehicles_[e.veh];
    schedule(now_ + cfg_.broadcast_interval_ms + v.rng.uniform(-jitter, jitter), EvBroadcast{e.veh});
    const double x = position(v, now_);
    std::optional<std::uint32_t> home;
    for (std::uint32_t k = 0; k < cfg_.n_rsus; ++k)
      if (v.links[k].phase == Phase::Member && v.links[k].member && v.links[k].member->has_gk())
        if (!home || std::abs(rsus_[k].x - x) < std::abs(rsus_[*home].x - x)) home = k;
    if (!home) return;
    const auto& t = cfg_.timings;
    const auto& member = *v.links[*home].member;
    const double create_cost = t.t_sym + t.t_hmac;
    const double ready = run_cpu(v.cpu_free, create_cost);
    auto meta = std::make_shared<DataMeta>(DataMeta{e.veh, v.next_msg++, *home, ready - now_, ready});
    const auto payload = v.rng.bytes(cfg_.message_size_bytes);
    ++report_.data_messages;
    if (v.rng.uniform(0, 1) < cfg_.to_rsu_fraction) {
      transmit(ready, vnode(e.veh), {*home},
               std::make_shared<const WireMessage>(comm::to_rsu(member, payload, crypto_rng_)), meta);
      return;
    }
    std::vector<std::uint32_t> dsts{*home};
    for (std::uint32_t j = 0; j < vehicles_.size(); ++j) {
      if (j == e.veh) continue;
      const auto& lj = vehicles_[j].links[*home];
      if (lj.phase != Phase::Member) continue;
      if (std::abs(position(vehicles_[j], now_) - x) <= cfg_.vehicle_range_m) dsts.push_back(vnode(j));
    }
    transmit(ready, vnode(e.veh), dsts,
             std::make_shared<const WireMessage>(comm::broadcast(member, payload, crypto_rng_)), meta);
  }

  void record_sample(const DataMeta& meta, std::uint32_t receiver, double verify_end) {
    ++report_.data_deliveries;
    if (meta.sent_at < cfg_.warmup_s * 1000) return;
    cost::DelaySample s;
    s.creator = meta.creator;
    s.message = meta.message;
    s.receiver = receiver;
    s.t_create = meta.t_create;
    s.t_transmit = now_ - meta.sent_at;
    s.t_verify = verify_end - now_;
    samples_.push_back(s);
  }

  // -- deliveries --
  void handle(EvDelivery& e) {
    ++report_.deliveries_processed;
    if (is_rsu(e.dst))
      std::visit([&](const auto& m) { at_rsu(e, m); }, *e.msg);
    else
      std::visit([&](const auto& m) { at_vehicle(e, m); }, *e.msg);
  }

  template <class M>
  void at_rsu(const EvDelivery&, const M&) {}

  void at_rsu(const EvDelivery& e, const msg::Hello& h) {
    auto& r = rsus_[e.dst];
    const auto vi = e.src - cfg_.n_rsus;
    const auto& t = cfg_.timings;
    const auto& presented = vehicles_[vi].links[e.dst].presented_gk;
    bool expect_fast = false;
    if (presented)
      for (const auto& [src, stored] : r.auth.neighbors().entries()) expect_fast = expect_fast || stored.gk == *presented;
    try {
      auto out = r.auth.process_hello(h, static_cast<std::uint64_t>(now_), crypto_rng_);
      r.owner[out.fid] = vi;
      if (out.fast_path) {
        const double end = run_cpu(r.cpu_free, cost::fastpath_cost(t));
        send(end, e.dst, {e.src}, std::move(*out.ack));
      } else {
        if (expect_fast) ++report_.fastpath_violations;
        const double end = run_cpu(r.cpu_free, 2 * t.t_mul);
        send(end, e.dst, {e.src}, std::move(*out.challenge));
      }
    } catch (const Error& err) {
      run_cpu(r.cpu_free, t.t_mul);
      ++report_.rejected_hellos;
      log(std::string("hello rejected: ") + err.what());
    }
  }

  void at_rsu(const EvDelivery& e, const msg::Confirm& m) {
    auto& r = rsus_[e.dst];
    const auto& t = cfg_.timings;
    run_cpu(r.cpu_free, 2 * t.t_mul + 2 * t.t_par);
    try {
      r.auth.verify_confirm(m);
    } catch (const Error& err) {
      if (err.code() == Errc::KeyConfirmFail) ++report_.failed_auths;
      log(std::string("confirm rejected: ") + err.what());
    }
  }

  void at_rsu(const EvDelivery& e, const msg::Pag1& m) {
    auto& r = rsus_[e.dst];
    const auto& t = cfg_.timings;
    group::Offer offer;
    try {
      offer = group::accept_offer(r.auth, m);
    } catch (const Error&) {
      run_cpu(r.cpu_free, t.t_hmac);
      return;
    }
    std::vector<Pseudonym> existing;
    for (const auto& [f, rec] : r.group.members()) existing.push_back(f);
    const bool fast = r.auth.session(offer.fid).state == auth::State::FastPathDone;
    group::RekeyOutput out;
    try {
      out = r.group.handle_join(offer, crypto_rng_);
    } catch (const Error&) {
      return;  // duplicate offer
    }
    ++report_.admissions;
    ++report_.rekey_count;
    if (fast) ++report_.fastpath_count;
    else {
      ++report_.auth_count;
      auto& v = vehicles_[e.src - cfg_.n_rsus];
      v.full_auths++;
      report_.max_full_auths_per_vehicle = std::max(report_.max_full_auths_per_vehicle, v.full_auths);
    }
    const double end = run_cpu(r.cpu_free, (r.group.size() + 1) * t.t_mul + 2 * (t.t_sym + t.t_hmac));
    send(end, e.dst, {e.src}, std::move(out.pag2.at(offer.fid)));
    if (out.pag3 && !existing.empty()) send(end, e.dst, members_of(e.dst, existing), std::move(*out.pag3));
    push_gk(e.dst, end);
  }

  void at_rsu(const EvDelivery& e, const msg::Broadcast& m) {
    auto& r = rsus_[e.dst];
    const double end = run_cpu(r.cpu_free, cfg_.timings.t_hmac + cfg_.timings.t_sym);
    for (auto* cache : {&r.current, &r.previous}) {
      const auto* keys = cache->get(sp_, cache == &r.current ? r.group.gk() : r.group.prev_gk());
      if (keys == nullptr) continue;
      try {
        comm::receive_broadcast(sp_, *keys, m);
        record_sample(*e.meta, e.dst, end);
        return;
      } catch (const Error&) {
      }
    }
    ++report_.stale_drops;
  }

  void at_rsu(const EvDelivery& e, const msg::ToRsu& m) {
    auto& r = rsus_[e.dst];
    const double end = run_cpu(r.cpu_free, cfg_.timings.t_hmac + cfg_.timings.t_sym);
    try {
      comm::receive_to_rsu(r.auth, m);
      record_sample(*e.meta, e.dst, end);
    } catch (const Error&) {
      ++report_.stale_drops;
    }
  }

  template <class M>
  void at_vehicle(const EvDelivery&, const M&) {}

  void at_vehicle(const EvDelivery& e, const msg::Beacon& b) {
    const auto vi = e.dst - cfg_.n_rsus;
    auto& v = vehicles_[vi];
    auto& l = v.links[e.src];
    if (!l.in_range || l.phase != Phase::AwaitBeacon) return;
    const auto& t = cfg_.timings;
    const double end = run_cpu(v.cpu_free, t.t_mp + 2 * t.t_mul);
    l.session.emplace(sp_, v.creds, *l.epoch);
    try {
      l.session->on_beacon(b);
    } catch (const Error&) {
      l.session.reset();
      return;
    }
    l.presented_gk.reset();
    for (std::uint32_t k = 0; k < cfg_.n_rsus; ++k)
      if (k != e.src && v.links[k].phase == Phase::Member && v.links[k].member && v.links[k].member->has_gk()) {
        l.presented_gk = v.links[k].member->gk();
        break;
      }
    auto hello = l.session->make_hello(l.presented_gk, static_cast<std::uint64_t>(end), crypto_rng_);
    l.phase = Phase::Authenticating;
    send(end, e.dst, {e.src}, std::move(hello));
    schedule(end + cfg_.auth_timeout_ms, EvTimer{vi, e.src, ++l.attempt_id});
  }

  void join_group(std::uint32_t vi, std::uint32_t rsu, Link& l, double ready, std::optional<msg::Confirm> meg4) {
    msg::Pag1 offer;
    l.member.emplace(group::GroupMember::join(*l.session, crypto_rng_, offer));
    const double end = run_cpu(vehicles_[vi].cpu_free, cfg_.timings.t_mul);
    if (meg4) send(ready, vnode(vi), {rsu}, std::move(*meg4));
    send(std::max(ready, end), vnode(vi), {rsu}, std::move(offer));
    l.phase = Phase::Joining;
  }

  void at_vehicle(const EvDelivery& e, const msg::Challenge& m) {
    const auto vi = e.dst - cfg_.n_rsus;
    auto& v = vehicles_[vi];
    auto& l = v.links[e.src];
    if (l.phase != Phase::Authenticating || !l.session) return;
    const auto& t = cfg_.timings;
    const double end = run_cpu(v.cpu_free, 3 * t.t_mul + 2 * t.t_par);
    try {
      auto meg4 = l.session->on_challenge(m, crypto_rng_);
      join_group(vi, e.src, l, end, std::move(meg4));
    } catch (const Error&) {
    }
  }

  void at_vehicle(const EvDelivery& e, const msg::FastPathAck& m) {
    const auto vi = e.dst - cfg_.n_rsus;
    auto& v = vehicles_[vi];
    auto& l = v.links[e.src];
    if (l.phase != Phase::Authenticating || !l.session) return;
    const double end = run_cpu(v.cpu_free, cost::fastpath_cost(cfg_.timings));
    try {
      l.session->on_fast_path_ack(m);
      join_group(vi, e.src, l, end, std::nullopt);
    } catch (const Error&) {
    }
  }

  void at_vehicle(const EvDelivery& e, const msg::Pag2& m) {
    const auto vi = e.dst - cfg_.n_rsus;
    auto& v = vehicles_[vi];
    auto& l = v.links[e.src];
    if (l.phase != Phase::Joining || !l.member) return;
    run_cpu(v.cpu_free, cfg_.timings.t_mul + cfg_.timings.t_hmac + cfg_.timings.t_sym);
    try {
      l.member->member_derive(m);
      l.phase = Phase::Member;
      l.admitted = true;
    } catch (const Error&) {
    }
  }

  template <class M, class Apply>
  void apply_update(const EvDelivery& e, const M& m, double cost, Apply apply) {
    const auto vi = e.dst - cfg_.n_rsus;
    auto& v = vehicles_[vi];
    auto& l = v.links[e.src];
    if (l.phase != Phase::Member || !l.member) return;
    run_cpu(v.cpu_free, cost);
    try {
      const auto before = l.member->group_keys();
      apply(*l.member, m);
      l.prev_keys = before;
    } catch (const Error&) {
      ++report_.gk_desyncs;
    }
  }

  void at_vehicle(const EvDelivery& e, const msg::Pag3& m) {
    apply_update(e, m, cfg_.timings.t_hmac + cfg_.timings.t_sym,
                 [](group::GroupMember& g, const msg::Pag3& p) { g.apply_pag3(p); });
  }

  void at_vehicle(const EvDelivery& e, const msg::Bm1& m) {
    apply_update(e, m, cfg_.timings.t_mul + cfg_.timings.t_hmac + cfg_.timings.t_sym,
                 [](group::GroupMember& g, const msg::Bm1& b) { g.member_derive_from_bm1(b); });
  }

  void at_vehicle(const EvDelivery& e, const msg::Broadcast& m) {
    const auto vi = e.dst - cfg_.n_rsus;
    auto& v = vehicles_[vi];
    const auto& l = v.links[e.meta->group];
    if (l.phase != Phase::Member || !l.member) {
      ++report_.stale_drops;
      return;
    }
    const double end = run_cpu(v.cpu_free, cfg_.timings.t_hmac + cfg_.timings.t_sym);
    const ChannelKeys* prev = l.prev_keys ? &*l.prev_keys : nullptr;
    for (const ChannelKeys* keys : {&l.member->group_keys(), prev}) {
      if (keys == nullptr) continue;
      try {
        comm::receive_broadcast(sp_, *keys, m);
        record_sample(*e.meta, e.dst, end);
        return;
      } catch (const Error&) {
      }
    }
    ++report_.stale_drops;
  }

  void finish(double end) {
    for (std::uint32_t i = 0; i < vehicles_.size(); ++i)
      for (const auto& l : vehicles_[i].links)
        if (l.in_range && !l.admitted && !vehicles_[i].illegal && end - l.entered_at >= cfg_.liveness_min_dwell_ms)
          ++report_.admission_misses;
    report_.n_vehicles = cfg_.n_vehicles;
    if (!samples_.empty()) report_.average_delay_ms = cost::average_delay(samples_);
  }

  ScenarioConfig cfg_;
  std::ostream* trace_;
  static constexpr std::uint64_t kCryptoStream = 0;
  static constexpr std::uint64_t kRsuStreams = 1ULL << 32;
  static constexpr std::uint64_t kVehicleStreams = 2ULL << 32;

  Rng crypto_rng_;
  ta::TaState ta_;
  SystemParams sp_;
  std::optional<GElem> rsu_sk_;
  std::vector<Rsu> rsus_;
  std::vector<Vehicle> vehicles_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t seq_ = 0;
  double now_ = 0;
  double channel_free_ = 0;
  std::vector<cost::DelaySample> samples_;
  MetricsReport report_;
};

inline MetricsReport run_scenario(const ScenarioConfig& cfg) {
  validate(cfg);
  const char* env = std::getenv("SIM_LOG");
  const bool trace = env != nullptr && std::string(env) == "trace";
  return Simulator(cfg, trace ? &std::cerr : nullptr).run();
}

struct SweepRow {
  std::uint32_t n = 0;
  std::optional<double> delay_ms;
  std::uint64_t overhead_bytes = 0;
  MetricsReport report;
};

inline std::vector<SweepRow> sweep_density(const ScenarioConfig& cfg, const std::vector<std::uint32_t>& n_list) {
  std::vector<SweepRow> rows;
  for (auto n : n_list) {
    auto c = cfg;
    c.n_vehicles = n;
    auto rep = run_scenario(c);
    rows.push_back(SweepRow{n, rep.average_delay_ms, rep.total_overhead_bytes, rep});
  }
  return rows;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "n,delay_ms,overhead_bytes\n";
  for (const auto& r : rows)
    os << r.n << "," << (r.delay_ms ? format_ms(*r.delay_ms) : std::string()) << "," << r.overhead_bytes << "\n";
}

}  // namespace vgka::sim

#pragma once

// Command-line front end. cli_main returns the process exit code:
// 0 success, 1 validation / usage error, 2 protocol failure.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vgka/sim.hpp"

namespace vgka::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitProtocol = 2;

namespace detail {

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Config, "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Config, path + ": " + e.what());
  }
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Config, "cannot write " + path);
  out << text;
}

inline void write_bytes(const std::string& path, const Bytes& b) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Config, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

inline Bytes read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Config, "cannot open " + path);
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

/// Hex text (whitespace ignored) is accepted as well as raw bytes.
inline Bytes wire_bytes(const Bytes& raw) {
  std::string hex;
  for (auto c : raw) {
    if (std::isspace(c)) continue;
    if (!std::isxdigit(c)) return raw;
    hex.push_back(static_cast<char>(c));
  }
  if (hex.empty() || hex.size() % 2 != 0) return raw;
  return from_hex(hex);
}

inline ta::TaState load_ta(const std::string& registry, const std::string& keystore) {
  return ta::ta_from_json(read_json(registry), read_json(keystore));
}

inline void save_ta(const ta::TaState& ta, const std::string& registry, const std::string& keystore) {
  write_text(registry, ta::registry_to_json(ta).dump(2) + "\n");
  write_text(keystore, ta::keystore_to_json(ta).dump(2) + "\n");
}

inline std::string printable(const Bytes& tid) {
  for (auto c : tid)
    if (c < 0x20 || c > 0x7e) return "0x" + to_hex(tid);
  return to_string(tid);
}

inline const ta::NodeCredentials& credentials(const ta::TaState& ta, const std::string& tid) {
  auto it = ta.keystore.find(to_bytes(tid));
  if (it == ta.keystore.end()) throw Error(Errc::UnknownTid, "no credentials for '" + tid + "'");
  return it->second;
}

// ---- subcommand bodies --------------------------------------------------------------

struct TaOptions {
  std::string registry = "registry.json";
  std::string keystore = "keystore.json";
  std::string params_out;
  std::string profile = "default";
  std::string tid;
  std::int64_t x_mm = 0, y_mm = 0;
  std::string beacon_out;
  std::string fid_hex;
  std::string pk;
};

inline int ta_init_cmd(const TaOptions& o, Rng& rng, std::ostream& out) {
  auto ta = ta::ta_init(crypto::parse_profile(o.profile), rng);
  save_ta(ta, o.registry, o.keystore);
  if (!o.params_out.empty()) write_text(o.params_out, crypto::to_json(ta.params).dump(2) + "\n");
  out << "initialized profile=" << o.profile << " q_bits=" << mpz_sizeinbase(ta.params.q.get_mpz_t(), 2)
      << " registry=" << o.registry << " keystore=" << o.keystore << "\n";
  return kExitOk;
}

inline int ta_register_rsu_cmd(const TaOptions& o, Rng& rng, std::ostream& out) {
  auto ta = load_ta(o.registry, o.keystore);
  auto reg = ta::register_rsu(ta, to_bytes(o.tid), Location{o.x_mm, o.y_mm}, rng);
  save_ta(ta, o.registry, o.keystore);
  if (!o.beacon_out.empty()) write_bytes(o.beacon_out, encode_message(ta.params, reg.beacon));
  out << "registered rsu tid=" << o.tid << " pk=" << crypto::to_dec(reg.creds.pk.v) << "\n";
  return kExitOk;
}

inline int ta_register_vehicle_cmd(const TaOptions& o, std::ostream& out) {
  auto ta = load_ta(o.registry, o.keystore);
  const auto c = ta::register_vehicle(ta, to_bytes(o.tid));
  save_ta(ta, o.registry, o.keystore);
  out << "registered vehicle tid=" << o.tid << " q=" << crypto::to_dec(c.q_u.v) << "\n";
  return kExitOk;
}

inline int ta_pseudonym_cmd(const TaOptions& o, Rng& rng, std::ostream& out) {
  const auto ta = load_ta(o.registry, o.keystore);
  const auto e = ta::refresh_vehicle_epoch(credentials(ta, o.tid), ta.params, rng);
  out << "fid=" << to_hex(e.fid) << "\n" << "pk=" << crypto::to_dec(e.pk_v.v) << "\n";
  return kExitOk;
}

inline int ta_trace_cmd(const TaOptions& o, std::ostream& out) {
  const auto ta = load_ta(o.registry, o.keystore);
  const auto raw = from_hex(o.fid_hex);
  if (raw.size() != kPseudonymWidth) throw Error(Errc::InvalidArgument, "FID must be 42 bytes of hex");
  Pseudonym fid{};
  std::copy(raw.begin(), raw.end(), fid.begin());
  const GElem pk{crypto::fold(ta.params, mpz_class(o.pk))};
  const auto tid = ta::trace(ta, fid, pk);
  out << "tid=" << printable(tid) << "\n";
  return kExitOk;
}

struct GkaOptions {
  std::uint32_t n = 4;
  std::string profile = "default";
  int corrupt = -1;
};

inline int gka_run_cmd(const GkaOptions& o, Rng& rng, std::ostream& out) {
  if (o.n < 2) throw Error(Errc::InvalidArgument, "--n must be at least 2");
  auto ta = ta::ta_init(crypto::parse_profile(o.profile), rng);
  std::vector<gka::Member> roster;
  std::vector<Scalar> secrets;
  for (std::uint32_t i = 0; i < o.n; ++i) {
    auto reg = ta::register_rsu(ta, to_bytes("RSU-" + std::to_string(i)), Location{1000 * i, 0}, rng);
    roster.push_back({reg.creds.tid, reg.creds.pk});
    secrets.push_back(reg.creds.sk);
  }
  const auto& sp = ta.params;
  std::vector<gka::GkaSession> sessions;
  for (std::uint32_t i = 0; i < o.n; ++i) sessions.emplace_back(sp, roster, roster[i].tid, secrets[i]);
  std::vector<msg::GkaRound1> m1;
  for (auto& s : sessions) m1.push_back(s.round1(rng));
  std::vector<msg::GkaRound2> m2;
  for (auto& s : sessions) m2.push_back(s.round2(m1, rng));
  if (o.corrupt >= 0) {
    if (static_cast<std::uint32_t>(o.corrupt) >= o.n) throw Error(Errc::InvalidArgument, "--corrupt out of range");
    auto& y = m2[o.corrupt].y;
    y = crypto::g_mul(sp, y, sp.g);
  }
  for (const auto& m : m1) out << describe(sp, m);
  for (const auto& m : m2) out << describe(sp, m);
  std::vector<GElem> keys;
  for (auto& s : sessions) keys.push_back(s.finalize(m2));
  for (std::uint32_t i = 0; i < o.n; ++i)
    out << "member=" << printable(roster[i].tid) << " sk=" << crypto::to_dec(keys[i].v) << "\n";
  for (const auto& k : keys)
    if (k != keys.front()) throw Error(Errc::ChainBreak, "members derived different keys");
  return kExitOk;
}

struct AuthOptions {
  std::string profile = "default";
  bool illegal = false;
  std::uint64_t delay_ms = 0;
  std::string out_dir;
};

inline int auth_demo_cmd(const AuthOptions& o, Rng& rng, std::ostream& out) {
  auto ta = ta::ta_init(crypto::parse_profile(o.profile), rng);
  const auto& sp = ta.params;
  auto a = ta::register_rsu(ta, to_bytes("RSU-A"), Location{250000, 0}, rng);
  auto b = ta::register_rsu(ta, to_bytes("RSU-B"), Location{750000, 0}, rng);
  auto v1 = ta::register_vehicle(ta, to_bytes("V-1"));
  auto v2 = ta::register_vehicle(ta, to_bytes("V-2"));
  if (o.illegal) v1.s_u = crypto::random_g1(sp, rng);

  int seq = 0;
  auto dump = [&](const WireMessage& m) {
    if (o.out_dir.empty()) return;
    std::filesystem::create_directories(o.out_dir);
    std::ostringstream name;
    const auto tag = tag_name(tag_of(m));
    name << std::setw(2) << std::setfill('0') << seq++ << "-" << tag.substr(0, tag.find('(')) << ".bin";
    write_bytes((std::filesystem::path(o.out_dir) / name.str()).string(), encode_message(sp, m));
  };
  auto step = [&](const std::string& what, const WireMessage& m) {
    dump(m);
    out << what << " " << tag_name(tag_of(m)) << " bytes=" << encode_message(sp, m).size() << "\n";
  };

  // RSU key agreement so that group keys can move between A and B.
  auto run = gka::run_all(sp, {{a.creds.tid, a.creds.pk}, {b.creds.tid, b.creds.pk}}, {a.creds.sk, b.creds.sk}, rng);
  for (const auto& m : run.round1) step("rsu-gka", m);
  for (const auto& m : run.round2) step("rsu-gka", m);
  const auto rsu_sk = run.keys.front();

  auth::RsuAuthenticator rsu_a(sp, a.creds), rsu_b(sp, b.creds);
  group::RsuGroup group_a(sp);
  const std::uint64_t t0 = 1'000'000;

  auto full_join = [&](const ta::NodeCredentials& v, const std::string& label) {
    const auto epoch = ta::refresh_vehicle_epoch(v, sp, rng);
    auth::VehicleSession s(sp, v, epoch);
    step(label + " <-", a.beacon);
    s.on_beacon(a.beacon);
    auto hello = s.make_hello(std::nullopt, t0, rng);
    step(label + " ->", hello);
    auto outcome = rsu_a.process_hello(hello, t0 + o.delay_ms, rng);
    step(label + " <-", *outcome.challenge);
    auto confirm = s.on_challenge(*outcome.challenge, rng);
    step(label + " ->", confirm);
    rsu_a.verify_confirm(confirm);
    out << label << " authenticated\n";
    msg::Pag1 offer;
    auto member = group::GroupMember::join(s, rng, offer);
    step(label + " ->", offer);
    auto rekey = group_a.handle_join(group::accept_offer(rsu_a, offer), rng);
    step(label + " <-", rekey.pag2.at(epoch.fid));
    member.member_derive(rekey.pag2.at(epoch.fid));
    return std::tuple{std::move(s), std::move(member), std::move(rekey)};
  };

  auto [s1, m1, r1] = full_join(v1, "v1");
  auto [s2, m2, r2] = full_join(v2, "v2");
  step("v1 <-", *r2.pag3);
  m1.apply_pag3(*r2.pag3);
  if (m1.gk() != *group_a.gk() || m2.gk() != *group_a.gk()) throw Error(Errc::GkMismatch, "group key disagreement");
  out << "group epoch=" << group_a.epoch() << " members=" << group_a.size() << "\n";

  const auto text = to_bytes("road works ahead at km 3");
  auto bc = comm::broadcast(m1, text, rng);
  step("v1 ->", bc);
  const auto got = comm::receive_broadcast(sp, m2.gk(), bc);
  out << "v2 received \"" << to_string(got.payload) << "\"\n";

  // Hand-over: v1 enters B's range and is admitted through the transferred GK.
  auto transfer = group_a.transfer_gk(rsu_sk, a.creds.tid, rng);
  step("rsu-a -> rsu-b", transfer);
  group::receive_gk_transfer(sp, rsu_b.neighbors(), transfer, rsu_sk);
  const auto epoch_b = ta::refresh_vehicle_epoch(v1, sp, rng);
  auth::VehicleSession sb(sp, v1, epoch_b);
  sb.on_beacon(b.beacon);
  auto hello_b = sb.make_hello(m1.gk(), t0 + 5000, rng);
  step("v1 ->", hello_b);
  auto ob = rsu_b.process_hello(hello_b, t0 + 5000, rng);
  if (!ob.fast_path) throw Error(Errc::InvalidState, "fast path not taken");
  step("v1 <-", *ob.ack);
  sb.on_fast_path_ack(*ob.ack);
  out << "v1 admitted by rsu-b via fast path\n";

  auto bm1 = group_a.handle_leave(m1.fid(), rng);
  step("v2 <-", *bm1);
  m2.member_derive_from_bm1(*bm1);
  out << "v1 left rsu-a; epoch=" << group_a.epoch() << " members=" << group_a.size() << "\n";

  const auto tid = ta::trace(ta, s2.fid(), s2.epoch().pk_v);
  out << "trace v2 -> " << printable(tid) << "\n";
  return kExitOk;
}

struct CostOptions {
  std::uint32_t n_max = 200;
  std::uint32_t step = 10;
  std::string out_path;
};

inline void write_delay_table(std::ostream& os, const CostOptions& o) {
  using namespace cost;
  os << "n,scheme,side,ms\n";
  for (std::uint32_t n = o.step; n <= o.n_max; n += o.step)
    for (auto s : kDelaySchemes)
      for (auto side : {Side::OBU, Side::RSU})
        os << n << "," << scheme_name(s) << "," << side_name(side) << ","
           << sim::format_ms(verification_delay(s, side, n)) << "\n";
}

inline void write_overhead_table(std::ostream& os, const CostOptions& o) {
  using namespace cost;
  os << "n,scheme,bytes\n";
  for (std::uint32_t n = o.step; n <= o.n_max; n += o.step)
    for (auto s : kOverheadSchemes) os << n << "," << scheme_name(s) << "," << transmission_overhead(s, n) << "\n";
}

/// costs.csv -> costs_overhead.csv
inline std::string overhead_path(const std::string& delay_path) {
  std::filesystem::path p(delay_path);
  const auto name = p.stem().string() + "_overhead" + p.extension().string();
  return (p.parent_path() / name).string();
}

inline int cost_table_cmd(const CostOptions& o, std::ostream& out) {
  if (o.step == 0) throw Error(Errc::InvalidArgument, "--step must be positive");
  if (o.out_path.empty() || o.out_path == "-") {
    write_delay_table(out, o);
    out << "\n";
    write_overhead_table(out, o);
    return kExitOk;
  }
  const auto bytes_path = overhead_path(o.out_path);
  std::ofstream delay(o.out_path), bytes(bytes_path);
  if (!delay) throw Error(Errc::Config, "cannot write " + o.out_path);
  if (!bytes) throw Error(Errc::Config, "cannot write " + bytes_path);
  write_delay_table(delay, o);
  write_overhead_table(bytes, o);
  out << "wrote " << o.out_path << " " << bytes_path << "\n";
  return kExitOk;
}

struct SimOptions {
  std::string config;
  std::string out_path;
  std::optional<std::uint64_t> seed;
};

inline int simulate_cmd(const SimOptions& o, std::ostream& out) {
  const auto j = read_json(o.config);
  auto cfg = sim::config_from_json(j, {"n_list"});
  if (o.seed) cfg.rng_seed = *o.seed;
  std::vector<std::uint32_t> n_list;
  if (j.contains("n_list")) {
    try {
      n_list = j.at("n_list").get<std::vector<std::uint32_t>>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::Config, std::string("n_list: ") + e.what());
    }
    if (n_list.empty()) throw Error(Errc::Config, "n_list is empty");
  } else {
    n_list = {cfg.n_vehicles};
  }
  const auto rows = sim::sweep_density(cfg, n_list);
  std::ofstream f(o.out_path);
  if (!f) throw Error(Errc::Config, "cannot write " + o.out_path);
  sim::write_sweep_csv(f, rows);
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& r : rows) reports.push_back(sim::to_json(r.report));
  out << reports.dump(2) << "\n";
  return kExitOk;
}

struct CodecOptions {
  std::string file;
  std::string profile = "default";
  std::string params;
};

inline int codec_dump_cmd(const CodecOptions& o, std::ostream& out) {
  const auto sp = o.params.empty() ? crypto::profile_params(crypto::parse_profile(o.profile))
                                   : crypto::params_from_json(read_json(o.params));
  const auto m = decode_message(sp, wire_bytes(read_bytes(o.file)));
  out << describe(sp, m);
  return kExitOk;
}

}  // namespace detail

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using namespace detail;
  CLI::App app{"Vehicular group key agreement and authentication toolkit", "vgka"};
  app.require_subcommand(1);
  std::uint64_t seed = 1;
  bool seed_given = false;
  auto add_seed = [&](CLI::App* c) {
    c->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t s) {
      seed = s;
      seed_given = true;
    }, "RNG seed");
  };
  std::function<int(Rng&)> action;

  TaOptions ta_o;
  auto* ta_cmd = app.add_subcommand("ta", "Trust authority operations");
  ta_cmd->require_subcommand(1);
  auto ta_files = [&](CLI::App* c) {
    c->add_option("--registry", ta_o.registry, "Registry JSON");
    c->add_option("--keystore", ta_o.keystore, "Keystore JSON");
    add_seed(c);
  };
  auto* ta_init = ta_cmd->add_subcommand("init", "Create system parameters and TA keys");
  ta_files(ta_init);
  ta_init->add_option("--profile", ta_o.profile, "test | test64 | default");
  ta_init->add_option("--params-out", ta_o.params_out, "Also write the public parameters here");
  ta_init->callback([&] { action = [&](Rng& r) { return ta_init_cmd(ta_o, r, out); }; });

  auto* ta_rsu = ta_cmd->add_subcommand("register-rsu", "Register an RSU");
  ta_files(ta_rsu);
  ta_rsu->add_option("--tid", ta_o.tid, "RSU identity")->required();
  ta_rsu->add_option("--x-mm", ta_o.x_mm, "Location x in millimetres");
  ta_rsu->add_option("--y-mm", ta_o.y_mm, "Location y in millimetres");
  ta_rsu->add_option("--beacon-out", ta_o.beacon_out, "Write the signed beacon here");
  ta_rsu->callback([&] { action = [&](Rng& r) { return ta_register_rsu_cmd(ta_o, r, out); }; });

  auto* ta_veh = ta_cmd->add_subcommand("register-vehicle", "Register a vehicle");
  ta_files(ta_veh);
  ta_veh->add_option("--tid", ta_o.tid, "Vehicle identity")->required();
  ta_veh->callback([&] { action = [&](Rng&) { return ta_register_vehicle_cmd(ta_o, out); }; });

  auto* ta_pseud = ta_cmd->add_subcommand("pseudonym", "Derive a fresh pseudonym for a registered vehicle");
  ta_files(ta_pseud);
  ta_pseud->add_option("--tid", ta_o.tid, "Vehicle identity")->required();
  ta_pseud->callback([&] { action = [&](Rng& r) { return ta_pseudonym_cmd(ta_o, r, out); }; });

  auto* ta_trace = ta_cmd->add_subcommand("trace", "Recover the identity behind a pseudonym");
  ta_files(ta_trace);
  ta_trace->add_option("--fid", ta_o.fid_hex, "Pseudonym, 84 hex digits")->required();
  ta_trace->add_option("--pk", ta_o.pk, "Epoch public key, decimal")->required();
  ta_trace->callback([&] { action = [&](Rng&) { return ta_trace_cmd(ta_o, out); }; });

  GkaOptions gka_o;
  auto* gka_cmd = app.add_subcommand("gka", "RSU group key agreement");
  gka_cmd->require_subcommand(1);
  auto* gka_run = gka_cmd->add_subcommand("run", "Run the two-round agreement among n RSUs");
  gka_run->add_option("--n", gka_o.n, "Number of RSUs")->check(CLI::Range(2u, 4096u));
  gka_run->add_option("--profile", gka_o.profile, "test | test64 | default");
  gka_run->add_option("--corrupt", gka_o.corrupt, "Tamper with this member's round-2 message");
  add_seed(gka_run);
  gka_run->callback([&] { action = [&](Rng& r) { return gka_run_cmd(gka_o, r, out); }; });

  AuthOptions auth_o;
  auto* auth_cmd = app.add_subcommand("auth", "Vehicle to RSU authentication");
  auth_cmd->require_subcommand(1);
  auto* auth_demo = auth_cmd->add_subcommand("demo", "Walk through admission, group keying and hand-over");
  auth_demo->add_option("--profile", auth_o.profile, "test | test64 | default");
  auth_demo->add_flag("--illegal", auth_o.illegal, "Use a vehicle with forged credentials");
  auth_demo->add_option("--delay-ms", auth_o.delay_ms, "Delay between hello and its processing");
  auth_demo->add_option("--out-dir", auth_o.out_dir, "Write every wire message to this directory");
  add_seed(auth_demo);
  auth_demo->callback([&] { action = [&](Rng& r) { return auth_demo_cmd(auth_o, r, out); }; });

  CostOptions cost_o;
  auto* cost_cmd = app.add_subcommand("cost", "Analytic cost models");
  cost_cmd->require_subcommand(1);
  auto* cost_table = cost_cmd->add_subcommand("table", "Delay and overhead per scheme");
  cost_table->add_option("--n-max", cost_o.n_max, "Largest message count");
  cost_table->add_option("--step", cost_o.step, "Message count step");
  cost_table->add_option("--out", cost_o.out_path, "Delay CSV; overhead goes to <stem>_overhead<ext> (stdout when omitted)");
  add_seed(cost_table);
  cost_table->callback([&] { action = [&](Rng&) { return cost_table_cmd(cost_o, out); }; });

  SimOptions sim_o;
  auto* sim_cmd = app.add_subcommand("simulate", "Run the traffic simulation");
  sim_cmd->add_option("--config", sim_o.config, "Scenario JSON")->required();
  sim_cmd->add_option("--out", sim_o.out_path, "Per-density CSV")->required();
  add_seed(sim_cmd);
  sim_cmd->callback([&] {
    action = [&](Rng&) {
      if (seed_given) sim_o.seed = seed;
      return simulate_cmd(sim_o, out);
    };
  });

  CodecOptions codec_o;
  auto* codec_cmd = app.add_subcommand("codec", "Wire format tools");
  codec_cmd->require_subcommand(1);
  auto* codec_dump = codec_cmd->add_subcommand("dump", "Decode and print a wire message");
  codec_dump->add_option("file", codec_o.file, "Binary or hex file")->required();
  codec_dump->add_option("--profile", codec_o.profile, "Parameter profile used to decode");
  codec_dump->add_option("--params", codec_o.params, "Parameter JSON used to decode");
  add_seed(codec_dump);
  codec_dump->callback([&] { action = [&](Rng&) { return codec_dump_cmd(codec_o, out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  if (!action) {
    err << app.help();
    return kExitInvalid;
  }
  try {
    Rng rng(seed);
    return action(rng);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return is_protocol_failure(e.code()) ? kExitProtocol : kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
}

}  // namespace vgka::cli

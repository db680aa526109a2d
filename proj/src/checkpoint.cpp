#include "coins/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

namespace coins {

namespace {
constexpr char kMagic[4] = {'C', 'O', 'I', 'N'};
}

void ByteWriter::u16(std::uint16_t v) {
  bytes.push_back(static_cast<std::uint8_t>(v & 0xff));
  bytes.push_back(static_cast<std::uint8_t>(v >> 8));
}
void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i)
    bytes.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}
void ByteWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i)
    bytes.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}
void ByteWriter::f32(float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  u32(bits);
}
void ByteWriter::str(const std::string& s) {
  u32(static_cast<std::uint32_t>(s.size()));
  bytes.insert(bytes.end(), s.begin(), s.end());
}

void ByteReader::need(std::size_t k) const {
  if (at + k > n) throw CheckpointError("checkpoint payload truncated");
}
std::uint8_t ByteReader::u8() {
  need(1);
  return p[at++];
}
std::uint16_t ByteReader::u16() {
  need(2);
  std::uint16_t v = static_cast<std::uint16_t>(p[at]) |
                    static_cast<std::uint16_t>(p[at + 1]) << 8;
  at += 2;
  return v;
}
std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[at + i]) << (8 * i);
  at += 4;
  return v;
}
std::uint64_t ByteReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[at + i]) << (8 * i);
  at += 8;
  return v;
}
float ByteReader::f32() {
  const std::uint32_t bits = u32();
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}
std::string ByteReader::str() {
  const std::uint32_t len = u32();
  need(len);
  std::string s(reinterpret_cast<const char*>(p + at), len);
  at += len;
  return s;
}

// --- container ---------------------------------------------------------------

void write_checkpoint(const std::string& path, const SectionMap& sections) {
  ByteWriter head;
  head.bytes.insert(head.bytes.end(), kMagic, kMagic + 4);
  head.u16(kCheckpointVersion);
  head.u16(0);  // reserved
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot open for writing: " + tmp);
    out.write(reinterpret_cast<const char*>(head.bytes.data()),
              static_cast<std::streamsize>(head.bytes.size()));
    for (const auto& [name, payload] : sections) {
      ByteWriter sec;
      sec.str(name);
      sec.u64(payload.size());
      out.write(reinterpret_cast<const char*>(sec.bytes.data()),
                static_cast<std::streamsize>(sec.bytes.size()));
      out.write(reinterpret_cast<const char*>(payload.data()),
                static_cast<std::streamsize>(payload.size()));
    }
    out.flush();
    if (!out) throw CheckpointError("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw CheckpointError("rename failed: " + tmp + " -> " + path);
}

SectionMap read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("missing checkpoint: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw CheckpointError("bad checkpoint magic: " + path);
  ByteReader r(bytes);
  r.at = 4;
  const std::uint16_t version = r.u16();
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version in " + path);
  r.u16();  // reserved
  SectionMap out;
  while (!r.done()) {
    const std::string name = r.str();
    const std::uint64_t len = r.u64();
    r.need(len);
    out[name] = std::vector<std::uint8_t>(r.p + r.at, r.p + r.at + len);
    r.at += len;
  }
  return out;
}

namespace {

const std::vector<std::uint8_t>& require(const SectionMap& m,
                                         const std::string& name,
                                         const std::string& path) {
  const auto it = m.find(name);
  if (it == m.end())
    throw CheckpointError("checkpoint " + path + " lacks section " + name);
  return it->second;
}

}  // namespace

// --- typed payloads ----------------------------------------------------------

void encode_mlp(ByteWriter& w, const MLP<float>& net) {
  w.u32(static_cast<std::uint32_t>(net.dims.size()));
  for (int d : net.dims) w.i32(d);
  const std::vector<float> p = net.params_flat();
  w.u64(p.size());
  for (float v : p) w.f32(v);
}

void decode_mlp(ByteReader& r, MLP<float>& net) {
  const std::uint32_t nd = r.u32();
  std::vector<int> dims(nd);
  for (auto& d : dims) d = r.i32();
  Rng dummy(0);
  net.init(dims, dummy, /*zero_final=*/true);
  const std::uint64_t np = r.u64();
  if (np != net.num_params())
    throw CheckpointError("mlp parameter count mismatch");
  std::vector<float> p(np);
  for (auto& v : p) v = r.f32();
  net.set_params_flat(p);
}

void encode_model(ByteWriter& w, const GaussianModel& m) {
  w.i32(m.source);
  w.i32(m.target);
  w.u8(m.active ? 1 : 0);
  w.i32(m.core.d);
  w.f32(m.core.var_min);
  encode_mlp(w, m.core.net);
}

void decode_model(ByteReader& r, GaussianModel& m) {
  m.source = r.i32();
  m.target = r.i32();
  m.active = r.u8() != 0;
  m.core.d = r.i32();
  m.core.var_min = r.f32();
  decode_mlp(r, m.core.net);
}

void encode_mask(ByteWriter& w, const ControlMask& m) {
  w.u32(static_cast<std::uint32_t>(m.mask.size()));
  for (auto b : m.mask) w.u8(b);
  w.u32(static_cast<std::uint32_t>(m.midx.size()));
  for (int i : m.midx) w.i32(i);
  w.u8(m.discrete ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(m.goals.size()));
  for (const Vec& g : m.goals) {
    w.u32(static_cast<std::uint32_t>(g.size()));
    for (int k = 0; k < g.size(); ++k) w.f32(g[k]);
  }
  w.u32(static_cast<std::uint32_t>(m.lo.size()));
  for (int k = 0; k < m.lo.size(); ++k) w.f32(m.lo[k]);
  for (int k = 0; k < m.hi.size(); ++k) w.f32(m.hi[k]);
  w.i32(m.n_detected);
  w.u32(static_cast<std::uint32_t>(m.mean_dev.size()));
  for (int k = 0; k < m.mean_dev.size(); ++k) w.f32(m.mean_dev[k]);
}

void decode_mask(ByteReader& r, ControlMask& m) {
  m.mask.resize(r.u32());
  for (auto& b : m.mask) b = r.u8();
  m.midx.resize(r.u32());
  for (auto& i : m.midx) i = r.i32();
  m.discrete = r.u8() != 0;
  m.goals.resize(r.u32());
  for (Vec& g : m.goals) {
    g.resize(r.u32());
    for (int k = 0; k < g.size(); ++k) g[k] = r.f32();
  }
  const std::uint32_t md = r.u32();
  m.lo.resize(md);
  m.hi.resize(md);
  for (int k = 0; k < m.lo.size(); ++k) m.lo[k] = r.f32();
  for (int k = 0; k < m.hi.size(); ++k) m.hi[k] = r.f32();
  m.n_detected = r.i32();
  m.mean_dev.resize(r.u32());
  for (int k = 0; k < m.mean_dev.size(); ++k) m.mean_dev[k] = r.f32();
}

namespace {

void encode_snap(ByteWriter& w, const Snap& s) {
  w.f32(s.paddle_x);
  for (float v : s.ball) w.f32(v);
  w.u64(s.alive[0]);
  w.u64(s.alive[1]);
}

Snap decode_snap(ByteReader& r) {
  Snap s;
  s.paddle_x = r.f32();
  for (float& v : s.ball) v = r.f32();
  s.alive[0] = r.u64();
  s.alive[1] = r.u64();
  return s;
}

}  // namespace

void encode_log(ByteWriter& w, const TransitionLog& log) {
  w.u32(static_cast<std::uint32_t>(log.num_episodes()));
  for (const EpisodeLog& ep : log.episodes()) {
    w.u8(ep.variant);
    w.u64(ep.env_seed);
    w.u32(static_cast<std::uint32_t>(ep.layout.size()));
    for (const BlockDef& b : ep.layout) {
      w.i32(b.y0);
      w.i32(b.x0);
      w.i32(b.w);
      w.i32(b.h);
      w.f32(b.value);
      w.u8(b.breakable ? 1 : 0);
    }
    encode_snap(w, ep.final_snap);
    w.u32(static_cast<std::uint32_t>(ep.steps.size()));
    for (const StepRec& st : ep.steps) {
      encode_snap(w, st.pre);
      w.u8(st.action);
      w.f32(st.reward);
      w.u8(st.flags);
      w.i16(st.block_hit);
    }
  }
}

void decode_log(ByteReader& r, TransitionLog& log) {
  log = TransitionLog();
  auto& episodes = log.episodes();
  episodes.resize(r.u32());
  for (EpisodeLog& ep : episodes) {
    ep.variant = r.u8();
    ep.env_seed = r.u64();
    ep.layout.resize(r.u32());
    for (BlockDef& b : ep.layout) {
      b.y0 = r.i32();
      b.x0 = r.i32();
      b.w = r.i32();
      b.h = r.i32();
      b.value = r.f32();
      b.breakable = r.u8() != 0;
    }
    ep.final_snap = decode_snap(r);
    ep.steps.resize(r.u32());
    for (StepRec& st : ep.steps) {
      st.pre = decode_snap(r);
      st.action = r.u8();
      st.reward = r.f32();
      st.flags = r.u8();
      st.block_hit = r.i16();
    }
  }
}

void encode_chain(ByteWriter& w, const SkillChain& chain) {
  w.u32(static_cast<std::uint32_t>(chain.skills.size()));
  for (const Skill& sk : chain.skills) {
    w.i32(sk.level);
    w.i32(sk.source);
    w.i32(sk.target);
    w.f32(sk.thr.eps_act);
    w.f32(sk.thr.eps_pas);
    w.f32(sk.eps_c);
    w.f32(sk.eps_rew);
    w.f32(sk.rel_d);
    w.i32(sk.timeout);
    w.i32(sk.n_actions);
    encode_mask(w, sk.mask);
    if (!sk.models) throw CheckpointError("skill without models");
    encode_model(w, sk.models->passive);
    encode_model(w, sk.models->active);
    encode_mlp(w, sk.policy.net);
  }
}

void decode_chain(ByteReader& r, SkillChain& chain) {
  chain.schema = Schema();
  chain.skills.resize(r.u32());
  for (Skill& sk : chain.skills) {
    sk.level = r.i32();
    sk.source = r.i32();
    sk.target = r.i32();
    sk.thr.eps_act = r.f32();
    sk.thr.eps_pas = r.f32();
    sk.eps_c = r.f32();
    sk.eps_rew = r.f32();
    sk.rel_d = r.f32();
    sk.timeout = r.i32();
    sk.n_actions = r.i32();
    decode_mask(r, sk.mask);
    sk.models = std::make_shared<PairModels>();
    decode_model(r, sk.models->passive);
    decode_model(r, sk.models->active);
    decode_mlp(r, sk.policy.net);
    sk.policy.n_actions = sk.policy.net.dims.back();
  }
}

// --- whole-file helpers --------------------------------------------------------

void save_log(const std::string& path, const TransitionLog& log) {
  ByteWriter w;
  encode_log(w, log);
  write_checkpoint(path, {{"log", std::move(w.bytes)}});
}

TransitionLog load_log(const std::string& path) {
  const SectionMap m = read_checkpoint(path);
  ByteReader r(require(m, "log", path));
  TransitionLog log;
  decode_log(r, log);
  return log;
}

void save_chain(const std::string& path, const SkillChain& chain) {
  ByteWriter w;
  encode_chain(w, chain);
  write_checkpoint(path, {{"chain", std::move(w.bytes)}});
}

SkillChain load_chain(const std::string& path) {
  const SectionMap m = read_checkpoint(path);
  ByteReader r(require(m, "chain", path));
  SkillChain chain;
  decode_chain(r, chain);
  return chain;
}

void save_models(const std::string& path, const GaussianModel& passive,
                 const GaussianModel& active) {
  ByteWriter wp, wa;
  encode_model(wp, passive);
  encode_model(wa, active);
  write_checkpoint(
      path, {{"passive", std::move(wp.bytes)}, {"active", std::move(wa.bytes)}});
}

void load_models(const std::string& path, GaussianModel& passive,
                 GaussianModel& active) {
  const SectionMap m = read_checkpoint(path);
  ByteReader rp(require(m, "passive", path));
  decode_model(rp, passive);
  ByteReader ra(require(m, "active", path));
  decode_model(ra, active);
}

void save_policy(const std::string& path, const QNet& qnet) {
  ByteWriter w;
  encode_mlp(w, qnet.net);
  write_checkpoint(path, {{"qnet", std::move(w.bytes)}});
}

QNet load_policy(const std::string& path) {
  const SectionMap m = read_checkpoint(path);
  ByteReader r(require(m, "qnet", path));
  QNet q;
  decode_mlp(r, q.net);
  q.n_actions = q.net.dims.back();
  return q;
}

void save_build_state(const std::string& path, const BuildState& st) {
  ByteWriter meta;
  meta.u64(st.seed);
  meta.u8(static_cast<std::uint8_t>(st.variant));
  meta.i32(st.stages_done);
  meta.u8(st.terminated ? 1 : 0);
  meta.i64(st.total_env_steps);
  ByteWriter chain;
  encode_chain(chain, st.chain);
  write_checkpoint(path, {{"meta", std::move(meta.bytes)},
                          {"chain", std::move(chain.bytes)}});
}

BuildState load_build_state(const std::string& path) {
  const SectionMap m = read_checkpoint(path);
  BuildState st;
  ByteReader meta(require(m, "meta", path));
  st.seed = meta.u64();
  st.variant = static_cast<Variant>(meta.u8());
  st.stages_done = meta.i32();
  st.terminated = meta.u8() != 0;
  st.total_env_steps = meta.i64();
  ByteReader chain(require(m, "chain", path));
  decode_chain(chain, st.chain);
  return st;
}

}  // namespace coins

#pragma once
// Binary checkpoint container and typed payloads.
//
// Layout: magic "COIN", u16 format version, then a sequence of named
// sections [u32 name_len][name][u64 payload_len][payload]. All integers and
// floats are written little-endian field by field; matrices serialize as
// their parameter vectors. Writes land in a temp file that is renamed over
// the destination, so a crash never leaves a truncated checkpoint behind.
// Readers throw CheckpointError on bad magic, version, truncation, or a
// missing section.

#include "coins/chain.hpp"
#include "coins/common.hpp"
#include "coins/log.hpp"
#include "coins/rl.hpp"
#include "coins/skill.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace coins {

constexpr std::uint16_t kCheckpointVersion = 1;

// Low-level byte-buffer codec (exposed for tests).
struct ByteWriter {
  std::vector<std::uint8_t> bytes;
  void u8(std::uint8_t v) { bytes.push_back(v); }
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i16(std::int16_t v) { u16(static_cast<std::uint16_t>(v)); }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f32(float v);
  void str(const std::string& s);
};

struct ByteReader {
  const std::uint8_t* p = nullptr;
  std::size_t n = 0, at = 0;
  explicit ByteReader(const std::vector<std::uint8_t>& b)
      : p(b.data()), n(b.size()) {}
  void need(std::size_t k) const;
  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int16_t i16() { return static_cast<std::int16_t>(u16()); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  float f32();
  std::string str();
  bool done() const { return at == n; }
};

using SectionMap = std::map<std::string, std::vector<std::uint8_t>>;

// Atomic container write (temp file + rename) and strict read.
void write_checkpoint(const std::string& path, const SectionMap& sections);
SectionMap read_checkpoint(const std::string& path);

// Typed payload codecs.
void encode_mlp(ByteWriter& w, const MLP<float>& net);
void decode_mlp(ByteReader& r, MLP<float>& net);
void encode_model(ByteWriter& w, const GaussianModel& m);
void decode_model(ByteReader& r, GaussianModel& m);
void encode_mask(ByteWriter& w, const ControlMask& m);
void decode_mask(ByteReader& r, ControlMask& m);
void encode_log(ByteWriter& w, const TransitionLog& log);
void decode_log(ByteReader& r, TransitionLog& log);
void encode_chain(ByteWriter& w, const SkillChain& chain);
void decode_chain(ByteReader& r, SkillChain& chain);

// Whole-file helpers.
void save_log(const std::string& path, const TransitionLog& log);
TransitionLog load_log(const std::string& path);

void save_chain(const std::string& path, const SkillChain& chain);
SkillChain load_chain(const std::string& path);

void save_models(const std::string& path, const GaussianModel& passive,
                 const GaussianModel& active);
void load_models(const std::string& path, GaussianModel& passive,
                 GaussianModel& active);

void save_policy(const std::string& path, const QNet& qnet);
QNet load_policy(const std::string& path);

struct BuildState {
  std::uint64_t seed = 0;
  Variant variant = Variant::Base;
  std::int32_t stages_done = 0;
  bool terminated = false;
  std::int64_t total_env_steps = 0;
  SkillChain chain;
};

void save_build_state(const std::string& path, const BuildState& st);
BuildState load_build_state(const std::string& path);

}  // namespace coins

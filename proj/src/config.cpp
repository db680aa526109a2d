#include "coins/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace coins {
namespace {

enum class Kind { I32, I64, F32, U64, Bool, VariantK, ListI64, ListI32 };

struct Entry {
  std::string section, key;
  Kind kind;
  std::vector<void*> slots;  // same value fans out to every slot
};

std::vector<Entry> registry(RunConfig& rc) {
  BuildConfig& b = rc.build;
  TaskConfig& t = rc.task;
  auto one = [](std::string sec, std::string key, Kind k, void* p) {
    return Entry{std::move(sec), std::move(key), k, {p}};
  };
  auto two = [](std::string sec, std::string key, Kind k, void* p, void* q) {
    return Entry{std::move(sec), std::move(key), k, {p, q}};
  };
  std::vector<Entry> r;
  r.push_back(two("run", "variant", Kind::VariantK, &b.variant, &t.variant));
  r.push_back(two("run", "seed", Kind::U64, &b.seed, &t.seed));
  r.push_back(two("run", "verbose", Kind::Bool, &b.verbose, &t.verbose));

  r.push_back(one("build", "collect_increment", Kind::I32,
                  &b.collect_increment));
  r.push_back(one("build", "max_increments", Kind::I32, &b.max_increments));
  r.push_back(one("build", "score_subsample", Kind::I32, &b.score_subsample));
  r.push_back(one("build", "max_stages", Kind::I32, &b.max_stages));
  r.push_back(one("build", "eps_si", Kind::F32, &b.eps_si));
  r.push_back(one("build", "eta_eps", Kind::F32, &b.eta_eps));
  r.push_back(one("build", "n_disc", Kind::I32, &b.n_disc));
  r.push_back(one("build", "eps_rew", Kind::F32, &b.eps_rew));
  r.push_back(one("build", "rel_d", Kind::F32, &b.rel_d));
  r.push_back(one("build", "final_fit_steps", Kind::I32, &b.final_fit_steps));
  r.push_back(one("build", "balance_lambda", Kind::F32, &b.balance_lambda));
  r.push_back(one("build", "balance_prox", Kind::F32, &b.balance_prox));
  r.push_back(one("build", "balance_cap", Kind::F32, &b.balance_cap));
  r.push_back(one("build", "block_candidates", Kind::I32,
                  &b.block_candidates));
  r.push_back(one("build", "min_int_count", Kind::I32, &b.min_int_count));
  r.push_back(one("build", "min_int_frac", Kind::F32, &b.min_int_frac));
  r.push_back(one("build", "collect_eps", Kind::F32, &b.collect_eps));
  r.push_back(one("build", "skill_budgets", Kind::ListI64, &b.skill_budgets));
  r.push_back(one("build", "skill_snapshots", Kind::ListI64,
                  &b.skill_snapshots));
  r.push_back(one("build", "skill_timeouts", Kind::ListI32,
                  &b.skill_timeouts));
  r.push_back(one("build", "eval_attempts", Kind::I32, &b.eval_attempts));
  r.push_back(one("build", "stop_after_stage", Kind::I32,
                  &b.stop_after_stage));

  r.push_back(one("detector", "eps_act", Kind::F32, &b.thr.eps_act));
  r.push_back(one("detector", "eps_pas", Kind::F32, &b.thr.eps_pas));

  FitConfig& f = b.fit;
  r.push_back(one("fit", "max_steps", Kind::I32, &f.max_steps));
  r.push_back(one("fit", "min_steps", Kind::I32, &f.min_steps));
  r.push_back(one("fit", "batch", Kind::I32, &f.batch));
  r.push_back(one("fit", "lr", Kind::F32, &f.lr));
  r.push_back(one("fit", "monitor_every", Kind::I32, &f.monitor_every));
  r.push_back(one("fit", "monitor_size", Kind::I32, &f.monitor_size));
  r.push_back(one("fit", "plateau_patience", Kind::I32, &f.plateau_patience));
  r.push_back(one("fit", "plateau_tol", Kind::F32, &f.plateau_tol));
  r.push_back(one("fit", "focus_frac", Kind::F32, &f.focus_frac));

  LearnerConfig& lb = b.learner;
  LearnerConfig& lt = t.learner;
  r.push_back(two("learner", "batch", Kind::I32, &lb.batch, &lt.batch));
  r.push_back(two("learner", "lr", Kind::F32, &lb.lr, &lt.lr));
  r.push_back(two("learner", "gamma", Kind::F32, &lb.gamma, &lt.gamma));
  r.push_back(two("learner", "target_sync", Kind::I32, &lb.target_sync,
                  &lt.target_sync));
  r.push_back(two("learner", "replay_capacity", Kind::I32,
                  &lb.replay_capacity, &lt.replay_capacity));
  r.push_back(two("learner", "warmup", Kind::I32, &lb.warmup, &lt.warmup));
  r.push_back(two("learner", "eps_start", Kind::F32, &lb.eps_start,
                  &lt.eps_start));
  r.push_back(two("learner", "eps_final", Kind::F32, &lb.eps_final,
                  &lt.eps_final));
  r.push_back(two("learner", "eps_frac", Kind::F32, &lb.eps_frac,
                  &lt.eps_frac));
  r.push_back(two("learner", "updates_per_collect", Kind::I32,
                  &lb.updates_per_collect, &lt.updates_per_collect));
  r.push_back(two("learner", "her_rate", Kind::F32, &lb.her_rate,
                  &lt.her_rate));
  r.push_back(two("learner", "n_complete", Kind::I32, &lb.n_complete,
                  &lt.n_complete));
  r.push_back(two("learner", "success_window", Kind::I32, &lb.success_window,
                  &lt.success_window));
  r.push_back(two("learner", "success_tol", Kind::F32, &lb.success_tol,
                  &lt.success_tol));
  r.push_back(two("learner", "success_floor", Kind::F32, &lb.success_floor,
                  &lt.success_floor));

  r.push_back(one("task", "budget", Kind::I64, &t.budget));
  r.push_back(one("task", "eval_every", Kind::I64, &t.eval_every));
  r.push_back(one("task", "eval_episodes", Kind::I32, &t.eval_episodes));
  return r;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& origin, int line,
                       const std::string& msg) {
  throw ConfigError(origin + ":" + std::to_string(line) + ": " + msg);
}

template <typename T>
T parse_num(const std::string& v, const std::string& origin, int line);

template <>
long long parse_num<long long>(const std::string& v,
                               const std::string& origin, int line) {
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (...) {
    fail(origin, line, "expected an integer, got '" + v + "'");
  }
  if (used != v.size())
    fail(origin, line, "trailing characters in integer '" + v + "'");
  return out;
}

template <>
unsigned long long parse_num<unsigned long long>(const std::string& v,
                                                 const std::string& origin,
                                                 int line) {
  std::size_t used = 0;
  unsigned long long out = 0;
  try {
    out = std::stoull(v, &used);
  } catch (...) {
    fail(origin, line, "expected an unsigned integer, got '" + v + "'");
  }
  if (used != v.size())
    fail(origin, line, "trailing characters in integer '" + v + "'");
  return out;
}

template <>
float parse_num<float>(const std::string& v, const std::string& origin,
                       int line) {
  std::size_t used = 0;
  float out = 0;
  try {
    out = std::stof(v, &used);
  } catch (...) {
    fail(origin, line, "expected a number, got '" + v + "'");
  }
  if (used != v.size())
    fail(origin, line, "trailing characters in number '" + v + "'");
  return out;
}

bool parse_bool(const std::string& v, const std::string& origin, int line) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(origin, line, "expected true/false, got '" + v + "'");
}

std::vector<std::string> split_commas(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

void assign(const Entry& e, const std::string& value,
            const std::string& origin, int line) {
  for (void* slot : e.slots) {
    switch (e.kind) {
      case Kind::I32:
        *static_cast<int*>(slot) = static_cast<int>(
            parse_num<long long>(value, origin, line));
        break;
      case Kind::I64:
        *static_cast<long*>(slot) = static_cast<long>(
            parse_num<long long>(value, origin, line));
        break;
      case Kind::F32:
        *static_cast<float*>(slot) = parse_num<float>(value, origin, line);
        break;
      case Kind::U64:
        *static_cast<std::uint64_t*>(slot) =
            parse_num<unsigned long long>(value, origin, line);
        break;
      case Kind::Bool:
        *static_cast<bool*>(slot) = parse_bool(value, origin, line);
        break;
      case Kind::VariantK:
        try {
          *static_cast<Variant*>(slot) = variant_from_string(value);
        } catch (const CoinsError& err) {
          fail(origin, line, err.what());
        }
        break;
      case Kind::ListI64: {
        auto& vec = *static_cast<std::vector<long>*>(slot);
        vec.clear();
        for (const std::string& item : split_commas(value))
          vec.push_back(static_cast<long>(
              parse_num<long long>(item, origin, line)));
        break;
      }
      case Kind::ListI32: {
        auto& vec = *static_cast<std::vector<int>*>(slot);
        vec.clear();
        for (const std::string& item : split_commas(value))
          vec.push_back(static_cast<int>(
              parse_num<long long>(item, origin, line)));
        break;
      }
    }
  }
}

std::string format_entry(const Entry& e) {
  std::ostringstream os;
  void* slot = e.slots.front();
  switch (e.kind) {
    case Kind::I32:
      os << *static_cast<int*>(slot);
      break;
    case Kind::I64:
      os << *static_cast<long*>(slot);
      break;
    case Kind::F32:
      os << *static_cast<float*>(slot);
      break;
    case Kind::U64:
      os << *static_cast<std::uint64_t*>(slot);
      break;
    case Kind::Bool:
      os << (*static_cast<bool*>(slot) ? "true" : "false");
      break;
    case Kind::VariantK:
      os << to_string(*static_cast<Variant*>(slot));
      break;
    case Kind::ListI64: {
      const auto& vec = *static_cast<std::vector<long>*>(slot);
      for (std::size_t i = 0; i < vec.size(); ++i)
        os << (i ? "," : "") << vec[i];
      break;
    }
    case Kind::ListI32: {
      const auto& vec = *static_cast<std::vector<int>*>(slot);
      for (std::size_t i = 0; i < vec.size(); ++i)
        os << (i ? "," : "") << vec[i];
      break;
    }
  }
  return os.str();
}

}  // namespace

void apply_config_text(RunConfig& rc, const std::string& text,
                       const std::string& origin) {
  const std::vector<Entry> reg = registry(rc);
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(origin, line, "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      bool known = false;
      for (const Entry& e : reg) known |= e.section == section;
      if (!known) fail(origin, line, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      fail(origin, line, "expected key = value, got '" + s + "'");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (section.empty())
      fail(origin, line, "key '" + key + "' appears before any [section]");
    const Entry* hit = nullptr;
    for (const Entry& e : reg)
      if (e.section == section && e.key == key) hit = &e;
    if (!hit)
      fail(origin, line, "unknown key '" + key + "' in [" + section + "]");
    assign(*hit, value, origin, line);
  }
}

void apply_config_file(RunConfig& rc, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(rc, ss.str(), path);
}

std::string serialize_config(const RunConfig& rc) {
  RunConfig copy = rc;  // registry wants non-const slots
  const std::vector<Entry> reg = registry(copy);
  std::ostringstream os;
  std::string section;
  for (const Entry& e : reg) {
    if (e.section != section) {
      if (!section.empty()) os << "\n";
      section = e.section;
      os << "[" << section << "]\n";
    }
    os << e.key << " = " << format_entry(e) << "\n";
  }
  return os.str();
}

}  // namespace coins

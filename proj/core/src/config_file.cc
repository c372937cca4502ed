#include "nic/config_file.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "nic/errors.h"

namespace nic {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Entry {
  std::string value;
  int line;
};

long parse_int(const Entry& e, const std::string& key) {
  long v = 0;
  const char* first = e.value.data();
  const char* last = first + e.value.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError(key + ": expected an integer, got '" + e.value + "'", e.line);
  }
  return v;
}

double parse_real(const Entry& e, const std::string& key) {
  try {
    std::size_t used = 0;
    double v = std::stod(e.value, &used);
    if (used != e.value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + e.value + "'", e.line);
  }
}

bool parse_bool(const Entry& e, const std::string& key) {
  if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
  if (e.value == "false" || e.value == "0" || e.value == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + e.value + "'", e.line);
}

std::array<int, 3> parse_triple(const Entry& e, const std::string& key) {
  std::array<int, 3> out{};
  std::stringstream ss(e.value);
  std::string item;
  int n = 0;
  while (std::getline(ss, item, ',')) {
    if (n == 3) break;
    out[n++] = static_cast<int>(parse_int(Entry{trim(item), e.line}, key));
  }
  if (n != 3 || std::getline(ss, item, ',')) {
    throw ConfigError(key + ": expected three comma-separated integers", e.line);
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const Entry&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"lr0", [](RunConfig& c, const Entry& e, const std::string& k) { c.train.lr0 = parse_real(e, k); }},
      {"halve_every", [](RunConfig& c, const Entry& e, const std::string& k) { c.train.halve_every = parse_int(e, k); }},
      {"stop_halving_after", [](RunConfig& c, const Entry& e, const std::string& k) { c.train.stop_halving_after = parse_int(e, k); }},
      {"epochs", [](RunConfig& c, const Entry& e, const std::string& k) { c.train.epochs = parse_int(e, k); }},
      {"iters_per_epoch", [](RunConfig& c, const Entry& e, const std::string& k) { c.train.iters_per_epoch = parse_int(e, k); }},
      {"batch_size", [](RunConfig& c, const Entry& e, const std::string& k) { c.train.batch_size = parse_int(e, k); }},
      {"crop", [](RunConfig& c, const Entry& e, const std::string& k) { c.train.crop = parse_int(e, k); }},
      {"crop_stride", [](RunConfig& c, const Entry& e, const std::string& k) { c.train.crop_stride = parse_int(e, k); }},
      {"flip_prob", [](RunConfig& c, const Entry& e, const std::string& k) { c.train.flip_prob = parse_real(e, k); }},
      {"seed", [](RunConfig& c, const Entry& e, const std::string& k) {
         long v = parse_int(e, k);
         if (v < 0) throw ConfigError("seed must be non-negative", e.line);
         c.train.seed = static_cast<std::uint64_t>(v);
       }},
      {"alpha", [](RunConfig& c, const Entry& e, const std::string& k) { c.train.loss.alpha = parse_real(e, k); }},
      {"gamma", [](RunConfig& c, const Entry& e, const std::string& k) { c.train.loss.gamma = parse_real(e, k); }},
      {"lambda_msssim", [](RunConfig& c, const Entry& e, const std::string& k) { c.train.loss.lambda_msssim = parse_real(e, k); }},
      {"lambda_cycle", [](RunConfig& c, const Entry& e, const std::string& k) { c.train.loss.lambda_cycle = parse_real(e, k); }},
      {"finetune_steps", [](RunConfig& c, const Entry& e, const std::string& k) { c.train.finetune.steps = parse_int(e, k); }},
      {"finetune_lr", [](RunConfig& c, const Entry& e, const std::string& k) { c.train.finetune.lr = parse_real(e, k); }},
      {"finetune_patience", [](RunConfig& c, const Entry& e, const std::string& k) { c.train.finetune.patience = parse_int(e, k); }},
      {"enc_channels", [](RunConfig& c, const Entry& e, const std::string& k) { c.model.enc_channels = parse_triple(e, k); }},
      {"dec_channels", [](RunConfig& c, const Entry& e, const std::string& k) { c.model.dec_channels = parse_triple(e, k); }},
      {"code_channels", [](RunConfig& c, const Entry& e, const std::string& k) { c.model.code_channels = parse_int(e, k); }},
      {"leaky_slope", [](RunConfig& c, const Entry& e, const std::string& k) { c.model.leaky_slope = parse_real(e, k); }},
      {"stride_kernel", [](RunConfig& c, const Entry& e, const std::string& k) { c.model.stride_kernel = parse_int(e, k); }},
  };
  return table;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  std::map<std::string, Entry> entries;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected 'key = value', got '" + line + "'", line_no);
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key != "desk_scale" && key != "loss_mode" && !setters().count(key)) {
      throw ConfigError("unknown key '" + key + "'", line_no);
    }
    if (value.empty()) throw ConfigError(key + ": missing value", line_no);
    if (!entries.emplace(key, Entry{value, line_no}).second) {
      throw ConfigError("duplicate key '" + key + "'", line_no);
    }
  }

  RunConfig cfg;
  if (auto it = entries.find("desk_scale"); it != entries.end()) {
    if (parse_bool(it->second, "desk_scale")) {
      cfg.train = TrainConfig::desk();
      cfg.model = ModelConfig::desk();
    }
  }
  if (auto it = entries.find("loss_mode"); it != entries.end()) {
    try {
      const double alpha = cfg.train.loss.alpha;
      cfg.train.loss = LossConfig::for_mode(parse_loss_mode(it->second.value));
      cfg.train.loss.alpha = alpha;
    } catch (const ConfigError& e) {
      throw ConfigError(e.what(), it->second.line);
    }
  }
  for (const auto& [key, entry] : entries) {
    if (key == "desk_scale" || key == "loss_mode") continue;
    setters().at(key)(cfg, entry, key);
  }
  // Range checks; attribute failures to the line of the first key involved.
  auto line_of = [&](const std::string& key) {
    auto it = entries.find(key);
    return it == entries.end() ? 0 : it->second.line;
  };
  try {
    cfg.model.validate();
  } catch (const ConfigError& e) {
    int line = 0;
    for (const char* k : {"enc_channels", "dec_channels", "code_channels", "stride_kernel",
                          "leaky_slope"}) {
      if (std::string(e.what()).find(k) != std::string::npos) line = line_of(k);
    }
    throw ConfigError(e.what(), line);
  }
  try {
    cfg.train.validate();
  } catch (const ConfigError& e) {
    int line = 0;
    for (const auto& [key, entry] : entries) {
      if (std::string(e.what()).rfind(key, 0) == 0) line = entry.line;
    }
    throw ConfigError(e.what(), line);
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const RunConfig& c) {
  std::ostringstream os;
  os.precision(10);
  const auto& t = c.train;
  const auto r = t.loss.resolved();
  auto triple = [](const std::array<int, 3>& a) {
    return std::to_string(a[0]) + "," + std::to_string(a[1]) + "," + std::to_string(a[2]);
  };
  os << "lr0 = " << t.lr0 << '\n'
     << "halve_every = " << t.halve_every << '\n'
     << "stop_halving_after = " << t.stop_halving_after << '\n'
     << "epochs = " << t.epochs << '\n'
     << "iters_per_epoch = " << t.iters_per_epoch << '\n'
     << "batch_size = " << t.batch_size << '\n'
     << "crop = " << t.crop << '\n'
     << "crop_stride = " << t.crop_stride << '\n'
     << "flip_prob = " << t.flip_prob << '\n'
     << "seed = " << t.seed << '\n'
     << "loss_mode = " << to_string(r.mode) << '\n'
     << "alpha = " << r.alpha << '\n'
     << "gamma = " << r.gamma << '\n';
  if (r.mode != LossMode::kMse) os << "lambda_msssim = " << r.lambda_msssim << '\n';
  if (r.mode == LossMode::kMseMsssimCycle) os << "lambda_cycle = " << r.lambda_cycle << '\n';
  os << "finetune_steps = " << t.finetune.steps << '\n'
     << "finetune_lr = " << t.finetune.lr << '\n'
     << "finetune_patience = " << t.finetune.patience << '\n'
     << "enc_channels = " << triple(c.model.enc_channels) << '\n'
     << "code_channels = " << c.model.code_channels << '\n'
     << "dec_channels = " << triple(c.model.dec_channels) << '\n'
     << "leaky_slope = " << c.model.leaky_slope << '\n'
     << "stride_kernel = " << c.model.stride_kernel << '\n';
  return os.str();
}

}  // namespace nic

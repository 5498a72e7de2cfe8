#include "dsnn/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>

#include "dsnn/errors.hpp"

namespace dsnn::tasks {

std::vector<AddingSample> gen_adding(std::size_t steps, std::size_t count, std::uint64_t seed) {
  require(steps >= 2 && steps % 2 == 0, "gen_adding: sequence length must be even and >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> value(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> first(0, steps / 2 - 1);
  std::uniform_int_distribution<std::size_t> second(steps / 2, steps - 1);
  std::vector<AddingSample> out(count);
  for (auto& s : out) {
    s.values.resize(steps);
    for (auto& v : s.values) v = value(rng);
    s.markers.assign(steps, 0);
    const auto i1 = first(rng);
    const auto i2 = second(rng);
    s.markers[i1] = 1;
    s.markers[i2] = 1;
    s.target = s.values[i1] + s.values[i2];
  }
  return out;
}

Matrix encode_adding(const AddingSample& sample) {
  require(sample.values.size() == sample.markers.size(), "encode_adding: length mismatch");
  Matrix m(sample.values.size(), 2);
  for (std::size_t k = 0; k < sample.values.size(); ++k) {
    m(k, 0) = sample.values[k];
    m(k, 1) = static_cast<double>(sample.markers[k]);
  }
  return m;
}

void SpikeEventSet::validate() const {
  if (num_channels == 0) throw DataError("event set: num_channels must be >= 1");
  if (!(duration > 0.0)) throw DataError("event set: duration must be positive");
  for (const auto& e : events) {
    if (e.channel >= num_channels) {
      throw DataError("event set: channel " + std::to_string(e.channel) + " >= num_channels " +
                      std::to_string(num_channels));
    }
    if (!(e.time >= 0.0 && e.time < duration)) {
      std::ostringstream msg;
      msg << "event set: event time " << e.time << " outside [0, " << duration << ")";
      throw DataError(msg.str());
    }
  }
}

Matrix bin_events(const SpikeEventSet& events, std::size_t bins) {
  require(bins >= 1, "bin_events: need at least one bin");
  events.validate();
  Matrix raster(bins, events.num_channels);
  const double scale = static_cast<double>(bins) / events.duration;
  for (const auto& e : events.events) {
    auto t = static_cast<std::size_t>(std::floor(e.time * scale));
    t = std::min(t, bins - 1);
    raster(t, e.channel) = 1.0;
  }
  return raster;
}

std::vector<SpikeEventSet> gen_delay_xor(const DelayXorConfig& cfg) {
  require(!cfg.gaps.empty(), "gen_delay_xor: need at least one gap class");
  require(cfg.jitter >= 0, "gen_delay_xor: jitter must be non-negative");
  require(cfg.channels >= 1, "gen_delay_xor: need at least one channel");
  for (int g : cfg.gaps) {
    require(g >= 1 && static_cast<std::size_t>(g + cfg.jitter) < cfg.steps,
            "gen_delay_xor: every gap (plus jitter) must be shorter than the sequence");
  }
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<int> jitter(-cfg.jitter, cfg.jitter);
  std::uniform_int_distribution<std::size_t> channel(0, cfg.channels - 1);
  const std::size_t classes = cfg.gaps.size();
  std::vector<int> labels(cfg.count);
  for (std::size_t n = 0; n < cfg.count; ++n) labels[n] = static_cast<int>(n % classes);
  std::shuffle(labels.begin(), labels.end(), rng);

  std::vector<SpikeEventSet> out;
  out.reserve(cfg.count);
  for (int label : labels) {
    const int gap = std::max(1, cfg.gaps[static_cast<std::size_t>(label)] + jitter(rng));
    std::uniform_int_distribution<int> start(0, static_cast<int>(cfg.steps) - 1 - gap);
    const int t0 = start(rng);
    const auto ch = channel(rng);
    SpikeEventSet set;
    set.num_channels = cfg.channels;
    set.duration = static_cast<double>(cfg.steps);
    set.label = label;
    set.events = {{static_cast<double>(t0), ch}, {static_cast<double>(t0 + gap), ch}};
    out.push_back(std::move(set));
  }
  return out;
}

Dataset to_dataset(const std::vector<AddingSample>& samples) {
  Dataset data;
  data.reserve(samples.size());
  for (const auto& s : samples) data.push_back({encode_adding(s), s.target, -1});
  return data;
}

Dataset to_dataset(const std::vector<SpikeEventSet>& sets, std::size_t bins) {
  Dataset data;
  data.reserve(sets.size());
  for (const auto& s : sets) data.push_back({bin_events(s, bins), 0.0, s.label});
  return data;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  return in;
}

// Splits "# key=value" into (key, value); false for other lines.
bool parse_comment(const std::string& line, std::string& key, std::string& value) {
  if (line.empty() || line[0] != '#') return false;
  const auto eq = line.find('=');
  if (eq == std::string::npos) return false;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t#");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  };
  key = trim(line.substr(0, eq));
  value = trim(line.substr(eq + 1));
  return true;
}

long long parse_int(const std::string& s, const std::filesystem::path& path, std::size_t line_no) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\r')) ++pos;
  if (pos != s.size() || s.empty()) {
    throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected integer, got '" +
                    s + "'");
  }
  return v;
}

double parse_real(const std::string& s, const std::filesystem::path& path, std::size_t line_no) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\r')) ++pos;
  if (pos != s.size() || s.empty()) {
    throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected number, got '" +
                    s + "'");
  }
  return v;
}

std::pair<std::string, std::string> split_pair(const std::string& line,
                                               const std::filesystem::path& path,
                                               std::size_t line_no) {
  const auto comma = line.find(',');
  if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
    throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected two fields");
  }
  return {line.substr(0, comma), line.substr(comma + 1)};
}

}  // namespace

void write_event_csv(const std::filesystem::path& path, const SpikeEventSet& set,
                     std::uint64_t seed) {
  set.validate();
  auto out = open_out(path);
  out << "# label=" << set.label << "\n";
  out << "# seed=" << seed << "\n";
  out << "# channels=" << set.num_channels << "\n";
  out << "# duration=" << static_cast<long long>(std::ceil(set.duration)) << "\n";
  out << "time_bin,channel\n";
  for (const auto& e : set.events) {
    out << static_cast<long long>(std::floor(e.time)) << "," << e.channel << "\n";
  }
}

SpikeEventSet read_event_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  SpikeEventSet set;
  bool have_label = false;
  bool have_channels = false;
  bool have_duration = false;
  bool have_header = false;
  std::size_t max_channel = 0;
  double max_time = -1.0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string key, value;
    if (line[0] == '#') {
      if (!parse_comment(line, key, value)) continue;
      if (key == "label") {
        set.label = static_cast<int>(parse_int(value, path, line_no));
        have_label = true;
      } else if (key == "channels") {
        set.num_channels = static_cast<std::size_t>(parse_int(value, path, line_no));
        have_channels = true;
      } else if (key == "duration") {
        set.duration = static_cast<double>(parse_int(value, path, line_no));
        have_duration = true;
      }
      continue;
    }
    if (!have_header) {
      if (line.rfind("time_bin,channel", 0) != 0) {
        throw DataError(path.string() + ": missing 'time_bin,channel' header");
      }
      have_header = true;
      continue;
    }
    const auto [t, c] = split_pair(line, path, line_no);
    const auto time = parse_int(t, path, line_no);
    const auto ch = parse_int(c, path, line_no);
    if (time < 0 || ch < 0) throw DataError(path.string() + ":" + std::to_string(line_no) + ": negative field");
    set.events.push_back({static_cast<double>(time), static_cast<std::size_t>(ch)});
    max_channel = std::max(max_channel, static_cast<std::size_t>(ch));
    max_time = std::max(max_time, static_cast<double>(time));
  }
  if (!have_header) throw DataError(path.string() + ": missing 'time_bin,channel' header");
  if (!have_label) throw DataError(path.string() + ": missing '# label=<int>' comment");
  if (!have_channels) set.num_channels = set.events.empty() ? 1 : max_channel + 1;
  if (!have_duration) set.duration = std::max(1.0, max_time + 1.0);
  set.validate();
  return set;
}

void write_adding_csv(const std::filesystem::path& path, const AddingSample& sample,
                      std::uint64_t seed) {
  auto out = open_out(path);
  out << std::setprecision(17);
  out << "# target=" << sample.target << "\n";
  out << "# seed=" << seed << "\n";
  out << "value,marker\n";
  for (std::size_t k = 0; k < sample.values.size(); ++k) {
    out << sample.values[k] << "," << sample.markers[k] << "\n";
  }
}

AddingSample read_adding_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  AddingSample s;
  bool have_target = false;
  bool have_header = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string key, value;
    if (line[0] == '#') {
      if (parse_comment(line, key, value) && key == "target") {
        s.target = parse_real(value, path, line_no);
        have_target = true;
      }
      continue;
    }
    if (!have_header) {
      if (line.rfind("value,marker", 0) != 0) throw DataError(path.string() + ": missing 'value,marker' header");
      have_header = true;
      continue;
    }
    const auto [v, m] = split_pair(line, path, line_no);
    s.values.push_back(parse_real(v, path, line_no));
    const auto marker = parse_int(m, path, line_no);
    if (marker != 0 && marker != 1) throw DataError(path.string() + ":" + std::to_string(line_no) + ": marker must be 0 or 1");
    s.markers.push_back(static_cast<int>(marker));
  }
  if (!have_target) throw DataError(path.string() + ": missing '# target=' comment");
  if (s.values.empty()) throw DataError(path.string() + ": no timesteps");
  return s;
}

std::vector<std::filesystem::path> list_samples(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("dataset directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no .csv samples in " + dir.string());
  return files;
}

}  // namespace dsnn::tasks

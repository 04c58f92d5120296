#include "snce/dataset_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace snce {

std::string to_string(ColumnOrder order) {
  return order == ColumnOrder::frame_agent_y_x ? "frame_agent_y_x" : "frame_agent_x_y";
}

ColumnOrder column_order_from_string(const std::string& name) {
  if (name == "frame_agent_x_y") return ColumnOrder::frame_agent_x_y;
  if (name == "frame_agent_y_x") return ColumnOrder::frame_agent_y_x;
  throw std::invalid_argument("unknown column order '" + name + "' (expected frame_agent_x_y or frame_agent_y_x)");
}

namespace {

struct ParsedLine {
  std::size_t line = 0;
  std::int64_t frame = 0;
  std::int64_t agent = 0;
  double x = 0.0;
  double y = 0.0;
};

[[noreturn]] void fail_line(std::size_t line, const std::string& what) {
  throw std::invalid_argument("line " + std::to_string(line) + ": " + what);
}

double parse_number(std::string_view token, std::size_t line) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  if (!token.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
    fail_line(line, "malformed number '" + std::string(token) + "'");
  }
  return value;
}

std::int64_t parse_integral(std::string_view token, std::size_t line, const char* what) {
  const double v = parse_number(token, line);
  const double r = std::round(v);
  if (std::abs(v - r) > 1e-6 || std::abs(r) > 9e15) {
    fail_line(line, std::string(what) + " '" + std::string(token) + "' is not an integer");
  }
  return static_cast<std::int64_t>(r);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

void append_number(std::string& out, double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("failed to format coordinate");
  out.append(buf, ptr);
}

}  // namespace

ScenePtr parse_trajectory_file(std::istream& in, const TrajectoryFileSpec& spec, std::string scene_id,
                               std::string dataset) {
  if (spec.subsample < 1) throw std::invalid_argument("subsample factor must be >= 1");
  std::vector<ParsedLine> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty() || tokens.front().front() == '#') continue;
    if (tokens.size() != 4) {
      fail_line(line_no, "expected 4 columns (frame, agent, x, y), got " + std::to_string(tokens.size()));
    }
    ParsedLine row;
    row.line = line_no;
    row.frame = parse_integral(tokens[0], line_no, "frame");
    row.agent = parse_integral(tokens[1], line_no, "agent id");
    const double a = parse_number(tokens[2], line_no);
    const double b = parse_number(tokens[3], line_no);
    row.x = spec.order == ColumnOrder::frame_agent_x_y ? a : b;
    row.y = spec.order == ColumnOrder::frame_agent_x_y ? b : a;
    rows.push_back(row);
  }
  if (rows.empty()) throw std::invalid_argument("trajectory file contains no observations");

  // Canonical order makes the result independent of line order.
  std::sort(rows.begin(), rows.end(), [](const ParsedLine& l, const ParsedLine& r) {
    return std::tie(l.frame, l.agent, l.line) < std::tie(r.frame, r.agent, r.line);
  });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].frame == rows[i - 1].frame && rows[i].agent == rows[i - 1].agent) {
      throw std::invalid_argument("duplicate observation of agent " + std::to_string(rows[i].agent) + " at frame " +
                                  std::to_string(rows[i].frame) + " on lines " + std::to_string(rows[i - 1].line) +
                                  " and " + std::to_string(rows[i].line));
    }
  }

  const std::int64_t first_frame = rows.front().frame;
  std::int64_t step = 0;
  for (const auto& r : rows) step = std::gcd(step, r.frame - first_frame);
  if (step == 0) throw std::invalid_argument("trajectory file spans a single frame; need at least 2");
  const auto k = static_cast<std::int64_t>(spec.subsample);

  // Grid index per row, then contiguous runs per original agent id.
  std::map<std::int64_t, std::vector<std::pair<std::int64_t, const ParsedLine*>>> tracks;
  for (const auto& r : rows) {
    const std::int64_t idx = (r.frame - first_frame) / step;
    if (idx % k != 0) continue;
    tracks[r.agent].emplace_back(idx / k, &r);
  }

  std::vector<TrackRecord> records;
  std::int64_t next_agent = 0;
  for (auto& [id, obs] : tracks) {
    std::int64_t prev = -2;
    for (const auto& [idx, row] : obs) {
      if (prev >= 0 && idx != prev + 1) ++next_agent;
      prev = idx;
      records.push_back({idx, next_agent, row->x, row->y});
    }
    ++next_agent;
  }
  if (next_agent < 2) {
    throw std::invalid_argument("trajectory file yields " + std::to_string(next_agent) + " agent(s); need at least 2");
  }
  return build_scene(records, spec.frame_interval * static_cast<double>(spec.subsample), std::move(scene_id),
                     std::move(dataset));
}

ScenePtr parse_trajectory_text(std::string_view text, const TrajectoryFileSpec& spec, std::string scene_id,
                               std::string dataset) {
  std::istringstream in{std::string(text)};
  return parse_trajectory_file(in, spec, std::move(scene_id), std::move(dataset));
}

ScenePtr load_trajectory_file(const std::filesystem::path& path, const TrajectoryFileSpec& spec) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trajectory file " + path.string());
  try {
    return parse_trajectory_file(in, spec, path.stem().string(), path.parent_path().filename().string());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

void write_trajectory_file(const Scene& scene, std::ostream& out, ColumnOrder order) {
  out << write_trajectory_text(scene, order);
}

std::string write_trajectory_text(const Scene& scene, ColumnOrder order) {
  std::string text;
  for (const auto& r : scene_records(scene)) {
    text += std::to_string(r.frame);
    text += ' ';
    text += std::to_string(r.agent);
    text += ' ';
    append_number(text, order == ColumnOrder::frame_agent_x_y ? r.x : r.y);
    text += ' ';
    append_number(text, order == ColumnOrder::frame_agent_x_y ? r.y : r.x);
    text += '\n';
  }
  return text;
}

ScenePtr canonicalize(const Scene& scene) {
  std::vector<TrackRecord> records;
  std::map<std::int64_t, std::int64_t> remap;
  for (std::size_t a = 0; a < scene.num_agents(); ++a) {
    const auto [first, last] = scene.presence(a);
    if (first < last) remap.emplace(static_cast<std::int64_t>(a), static_cast<std::int64_t>(remap.size()));
  }
  for (auto r : scene_records(scene)) {
    r.agent = remap.at(r.agent);
    records.push_back(r);
  }
  return build_scene(records, scene.frame_interval(), scene.id(), scene.dataset());
}

std::vector<ScenePtr> load_scenes(const std::filesystem::path& path, const TrajectoryFileSpec& spec) {
  namespace fs = std::filesystem;
  if (!fs::exists(path)) throw std::runtime_error("no such file or directory: " + path.string());
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(path);
  }
  std::vector<ScenePtr> scenes;
  for (const auto& f : files) scenes.push_back(load_trajectory_file(f, spec));
  return scenes;
}

}  // namespace snce

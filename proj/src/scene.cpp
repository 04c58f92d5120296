#include "snce/scene.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace snce {

double distance(AgentState a, AgentState b) { return std::hypot(a.x - b.x, a.y - b.y); }

Scene::Scene(std::size_t num_frames, std::size_t num_agents,
             std::vector<std::optional<AgentState>> cells, double frame_interval,
             std::string scene_id, std::string dataset)
    : num_frames_(num_frames),
      num_agents_(num_agents),
      cells_(std::move(cells)),
      frame_interval_(frame_interval),
      scene_id_(std::move(scene_id)),
      dataset_(std::move(dataset)) {
  if (num_frames_ < 2) {
    throw std::invalid_argument("scene needs at least 2 frames, got " + std::to_string(num_frames_));
  }
  if (num_agents_ < 2) {
    throw std::invalid_argument("scene needs at least 2 agents, got " + std::to_string(num_agents_));
  }
  if (cells_.size() != num_frames_ * num_agents_) {
    throw std::invalid_argument("scene cell count does not match frames x agents");
  }
  if (!(frame_interval_ > 0.0) || !std::isfinite(frame_interval_)) {
    throw std::invalid_argument("frame interval must be a positive finite number");
  }

  presence_.resize(num_agents_, {0, 0});
  for (std::size_t a = 0; a < num_agents_; ++a) {
    std::optional<std::size_t> first;
    std::size_t last = 0;
    for (std::size_t f = 0; f < num_frames_; ++f) {
      const auto& cell = cells_[f * num_agents_ + a];
      if (!cell) continue;
      if (!std::isfinite(cell->x) || !std::isfinite(cell->y)) {
        std::ostringstream msg;
        msg << "non-finite position for agent " << a << " at frame " << f;
        throw std::invalid_argument(msg.str());
      }
      if (first && last != f) {
        std::ostringstream msg;
        msg << "agent " << a << " has non-contiguous presence: absent at frame " << last
            << " but present again at frame " << f;
        throw std::invalid_argument(msg.str());
      }
      if (!first) first = f;
      last = f + 1;
    }
    if (first) presence_[a] = {*first, last};
  }
}

const std::optional<AgentState>& Scene::at(std::size_t frame, std::size_t agent) const {
  if (frame >= num_frames_ || agent >= num_agents_) {
    throw std::out_of_range("scene cell (" + std::to_string(frame) + ", " + std::to_string(agent) +
                            ") out of range");
  }
  return cells_[frame * num_agents_ + agent];
}

std::pair<std::size_t, std::size_t> Scene::presence(std::size_t agent) const {
  if (agent >= num_agents_) throw std::out_of_range("agent index out of range");
  return presence_[agent];
}

bool Scene::same_geometry(const Scene& other) const {
  return num_frames_ == other.num_frames_ && num_agents_ == other.num_agents_ &&
         frame_interval_ == other.frame_interval_ && cells_ == other.cells_;
}

ScenePtr build_scene(std::span<const TrackRecord> records, double frame_interval,
                     std::string scene_id, std::string dataset) {
  if (records.empty()) throw std::invalid_argument("cannot build a scene from zero records");

  std::int64_t min_frame = records.front().frame;
  std::int64_t max_frame = records.front().frame;
  std::int64_t max_agent = 0;
  for (const auto& r : records) {
    if (r.agent < 0) throw std::invalid_argument("negative agent index " + std::to_string(r.agent));
    if (!std::isfinite(r.x) || !std::isfinite(r.y)) {
      throw std::invalid_argument("non-finite coordinate at frame " + std::to_string(r.frame) +
                                  ", agent " + std::to_string(r.agent));
    }
    min_frame = std::min(min_frame, r.frame);
    max_frame = std::max(max_frame, r.frame);
    max_agent = std::max(max_agent, r.agent);
  }

  const auto frames = static_cast<std::size_t>(max_frame - min_frame + 1);
  const auto agents = static_cast<std::size_t>(max_agent + 1);
  std::vector<std::optional<AgentState>> cells(frames * agents);
  std::map<std::pair<std::int64_t, std::int64_t>, std::size_t> seen;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    auto [it, inserted] = seen.emplace(std::pair{r.frame, r.agent}, i);
    if (!inserted) {
      std::ostringstream msg;
      msg << "duplicate record for frame " << r.frame << ", agent " << r.agent << ": records #"
          << it->second << " and #" << i;
      throw std::invalid_argument(msg.str());
    }
    cells[static_cast<std::size_t>(r.frame - min_frame) * agents + static_cast<std::size_t>(r.agent)] =
        AgentState{r.x, r.y};
  }
  return std::make_shared<const Scene>(frames, agents, std::move(cells), frame_interval,
                                       std::move(scene_id), std::move(dataset));
}

std::vector<TrackRecord> scene_records(const Scene& scene) {
  std::vector<TrackRecord> out;
  for (std::size_t f = 0; f < scene.num_frames(); ++f) {
    for (std::size_t a = 0; a < scene.num_agents(); ++a) {
      if (const auto& s = scene.at(f, a)) {
        out.push_back({static_cast<std::int64_t>(f), static_cast<std::int64_t>(a), s->x, s->y});
      }
    }
  }
  return out;
}

std::size_t Sample::frame_at(std::ptrdiff_t offset) const {
  const auto frame = static_cast<std::ptrdiff_t>(current_frame()) + offset;
  if (offset < -static_cast<std::ptrdiff_t>(obs_len - 1) || offset > static_cast<std::ptrdiff_t>(pred_len)) {
    throw std::out_of_range("offset " + std::to_string(offset) + " outside the sample window");
  }
  return static_cast<std::size_t>(frame);
}

AgentState Sample::primary_at(std::ptrdiff_t offset) const {
  const auto& s = scene->at(frame_at(offset), primary);
  if (!s) throw std::logic_error("primary agent absent inside its own window");
  return *s;
}

Trajectory Sample::observed() const {
  Trajectory out;
  out.reserve(obs_len);
  for (std::ptrdiff_t o = -static_cast<std::ptrdiff_t>(obs_len - 1); o <= 0; ++o) out.push_back(primary_at(o));
  return out;
}

Trajectory Sample::future() const {
  Trajectory out;
  out.reserve(pred_len);
  for (std::ptrdiff_t o = 1; o <= static_cast<std::ptrdiff_t>(pred_len); ++o) out.push_back(primary_at(o));
  return out;
}

void validate_sample(const Sample& sample) {
  if (!sample.scene) throw std::invalid_argument("sample has no scene");
  if (sample.obs_len < 1 || sample.pred_len < 1) {
    throw std::invalid_argument("sample needs obs_len >= 1 and pred_len >= 1");
  }
  const auto& scene = *sample.scene;
  if (sample.primary >= scene.num_agents()) throw std::invalid_argument("primary agent index out of range");
  if (sample.start_frame + sample.obs_len + sample.pred_len > scene.num_frames()) {
    throw std::invalid_argument("sample window exceeds the scene length");
  }
  const auto [first, last] = scene.presence(sample.primary);
  if (first > sample.start_frame || last < sample.start_frame + sample.obs_len + sample.pred_len) {
    throw std::invalid_argument("primary agent " + std::to_string(sample.primary) +
                                " not present throughout the sample window");
  }
}

std::vector<Sample> slice_samples(const ScenePtr& scene, std::size_t obs_len, std::size_t pred_len,
                                  std::size_t stride) {
  if (!scene) throw std::invalid_argument("null scene");
  if (stride < 1) throw std::invalid_argument("stride must be at least 1");
  if (obs_len < 1 || pred_len < 1) throw std::invalid_argument("obs_len and pred_len must be at least 1");
  std::vector<Sample> out;
  const std::size_t window = obs_len + pred_len;
  if (window > scene->num_frames()) return out;
  for (std::size_t start = 0; start + window <= scene->num_frames(); start += stride) {
    for (std::size_t a = 0; a < scene->num_agents(); ++a) {
      const auto [first, last] = scene->presence(a);
      if (first <= start && start + window <= last) out.push_back(Sample{scene, a, obs_len, pred_len, start});
    }
  }
  return out;
}

std::vector<Neighbor> neighbors_at(const Sample& sample, std::ptrdiff_t offset) {
  const std::size_t frame = sample.frame_at(offset);
  std::vector<Neighbor> out;
  for (std::size_t a = 0; a < sample.scene->num_agents(); ++a) {
    if (a == sample.primary) continue;
    if (const auto& s = sample.scene->at(frame, a)) out.push_back({a, *s});
  }
  return out;
}

}  // namespace snce

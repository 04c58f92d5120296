#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "snce/dataset_io.hpp"
#include "snce/simulator.hpp"

using namespace snce;

namespace {

const TrajectoryFileSpec kSpec{};

std::string error_of(auto&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("parses a small file with frame step 10") {
  const auto s = parse_trajectory_text(
      "# frame agent x y\n"
      "10 1 0.0 0.0\n"
      "10 2 5.0 5.0\n"
      "\n"
      "20 1 1.0 0.5\n"
      "20 2 4.0 5.0\n"
      "30 1 2.0 1.0\n",
      kSpec);
  CHECK(s->num_frames() == 3);
  CHECK(s->num_agents() == 2);
  CHECK(*s->at(1, 0) == AgentState{1.0, 0.5});
  CHECK_FALSE(s->present(2, 1));
  CHECK(s->frame_interval() == 0.4);
}

TEST_CASE("a track with a gap becomes two agents") {
  const auto s = parse_trajectory_text(
      "0 7 0 0\n1 7 1 0\n3 7 3 0\n4 7 4 0\n"
      "0 9 0 5\n1 9 0 5\n2 9 0 5\n3 9 0 5\n4 9 0 5\n",
      kSpec);
  CHECK(s->num_agents() == 3);
  CHECK(s->presence(0) == std::pair<std::size_t, std::size_t>{0, 2});
  CHECK(s->presence(1) == std::pair<std::size_t, std::size_t>{3, 5});
  CHECK(s->presence(2) == std::pair<std::size_t, std::size_t>{0, 5});
}

TEST_CASE("malformed input names the line") {
  CHECK(error_of([] { parse_trajectory_text("0 1 abc 2\n", kSpec); }).find("line 1") != std::string::npos);
  CHECK(error_of([] { parse_trajectory_text("0 1 1.0 2.0\n0 2 1 1\n1 2 3\n", kSpec); }).find("line 3") !=
        std::string::npos);
  CHECK(error_of([] { parse_trajectory_text("0 1 1 1\n0 1 2 2\n1 2 0 0\n", kSpec); }).find("lines 1 and 2") !=
        std::string::npos);
  CHECK_THROWS(parse_trajectory_text("0 1 1 1\n0 2 2 2\n", kSpec));
  CHECK_THROWS(parse_trajectory_text("", kSpec));
}

TEST_CASE("writer emits one line per present cell") {
  const std::vector<TrackRecord> r{{0, 0, 0, 0}, {0, 1, 5, 5}, {1, 0, 1, 0}, {1, 1, 5, 4}};
  const auto text = write_trajectory_text(*build_scene(r, 0.4));
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
  CHECK(text.substr(0, text.find('\n')) == "0 0 0 0");
}

TEST_CASE("property: write then parse reproduces 1000 scenes bit for bit") {
  std::mt19937_64 gen(31);
  std::normal_distribution<double> n(0.0, 30.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t frames = 2 + gen() % 10;
    const std::size_t agents = 2 + gen() % 4;
    auto scene = oracle::random_scene(gen, frames, agents);
    // Push coordinates away from short decimals.
    auto records = scene_records(*scene);
    for (auto& rec : records) {
      rec.x = rec.x * 3.141592653589793 + n(gen);
      rec.y = rec.y / 7.0 - n(gen) * 1e-7;
    }
    scene = build_scene(records, 0.4);
    const auto order = trial % 2 ? ColumnOrder::frame_agent_y_x : ColumnOrder::frame_agent_x_y;
    TrajectoryFileSpec spec;
    spec.order = order;
    const auto back = parse_trajectory_text(write_trajectory_text(*scene, order), spec);
    CHECK(back->same_geometry(*canonicalize(*scene)));
  }
}

TEST_CASE("line order does not matter") {
  ScenarioConfig c;
  const auto scene = generate_scene(c, 3);
  const auto text = write_trajectory_text(*scene);
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  std::mt19937_64 gen(2);
  std::shuffle(lines.begin(), lines.end(), gen);
  std::string shuffled;
  for (const auto& l : lines) shuffled += l + "\n";
  CHECK(parse_trajectory_text(shuffled, kSpec)->same_geometry(*scene));
}

TEST_CASE("column order swaps the coordinates") {
  TrajectoryFileSpec yx;
  yx.order = ColumnOrder::frame_agent_y_x;
  const auto s = parse_trajectory_text("0 1 2.0 3.0\n0 2 0 0\n1 1 2 3\n1 2 0 0\n", yx);
  CHECK(*s->at(0, 0) == AgentState{3.0, 2.0});
  CHECK(column_order_from_string(to_string(ColumnOrder::frame_agent_y_x)) == ColumnOrder::frame_agent_y_x);
  CHECK_THROWS(column_order_from_string("xy"));
}

TEST_CASE("subsampling keeps every k-th frame") {
  std::string text;
  for (int f = 0; f < 9; ++f) {
    text += std::to_string(f) + " 1 " + std::to_string(f) + " 0\n";
    text += std::to_string(f) + " 2 0 " + std::to_string(f) + "\n";
  }
  TrajectoryFileSpec spec;
  spec.subsample = 3;
  const auto s = parse_trajectory_text(text, spec);
  CHECK(s->num_frames() == 3);
  CHECK(s->at(2, 0)->x == 6.0);
  CHECK(s->frame_interval() == doctest::Approx(1.2));
}

TEST_CASE("load_scenes reads a directory in name order") {
  const auto dir = std::filesystem::temp_directory_path() / "snce_test_dataset_io";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  ScenarioConfig c;
  for (int i : {2, 0, 1}) {
    std::ofstream out(dir / ("scene_" + std::to_string(i) + ".txt"));
    write_trajectory_file(*generate_scene(c, static_cast<std::size_t>(i)), out);
  }
  const auto scenes = load_scenes(dir, kSpec);
  REQUIRE(scenes.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(scenes[i]->id() == "scene_" + std::to_string(i));
    CHECK(scenes[i]->same_geometry(*generate_scene(c, i)));
  }
  CHECK_THROWS(load_scenes(dir / "missing", kSpec));
  std::filesystem::remove_all(dir);
}

#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "hogtrack/hogtrack.hpp"
#include "support/synthetic.hpp"

namespace hogtrack {
namespace {

namespace fs = std::filesystem;

struct Run {
  int status = -1;
  std::string out;
  std::string err;
};

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Workspace {
 public:
  Workspace() {
    root_ = fs::temp_directory_path() / ("hogtrack_cli_" + std::to_string(::getpid()));
    fs::remove_all(root_);
    fs::create_directories(root_ / "frames");
    Rng rng(21);
    std::ofstream ann(root_ / "truth.csv");
    ann << "frame,x,y,w,h\n";
    for (int f = 0; f < 4; ++f) {
      auto img = testing::cluttered_background(320, 240, rng);
      const Box b{40 + 24 * f, 48, 64, 128};
      testing::paint_person(img, b.x, b.y, b.w, b.h, testing::Texture::vertical);
      write_pgm(img, root_ / "frames" / ("f" + std::to_string(f) + ".pgm"));
      ann << f << ',' << b.x << ',' << b.y << ',' << b.w << ',' << b.h << '\n';
    }
  }
  ~Workspace() { fs::remove_all(root_); }

  fs::path operator/(const std::string& name) const { return root_ / name; }

  Run run(const std::string& args) const {
    static int counter = 0;
    const auto out = root_ / ("stdout_" + std::to_string(counter));
    const auto err = root_ / ("stderr_" + std::to_string(counter++));
    const std::string cmd = std::string(HOGTRACK_CLI_PATH) + " " + args + " > " + out.string() + " 2> " + err.string();
    const int raw = std::system(cmd.c_str());
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, read_text(out), read_text(err)};
  }

  // Trains once per process; later calls reuse the model file.
  const fs::path& model() const {
    static const fs::path path = [this] {
      const auto p = root_ / "model.json";
      const auto r = run("train --frames " + (root_ / "frames").string() + " --annotations " +
                         (root_ / "truth.csv").string() + " --out " + p.string() + " --seed 3");
      EXPECT_EQ(r.status, 0) << r.err;
      return p;
    }();
    return path;
  }

  std::string frames() const { return (root_ / "frames").string(); }

  void write_maps(const std::string& dir, const std::function<double(int, int)>& value) const {
    fs::create_directories(root_ / dir);
    for (int f = 0; f < 4; ++f) {
      SaliencyMap m(320, 240);
      for (int y = 0; y < 240; ++y)
        for (int x = 0; x < 320; ++x) m.at(x, y) = value(x, y);
      save_map(m, root_ / dir / ("f" + std::to_string(f) + ".pgm"));
    }
  }

 private:
  fs::path root_;
};

const Workspace& ws() {
  static const Workspace w;
  return w;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);)
    if (!l.empty()) out.push_back(l);
  return out;
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(ws().run("").status, 2);
  EXPECT_EQ(ws().run("frobnicate").status, 2);
  EXPECT_EQ(ws().run("--help").status, 0);
  EXPECT_EQ(ws().run("detect --frames " + ws().frames() + " --model " + ws().model().string() + " --out " +
                     (ws() / "x.csv").string() + " --stride 5")
                .status,
            2);
  EXPECT_EQ(ws().run("train --frames " + ws().frames() + " --annotations " + (ws() / "truth.csv").string() +
                     " --out " + (ws() / "m.json").string() + " --hog-window 64by128")
                .status,
            2);
}

TEST(Cli, TrainIsDeterministic) {
  const auto again = ws() / "model2.json";
  const auto r = ws().run("train --frames " + ws().frames() + " --annotations " + (ws() / "truth.csv").string() +
                          " --out " + again.string() + " --seed 3 --jobs 3");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(read_text(again), read_text(ws().model()));
  const auto pos = r.out.find("training_accuracy: ");
  ASSERT_NE(pos, std::string::npos);
  const double acc = std::stod(r.out.substr(pos + 19));
  EXPECT_GE(acc, 0.0);
  EXPECT_LE(acc, 1.0);
}

TEST(Cli, TrainMissingAnnotations) {
  const auto r = ws().run("train --frames " + ws().frames() + " --annotations " + (ws() / "nope.csv").string() +
                          " --out " + (ws() / "m.json").string());
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("nope.csv"), std::string::npos);
}

TEST(Cli, TrainMalformedAnnotations) {
  std::ofstream(ws() / "bad.csv") << "0,300,0,64,128\n";
  const auto r = ws().run("train --frames " + ws().frames() + " --annotations " + (ws() / "bad.csv").string() +
                          " --out " + (ws() / "m.json").string());
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("line 1"), std::string::npos);
}

TEST(Cli, DetectFull) {
  const auto out = ws() / "full.csv";
  const auto r = ws().run("detect --frames " + ws().frames() + " --model " + ws().model().string() + " --out " +
                          out.string());
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(fs::exists(out));
  EXPECT_NE(r.out.find("windows_classified: 1980"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("time_s: "), std::string::npos);
}

TEST(Cli, DetectJobsIndependent) {
  const auto a = ws() / "jobs1.csv";
  const auto b = ws() / "jobs4.csv";
  const std::string base = "detect --frames " + ws().frames() + " --model " + ws().model().string() + " --nms-iou 0.3";
  ASSERT_EQ(ws().run(base + " --out " + a.string()).status, 0);
  ASSERT_EQ(ws().run(base + " --jobs 4 --out " + b.string()).status, 0);
  EXPECT_EQ(read_text(a), read_text(b));
}

TEST(Cli, DetectSalientZeroMap) {
  ws().write_maps("zero_maps", [](int, int) { return 0.0; });
  const auto out = ws() / "zero.csv";
  const auto r = ws().run("detect --mode salient --provider file:" + (ws() / "zero_maps").string() + " --frames " +
                          ws().frames() + " --model " + ws().model().string() + " --out " + out.string());
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(read_text(out).empty());
  EXPECT_NE(r.out.find("windows_classified: 0"), std::string::npos);
}

TEST(Cli, DetectSalientSubsetOfFull) {
  ws().write_maps("mask_maps", [](int x, int y) { return (x >= 24 && x < 200 && y >= 16 && y < 200) ? 1.0 : 0.0; });
  const auto full = ws() / "subset_full.csv";
  const auto sal = ws() / "subset_sal.csv";
  const std::string base = " --frames " + ws().frames() + " --model " + ws().model().string();
  const auto f = ws().run("detect" + base + " --out " + full.string());
  ASSERT_EQ(f.status, 0);
  const auto r = ws().run("detect --mode salient --features original --tau 0.999 --provider file:" +
                          (ws() / "mask_maps").string() + base + " --out " + sal.string());
  ASSERT_EQ(r.status, 0) << r.err;
  const auto full_lines = lines(read_text(full));
  const std::set<std::string> full_set(full_lines.begin(), full_lines.end());
  const auto sal_lines = lines(read_text(sal));
  EXPECT_FALSE(sal_lines.empty());
  for (const auto& l : sal_lines) EXPECT_TRUE(full_set.count(l)) << l;
  auto classified = [](const std::string& out) {
    return std::stoul(out.substr(out.find("windows_classified: ") + 20));
  };
  EXPECT_LT(classified(r.out), classified(f.out));
}

TEST(Cli, DetectConflictsAndMissingMaps) {
  const std::string base = " --frames " + ws().frames() + " --model " + ws().model().string() + " --out " +
                           (ws() / "c.csv").string();
  EXPECT_EQ(ws().run("detect --tau 0.5" + base).status, 2);
  EXPECT_EQ(ws().run("detect --mode salient --provider bogus" + base).status, 2);
  EXPECT_EQ(ws().run("detect --hog-bins 6" + base).status, 2);
  fs::create_directories(ws() / "empty_maps");
  const auto r = ws().run("detect --mode salient --provider file:" + (ws() / "empty_maps").string() + base);
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("f0"), std::string::npos);
}

TEST(Cli, TrackFromRecord) {
  const auto rec = ws() / "rec.csv";
  const auto r = ws().run("detect --nms-iou 0.3 --frames " + ws().frames() + " --model " + ws().model().string() +
                          " --out " + (ws() / "d.csv").string() + " --record " + rec.string());
  ASSERT_EQ(r.status, 0) << r.err;
  const auto a = ws() / "tracks_a.json";
  const auto b = ws() / "tracks_b.json";
  const auto ta = ws().run("track --record " + rec.string() + " --out " + a.string() + " --seed 5 --restarts 20");
  ASSERT_EQ(ta.status, 0) << ta.err;
  ASSERT_EQ(ws().run("track --record " + rec.string() + " --out " + b.string() + " --seed 5 --restarts 20").status, 0);
  EXPECT_EQ(read_text(a), read_text(b));
  EXPECT_NE(ta.out.find("k: "), std::string::npos);
  EXPECT_NE(ta.out.find("collisions: "), std::string::npos);
  const auto doc = nlohmann::json::parse(read_text(a));
  EXPECT_TRUE(doc["tracks"].is_array());
}

TEST(Cli, TrackSingleAndEmpty) {
  std::ofstream(ws() / "single.csv") << "2,100,100\n3,10,10,64,128,1.5,0.25,0.75\n";
  const auto r = ws().run("track --record " + (ws() / "single.csv").string() + " --out " +
                          (ws() / "single.json").string());
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("k: 1"), std::string::npos);
  EXPECT_NE(r.out.find("tracks: 1"), std::string::npos);

  for (const char* content : {"", "3780,320,240\n"}) {
    std::ofstream(ws() / "empty_rec.csv") << content;
    const auto e = ws().run("track --record " + (ws() / "empty_rec.csv").string() + " --out " +
                            (ws() / "empty.json").string());
    EXPECT_EQ(e.status, 0) << e.err;
    EXPECT_FALSE(e.err.empty());
    EXPECT_EQ(nlohmann::json::parse(read_text(ws() / "empty.json"))["tracks"].size(), 0u);
  }
}

TEST(Cli, EvalCounts) {
  std::ofstream(ws() / "e_truth.csv") << "0,0,0,10,10\n0,50,0,10,10\n1,0,0,10,10\n2,0,0,10,10\n";
  std::ofstream(ws() / "e_dets.csv") << "0,0,0,10,10,0.9\n0,51,0,10,10,0.8\n1,1,1,10,10,0.7\n"
                                        "1,80,80,10,10,0.6\n3,0,0,10,10,0.5\n";
  const auto r = ws().run("eval --detections " + (ws() / "e_dets.csv").string() + " --truth " +
                          (ws() / "e_truth.csv").string());
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("precision: 0.6\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("recall: 0.75\n"), std::string::npos) << r.out;
}

TEST(Cli, SaliencyMaps) {
  fs::create_directories(ws() / "sal_frames");
  write_pgm(GrayImage(96, 64, 90), ws() / "sal_frames" / "flat.pgm");
  GrayImage square(96, 64, 30);
  for (int y = 20; y < 36; ++y)
    for (int x = 60; x < 76; ++x) square.at(x, y) = 230;
  write_pgm(square, ws() / "sal_frames" / "square.pgm");

  const auto out = ws() / "sal_out";
  ASSERT_EQ(ws().run("saliency --frames " + (ws() / "sal_frames").string() + " --out " + out.string()).status, 0);
  const auto flat = load_map(out / "flat.pgm");
  for (double v : flat.values) EXPECT_EQ(v, 0.0);
  const auto map = load_map(out / "square.pgm");
  std::size_t arg = 0;
  for (std::size_t i = 1; i < map.values.size(); ++i)
    if (map.values[i] > map.values[arg]) arg = i;
  const int ax = static_cast<int>(arg % 96), ay = static_cast<int>(arg / 96);
  EXPECT_TRUE(ax >= 60 && ax < 76 && ay >= 20 && ay < 36) << ax << "," << ay;

  const auto first = read_text(out / "square.pgm");
  ASSERT_EQ(ws().run("saliency --jobs 2 --frames " + (ws() / "sal_frames").string() + " --out " + out.string()).status,
            0);
  EXPECT_EQ(read_text(out / "square.pgm"), first);
}

TEST(Cli, BenchUnitMap) {
  ws().write_maps("unit_maps", [](int, int) { return 1.0; });
  const auto r = ws().run("bench --tau 0 --provider file:" + (ws() / "unit_maps").string() + " --frames " +
                          ws().frames() + " --annotations " + (ws() / "truth.csv").string() + " --model " +
                          ws().model().string());
  ASSERT_EQ(r.status, 0) << r.err;
  const auto pos = r.out.find("Windows Classified");
  ASSERT_NE(pos, std::string::npos);
  std::istringstream row(r.out.substr(pos + 18));
  std::size_t full = 0, salient = 0;
  row >> full >> salient;
  EXPECT_EQ(full, 1980u);
  EXPECT_EQ(salient, full);
}

TEST(Cli, Overlay) {
  std::ofstream(ws() / "o_dets.csv") << "0,8,8,64,128,1\n";
  const auto r = ws().run("overlay --frames " + ws().frames() + " --detections " + (ws() / "o_dets.csv").string() +
                          " --out " + (ws() / "overlays").string());
  ASSERT_EQ(r.status, 0) << r.err;
  const auto img = std::get<RgbImage>(netpbm::decode(netpbm::read_file(ws() / "overlays" / "f0.ppm")));
  EXPECT_EQ(img.at(8, 8), kDetectionColor);
}

}  // namespace
}  // namespace hogtrack

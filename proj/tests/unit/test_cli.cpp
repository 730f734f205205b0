#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "oba/authoring.hpp"
#include "oba/cli.hpp"
#include "oba/container.hpp"
#include "oba/render.hpp"
#include "oba/scene_json.hpp"
#include "oba/wav.hpp"
#include "support/signals.hpp"

using namespace oba;
using namespace oba::testing;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run oba_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli_dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

struct Workspace {
  TempDir dir;
  std::string wav = dir.file("tracks.wav");
  std::string scene = dir.file("scene.json");
  std::string container = dir.file("scene.obas");

  Workspace() {
    write_wav(wav, dialog_fixture(4.0).pcm, kRate);
    const auto authored = oba_cli({"author-dialogplus", "--bed", wav + ":0,1", "--dialog", wav + ":2", "-o", scene});
    REQUIRE(authored.code == 0);
    REQUIRE(oba_cli({"pack", scene, wav, "-o", container}).code == 0);
  }
};

}  // namespace

TEST_CASE("authored scene validates; a broken one does not") {
  Workspace ws;
  auto ok = oba_cli({"validate", ws.scene});
  CHECK(ok.code == 0);
  CHECK(json::parse(ok.out)["ok"] == true);

  auto j = json::parse(std::ifstream(ws.scene));
  j["presets"][1]["members"][0]["component_id"] = "ghost";
  std::ofstream(ws.dir.file("broken.json")) << j.dump();
  auto broken = oba_cli({"validate", ws.dir.file("broken.json")});
  CHECK(broken.code == 1);
  CHECK(json::parse(broken.out)["errors"].get<int>() >= 1);
  CHECK(broken.err.find("/presets/1/members/0") != std::string::npos);

  std::ofstream(ws.dir.file("garbage.json")) << "{";
  CHECK(oba_cli({"validate", ws.dir.file("garbage.json")}).code == 2);
  CHECK(oba_cli({"validate", ws.dir.file("absent.json")}).code == 2);
}

TEST_CASE("measure reports gated silence without failing") {
  TempDir dir;
  write_wav(dir.file("silence.wav"), FloatBuffer(2, 48000), kRate);
  auto run = oba_cli({"measure", dir.file("silence.wav")});
  CHECK(run.code == 0);
  const auto j = json::parse(run.out);
  CHECK(j["valid"] == false);
  CHECK(j["integrated_lkfs"].is_null());
  CHECK(j["layout"] == "stereo_2_0");
}

TEST_CASE("usage errors exit with 2") {
  CHECK(oba_cli({}).code == 2);
  CHECK(oba_cli({"render", "x.obas", "--bogus", "-o", "y.wav"}).code == 2);
  CHECK(oba_cli({"frobnicate"}).code == 2);
  CHECK(oba_cli({"--help"}).code == 0);
}

TEST_CASE("render selects presets by id or by kind") {
  Workspace ws;
  auto by_kind = oba_cli({"render", ws.container, "--preset", "hearing_impaired", "-o", ws.dir.file("a.wav")});
  REQUIRE(by_kind.code == 0);
  CHECK(json::parse(by_kind.out)["preset"] == "dialog_plus");
  auto by_id = oba_cli({"render", ws.container, "--preset", "default_mix", "-o", ws.dir.file("b.wav")});
  CHECK(json::parse(by_id.out)["preset"] == "default_mix");
  CHECK(oba_cli({"render", ws.container, "--preset", "nope", "-o", ws.dir.file("c.wav")}).code != 0);
}

TEST_CASE("render is a thin wrapper over the offline renderer") {
  Workspace ws;
  auto run = oba_cli({"render", ws.container, "--preset", "dialog_plus", "--gain", "dialog=20", "--layout",
                      "surround_5_1", "-o", ws.dir.file("out.wav")});
  REQUIRE(run.code == 0);
  CHECK(run.err.find("clamped") != std::string::npos);
  const auto stats = json::parse(run.out);
  CHECK(stats["gain_offsets_db"]["dialog"] == 9.0);

  const auto unpacked = unpack(ws.container);
  UserState user;
  user.selected_preset = "dialog_plus";
  user.gain_offsets["dialog"] = 9.0;
  user.target_layout = LayoutId::surround_5_1;
  const auto expected = render_offline(unpacked.scene, unpacked.audio, user, RenderSettings{});
  const auto written = read_wav(ws.dir.file("out.wav")).samples;
  REQUIRE(written.channels() == 6);
  REQUIRE(written.frames() == expected.signal.frames());
  bool identical = true;
  for (std::size_t c = 0; c < 6; ++c)
    for (std::size_t i = 0; i < written.frames(); ++i)
      identical = identical && written.at(c, i) == static_cast<float>(expected.signal.at(c, i));
  CHECK(identical);
  CHECK(stats["clipped_samples"] == expected.stats.clipped_samples);
}

TEST_CASE("author-ad builds a validated scene from a CSV curve") {
  TempDir dir;
  const auto fixture = ad_fixture(6.0);
  write_wav(dir.file("ad.wav"), fixture.pcm, kRate);
  {
    std::ofstream csv(dir.file("duck.csv"));
    csv << "time_s,gain_db\n";
    for (const auto& p : fixture.automation.samples) csv << p.time << "," << p.gain << "\n";
  }
  auto run = oba_cli({"author-ad", "--mix", dir.file("ad.wav") + ":0-1", "--ad", dir.file("ad.wav") + ":2",
                      "--automation", dir.file("duck.csv"), "-o", dir.file("ad.json")});
  REQUIRE(run.code == 0);
  const auto scene = load_scene_file(dir.file("ad.json"));
  CHECK(validate_scene(scene).ok());
  CHECK(scene.presets.size() == 2);
  CHECK(scene.presets[1].kind.tag == PresetKind::Tag::audio_description);
  auto monitor = oba_cli({"pack", dir.file("ad.json"), dir.file("ad.wav"), "-o", dir.file("ad.obas")});
  REQUIRE(monitor.code == 0);
  monitor = oba_cli({"monitor", dir.file("ad.obas"), "--layout", "stereo_2_0"});
  CHECK(monitor.code == 0);
}

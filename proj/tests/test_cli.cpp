#include <doctest.h>
#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pushcraft/scenario.hpp"

using namespace pushcraft;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kCli = PUSHCRAFT_CLI_PATH;
const std::string kScenarios = PUSHCRAFT_SCENARIO_DIR;

fs::path work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("pushcraft_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string at(const std::string& name) { return (work_dir() / name).string(); }
std::string bundled(const std::string& name) { return kScenarios + "/" + name + ".json"; }

// Exit status of the CLI; stdout and stderr go to `capture`.
int run(const std::string& args, std::string* capture = nullptr) {
  const std::string out = at("last_output.txt");
  const int status = std::system((kCli + " " + args + " > " + out + " 2>&1").c_str());
  if (capture) *capture = read_file(out);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json load(const std::string& path) { return json::parse(read_file(path)); }

void write(const std::string& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

// Value of `attr` in every tag that starts with `tag_prefix`.
std::vector<std::string> attrs(const std::string& text, const std::string& tag_prefix, const std::string& attr) {
  std::vector<std::string> out;
  for (size_t pos = text.find(tag_prefix); pos != std::string::npos; pos = text.find(tag_prefix, pos + 1)) {
    const size_t end = text.find('>', pos);
    const size_t a = text.find(attr + "=\"", pos);
    if (a == std::string::npos || a > end) continue;
    const size_t v = a + attr.size() + 2;
    out.push_back(text.substr(v, text.find('"', v) - v));
  }
  return out;
}

int count(const std::string& text, const std::string& needle) {
  int n = 0;
  for (size_t pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

const std::string& free_plan() {
  static const std::string path = [] {
    const std::string p = at("free.plan.json");
    REQUIRE(run("plan --scenario " + bundled("free_space") + " --out " + p) == 0);
    return p;
  }();
  return path;
}

}  // namespace

TEST_CASE("plan on free space uses one mode") {
  const json plan = load(free_plan());
  CHECK(plan["kind"] == "plan");
  CHECK(plan["mode_count"] == 1);
  CHECK(plan["mode_switches"] == 0);
  std::set<std::string> modes;
  const auto& kf = plan["keyframes"];
  for (size_t i = 0; i + 1 < kf.size(); ++i) modes.insert(kf[i]["mode"].dump());
  CHECK(modes.size() == 1);
  CHECK(kf.back()["mode"].is_null());
  CHECK(fs::exists(free_plan() + ".timing.json"));
}

TEST_CASE("corridor plan stays within five switches") {
  const std::string out = at("corridor.plan.json");
  REQUIRE(run("plan --scenario " + bundled("narrow_passage") + " --out " + out) == 0);
  const json plan = load(out);
  CHECK(plan["mode_switches"].get<int>() <= 5);
  CHECK(plan["search"]["expansions"].get<int>() <= plan["scenario"]["tunables"]["search"]["budget_nodes"].get<int>());
}

TEST_CASE("identical inputs give byte-identical plans") {
  const std::string a = at("same_a.json"), b = at("same_b.json");
  REQUIRE(run("plan --scenario " + bundled("pillars") + " --out " + a) == 0);
  REQUIRE(run("plan --scenario " + bundled("pillars") + " --out " + b) == 0);
  CHECK(read_file(a) == read_file(b));
}

TEST_CASE("schema errors exit with 2") {
  json sc = load(bundled("free_space"));
  SUBCASE("self-intersecting object") {
    sc["object"]["polygon"] = json::array({{0, 0}, {1, 1}, {1, 0}, {0, 1}});
  }
  SUBCASE("too few vertices") {
    sc["object"]["polygon"] = json::array({{0, 0}, {1, 1}});
  }
  SUBCASE("unknown key") {
    sc["tunables"]["typo"] = 1;
  }
  SUBCASE("negative mass") {
    sc["object"]["mass"] = -1;
  }
  SUBCASE("wrong schema version") {
    sc["schema_version"] = 99;
  }
  const std::string path = at("bad.json");
  write(path, sc.dump());
  CHECK(run("plan --scenario " + path + " --out " + at("bad.plan.json")) == 2);

  write(path, "{ not json");
  CHECK(run("plan --scenario " + path + " --out " + at("bad.plan.json")) == 2);
}

TEST_CASE("blocked goal exits with 3") {
  json sc = load(bundled("free_space"));
  // a wall across the workspace separates start from goal
  sc["workspace"]["obstacles"] = json::array({json::array({{2.3, 0}, {2.7, 0}, {2.7, 3}, {2.3, 3}})});
  const std::string path = at("walled.json");
  write(path, sc.dump());
  CHECK(run("plan --scenario " + path + " --out " + at("walled.plan.json")) == 3);
}

TEST_CASE("simulate one undisturbed seed on free space") {
  const std::string dir = at("sim_free");
  std::string text;
  REQUIRE(run("simulate --scenario " + bundled("free_space") + " --plan " + free_plan() + " --seeds 1 --out-dir " + dir,
              &text) == 0);
  const json report = load(dir + "/report_kghs.json");
  CHECK(report["SR"]["mean"] == 1.0);
  CHECK(report["episodes"] == 1);
  CHECK(text.find("SR") != std::string::npos);
}

TEST_CASE("plan and scenario must match") {
  CHECK(run("simulate --scenario " + bundled("pillars") + " --plan " + free_plan() + " --seeds 1 --out-dir " +
            at("mismatch")) == 2);
  CHECK(run("simulate --scenario " + bundled("free_space") + " --seeds 1 --out-dir " + at("noplan")) == 2);
  CHECK(run("simulate --scenario " + bundled("free_space") + " --baseline nope --seeds 1 --out-dir " + at("nope")) == 2);
}

TEST_CASE("baseline logs, evaluation and plots") {
  const std::string dir = at("mixed");
  REQUIRE(run("simulate --scenario " + bundled("free_space") + " --plan " + free_plan() +
              " --seeds 2 --disturbance 0.1 --out-dir " + dir) == 0);
  run("simulate --scenario " + bundled("free_space") + " --baseline pocb --seeds 2 --disturbance 0.1 --out-dir " + dir);
  REQUIRE(fs::exists(dir + "/pocb_seed1.jsonl"));
  REQUIRE(fs::exists(dir + "/kghs_seed1.jsonl"));

  auto header = [](const std::string& path) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    return json::parse(line);
  };
  auto record = [](const std::string& path) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    return json::parse(line);
  };
  auto keys = [](const json& j) {
    std::set<std::string> k;
    for (auto it = j.begin(); it != j.end(); ++it) k.insert(it.key());
    return k;
  };
  const std::string kg = dir + "/kghs_seed1.jsonl", pb = dir + "/pocb_seed1.jsonl";
  CHECK(keys(header(kg)) == keys(header(pb)));
  CHECK(keys(record(kg)) == keys(record(pb)));
  CHECK(header(pb)["method"] == "pocb");

  SUBCASE("evaluate reports mean and spread per method") {
    const std::string out = at("eval.json");
    std::string text;
    REQUIRE(run("evaluate --logs " + dir + " --out " + out, &text) == 0);
    const json rep = load(out);
    CHECK(rep["logs"].size() == 4);
    std::set<std::string> methods;
    for (const auto& m : rep["methods"]) {
      methods.insert(m["method"]);
      CHECK(m["episodes"] == 2);
      for (const char* k : {"SR", "TE", "CC", "SM", "PT", "ET", "EE"}) {
        CHECK(m[k].contains("mean"));
        CHECK(m[k]["std"].get<double>() >= 0);
      }
    }
    CHECK(methods == std::set<std::string>{"kghs", "pocb"});
    CHECK(text.find("±") != std::string::npos);
  }

  SUBCASE("plot of a plan draws one polyline per segment") {
    const std::string svg = at("plan.svg");
    REQUIRE(run("plot --in " + free_plan() + " --out " + svg) == 0);
    const std::string text = read_file(svg);
    const json plan = load(free_plan());
    CHECK(count(text, "class=\"segment\"") == static_cast<int>(plan["keyframes"].size()) - 1);
    CHECK(count(text, "class=\"obstacle\"") == 0);
    CHECK(count(text, "class=\"bounds\"") == 1);
  }

  SUBCASE("plot of a log shows the trace inside the workspace and every mode in the legend") {
    const std::string svg = at("log.svg");
    REQUIRE(run("plot --in " + kg + " --out " + svg) == 0);
    const std::string text = read_file(svg);
    CHECK(count(text, "class=\"object-trace\"") == 1);
    const auto traces = attrs(text, "<polyline class=\"object-trace\"", "points");
    REQUIRE(traces.size() == 1);
    std::istringstream pts(traces.front());
    std::string pair;
    while (pts >> pair) {
      const double x = std::stod(pair.substr(0, pair.find(','))), y = std::stod(pair.substr(pair.find(',') + 1));
      CHECK(x >= 0);
      CHECK(x <= 5);
      CHECK(y >= 0);
      CHECK(y <= 3);
    }
    const auto seg = attrs(text, "<polyline class=\"segment\"", "data-mode");
    const auto item = attrs(text, "<text class=\"legend-item\"", "data-mode");
    const std::set<std::string> used(seg.begin(), seg.end()), listed(item.begin(), item.end());
    CHECK(!used.empty());
    CHECK(used == listed);
  }

  SUBCASE("plot of an empty log draws only the workspace") {
    const std::string empty = at("empty.jsonl");
    write(empty, header(kg).dump() + "\n");
    const std::string svg = at("empty.svg");
    REQUIRE(run("plot --in " + empty + " --out " + svg) == 0);
    const std::string text = read_file(svg);
    CHECK(count(text, "class=\"bounds\"") == 1);
    CHECK(count(text, "class=\"segment\"") == 0);
    CHECK(count(text, "class=\"object-trace\"") == 0);
    CHECK(count(text, "class=\"legend-item\"") == 0);
  }
}

TEST_CASE("every bundled scenario plans and simulates") {
  for (const auto& e : fs::directory_iterator(kScenarios)) {
    if (e.path().extension() != ".json") continue;
    const std::string name = e.path().stem().string();
    CAPTURE(name);
    const auto t0 = std::chrono::steady_clock::now();
    const std::string plan = at(name + ".plan.json");
    REQUIRE(run("plan --scenario " + e.path().string() + " --out " + plan) == 0);
    REQUIRE(run("simulate --scenario " + e.path().string() + " --plan " + plan + " --seeds 1 --out-dir " +
                at("all_" + name)) == 0);
    CHECK(load(at("all_" + name) + "/report_kghs.json")["SR"]["mean"] == 1.0);
    CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() <= 120.0);
  }
}

TEST_CASE("identical seeds give byte-identical logs") {
  const std::string a = at("det_a"), b = at("det_b");
  for (const auto& d : {a, b}) {
    REQUIRE(run("simulate --scenario " + bundled("free_space") + " --plan " + free_plan() +
                " --seeds 1 --seed0 7 --disturbance 0.1 --out-dir " + d) == 0);
  }
  CHECK(read_file(a + "/kghs_seed7.jsonl") == read_file(b + "/kghs_seed7.jsonl"));
}

TEST_CASE("scenario round trip and hash") {
  const Scenario sc = load_scenario(bundled("spiral_corridor"));
  const Scenario back = scenario_from_json(scenario_to_json(sc));
  CHECK(scenario_to_json(back) == scenario_to_json(sc));
  CHECK(scenario_hash(back) == scenario_hash(sc));
  Scenario moved = sc;
  moved.goal.x += 0.1;
  CHECK(scenario_hash(moved) != scenario_hash(sc));
}

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <fstream>
#include <sstream>

#include "dynsplat/scenario.hpp"
#include "testing.hpp"

using namespace dynsplat;
namespace tu = dynsplat::testing;

namespace
{

int run(const std::string& args)
{
    const std::string cmd = std::string(DYNSPLAT_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

struct Cli : ::testing::Test
{
    static void SetUpTestSuite()
    {
        dir = new tu::TempDir("cli");
        ASSERT_EQ(run("synth-scene --seed 5 --out " + scene()), 0);
    }
    static void TearDownTestSuite() { delete dir; }
    static std::string scene() { return (*dir / "room.ply").string(); }
    static inline tu::TempDir* dir = nullptr;
};

} // namespace

TEST_F(Cli, SynthAndVoxelize)
{
    EXPECT_TRUE(std::filesystem::exists(scene()));
    EXPECT_EQ(run("voxelize --scene " + scene() + " --out " + (*dir / "maps").string()), 0);
    EXPECT_FALSE(std::filesystem::is_empty(*dir / "maps"));
}

TEST_F(Cli, UsageAndConfigErrorsExitTwo)
{
    EXPECT_EQ(run("voxelize --bogus"), 2);
    EXPECT_EQ(run("gen-data --scene " + scene() + " --episodes -1 --out x"), 2);
    write(*dir / "bad.json", R"({"robot": {"radius": 0.3, "wheels": 4}})");
    EXPECT_EQ(run("voxelize --scene " + scene() + " --config " + (*dir / "bad.json").string() + " --out " +
                  (*dir / "m2").string()),
              2);
    write(*dir / "neg.json", R"({"robot": {"radius": -1}})");
    EXPECT_EQ(run("plan --scene " + scene() + " --config " + (*dir / "neg.json").string()), 2);
}

TEST_F(Cli, MissingOrBrokenInputsExitFour)
{
    EXPECT_EQ(run("voxelize --scene " + (*dir / "nope.ply").string() + " --out " + (*dir / "m3").string()), 4);
    write(*dir / "broken.ply", "ply\nformat ascii 1.0\nend_header\n");
    EXPECT_EQ(run("voxelize --scene " + (*dir / "broken.ply").string() + " --out " + (*dir / "m4").string()), 4);
    EXPECT_EQ(run("metrics --dataset " + (*dir / "no_dataset").string()), 4);
}

TEST_F(Cli, PlanExitCodes)
{
    EXPECT_EQ(run("plan --scene " + scene() + " --seed 21 --out " + (*dir / "ep").string()), 0);
    const auto meta = read_json(*dir / "ep" / "meta.json");
    EXPECT_EQ(meta.at("outcome"), "success");

    // same episode with the goal moved off the map: the expert cannot plan at all
    auto ep = meta.at("config");
    ep["goal"] = {-50.0, -50.0};
    write(*dir / "far.json", ep.dump());
    EXPECT_EQ(run("plan --scene " + scene() + " --episode " + (*dir / "far.json").string()), 3);
}

TEST_F(Cli, GenerateThenMetrics)
{
    const auto out = *dir / "ds";
    ASSERT_EQ(run("gen-data --scene " + scene() + " --episodes 3 --seed 2 --no-render --out " + out.string()), 0);
    const auto root = out / "room";
    ASSERT_TRUE(std::filesystem::exists(root / "manifest.json"));
    const std::string cmd = std::string(DYNSPLAT_CLI) + " metrics --json --dataset " + root.string() + " > " +
                            (*dir / "metrics.json").string();
    ASSERT_EQ(std::system(cmd.c_str()), 0);
    const auto m = nlohmann::json::parse(slurp(*dir / "metrics.json"));
    EXPECT_EQ(m.at("episodes"), 3);
    EXPECT_EQ(m.at("success_rate"), read_json(root / "manifest.json").at("metrics").at("success_rate"));
}

TEST_F(Cli, RenderWritesPng)
{
    const auto png = *dir / "view.png";
    EXPECT_EQ(run("render --scene " + scene() + " --pose 6,6,0.5 --out " + png.string()), 0);
    EXPECT_EQ(slurp(png).substr(1, 3), "PNG");
    EXPECT_EQ(run("render --scene " + scene() + " --pose 6,6 --out " + png.string()), 2);
}

TEST_F(Cli, ServeSession)
{
    write(*dir / "session.txt", "{\"cmd\":\"reset\",\"seed\":4}\n{\"cmd\":\"step\",\"action\":[0.5,0]}\n{\"cmd\":\"close\"}\n");
    const std::string cmd = std::string(DYNSPLAT_CLI) + " serve --obs none --scene " + scene() + " < " +
                            (*dir / "session.txt").string() + " > " + (*dir / "replies.txt").string();
    ASSERT_EQ(std::system(cmd.c_str()), 0);
    std::istringstream replies(slurp(*dir / "replies.txt"));
    std::vector<nlohmann::json> lines;
    for (std::string l; std::getline(replies, l);)
        lines.push_back(nlohmann::json::parse(l));
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_NEAR(lines[1].at("t").get<double>(), 0.5, 1e-12);
    EXPECT_EQ(lines[1].at("prev_action"), nlohmann::json({0.5, 0.0}));
    EXPECT_EQ(lines[2].at("closed"), true);
}

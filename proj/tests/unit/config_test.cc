#include <gtest/gtest.h>

#include <filesystem>

#include "ismnet/error.h"
#include "ismnet/io/config.h"

namespace ismnet {
namespace {

using nlohmann::json;

std::string error_of(const json& j) {
  try {
    RunConfig::from_json(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Config, EmptyObjectGivesDefaults) {
  const auto c = RunConfig::from_json(json::object());
  EXPECT_EQ(c.network.topology, TopologyKind::kRing);
  EXPECT_EQ(c.sim.h, 1e-4);
  EXPECT_EQ(c.sim.x0_box, 100.0);
  EXPECT_TRUE(c.pipeline.reuse);
}

TEST(Config, JsonRoundTrip) {
  json j = {{"seed", 17},
            {"network", {{"topology", "star"}, {"n", 6}, {"coupling_scale", 0.02}}},
            {"synthesis", {{"kappa", 1.5}, {"mu", 0.7}, {"kappa_grid", {1.0, 0.5}}}},
            {"sim", {{"horizon", 3.0}, {"controllers", "iss_only"}}},
            {"verify", {{"sigma_band", 0.004}}}};
  const auto a = RunConfig::from_json(j);
  const auto b = RunConfig::from_json(a.to_json());
  EXPECT_EQ(a.to_json(), b.to_json());
  EXPECT_EQ(b.network.topology, TopologyKind::kStar);
  EXPECT_EQ(b.pipeline.kappa_grid, (std::vector<double>{1.0, 0.5}));
  EXPECT_EQ(*b.verify.sigma_band, 0.004);
}

TEST(Config, UnknownFieldsNameTheirPath) {
  EXPECT_NE(error_of({{"sim", {{"horizn", 1.0}}}}).find("sim.horizn"), std::string::npos);
  EXPECT_NE(error_of({{"colour", 1}}).find("colour"), std::string::npos);
}

TEST(Config, BadValuesAreConfigErrors) {
  EXPECT_FALSE(error_of({{"network", {{"n", "ten"}}}}).empty());
  EXPECT_FALSE(error_of({{"network", {{"topology", "torus"}}}}).empty());
  EXPECT_FALSE(error_of({{"pipeline", {{"parallel", 0}}}}).empty());
  EXPECT_FALSE(error_of({{"sim", {{"horizon", 2.0}}}, {"verify", {{"deadline", 5.0}}}}).empty());
  EXPECT_FALSE(error_of(json::array()).empty());
}

TEST(Config, DeskScaleCaps) {
  auto c = RunConfig::from_json({{"network", {{"topology", "line"}, {"n", 2000}}},
                                 {"sim", {{"horizon", 40.0}}},
                                 {"pipeline", {{"desk_scale", true}}}});
  EXPECT_EQ(c.network.n, 10);
  EXPECT_EQ(c.sim.horizon, 10.0);
  EXPECT_LE(c.verify.deadline, 10.0);
  c = RunConfig::from_json({{"network", {{"topology", "binary_tree"}, {"n", 4095}}},
                            {"pipeline", {{"desk_scale", true}}}});
  EXPECT_EQ(c.network.n, 7);
}

TEST(Config, SeedReachesEveryStage) {
  const auto c = RunConfig::from_json({{"seed", 99}});
  EXPECT_EQ(c.sim.seed, 99u);
  EXPECT_EQ(c.experiment.seed, 99u);
}

TEST(Config, ShippedPresetsLoad) {
  int count = 0;
  for (const auto& f : std::filesystem::directory_iterator(ISMNET_SOURCE_DIR "/configs")) {
    SCOPED_TRACE(f.path().string());
    const auto c = RunConfig::load(f.path().string());
    EXPECT_NO_THROW(c.network.build(c.seed));
    ++count;
  }
  EXPECT_GE(count, 6);
}

TEST(Config, MissingFileIsConfigError) {
  EXPECT_THROW(RunConfig::load("/nonexistent/run.json"), ConfigError);
}

}  // namespace
}  // namespace ismnet

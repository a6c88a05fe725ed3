/*
 * Copyright 2026 The rsde Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "rsde/config.h"
#include "rsde/error.h"

namespace rsde {
namespace {

std::string ErrorOf(const std::string& text) {
  try {
    ParseConfig(text, "cfg.toml");
  } catch (const ConfigurationError& e) {
    return e.what();
  }
  return "";
}

TEST(ConfigTest, DefaultsRoundTrip) {
  const ExperimentConfig c;
  const ExperimentConfig back = ParseConfig(SerializeConfig(c));
  EXPECT_TRUE(back == c);
  EXPECT_EQ(SerializeConfig(back), SerializeConfig(c));
}

TEST(ConfigTest, EditedConfigRoundTrips) {
  ExperimentConfig c;
  c.seed = 9007199254740993ULL;
  c.output = "out dir/\"quoted\"";
  c.sde.family = SdeFamily::kVe;
  c.sde.sigma_max = 1.0 / 3.0;
  c.noise = NoiseKind::kCauchy;
  c.data.corruption = {0.1, 0.2, 0.30000000000000004, 1.0};
  c.data.risk_high = 2.5;
  c.model.hidden = {7, 3, 9};
  c.model.activation = "tanh";
  c.model.precondition = false;
  c.model.data_scale = 1e-7;
  c.train.methods = {"risk-regressor", "classifier-free"};
  c.train.learning_rate = 3e-4;
  c.train.weighting = "noise-variance";
  c.sample.guidance_scale = 0.0;
  c.eval.far_radius = 5.5;
  c.stability.risks = {0.0, 1e-3, 100.0};
  c.stability.times = {0.25};
  const ExperimentConfig back = ParseConfig(SerializeConfig(c));
  EXPECT_TRUE(back == c);
  EXPECT_EQ(back.sde.sigma_max, 1.0 / 3.0);
  EXPECT_EQ(back.seed, c.seed);
}

TEST(ConfigTest, MissingKeysKeepDefaultsAndIntegersWidenToReals) {
  const ExperimentConfig c = ParseConfig("seed = 4\n[sde]\nbeta_max = 19\n[train]\nsteps = 10\n");
  EXPECT_EQ(c.seed, 4u);
  EXPECT_EQ(c.sde.beta_max, 19.0);
  EXPECT_EQ(c.train.steps, 10);
  EXPECT_EQ(c.train.batch_size, ExperimentConfig{}.train.batch_size);
  EXPECT_EQ(c.Training().seed, 4u);
  EXPECT_EQ(c.Methods().size(), 2u);
}

TEST(ConfigTest, UnknownKeysAndSectionsAreFatalWithLines) {
  EXPECT_NE(ErrorOf("seed = 1\n[train]\nsteps = 3\nstepz = 4\n").find("cfg.toml:4:1: unknown key 'train.stepz'"),
            std::string::npos);
  EXPECT_NE(ErrorOf("\n\n[trian]\nsteps = 3\n").find("cfg.toml:3:"), std::string::npos);
  EXPECT_NE(ErrorOf("\n\n[trian]\nsteps = 3\n").find("unknown section [trian]"), std::string::npos);
  EXPECT_NE(ErrorOf("sed = 1\n").find("cfg.toml:1:1: unknown key 'sed'"), std::string::npos);
}

TEST(ConfigTest, TypeAndRangeErrorsPointAtTheValue) {
  EXPECT_NE(ErrorOf("[train]\n\nsteps = \"many\"\n").find("cfg.toml:3:"), std::string::npos);
  EXPECT_NE(ErrorOf("[train]\nsteps = \"many\"\n").find("train.steps: expected an integer"),
            std::string::npos);
  EXPECT_NE(ErrorOf("[train]\np_force = 1.5\n").find("cfg.toml:2:11: train.p_force: must lie in [0, 1]"),
            std::string::npos);
  EXPECT_NE(ErrorOf("[train]\nmethods = [\"standard\", \"standard\"]\n").find("twice"), std::string::npos);
  EXPECT_NE(ErrorOf("[train]\nmethods = [\"oracle\"]\n").find("unknown method"), std::string::npos);
  EXPECT_NE(ErrorOf("[sde]\nfamily = \"vx\"\n").find("cfg.toml:2:"), std::string::npos);
  EXPECT_NE(ErrorOf("[data]\ncorruption = [0.5]\n").find("one rate per mixture component"),
            std::string::npos);
  EXPECT_NE(ErrorOf("[model]\nprecondition = 1\n").find("expected true or false"), std::string::npos);
  EXPECT_NE(ErrorOf("[stability]\nsamples = 10\n").find("at least 2000"), std::string::npos);
  EXPECT_NE(ErrorOf("seed = -1\n").find("integer out of range"), std::string::npos);
  // Cross-field checks run after parsing.
  EXPECT_NE(ErrorOf("[sde]\nfamily = \"ve\"\nsigma_min = 60.0\n").find("sde:"), std::string::npos);
  EXPECT_NE(ErrorOf("[data]\nrisk_low = 3.0\n").find("risk_low exceeds"), std::string::npos);
}

TEST(ConfigTest, SyntaxErrorsCarryLines) {
  const std::string e = ErrorOf("seed = 1\n[train]\nsteps = = 3\n");
  EXPECT_EQ(e.rfind("cfg.toml:3:", 0), 0u) << e;
}

TEST(ConfigTest, ReferencedFilesMustExist) {
  EXPECT_NE(ErrorOf("[data]\nsource = \"csv\"\npath = \"/nonexistent/x.csv\"\n").find("cfg.toml:3:"),
            std::string::npos);
  EXPECT_NE(ErrorOf("[data]\nsource = \"csv\"\n").find("data.path is required"), std::string::npos);
  const auto path = std::filesystem::temp_directory_path() / "rsde_config_test.csv";
  std::ofstream(path) << "x_1,r_1\n1,0\n";
  const ExperimentConfig c = ParseConfig("[data]\nsource = \"csv\"\npath = \"" + path.string() + "\"\n");
  EXPECT_EQ(c.data.path, path.string());
  std::filesystem::remove(path);
  EXPECT_THROW(c.Validate(), ConfigurationError);
}

TEST(ConfigTest, HashTracksContent) {
  ExperimentConfig a;
  ExperimentConfig b;
  EXPECT_EQ(ConfigHash(a), ConfigHash(b));
  b.seed = 1;
  EXPECT_NE(ConfigHash(a), ConfigHash(b));
  EXPECT_EQ(HexHash(0xabcULL), "0000000000000abc");
  // FNV-1a offset basis for empty input.
  EXPECT_EQ(HexHash(0xcbf29ce484222325ULL).size(), 16u);
}

TEST(ConfigTest, DerivedSettings) {
  ExperimentConfig c;
  c.model.data_scale = 4.0;
  const ModelConfig mc = c.BaseModel();
  EXPECT_TRUE(mc.precondition.enabled);
  EXPECT_EQ(mc.precondition.data_scale, 4.0);
  EXPECT_EQ(c.Training().weighting, LossWeighting::kRiskVariance);
  const MixtureSpec m = c.Mixture();
  EXPECT_EQ(m.corruption[0], 0.95);
  EXPECT_EQ(m.noise, NoiseKind::kGaussian);
}

TEST(ConfigTest, BundledConfigsParse) {
  for (const char* name : {"gaussian_mixture.toml", "cauchy_mixture.toml", "stability_vp.toml"}) {
    const std::string path = std::string(RSDE_SOURCE_DIR) + "/configs/" + name;
    const ExperimentConfig c = LoadConfig(path);
    EXPECT_TRUE(ParseConfig(SerializeConfig(c)) == c) << name;
  }
  EXPECT_THROW(LoadConfig("/nonexistent.toml"), ConfigurationError);
}

}  // namespace
}  // namespace rsde

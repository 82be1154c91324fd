#include <cstdlib>
#include <sstream>

#include <gtest/gtest.h>

#include "gdd/cli.hpp"
#include "gdd/config.hpp"

using namespace gdd;

TEST(Config, DefaultsAreValid) {
    ModelConfig c;
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(c.global_width(), 6 * c.d_head);
    EXPECT_EQ(c.d_edge(), 4 * c.d_tag);
    EXPECT_NO_THROW(ModelConfig::toy().validate());
}

TEST(Config, ParsesFileWithComments) {
    ModelConfig c;
    apply_config_file(c, GDD_DATA_DIR "/fixtures/toy.cfg");
    EXPECT_EQ(c.d_model, 8u);
    EXPECT_EQ(c.d_tag, 4u);
    EXPECT_EQ(c.attention, AttentionVariant::original);
    EXPECT_DOUBLE_EQ(c.lr, 0.01);
    EXPECT_EQ(c.d_head, ModelConfig{}.d_head);
}

TEST(Config, ErrorsCarryLineNumbers) {
    auto fails_at = [](const std::string& text, std::size_t line) {
        ModelConfig c;
        std::istringstream in(text);
        try {
            apply_config_text(c, in);
        } catch (const parse_error& e) {
            EXPECT_EQ(e.line(), line) << text;
            return;
        }
        ADD_FAILURE() << "no error for: " << text;
    };
    fails_at("d_model = 8\nnot a pair\n", 2);
    fails_at("\n\nd_modle = 3\n", 3);
    fails_at("lr = fast\n", 1);
    fails_at("epochs = -1\n", 1);
    fails_at("attention = sideways\n", 1);
    fails_at("use_mask = maybe\n", 1);
}

TEST(Config, GetSetRoundTrip) {
    ModelConfig a = ModelConfig::toy();
    a.lr = 0.1 + 0.2;
    a.scale_logits = true;
    ModelConfig b;
    for (const auto& k : ModelConfig::keys()) b.set(k, a.get(k));
    EXPECT_EQ(config_to_json(a), config_to_json(b));
    EXPECT_EQ(b.lr, a.lr);
    EXPECT_EQ(config_from_json(config_to_json(a)).lr, a.lr);
}

TEST(Config, ValidationRejectsBadValues) {
    ModelConfig c;
    c.dual_heads = c.rel_heads = 0;
    EXPECT_THROW(c.validate(), value_error);
    c = ModelConfig{};
    c.dropout = 1.0;
    EXPECT_THROW(c.validate(), value_error);
    c = ModelConfig{};
    c.local_heads = 3;
    c.d_k = 64;
    EXPECT_THROW(c.validate(), value_error);
}

namespace {

ModelConfig resolve(const std::vector<std::string>& args) {
    CLI::App app;
    cli::ConfigFlags flags;
    flags.attach(&app);
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
    return flags.resolve(ModelConfig{});
}

} // namespace

TEST(Config, PrecedenceDefaultsEnvFileFlags) {
    unsetenv("GDD_SEED");
    EXPECT_EQ(resolve({}).seed, 42u);
    setenv("GDD_SEED", "5", 1);
    EXPECT_EQ(resolve({}).seed, 5u);

    const std::string cfg = ::testing::TempDir() + "seed.cfg";
    {
        std::ofstream out(cfg);
        out << "seed = 9\nlr = 0.5\n";
    }
    EXPECT_EQ(resolve({"--config", cfg}).seed, 9u);
    const ModelConfig c = resolve({"--config", cfg, "--seed", "13"});
    EXPECT_EQ(c.seed, 13u);
    EXPECT_DOUBLE_EQ(c.lr, 0.5);
    unsetenv("GDD_SEED");
}

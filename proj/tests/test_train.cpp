#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <fstream>
#include <regex>
#include <stdexcept>

#include "hsr/train.hpp"
#include "temp_dir.hpp"

using hsr::ArchName;
using hsr::PatchPair;

namespace {

std::vector<PatchPair> pairs_from(const char* image, std::size_t limit, int scale = 2) {
    const hsr::Tensor hr = hsr::load_image(std::filesystem::path(HSR_TEST_DATA) / "train" / image);
    return hsr::extract_patch_pairs(hr, {}, scale, 16, limit, 9);
}

hsr::TrainConfig small_config(ArchName arch = ArchName::I2C) {
    hsr::TrainConfig c;
    c.arch = arch;
    c.scale = hsr::native_scale(arch);
    c.batch_size = 4;
    c.max_epochs = 3;
    c.adam.learning_rate = 1e-3;
    return c;
}

}  // namespace

TEST(Train, FirstEpochLossIsFiniteAndPositive) {
    const auto pairs = pairs_from("astronaut_00.png", 12);
    hsr::TrainConfig c = small_config(ArchName::CI2);
    c.max_epochs = 1;
    const hsr::TrainResult r = hsr::train(c, pairs);
    ASSERT_EQ(r.log.size(), 1u);
    EXPECT_TRUE(std::isfinite(r.log[0].train_loss));
    EXPECT_GT(r.log[0].train_loss, 0.0);
    EXPECT_TRUE(std::isfinite(r.log[0].val_loss));
}

TEST(Train, ValidationSplit) {
    const auto pairs = pairs_from("astronaut_00.png", 0);
    ASSERT_EQ(pairs.size(), 16u);
    hsr::TrainConfig c = small_config();
    c.max_epochs = 1;
    c.validation_fraction = 0.25;
    const hsr::TrainResult r = hsr::train(c, pairs);
    EXPECT_EQ(r.val_pairs, 4u);
    EXPECT_EQ(r.train_pairs, 12u);
    c.validation_fraction = 0.0;
    EXPECT_EQ(hsr::train(c, pairs).val_pairs, 0u);
}

TEST(Train, SeedDeterminism) {
    const auto pairs = pairs_from("coffee_00.png", 10);
    const hsr::TrainConfig c = small_config();
    const hsr::TrainResult a = hsr::train(c, pairs), b = hsr::train(c, pairs);
    ASSERT_EQ(a.log.size(), b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) {
        EXPECT_EQ(a.log[i].train_loss, b.log[i].train_loss);
        EXPECT_EQ(a.log[i].val_loss, b.log[i].val_loss);
        EXPECT_EQ(a.log[i].parameter_checksum, b.log[i].parameter_checksum);
    }
    EXPECT_EQ(a.model.parameters(), b.model.parameters());
}

TEST(Train, DifferentSeedsDiverge) {
    const auto pairs = pairs_from("coffee_00.png", 10);
    hsr::TrainConfig c = small_config();
    c.max_epochs = 1;
    const hsr::TrainResult a = hsr::train(c, pairs);
    c.seed = 43;
    EXPECT_NE(a.log[0].parameter_checksum, hsr::train(c, pairs).log[0].parameter_checksum);
}

TEST(Train, ThreadCountDoesNotChangeResults) {
    const auto pairs = pairs_from("rocket_00.png", 10);
    hsr::TrainConfig c = small_config(ArchName::CB2SNN);
    const hsr::TrainResult one = hsr::train(c, pairs);
    c.threads = 3;
    const hsr::TrainResult three = hsr::train(c, pairs);
    ASSERT_EQ(one.log.size(), three.log.size());
    for (std::size_t i = 0; i < one.log.size(); ++i)
        EXPECT_EQ(one.log[i].parameter_checksum, three.log[i].parameter_checksum);
    EXPECT_EQ(one.best_val_loss, three.best_val_loss);
}

TEST(Train, ZeroLearningRateKeepsInitialization) {
    const auto pairs = pairs_from("china_00.png", 8);
    hsr::TrainConfig c = small_config(ArchName::CI2);
    c.adam.learning_rate = 0.0;
    const hsr::TrainResult r = hsr::train(c, pairs);
    EXPECT_EQ(r.model.parameters(), hsr::build(ArchName::CI2, 2, c.seed).parameters());
}

TEST(Train, PatienceStopsAfterNonImprovingEpochs) {
    // Zero learning rate: the validation loss never moves, so epoch 1 stays best.
    const auto pairs = pairs_from("china_01.png", 8);
    hsr::TrainConfig c = small_config();
    c.adam.learning_rate = 0.0;
    c.max_epochs = 50;
    c.patience = 3;
    const hsr::TrainResult r = hsr::train(c, pairs);
    EXPECT_EQ(r.log.size(), 4u);
    EXPECT_EQ(r.best_epoch, 1u);
}

TEST(Train, MaxEpochsBoundsTheRun) {
    const auto pairs = pairs_from("china_01.png", 8);
    hsr::TrainConfig c = small_config();
    c.max_epochs = 2;
    c.patience = 100;
    EXPECT_EQ(hsr::train(c, pairs).log.size(), 2u);
}

TEST(Train, CheckpointHoldsBestValidationModel) {
    TempDir dir("train_ckpt");
    const auto pairs = pairs_from("astronaut_01.png", 16);
    hsr::TrainConfig c = small_config();
    c.max_epochs = 6;
    c.adam.learning_rate = 3e-3;
    c.validation_fraction = 0.25;
    c.checkpoint = dir / "best.hsrm";
    const hsr::TrainResult r = hsr::train(c, pairs);
    const hsr::Model saved = hsr::load(c.checkpoint);
    EXPECT_EQ(saved.parameters(), r.model.parameters());
    for (const hsr::EpochRecord& e : r.log) EXPECT_LE(r.best_val_loss, e.val_loss);
    EXPECT_EQ(r.log[r.best_epoch - 1].val_loss, r.best_val_loss);
    EXPECT_EQ(r.log[r.best_epoch - 1].parameter_checksum, hsr::parameter_checksum(saved));
}

TEST(Train, LogLines) {
    TempDir dir("train_log");
    const auto pairs = pairs_from("rocket_01.png", 6);
    hsr::TrainConfig c = small_config();
    c.log = dir / "run.log";
    const hsr::TrainResult r = hsr::train(c, pairs);
    std::ifstream in(c.log);
    const std::regex line(R"(\d+\t[-+0-9.e]+\t[-+0-9.e]+\t\d+\.\d{3})");
    std::string s;
    std::size_t n = 0;
    while (std::getline(in, s)) {
        EXPECT_TRUE(std::regex_match(s, line)) << s;
        EXPECT_EQ(s.substr(0, s.find('\t')), std::to_string(n + 1));
        ++n;
    }
    EXPECT_EQ(n, r.log.size());
}

TEST(Train, LearningRateSchedule) {
    hsr::TrainConfig c;
    c.adam.learning_rate = 1e-3;
    c.max_epochs = 11;
    EXPECT_EQ(hsr::learning_rate_at(c, 1), 1e-3);
    EXPECT_EQ(hsr::learning_rate_at(c, 11), 1e-3);
    c.final_learning_rate = 1e-5;
    EXPECT_DOUBLE_EQ(hsr::learning_rate_at(c, 1), 1e-3);
    EXPECT_DOUBLE_EQ(hsr::learning_rate_at(c, 6), (1e-3 + 1e-5) / 2);
    EXPECT_NEAR(hsr::learning_rate_at(c, 11), 1e-5, 1e-18);
    for (std::size_t e = 2; e <= 11; ++e) EXPECT_LT(hsr::learning_rate_at(c, e), hsr::learning_rate_at(c, e - 1));
}

TEST(Train, RejectsBadConfigurations) {
    const auto pairs = pairs_from("coffee_01.png", 4);
    hsr::TrainConfig c = small_config();
    c.batch_size = 0;
    EXPECT_THROW(hsr::train(c, pairs), std::invalid_argument);
    c = small_config();
    c.patience = 0;
    EXPECT_THROW(hsr::train(c, pairs), std::invalid_argument);
    EXPECT_THROW(hsr::train(small_config(), std::vector<PatchPair>{}), std::invalid_argument);
    EXPECT_THROW(hsr::train(small_config(ArchName::I4C), pairs), std::invalid_argument);
}

TEST(Train, ManifestScaleMismatchIsRejected) {
    TempDir dir("train_scale");
    std::filesystem::create_directories(dir / "img");
    hsr::save_image(hsr::load_image(std::filesystem::path(HSR_TEST_DATA) / "train" / "coffee_02.png"),
                    dir / "img" / "a.png");
    hsr::DatasetOptions o;
    o.image_dir = dir / "img";
    o.scale = 4;
    o.stride = 16;
    hsr::build_dataset(o, dir / "ds.txt");
    hsr::TrainConfig c = small_config();
    c.dataset = dir / "ds.txt";
    EXPECT_THROW(hsr::train(c), std::invalid_argument);
    c = small_config(ArchName::I4C);
    c.dataset = dir / "ds.txt";
    c.max_epochs = 1;
    EXPECT_EQ(hsr::train(c).log.size(), 1u);
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
    for (std::size_t threads : {1u, 2u, 5u, 64u}) {
        std::vector<std::atomic<int>> hits(37);
        hsr::parallel_for(hits.size(), threads, [&](std::size_t i) { ++hits[i]; });
        for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
    }
    hsr::parallel_for(0, 4, [](std::size_t) { FAIL(); });
}

TEST(ParallelFor, PropagatesExceptions) {
    EXPECT_THROW(hsr::parallel_for(10, 3,
                                   [](std::size_t i) {
                                       if (i == 7) throw std::runtime_error("boom");
                                   }),
                 std::runtime_error);
}

TEST(MeanLoss, AveragesPerPairLosses) {
    const auto pairs = pairs_from("astronaut_02.png", 5);
    const hsr::Model m = hsr::build(ArchName::I2C, 2, 1);
    const std::vector<std::size_t> idx{0, 2, 4};
    double sum = 0.0;
    for (std::size_t i : idx) sum += hsr::mse_loss(hsr::forward(m, pairs[i].lr), pairs[i].hr).loss;
    EXPECT_DOUBLE_EQ(hsr::mean_loss(m, pairs, idx, 2), sum / 3);
    EXPECT_TRUE(std::isnan(hsr::mean_loss(m, pairs, {}, 1)));
}

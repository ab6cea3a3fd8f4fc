#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hrc/selfplay.hpp"
#include "support/gradcheck.hpp"
#include "support/instances.hpp"

namespace hrc {
namespace {

JobSpec two_by_two() {
  return parse_jobspec("board 2 2\nagents 1 1\ntask A H 2 0 0 1\ntask B R 3 0 1 1\ntask C E 4 1 0 1\n");
}

TrainingExample tagged(double z) {
  TrainingExample ex;
  ex.input = InputTensor::zeros(2, 2);
  ex.target_policy = {1.0, 0.0};
  ex.z = z;
  return ex;
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("hrc_selfplay_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

TEST(ReplayBuffer, EvictsOldestFirst) {
  ReplayBuffer buf(3);
  for (int i = 0; i < 5; ++i) buf.push(tagged(-i));
  ASSERT_EQ(buf.size(), 3u);
  EXPECT_EQ(buf[0].z, -2);
  EXPECT_EQ(buf[2].z, -4);
  EXPECT_EQ(buf.capacity(), 3u);
}

TEST(GenerateEpisode, SingleTaskGivesOneExample) {
  JobPtr job = make_job(parse_jobspec("board 1 1\nagents 1 0\ntask A H 9 0 0 1\n"));
  SelfPlayEpisode ep = generate_episode(job, UniformEvaluator(8), 8, SearchConfig{}, 1, 4);
  EXPECT_EQ(ep.record.makespan, 9);
  ASSERT_EQ(ep.examples.size(), 1u);
  EXPECT_EQ(ep.examples[0].z, -9.0);
  EXPECT_EQ(ep.examples[0].target_policy, (std::vector<double>{1, 0, 0, 0, 0, 0, 0, 0}));
}

TEST(GenerateEpisode, TwoByTwoTargetsFollowTheOptimalLine) {
  JobPtr job = make_job(two_by_two());
  SearchConfig cfg;
  cfg.simulations = 500;
  cfg.max_depth = 0;
  SelfPlayEpisode ep = generate_episode(job, UniformEvaluator(2), 2, cfg, 0, 0, 2);
  ASSERT_EQ(ep.record.makespan, 7);
  std::vector<double> z;
  for (const auto& ex : ep.examples) z.push_back(ex.z);
  EXPECT_EQ(z, (std::vector<double>{-7, -7, -3}));
  for (const auto& ex : ep.examples) {
    double sum = 0.0;
    for (double p : ex.target_policy) sum += p;
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(GenerateEpisode, ValueTargetsAreRemainingTime) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    JobPtr job = make_job(testing::random_instance(seed));
    SearchConfig cfg;
    cfg.simulations = 20;
    SelfPlayEpisode ep = generate_episode(job, UniformEvaluator(job->spec.width), job->spec.width, cfg, seed, 3,
                                          job->spec.height);
    std::size_t k = 0;
    for (const auto& d : ep.record.decisions) {
      if (d.search_policy.empty()) continue;
      ASSERT_LT(k, ep.examples.size());
      EXPECT_EQ(ep.examples[k].z, -static_cast<double>(ep.record.makespan - d.state.clock()));
      EXPECT_LE(ep.examples[k].z, 0.0);
      ++k;
    }
    EXPECT_EQ(k, ep.examples.size());
  }
}

TEST(GenerateEpisode, GreedyEpisodesAreReproducible) {
  JobPtr job = make_job(testing::random_instance(3, {.max_width = 4, .max_height = 4, .max_tasks = 8}));
  NetConfig cfg;
  const Parameters p = init_parameters(cfg, 2);
  SearchConfig sc;
  auto a = generate_episode(job, p, sc, 17, 0);
  auto b = generate_episode(job, p, sc, 99, 0);  // seed only feeds sampling
  EXPECT_EQ(a.record.makespan, b.record.makespan);
  ASSERT_EQ(a.record.schedule.size(), b.record.schedule.size());
  for (std::size_t i = 0; i < a.record.schedule.size(); ++i) EXPECT_EQ(a.record.schedule[i].task, b.record.schedule[i].task);

  auto c = generate_episode(job, p, sc, 5, 4);
  auto d = generate_episode(job, p, sc, 5, 4);
  ASSERT_EQ(c.examples.size(), d.examples.size());
  for (std::size_t i = 0; i < c.examples.size(); ++i) EXPECT_EQ(c.examples[i].target_policy, d.examples[i].target_policy);
}

ReplayBuffer synthetic_buffer(const NetConfig& cfg, std::size_t n, std::uint64_t seed) {
  ReplayBuffer buf(n);
  for (auto& ex : testing::random_batch(cfg, n, seed)) buf.push(std::move(ex));
  return buf;
}

TEST(TrainIteration, LowersTheLossOnASyntheticBuffer) {
  const NetConfig cfg = testing::tiny_net();
  const ReplayBuffer buf = synthetic_buffer(cfg, 200, 3);
  const Parameters p = testing::random_parameters(cfg, 4);
  const double before = buffer_loss(p, buf, 1e-4).total;
  TrainOutcome out = train_iteration(buf, p, TrainConfig{}, 7);
  EXPECT_LT(out.losses.total, before);
  EXPECT_DOUBLE_EQ(out.losses.total, buffer_loss(out.params, buf, 1e-4).total);
}

TEST(TrainIteration, ZeroEpochsAndDeterminism) {
  const NetConfig cfg = testing::tiny_net();
  const ReplayBuffer buf = synthetic_buffer(cfg, 50, 5);
  const Parameters p = testing::random_parameters(cfg, 6);
  TrainConfig none;
  none.epochs = 0;
  EXPECT_EQ(train_iteration(buf, p, none, 1).params, p);

  EXPECT_EQ(train_iteration(buf, p, TrainConfig{}, 9).params, train_iteration(buf, p, TrainConfig{}, 9).params);
  EXPECT_NE(train_iteration(buf, p, TrainConfig{}, 9).params, train_iteration(buf, p, TrainConfig{}, 10).params);
  EXPECT_THROW(train_iteration(ReplayBuffer(4), p, TrainConfig{}, 1), Error);
}

TEST(TrainingLoop, EpisodeSeedsAndCheckpointNames) {
  EXPECT_EQ(episode_seed(0, 1, 0), 1009u);
  EXPECT_EQ(episode_seed(2, 3, 4), 2u * 1000003u + 3u * 1009u + 4u);
  EXPECT_EQ(checkpoint_name(7), "checkpoint_007.txt");
}

TEST(TrainingLoop, ZeroIterationsKeepsTheInitialParameters) {
  TrainingConfig cfg;
  cfg.iterations = 0;
  cfg.net.height = 4;
  cfg.net.width = 4;
  cfg.net.stages = {{3, 2, 2}};
  const auto dir = scratch_dir("k0");
  TrainingRun run = training_loop(make_job(testing::random_instance(1)), cfg, std::nullopt, dir);
  EXPECT_TRUE(run.reports.empty());
  EXPECT_EQ(run.params, init_parameters(cfg.net, cfg.seed));
  EXPECT_EQ(load_checkpoint((dir / "checkpoint_000.txt").string()), run.params);
  std::ifstream log(dir / "training_log.csv");
  std::string header;
  std::getline(log, header);
  EXPECT_EQ(header, kTrainingLogHeader);
}

TEST(TrainingLoop, SmallRunIsMonotoneAndReproducible) {
  TrainingConfig cfg;
  cfg.iterations = 3;
  cfg.episodes = 3;
  cfg.search.simulations = 10;
  cfg.net.height = 4;
  cfg.net.width = 4;
  cfg.net.stages = {{4, 2, 2}};
  cfg.net.dense = 16;
  JobPtr job = make_job(testing::random_instance(11));
  const auto dir_a = scratch_dir("a");
  const auto dir_b = scratch_dir("b");
  TrainingRun a = training_loop(job, cfg, std::nullopt, dir_a);
  TrainingRun b = training_loop(job, cfg, std::nullopt, dir_b);
  ASSERT_EQ(a.reports.size(), 3u);
  for (std::size_t i = 1; i < a.reports.size(); ++i) EXPECT_LE(a.reports[i].best_makespan, a.reports[i - 1].best_makespan);
  EXPECT_EQ(a.params, b.params);

  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  EXPECT_EQ(slurp(dir_a / "training_log.csv"), slurp(dir_b / "training_log.csv"));
  for (int k = 0; k <= 3; ++k) EXPECT_TRUE(std::filesystem::exists(dir_a / checkpoint_name(k)));
  EXPECT_EQ(load_checkpoint((dir_a / checkpoint_name(3)).string()), a.params);
}

}  // namespace
}  // namespace hrc

#include <algorithm>
#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "hyperwalk/dhe_model.hpp"
#include "hyperwalk/split.hpp"

using namespace hyperwalk;

namespace {

DheConfig small_config(ModelVariant variant = ModelVariant::full, bool features = true) {
  DheConfig c;
  c.context_width = 6;
  c.vertex_width = 4;
  c.hidden_width = 5;
  c.context_out_width = 3;
  c.classes = 3;
  c.use_features = features;
  c.feature_width = features ? 2 : 0;
  c.variant = variant;
  c.seed = 21;
  return c;
}

HyperedgeExample random_example(const DheConfig& c, std::size_t members, Rng& rng) {
  HyperedgeExample e;
  e.context = nn::Vector(static_cast<Eigen::Index>(c.context_width));
  for (auto& x : e.context) x = rng.uniform(-1, 1);
  e.member_embeddings = nn::Matrix(static_cast<Eigen::Index>(c.vertex_width), static_cast<Eigen::Index>(members));
  for (Eigen::Index k = 0; k < e.member_embeddings.size(); ++k) e.member_embeddings.data()[k] = rng.uniform(-1, 1);
  for (std::size_t k = 0; k < members; ++k) e.members.push_back(static_cast<VertexId>(k));
  if (c.use_features) {
    e.features = nn::Vector(static_cast<Eigen::Index>(c.feature_width));
    for (auto& x : e.features) x = rng.uniform(-1, 1);
  }
  e.label = rng.index(c.classes);
  return e;
}

// Random biases move relu kinks away from the origin.
DheModel jittered_model(const DheConfig& c, std::uint64_t seed) {
  DheModel m = DheModel::build(c);
  Rng rng(seed);
  m.for_each_parameter([&](double& p) { p += rng.uniform(-0.2, 0.2); });
  return m;
}

double batch_loss(const DheModel& m, std::span<const HyperedgeExample* const> batch) {
  return m.loss_and_grads(batch, nn::Mode::eval, nullptr, nullptr).loss;
}

double full_model_fd_error(const DheConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<HyperedgeExample> ex;
  for (std::size_t i = 0; i < 4; ++i) ex.push_back(random_example(cfg, 1 + i, rng));
  std::vector<const HyperedgeExample*> batch;
  for (const auto& e : ex) batch.push_back(&e);

  DheModel m = jittered_model(cfg, seed + 1);
  DheGradients g;
  m.loss_and_grads(batch, nn::Mode::eval, nullptr, &g);
  const auto analytic = DheModel::flatten(g);

  std::vector<double> numeric;
  const double eps = 1e-5;
  std::vector<double*> params;
  m.for_each_parameter([&](double& p) { params.push_back(&p); });
  for (double* p : params) {
    const double saved = *p;
    *p = saved + eps;
    const double up = batch_loss(m, batch);
    *p = saved - eps;
    const double down = batch_loss(m, batch);
    *p = saved;
    numeric.push_back((up - down) / (2 * eps));
  }
  EXPECT_EQ(analytic.size(), numeric.size());
  double diff = 0, na = 0, nn_ = 0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn_ += numeric[i] * numeric[i];
  }
  return std::sqrt(diff) / (std::sqrt(na) + std::sqrt(nn_));
}

}  // namespace

TEST(DheModel, ContextOutputWidthIsThirtyByDefault) {
  DheConfig c;
  c.context_width = 128;
  c.vertex_width = 16;
  const auto m = DheModel::build(c);
  EXPECT_EQ(m.context_out_width(), 30u);
  Rng rng(1);
  const auto e = random_example(c, 3, rng);
  EXPECT_EQ(m.context_repr(e).size(), 30);
  EXPECT_EQ(m.context_repr(e), m.context_repr(e));
  EXPECT_EQ(m.context_net().depth(), 3u);
  EXPECT_EQ(m.phi_net().depth(), 2u);
  EXPECT_EQ(m.rho_net().depth(), 2u);
  EXPECT_EQ(m.fusion_net().depth(), 3u);
}

TEST(DheModel, PhiUsesTanhOtherLayersRelu) {
  const auto m = DheModel::build(small_config());
  for (const auto& l : m.phi_net().layers()) EXPECT_EQ(l.activation, nn::Activation::tanh);
  for (const auto& l : m.rho_net().layers()) EXPECT_EQ(l.activation, nn::Activation::relu);
  for (const auto& l : m.context_net().layers()) EXPECT_EQ(l.activation, nn::Activation::relu);
  EXPECT_EQ(m.fusion_net().layers().back().activation, nn::Activation::identity);
}

TEST(DheModel, MembershipIsPermutationInvariant) {
  const auto cfg = small_config();
  const auto m = jittered_model(cfg, 2);
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto e = random_example(cfg, 2 + rng.index(30), rng);
    const nn::Vector base = m.membership_repr(e);
    const nn::Vector probs = m.forward(e);
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(e.member_embeddings.cols()));
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<Eigen::Index>(i);
    rng.shuffle(std::span<Eigen::Index>(perm));
    HyperedgeExample p = e;
    for (std::size_t i = 0; i < perm.size(); ++i) p.member_embeddings.col(static_cast<Eigen::Index>(i)) = e.member_embeddings.col(perm[i]);
    EXPECT_LT((m.membership_repr(p) - base).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT((m.forward(p) - probs).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_EQ(m.predict(p), m.predict(e));
  }
}

TEST(DheModel, SingleMemberIsRhoOfPhi) {
  const auto cfg = small_config();
  const auto m = jittered_model(cfg, 4);
  Rng rng(5);
  const auto e = random_example(cfg, 1, rng);
  const nn::Vector direct = m.rho_net().forward(m.phi_net().forward(e.member_embeddings, nn::Mode::eval), nn::Mode::eval);
  EXPECT_LT((m.membership_repr(e) - direct).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(DheModel, DuplicatingAMemberChangesOutput) {
  const auto cfg = small_config();
  const auto m = jittered_model(cfg, 6);
  Rng rng(7);
  auto e = random_example(cfg, 3, rng);
  auto dup = e;
  dup.member_embeddings.conservativeResize(Eigen::NoChange, 4);
  dup.member_embeddings.col(3) = e.member_embeddings.col(0);
  EXPECT_GT((m.membership_repr(dup) - m.membership_repr(e)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(DheModel, ProbabilitiesSumToOne) {
  const auto cfg = small_config();
  const auto m = jittered_model(cfg, 8);
  Rng rng(9);
  for (int i = 0; i < 20; ++i) {
    const auto p = m.forward(random_example(cfg, 1 + rng.index(10), rng));
    EXPECT_NEAR(p.sum(), 1.0, 1e-6);
    EXPECT_GE(p.minCoeff(), 0.0);
  }
}

TEST(DheModel, ArgmaxExamplesAndTies) {
  nn::Vector a(3);
  a << 0.2, 0.5, 0.3;
  EXPECT_EQ(DheModel::argmax(a), 1u);
  nn::Vector t(2);
  t << 0.5, 0.5;
  EXPECT_EQ(DheModel::argmax(t), 0u);
}

TEST(DheModel, FullModelGradientsMatchFiniteDifferences) {
  for (std::uint64_t seed : {11u, 12u, 13u}) EXPECT_LT(full_model_fd_error(small_config(), seed), 1e-3);
}

TEST(DheModel, VariantGradientsMatchFiniteDifferences) {
  EXPECT_LT(full_model_fd_error(small_config(ModelVariant::membership_only, false), 14), 1e-3);
  EXPECT_LT(full_model_fd_error(small_config(ModelVariant::context_only, false), 15), 1e-3);
}

TEST(DheModel, VariantsDropBranches) {
  const auto mem = DheModel::build(small_config(ModelVariant::membership_only, false));
  EXPECT_EQ(mem.context_out_width(), 0u);
  EXPECT_EQ(mem.fusion_input_width(), mem.membership_out_width());
  const auto ctx = DheModel::build(small_config(ModelVariant::context_only, false));
  EXPECT_EQ(ctx.membership_out_width(), 0u);
  EXPECT_EQ(ctx.fusion_input_width(), 3u);
  EXPECT_THROW(ctx.membership_repr(HyperedgeExample{}), Error);
}

TEST(DheModel, FeatureWidthMismatchIsAnError) {
  const auto cfg = small_config();
  const auto m = DheModel::build(cfg);
  Rng rng(16);
  auto e = random_example(cfg, 2, rng);
  e.features = nn::Vector();
  EXPECT_THROW(m.forward(e), Error);
  e = random_example(cfg, 2, rng);
  e.member_embeddings.resize(4, 0);
  EXPECT_THROW(m.forward(e), Error);
}

TEST(DheModel, TrainingLossDecreasesAndIsReproducible) {
  auto cfg = small_config(ModelVariant::full, false);
  cfg.classes = 2;
  cfg.epochs = 30;
  cfg.batch_size = 8;
  cfg.learning_rate = 0.1;
  cfg.dropout_rate = 0.1;
  Rng rng(17);
  std::vector<HyperedgeExample> ex;
  for (std::size_t i = 0; i < 120; ++i) {
    auto e = random_example(cfg, 1 + rng.index(6), rng);
    // Label is a function of the context so the problem is learnable.
    e.label = e.context(0) + e.context(1) > 0 ? 1 : 0;
    ex.push_back(std::move(e));
  }
  const auto split = split_ids(ex.size(), {1.0, 0.0}, 3);
  const auto a = train_dhe(ex, split, cfg);
  ASSERT_EQ(a.history.size(), 30u);
  EXPECT_LT(a.history.back().train_loss, a.history.front().train_loss);
  const auto b = train_dhe(ex, split, cfg);
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].train_loss, b.history[i].train_loss);
    EXPECT_EQ(a.history[i].train_accuracy, b.history[i].train_accuracy);
  }
}

TEST(DheModel, EarlyStoppingRestoresBestEpoch) {
  auto cfg = small_config(ModelVariant::full, false);
  cfg.classes = 2;
  cfg.epochs = 60;
  cfg.patience = 3;
  cfg.learning_rate = 0.5;
  Rng rng(18);
  std::vector<HyperedgeExample> ex;
  for (std::size_t i = 0; i < 60; ++i) ex.push_back(random_example(cfg, 2, rng));  // labels are noise
  const auto split = split_ids(ex.size(), {0.6, 0.2, 0.2}, 4);
  const auto r = train_dhe(ex, split, cfg);
  ASSERT_FALSE(r.history.empty());
  double best = 1e300;
  std::size_t best_epoch = 0;
  for (const auto& h : r.history) {
    ASSERT_TRUE(h.validation_loss.has_value());
    if (*h.validation_loss < best) {
      best = *h.validation_loss;
      best_epoch = h.epoch;
    }
  }
  EXPECT_EQ(r.best_epoch, best_epoch);
  EXPECT_NEAR(evaluate(r.model, ex, split.validation).loss, best, 1e-12);
  if (r.history.size() < cfg.epochs) {
    EXPECT_EQ(r.history.size(), best_epoch + cfg.patience);
  }
}

TEST(DheModel, CheckpointRoundTripIsExact) {
  auto cfg = small_config();
  auto m = jittered_model(cfg, 19);
  nn::Vector mean(2), scale(2);
  mean << 0.1, -0.3;
  scale << 2.0, 0.5;
  m.set_feature_standardizer(mean, scale);
  std::stringstream s;
  m.save(s);
  const auto back = DheModel::load(s);
  Rng rng(20);
  for (int i = 0; i < 10; ++i) {
    const auto e = random_example(cfg, 1 + rng.index(5), rng);
    EXPECT_EQ(back.forward(e), m.forward(e));
  }
  std::stringstream again;
  back.save(again);
  std::stringstream first;
  m.save(first);
  EXPECT_EQ(again.str(), first.str());
  std::stringstream bad("dhe 9\n{}\n");
  EXPECT_THROW(DheModel::load(bad), Error);
}

TEST(DheModel, MakeExamplesGathersEmbeddings) {
  const auto h = Hypergraph::build({{0, 2}, {1}}, 3);
  EmbeddingTable vt(3, 2), et(2, 3);
  for (std::size_t i = 0; i < vt.input_data().size(); ++i) vt.input_data()[i] = static_cast<double>(i);
  for (std::size_t i = 0; i < et.input_data().size(); ++i) et.input_data()[i] = 10.0 + static_cast<double>(i);
  const std::vector<std::size_t> labels{1, 0};
  const auto ex = make_examples(h, labels, vt, et);
  ASSERT_EQ(ex.size(), 2u);
  EXPECT_EQ(ex[0].member_embeddings.cols(), 2);
  EXPECT_EQ(ex[0].member_embeddings(0, 1), 4.0);  // vertex 2, dim 0
  EXPECT_EQ(ex[1].context(0), 13.0);
  EXPECT_EQ(ex[0].label, 1u);
  EXPECT_THROW(make_examples(h, std::vector<std::size_t>{0}, vt, et), Error);
}

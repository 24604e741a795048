#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "gradcheck.hpp"
#include "tsdiff/data/synthetic.hpp"
#include "tsdiff/extractors/contrastive.hpp"
#include "tsdiff/metrics/joint_fd.hpp"

using namespace tsdiff;
using tsdiff::testing::gradcheck;

namespace {

ExtractorConfig tiny_config() {
  ExtractorConfig cfg;
  cfg.d_model = 8;
  cfg.d_emb = 6;
  cfg.layers = 2;
  cfg.heads = 2;
  cfg.dropout = 0.0;
  cfg.patch_len = 8;
  cfg.n_patch = 2;
  return cfg;
}

NormStats identity_norm() {
  NormStats n;
  n.mode = NormMode::minmax;
  n.channels = {{0.0, 1.0}};
  n.continuous = {{0.0, 1.0}, {0.0, 1.0}};
  return n;
}

PairedDataset tiny_dataset(std::size_t n, Eigen::Index L, std::uint64_t seed) {
  SyntheticConfig c;
  c.n_samples = n;
  c.horizon = L;
  c.seed = seed;
  c.noise_std = 0.05;
  c.min_segment = 8;
  c.switch_policy = L >= 16 ? SwitchPolicy::half_split : SwitchPolicy::constant;
  return generate_synthetic(c);
}

}  // namespace

TEST_CASE("sample_patches: full-length patches force offset zero") {
  auto ds = tiny_dataset(4, 16, 1);
  Rng rng(2);
  auto batch = sample_patches(ds, {0, 1, 2, 3}, 2, 16, rng);
  CHECK(batch.size() == 8);
  for (const auto& [si, off] : batch.spans) CHECK(off == 0);
}

TEST_CASE("sample_patches: N_patch=2 over a batch of 4 yields 8 aligned pairs") {
  auto ds = tiny_dataset(4, 32, 3);
  Rng rng(4);
  auto batch = sample_patches(ds, {0, 1, 2, 3}, 2, 8, rng);
  REQUIRE(batch.size() == 8);
  // alignment recheck at the index level
  for (std::size_t p = 0; p < batch.size(); ++p) {
    auto [si, off] = batch.spans[p];
    const Sample& s = ds.samples[si];
    CHECK((batch.x[p] - s.series.values.middleRows(off, 8)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(batch.c[p].categorical == s.meta.categorical.middleRows(off, 8));
    CHECK((batch.c[p].continuous - s.meta.continuous.middleRows(off, 8))
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
}

TEST_CASE("sample_patches: offsets are distinct within a sample when possible") {
  auto ds = tiny_dataset(1, 32, 5);
  Rng rng(6);
  for (int rep = 0; rep < 20; ++rep) {
    auto batch = sample_patches(ds, {0}, 4, 8, rng);
    std::set<Eigen::Index> offs;
    for (auto& [si, off] : batch.spans) offs.insert(off);
    CHECK(offs.size() == 4);
  }
  CHECK_THROWS_AS(sample_patches(ds, {0}, 1, 40, rng), DataError);
}

TEST_CASE("identical patches embed identically with unit norm") {
  auto ds = tiny_dataset(2, 16, 7);
  FeatureExtractors<double> fx(tiny_config(), DataSchema::from_dataset(ds),
                               identity_norm(), 11);
  Rng rng(8);
  auto batch = sample_patches(ds, {0, 0}, 1, 8, rng);
  // force identical offsets
  batch.x[1] = batch.x[0];
  batch.c[1] = batch.c[0];
  auto emb = fx.embed_time_values(batch.x);
  CHECK((emb.row(0) - emb.row(1)).cwiseAbs().maxCoeff() == 0.0);
  for (Eigen::Index i = 0; i < emb.rows(); ++i)
    CHECK(std::abs(emb.row(i).norm() - 1.0) < 1e-6);
  auto membv = fx.embed_meta_values(batch.c);
  for (Eigen::Index i = 0; i < membv.rows(); ++i)
    CHECK(std::abs(membv.row(i).norm() - 1.0) < 1e-6);
}

TEST_CASE("extractor parameter count matches the analytic formula") {
  auto ds = tiny_dataset(2, 16, 9);
  auto schema = DataSchema::from_dataset(ds);
  FeatureExtractors<double> fx(tiny_config(), schema, identity_norm(), 12);
  CHECK(fx.params().total_size() ==
        FeatureExtractors<double>::analytic_param_count(tiny_config(), schema));
}

TEST_CASE("extractor config invariants are enforced") {
  auto ds = tiny_dataset(2, 16, 10);
  auto schema = DataSchema::from_dataset(ds);
  auto cfg = tiny_config();
  cfg.patch_len = 32;  // exceeds horizon
  CHECK_THROWS_AS(FeatureExtractors<double>(cfg, schema, identity_norm(), 1), DataError);
  cfg = tiny_config();
  cfg.d_emb = 8;  // not smaller than F * patch_len
  CHECK_THROWS_AS(FeatureExtractors<double>(cfg, schema, identity_norm(), 1), DataError);
}

TEST_CASE("both extractors pass gradient checks on a tiny config") {
  auto ds = tiny_dataset(3, 16, 13);
  FeatureExtractors<double> fx(tiny_config(), DataSchema::from_dataset(ds),
                               identity_norm(), 14);
  Rng rng(15);
  auto batch = sample_patches(ds, {0, 1, 2}, 1, 8, rng);

  auto build = [&](bool with_grad) {
    return contrastive_step(fx, batch, with_grad, nullptr).loss;
  };
  auto rep = gradcheck(fx.params(), [&] { return build(false); }, [&] { build(true); });
  CHECK(rep.max_rel_err < 1e-4);
}

TEST_CASE("contrastive loss equals ln(batch) when all embeddings coincide") {
  auto ds = tiny_dataset(4, 16, 16);
  FeatureExtractors<double> fx(tiny_config(), DataSchema::from_dataset(ds),
                               identity_norm(), 17);
  // zero projection weights collapse every embedding to the zero vector
  fx.params().find("time/project/w")->value.setZero();
  fx.params().find("time/project/b")->value.setZero();
  fx.params().find("meta/project/w")->value.setZero();
  fx.params().find("meta/project/b")->value.setZero();
  Rng rng(18);
  auto batch = sample_patches(ds, {0, 1, 2, 3}, 2, 8, rng);
  auto res = contrastive_step(fx, batch, false, nullptr);
  CHECK(res.loss == doctest::Approx(std::log(8.0)).epsilon(1e-6));
}

TEST_CASE("contrastive loss approaches zero under perfect diagonal dominance") {
  // limiting case checked on the loss functional itself
  Graph<double> g;
  Mat<double> logits = Mat<double>::Constant(6, 6, -50.0);
  for (int i = 0; i < 6; ++i) logits(i, i) = 50.0;
  std::vector<int> labels{0, 1, 2, 3, 4, 5};
  auto l1 = softmax_xent_rows(g.input(logits), labels);
  auto l2 = softmax_xent_rows(transpose(g.input(logits)), labels);
  CHECK(l1.value()(0, 0) < 1e-12);
  CHECK(l2.value()(0, 0) < 1e-12);
}

TEST_CASE("total loss is invariant to transposing the logits (symmetric construction)") {
  auto ds = tiny_dataset(3, 16, 19);
  FeatureExtractors<double> fx(tiny_config(), DataSchema::from_dataset(ds),
                               identity_norm(), 20);
  Rng rng(21);
  auto batch = sample_patches(ds, {0, 1, 2}, 2, 8, rng);

  // recompute the loss by hand from the embeddings and compare
  auto t_emb = fx.embed_time_values(batch.x);
  auto m_emb = fx.embed_meta_values(batch.c);
  double scale = std::exp(fx.log_scale().value(0, 0));
  Eigen::MatrixXd logits = scale * (t_emb * m_emb.transpose());
  auto ce_rows = [](const Eigen::MatrixXd& l) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
      double m = l.row(i).maxCoeff();
      double z = (l.row(i).array() - m).exp().sum();
      total += std::log(z) + m - l(i, i);
    }
    return total / static_cast<double>(l.rows());
  };
  double manual = 0.5 * (ce_rows(logits) + ce_rows(logits.transpose()));
  double manual_swapped = 0.5 * (ce_rows(logits.transpose()) + ce_rows(logits));
  CHECK(manual == doctest::Approx(manual_swapped).epsilon(1e-15));

  auto res = contrastive_step(fx, batch, false, nullptr);
  CHECK(res.loss == doctest::Approx(manual).epsilon(1e-10));
}

TEST_CASE("contrastive step rejects degenerate batches") {
  auto ds = tiny_dataset(2, 16, 22);
  FeatureExtractors<double> fx(tiny_config(), DataSchema::from_dataset(ds),
                               identity_norm(), 23);
  Rng rng(24);
  auto batch = sample_patches(ds, {0}, 1, 8, rng);
  CHECK_THROWS_AS(contrastive_step(fx, batch, false, nullptr), DataError);
}

TEST_CASE("untrained extractors retrieve at chance level") {
  auto ds = tiny_dataset(64, 16, 25);
  FeatureExtractors<float> fx(tiny_config(), DataSchema::from_dataset(ds),
                              identity_norm(), 26);
  // 40 batches of 8 pairs: chance = 1/8. A binomial 95% interval around
  // 0.125 over 320 draws is roughly +/- 0.036.
  double acc = retrieval_top1(fx, ds, 8, 40, 27);
  CHECK(acc > 0.125 - 0.06);
  CHECK(acc < 0.125 + 0.06);
}

TEST_CASE("short contrastive training is seed-deterministic and reduces the loss") {
  auto ds = tiny_dataset(32, 16, 28);
  auto schema = DataSchema::from_dataset(ds);
  auto [normed, stats] = normalize(ds, NormMode::minmax);

  auto run = [&] {
    FeatureExtractors<float> fx(tiny_config(), schema, stats, 29);
    ExtractorTrainOptions opt;
    opt.batch_samples = 8;
    opt.steps = 30;
    opt.lr = 1e-3;
    opt.seed = 30;
    return std::pair{train_extractors(fx, ds, opt),
                     retrieval_top1(fx, ds, 8, 10, 31)};
  };
  auto [log1, acc1] = run();
  auto [log2, acc2] = run();
  CHECK(log1.final_loss == log2.final_loss);  // bitwise deterministic
  CHECK(acc1 == acc2);

  // training moved the loss below the uniform-logit value
  CHECK(log1.final_loss < std::log(16.0));
}

TEST_CASE("extractor checkpoints round-trip") {
  auto ds = tiny_dataset(4, 16, 32);
  FeatureExtractors<float> fx(tiny_config(), DataSchema::from_dataset(ds),
                              identity_norm(), 33);
  auto dir = std::filesystem::temp_directory_path() / "tsdiff_fx_test";
  std::filesystem::create_directories(dir);
  auto path = dir / "fx.ckpt";
  fx.save(path);
  auto loaded = FeatureExtractors<float>::load(path);
  CHECK(loaded->config().d_emb == 6);
  Rng rng(34);
  auto batch = sample_patches(ds, {0, 1}, 1, 8, rng);
  auto a = fx.embed_time_values(batch.x);
  auto b = loaded->embed_time_values(batch.x);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("metric patch grid covers the horizon without overlap") {
  Rng rng(35);
  auto grid = metric_patch_grid(96, 64, rng);
  REQUIRE(grid.size() == 1);
  CHECK(grid[0] >= 0);
  CHECK(grid[0] + 64 <= 96);

  auto grid2 = metric_patch_grid(128, 64, rng);
  REQUIRE(grid2.size() == 2);
  CHECK(grid2[1] - grid2[0] == 64);

  CHECK_THROWS_AS(metric_patch_grid(32, 64, rng), DataError);
}

TEST_CASE("joint FD of a dataset against itself is zero; embeddings are deterministic") {
  auto ds = tiny_dataset(24, 16, 36);
  auto [normed, stats] = normalize(ds, NormMode::minmax);
  FeatureExtractors<float> fx(tiny_config(), DataSchema::from_dataset(ds), stats, 37);

  auto rep = joint_fd(fx, ds, ds, 38);
  CHECK(rep.value < 1e-6);
  CHECK(rep.metric_name == "fd_joint");
  CHECK(rep.n_real == 24);

  auto e1 = embed_dataset(fx, ds, 39, true);
  auto e2 = embed_dataset(fx, ds, 39, true);
  CHECK((e1 - e2).cwiseAbs().maxCoeff() == 0.0);

  auto trep = time_fd(fx, ds, ds, 38);
  CHECK(trep.value < 1e-6);
  CHECK(trep.metric_name == "fd_time");
}

TEST_CASE("time-only FD ignores metadata changes entirely") {
  auto ds = tiny_dataset(24, 16, 40);
  auto [normed, stats] = normalize(ds, NormMode::minmax);
  FeatureExtractors<float> fx(tiny_config(), DataSchema::from_dataset(ds), stats, 41);

  PairedDataset flipped = ds;
  for (auto& s : flipped.samples)
    for (Eigen::Index t = 0; t < s.meta.categorical.rows(); ++t)
      s.meta.categorical(t, 0) = 1 - s.meta.categorical(t, 0);

  auto t_orig = time_fd(fx, ds, ds, 42);
  auto t_flip = time_fd(fx, ds, flipped, 42);
  CHECK(t_orig.value == doctest::Approx(t_flip.value).epsilon(1e-12));  // exactly unused

  auto j_flip = joint_fd(fx, ds, flipped, 42);
  CHECK(j_flip.value > t_flip.value);  // joint embedding reacts
}

TEST_CASE("fd report formats as key=value text") {
  FdReport r;
  r.metric_name = "fd_joint";
  r.value = 1.25;
  r.n_real = 10;
  r.n_gen = 10;
  r.d_emb = 6;
  r.l_patch = 8;
  auto s = format_report(r);
  CHECK(s.find("metric_name=fd_joint") != std::string::npos);
  CHECK(s.find("value=1.25") != std::string::npos);
  CHECK(s.find("L_patch=8") != std::string::npos);
}

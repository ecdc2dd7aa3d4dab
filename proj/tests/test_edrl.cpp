#include <doctest.h>

#include "edrlmea/edrl.hpp"
#include "edrlmea/serialize.hpp"
#include "helpers.hpp"

using namespace edrlmea;

namespace {

edrl::EdrlConfig small_config(std::uint64_t seed) {
  edrl::EdrlConfig cfg;
  cfg.seed = seed;
  cfg.batch_size = 16;
  cfg.max_epochs = 15;
  cfg.patience = 5;
  cfg.learning_rate = 2e-3;
  return cfg;
}

std::pair<std::vector<Matrix>, std::vector<Matrix>> gaussian_partitions(int n_train, int n_val,
                                                                        int dim, Rng& rng) {
  std::vector<Matrix> train{helpers::gaussian_matrix(n_train, dim, rng, 0.5, 1.0),
                            helpers::gaussian_matrix(n_train, dim, rng, 2.5, 1.0)};
  std::vector<Matrix> val{helpers::gaussian_matrix(n_val, dim, rng, 0.5, 1.0),
                          helpers::gaussian_matrix(n_val, dim, rng, 2.5, 1.0)};
  return {train, val};
}

}  // namespace

TEST_SUITE("edrl") {

TEST_CASE("build gives the documented layer dims") {
  auto model = edrl::build_edrl(88, 2, small_config(1));
  const auto& block = model.blocks[0];
  CHECK(block.intra.encoder->in_dim() == 88);
  CHECK(block.intra.encoder->out_dim() == 176);
  CHECK(block.intra.latent->in_dim() == 176);
  CHECK(block.intra.latent->out_dim() == 352);
  CHECK(block.intra.decoder->in_dim() == 352);
  CHECK(block.intra.decoder->out_dim() == 176);
  CHECK(block.fusion->in_dim() == 352);
  CHECK(block.fusion->out_dim() == 88);
  CHECK(block.fusion->activation == nn::Activation::Linear);
}

TEST_CASE("build rejects fewer than two classes") {
  CHECK_THROWS_AS(edrl::build_edrl(10, 1, small_config(1)), Error);
}

TEST_CASE("shared latent aliases across blocks") {
  auto model = edrl::build_edrl(6, 3, small_config(2));
  CHECK(model.blocks[0].inter.latent.get() == model.blocks[1].inter.latent.get());
  CHECK(model.blocks[1].inter.latent.get() == model.blocks[2].inter.latent.get());
  // a write through block 0 is observable through block 2
  model.blocks[0].inter.latent->weights(0, 0) = 123.0;
  CHECK(model.blocks[2].inter.latent->weights(0, 0) == doctest::Approx(123.0));
  // intra latents stay private
  CHECK(model.blocks[0].intra.latent.get() != model.blocks[1].intra.latent.get());
}

TEST_CASE("same seed builds identical parameters") {
  auto a = edrl::build_edrl(7, 2, small_config(5));
  auto b = edrl::build_edrl(7, 2, small_config(5));
  CHECK((a.blocks[0].intra.encoder->weights - b.blocks[0].intra.encoder->weights)
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK((a.shared_latent->weights - b.shared_latent->weights).cwiseAbs().maxCoeff() == 0.0);
  auto c = edrl::build_edrl(7, 2, small_config(6));
  CHECK((a.blocks[0].intra.encoder->weights - c.blocks[0].intra.encoder->weights)
            .cwiseAbs()
            .maxCoeff() > 0.0);
}

TEST_CASE("block_forward shapes and zero propagation") {
  auto model = edrl::build_edrl(88, 2, small_config(3));
  Rng rng(4);
  Matrix x = helpers::random_matrix(1, 88, rng);
  auto out = edrl::block_forward(model.blocks[0], x);
  CHECK(out.z_intra.cols() == 352);
  CHECK(out.z_inter.cols() == 352);
  CHECK(out.fused.cols() == 88);
  CHECK(out.fused.rows() == 1);

  // zero input with zero biases stays zero through relu and linear layers
  Matrix zero = Matrix::Zero(2, 88);
  auto zout = edrl::block_forward(model.blocks[0], zero);
  CHECK(zout.z_intra.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK(zout.fused.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("block_forward is row independent") {
  auto model = edrl::build_edrl(10, 2, small_config(7));
  Rng rng(8);
  Matrix x = helpers::random_matrix(5, 10, rng);
  auto out = edrl::block_forward(model.blocks[0], x);
  // permute rows; outputs permute identically
  std::vector<Eigen::Index> perm{4, 2, 0, 3, 1};
  Matrix xp(5, 10);
  for (int i = 0; i < 5; ++i) xp.row(i) = x.row(perm[i]);
  auto outp = edrl::block_forward(model.blocks[0], xp);
  for (int i = 0; i < 5; ++i)
    CHECK((outp.fused.row(i) - out.fused.row(perm[i])).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("block_loss composes cosine and kl terms") {
  auto cfg = small_config(9);
  auto model = edrl::build_edrl(6, 2, cfg);
  Rng rng(10);
  Matrix x = helpers::random_matrix(4, 6, rng, 0.5, 1.5);
  auto out = edrl::block_forward(model.blocks[0], x);
  auto loss = edrl::block_loss(x, out, cfg);
  CHECK(loss.total ==
        doctest::Approx(loss.cosine_term + cfg.kl_weight * loss.kl_term).epsilon(1e-14));

  // kl_weight = 0 reduces to the pure cosine term
  auto cfg0 = cfg;
  cfg0.kl_weight = 0.0;
  auto loss0 = edrl::block_loss(x, out, cfg0);
  CHECK(loss0.total == doctest::Approx(loss0.cosine_term).epsilon(1e-14));

  // independent recomputation from the saved activations
  const double cos_again = nn::cosine_loss(x, out.fused).value;
  const double kl_again =
      nn::kl_sparsity(out.z_intra, cfg.rho).value + nn::kl_sparsity(out.z_inter, cfg.rho).value;
  CHECK(loss.total == doctest::Approx(cos_again + cfg.kl_weight * kl_again).epsilon(1e-14));
}

TEST_CASE("perfect reconstruction with matched sparsity gives zero loss") {
  edrl::EdrlConfig cfg = small_config(0);
  cfg.kl_weight = 0.0;  // fused == x covers the cosine term exactly
  auto model = edrl::build_edrl(4, 2, cfg);
  Rng rng(11);
  Matrix x = helpers::random_matrix(3, 4, rng, 0.5, 1.0);
  edrl::BlockOutputs out;
  out.fused = x;
  out.z_intra = Matrix::Zero(3, 8);
  out.z_inter = Matrix::Zero(3, 8);
  CHECK(edrl::block_loss(x, out, cfg).total == doctest::Approx(0.0));
}

TEST_CASE("full block gradient passes the finite-difference check") {
  edrl::EdrlConfig cfg = small_config(12);
  auto model = edrl::build_edrl(6, 2, cfg);
  Rng rng(13);
  Matrix x = helpers::random_matrix(5, 6, rng, 0.25, 1.25);
  double err = edrl::block_finite_diff_check(model.blocks[0], x, cfg, 1e-6);
  CHECK(err < 1e-5);
}

TEST_CASE("training lowers the loss on synthetic gaussians") {
  Rng rng(14);
  auto [train, val] = gaussian_partitions(200, 40, 20, rng);
  edrl::EdrlConfig cfg = small_config(15);
  cfg.max_epochs = 12;
  auto model = edrl::build_edrl(20, 2, cfg);

  // initial loss before any updates
  double initial = 0.0;
  for (int c = 0; c < 2; ++c)
    initial += edrl::block_loss(train[c], edrl::block_forward(model.blocks[c], train[c]), cfg).total;

  edrl::train_edrl(model, train, val);
  double final_loss = 0.0;
  for (int c = 0; c < 2; ++c)
    final_loss +=
        edrl::block_loss(train[c], edrl::block_forward(model.blocks[c], train[c]), cfg).total;
  CHECK(final_loss < initial);
  CHECK(model.train_history.size() >= 1);
}

TEST_CASE("restored model attains the recorded minimum validation loss") {
  Rng rng(16);
  auto [train, val] = gaussian_partitions(60, 15, 8, rng);
  edrl::EdrlConfig cfg = small_config(17);
  cfg.max_epochs = 10;
  cfg.patience = 3;
  auto model = edrl::build_edrl(8, 2, cfg);
  edrl::train_edrl(model, train, val);

  double min_recorded = std::numeric_limits<double>::infinity();
  for (const auto& epoch : model.val_history) {
    double total = 0.0;
    for (double v : epoch) total += v;
    min_recorded = std::min(min_recorded, total);
  }
  double restored = 0.0;
  for (int c = 0; c < 2; ++c)
    restored += edrl::block_loss(val[c], edrl::block_forward(model.blocks[c], val[c]), cfg).total;
  CHECK(restored == doctest::Approx(min_recorded).epsilon(1e-12));
}

TEST_CASE("patience zero stops one epoch past the best") {
  Rng rng(18);
  auto [train, val] = gaussian_partitions(40, 10, 6, rng);
  edrl::EdrlConfig cfg = small_config(19);
  cfg.max_epochs = 200;
  cfg.patience = 0;
  cfg.min_delta = 1e-4;
  auto model = edrl::build_edrl(6, 2, cfg);
  edrl::train_edrl(model, train, val);
  if (model.early_stopped)
    CHECK(static_cast<int>(model.val_history.size()) == model.best_epoch + 2);
}

TEST_CASE("training one block leaves other blocks' private layers bitwise unchanged") {
  Rng rng(20);
  auto [train, val] = gaussian_partitions(30, 8, 5, rng);
  (void)val;
  edrl::EdrlConfig cfg = small_config(21);
  auto model = edrl::build_edrl(5, 2, cfg);

  const Matrix enc_before = model.blocks[1].intra.encoder->weights;
  const Matrix lat_before = model.blocks[1].intra.latent->weights;
  const Matrix dec_before = model.blocks[1].intra.decoder->weights;
  const Matrix inter_enc_before = model.blocks[1].inter.encoder->weights;
  const Matrix fusion_before = model.blocks[1].fusion->weights;
  const Matrix shared_before = model.shared_latent->weights;

  nn::AdamState optimizer;
  edrl::train_block_epoch(model, 0, train[0], optimizer, 0);

  CHECK((model.blocks[1].intra.encoder->weights - enc_before).cwiseAbs().maxCoeff() == 0.0);
  CHECK((model.blocks[1].intra.latent->weights - lat_before).cwiseAbs().maxCoeff() == 0.0);
  CHECK((model.blocks[1].intra.decoder->weights - dec_before).cwiseAbs().maxCoeff() == 0.0);
  CHECK((model.blocks[1].inter.encoder->weights - inter_enc_before).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK((model.blocks[1].fusion->weights - fusion_before).cwiseAbs().maxCoeff() == 0.0);
  // the shared latent does move, and block 1 observes the update
  CHECK((model.shared_latent->weights - shared_before).cwiseAbs().maxCoeff() > 0.0);
  CHECK(model.blocks[1].inter.latent.get() == model.shared_latent.get());
}

TEST_CASE("shared latent stays identical across blocks after training") {
  Rng rng(22);
  auto [train, val] = gaussian_partitions(50, 12, 6, rng);
  edrl::EdrlConfig cfg = small_config(23);
  cfg.max_epochs = 5;
  auto model = edrl::build_edrl(6, 2, cfg);
  edrl::train_edrl(model, train, val);
  CHECK(model.blocks[0].inter.latent.get() == model.blocks[1].inter.latent.get());

  // the ablation with sharing disabled diverges
  edrl::EdrlConfig ablated = cfg;
  ablated.share_inter_latent = false;
  auto model_ab = edrl::build_edrl(6, 2, ablated);
  edrl::train_edrl(model_ab, train, val);
  CHECK(model_ab.blocks[0].inter.latent.get() != model_ab.blocks[1].inter.latent.get());
  const double diff = (model_ab.blocks[0].inter.latent->weights -
                       model_ab.blocks[1].inter.latent->weights)
                          .cwiseAbs()
                          .maxCoeff();
  CHECK(diff > 0.0);
  // and the ablated run lands on different parameters than the shared run
  CHECK((model_ab.blocks[0].inter.latent->weights - model.shared_latent->weights)
            .cwiseAbs()
            .maxCoeff() > 0.0);
}

TEST_CASE("embed shape, purity, and concat option") {
  Rng rng(24);
  auto model = edrl::build_edrl(88, 2, small_config(25));
  Matrix x = helpers::random_matrix(5, 88, rng);
  auto blocks = edrl::embed(model, x);
  REQUIRE(blocks.size() == 2);
  CHECK(blocks[0].rows() == 5);
  CHECK(blocks[0].cols() == 88);
  auto again = edrl::embed(model, x);
  CHECK((blocks[0] - again[0]).cwiseAbs().maxCoeff() == 0.0);
  CHECK((blocks[1] - again[1]).cwiseAbs().maxCoeff() == 0.0);

  auto cfg = small_config(25);
  cfg.concat_latent_output = true;
  auto model_cat = edrl::build_edrl(88, 2, cfg);
  auto cat = edrl::embed(model_cat, x);
  CHECK(cat[0].cols() == 2 * 352);
}

TEST_CASE("model json round-trip preserves embeddings and sharing") {
  Rng rng(26);
  auto [train, val] = gaussian_partitions(30, 8, 6, rng);
  edrl::EdrlConfig cfg = small_config(27);
  cfg.max_epochs = 3;
  auto model = edrl::build_edrl(6, 2, cfg);
  edrl::train_edrl(model, train, val);

  auto j = serialize::edrl_to_json(model);
  auto loaded = serialize::edrl_from_json(j);
  CHECK(loaded.blocks[0].inter.latent.get() == loaded.blocks[1].inter.latent.get());
  Matrix x = helpers::random_matrix(4, 6, rng);
  auto a = edrl::embed(model, x);
  auto b = edrl::embed(loaded, x);
  CHECK((a[0] - b[0]).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a[1] - b[1]).cwiseAbs().maxCoeff() == 0.0);
}

}  // TEST_SUITE

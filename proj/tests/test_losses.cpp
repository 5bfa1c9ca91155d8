#include "ddad/losses.hpp"

#include <cmath>

#include "ddad/net.hpp"
#include "doctest.h"

using namespace ddad;

namespace {

Tensor<double> constant(std::vector<int64_t> shape, double v) {
  Tensor<double> t(std::move(shape));
  t.fill(v);
  return t;
}

Tensor<double> random_tensor(std::vector<int64_t> shape, Rng& rng, double lo,
                             double hi) {
  Tensor<double> t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

double rel_err(double a, double b) {
  const double scale = std::max({std::fabs(a), std::fabs(b), 1e-6});
  return std::fabs(a - b) / scale;
}

}  // namespace

TEST_CASE("loss_mse hand cases") {
  auto x = constant({1, 1, 2, 2}, 1.0);
  CHECK(loss_mse(x, x) == 0.0);

  auto zero = constant({1, 1, 2, 2}, 0.0);
  CHECK(loss_mse(x, zero) == doctest::Approx(1.0).epsilon(1e-12));

  // quadratic homogeneity: doubling the residual quadruples the loss
  auto half = constant({1, 1, 2, 2}, 0.5);
  const double base = loss_mse(x, half);   // residual 0.5
  const double twice = loss_mse(x, zero);  // residual 1.0
  CHECK(twice == doctest::Approx(4.0 * base).epsilon(1e-12));

  auto bad = constant({1, 1, 3, 3}, 0.0);
  CHECK_THROWS_AS(loss_mse(x, bad), ValidationError);
}

TEST_CASE("loss_aeu hand cases") {
  auto x = constant({1, 1, 2, 2}, 0.7);
  auto lv0 = constant({1, 1, 2, 2}, 0.0);  // sigma^2 = 1
  CHECK(loss_aeu(x, x, lv0) == 0.0);

  // single-pixel residual e: optimum over sigma^2 sits at sigma^2 = e^2
  // with loss 1 + log(e^2) at that pixel (d/dv of e^2/v + log v vanishes)
  const double e = 0.3;
  auto x1 = constant({1, 1, 1, 1}, 0.0);
  auto r1 = constant({1, 1, 1, 1}, e);
  double best_v = 0, best_loss = 1e9;
  for (double v = 1e-4; v < 2.0; v *= 1.01) {
    auto lv = constant({1, 1, 1, 1}, std::log(v));
    const double l = loss_aeu(x1, r1, lv);
    if (l < best_loss) {
      best_loss = l;
      best_v = v;
    }
  }
  CHECK(best_v == doctest::Approx(e * e).epsilon(0.02));
  CHECK(best_loss == doctest::Approx(1.0 + std::log(e * e)).epsilon(1e-3));

  // sigma^2 == 1 reduces exactly to MSE
  Rng rng(3);
  auto xs = random_tensor({2, 1, 3, 3}, rng, 0.0, 1.0);
  auto rs = random_tensor({2, 1, 3, 3}, rng, 0.0, 1.0);
  auto lv = constant({2, 1, 3, 3}, 0.0);
  CHECK(loss_aeu(xs, rs, lv) == doctest::Approx(loss_mse(xs, rs)).epsilon(1e-12));
}

TEST_CASE("loss gradients match finite differences on raw grids") {
  Rng rng(7);
  auto x = random_tensor({1, 1, 4, 4}, rng, 0.0, 1.0);
  auto recon = random_tensor({1, 1, 4, 4}, rng, 0.1, 0.9);
  auto lv = random_tensor({1, 1, 4, 4}, rng, -1.0, 1.0);
  const double h = 1e-6;

  Tensor<double> g_mse;
  loss_mse(x, recon, &g_mse);
  for (int64_t i = 0; i < recon.numel(); ++i) {
    const double keep = recon[i];
    recon[i] = keep + h;
    const double up = loss_mse(x, recon);
    recon[i] = keep - h;
    const double down = loss_mse(x, recon);
    recon[i] = keep;
    CHECK(rel_err((up - down) / (2 * h), g_mse[i]) < 1e-4);
  }

  Tensor<double> g_recon, g_lv;
  loss_aeu(x, recon, lv, &g_recon, &g_lv);
  for (int64_t i = 0; i < recon.numel(); ++i) {
    const double keep = recon[i];
    recon[i] = keep + h;
    const double up = loss_aeu(x, recon, lv);
    recon[i] = keep - h;
    const double down = loss_aeu(x, recon, lv);
    recon[i] = keep;
    CHECK(rel_err((up - down) / (2 * h), g_recon[i]) < 1e-4);
  }
  for (int64_t i = 0; i < lv.numel(); ++i) {
    const double keep = lv[i];
    lv[i] = keep + h;
    const double up = loss_aeu(x, recon, lv);
    lv[i] = keep - h;
    const double down = loss_aeu(x, recon, lv);
    lv[i] = keep;
    CHECK(rel_err((up - down) / (2 * h), g_lv[i]) < 1e-4);
  }
}

// End-to-end gradient check: losses backpropagated through a small network
// built from the production layers, in double precision.
TEST_CASE("loss gradients propagate correctly through a toy network") {
  Rng rng(11);
  const int side = 4;
  Conv2d<double> conv("c", 1, 2, 3, 1, 1);
  conv.init(rng);
  BatchNorm<double> bn("bn", 2);
  ReLU<double> relu;
  Conv2d<double> head("h", 2, 1, 3, 1, 1);
  head.init(rng);
  Sigmoid<double> sig;

  std::vector<ParamRef<double>> params;
  conv.collect(params);
  bn.collect(params);
  head.collect(params);

  Tensor<double> x({2, 1, side, side});
  for (int64_t i = 0; i < x.numel(); ++i) x[i] = rng.uniform(0.0, 1.0);

  auto forward_loss = [&]() {
    Tensor<double> h = conv.forward(x);
    h = bn.forward(h, true);
    h = relu.forward(h);
    h = head.forward(h);
    Tensor<double> recon = sig.forward(h);
    return loss_mse(x, recon);
  };

  // analytic grads
  {
    Tensor<double> h = conv.forward(x);
    h = bn.forward(h, true);
    h = relu.forward(h);
    h = head.forward(h);
    Tensor<double> recon = sig.forward(h);
    Tensor<double> d_recon;
    loss_mse(x, recon, &d_recon);
    Tensor<double> d = sig.backward(d_recon);
    d = head.backward(d);
    d = relu.backward(d);
    d = bn.backward(d);
    conv.backward(d);
  }

  const double h_step = 1e-6;
  for (auto& p : params) {
    if (!p.trainable) continue;
    for (int64_t i = 0; i < p.value->numel(); ++i) {
      const double keep = (*p.value)[i];
      (*p.value)[i] = keep + h_step;
      const double up = forward_loss();
      (*p.value)[i] = keep - h_step;
      const double down = forward_loss();
      (*p.value)[i] = keep;
      const double fd = (up - down) / (2 * h_step);
      CHECK(rel_err(fd, (*p.grad)[i]) < 1e-4);
    }
  }
}

TEST_CASE("aeu gradients propagate through a two-head toy network") {
  Rng rng(13);
  const int side = 4;
  Conv2d<double> trunk("t", 1, 2, 3, 1, 1);
  trunk.init(rng);
  ReLU<double> relu;
  Conv2d<double> rec_head("r", 2, 1, 3, 1, 1);
  rec_head.init(rng);
  Sigmoid<double> sig;
  Conv2d<double> var_head("v", 2, 1, 3, 1, 1);
  var_head.init(rng);
  Clamp<double> clamp(-10.0, 10.0);

  std::vector<ParamRef<double>> params;
  trunk.collect(params);
  rec_head.collect(params);
  var_head.collect(params);

  Tensor<double> x({1, 1, side, side});
  for (int64_t i = 0; i < x.numel(); ++i) x[i] = rng.uniform(0.0, 1.0);

  auto forward_loss = [&]() {
    Tensor<double> h = trunk.forward(x);
    h = relu.forward(h);
    Tensor<double> recon = sig.forward(rec_head.forward(h));
    Tensor<double> lv = clamp.forward(var_head.forward(h));
    return loss_aeu(x, recon, lv);
  };

  {
    Tensor<double> h = trunk.forward(x);
    h = relu.forward(h);
    Tensor<double> recon = sig.forward(rec_head.forward(h));
    Tensor<double> lv = clamp.forward(var_head.forward(h));
    Tensor<double> d_recon, d_lv;
    loss_aeu(x, recon, lv, &d_recon, &d_lv);
    Tensor<double> d1 = rec_head.backward(sig.backward(d_recon));
    Tensor<double> d2 = var_head.backward(clamp.backward(d_lv));
    for (int64_t i = 0; i < d1.numel(); ++i) d1[i] += d2[i];
    trunk.backward(relu.backward(d1));
  }

  const double h_step = 1e-6;
  for (auto& p : params) {
    for (int64_t i = 0; i < p.value->numel(); ++i) {
      const double keep = (*p.value)[i];
      (*p.value)[i] = keep + h_step;
      const double up = forward_loss();
      (*p.value)[i] = keep - h_step;
      const double down = forward_loss();
      (*p.value)[i] = keep;
      CHECK(rel_err((up - down) / (2 * h_step), (*p.grad)[i]) < 1e-4);
    }
  }
}

#include "adda/experiment/gradcheck_suite.hpp"

#include <functional>
#include <memory>
#include <random>

#include "adda/autodiff/ops.hpp"
#include "adda/dann/dann.hpp"
#include "adda/model/encoder.hpp"
#include "adda/model/heads.hpp"
#include "adda/train/losses.hpp"

namespace adda {
namespace {

class Suite {
 public:
  explicit Suite(std::uint64_t seed) : rng_(seed) {}

  Tensor random(std::size_t rows, std::size_t cols, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    Tensor t = Tensor::matrix(rows, cols);
    for (double& v : t.data()) v = dist(rng_);
    return t;
  }

  // Entries bounded away from zero, for kinks and singularities.
  Tensor away_from_zero(std::size_t rows, std::size_t cols, double lo) {
    std::uniform_real_distribution<double> mag(lo, lo + 1.0);
    std::bernoulli_distribution sign;
    Tensor t = Tensor::matrix(rows, cols);
    for (double& v : t.data()) v = sign(rng_) ? mag(rng_) : -mag(rng_);
    return t;
  }

  Tensor positive(std::size_t rows, std::size_t cols) {
    std::uniform_real_distribution<double> dist(0.5, 2.0);
    Tensor t = Tensor::matrix(rows, cols);
    for (double& v : t.data()) v = dist(rng_);
    return t;
  }

  // sum(f(x) * probe) for a unary primitive.
  void unary(const std::string& name, Tensor x, const std::function<Var(Var)>& f) {
    auto p = keep(name + ".x", std::move(x));
    const Tensor out_shape = probe_for(f, p);
    run(name, {p}, [=](Tape& t) {
      return sum(mul(f(t.param(*p, true)), t.constant(out_shape)));
    });
  }

  void binary(const std::string& name, Tensor a, Tensor b,
              const std::function<Var(Var, Var)>& f) {
    auto pa = keep(name + ".a", std::move(a));
    auto pb = keep(name + ".b", std::move(b));
    Tape shape_tape;
    const Tensor& out = f(shape_tape.param(*pa, false), shape_tape.param(*pb, false)).value();
    const Tensor probe = random(out.rows(), out.cols());
    run(name, {pa, pb}, [=](Tape& t) {
      return sum(mul(f(t.param(*pa, true), t.param(*pb, true)), t.constant(probe)));
    });
  }

  void run(const std::string& name, std::vector<Parameter*> params, const LossBuilder& build) {
    results_.push_back(check_gradients(name, params, build));
  }

  Parameter* keep(const std::string& name, Tensor value) {
    owned_.push_back(std::make_unique<Parameter>(Parameter{name, std::move(value)}));
    return owned_.back().get();
  }

  std::mt19937_64& rng() { return rng_; }
  std::vector<GradCheckResult> take() { return std::move(results_); }

 private:
  Tensor probe_for(const std::function<Var(Var)>& f, Parameter* p) {
    Tape t;
    const Tensor& out = f(t.param(*p, false)).value();
    return random(out.rows(), out.cols());
  }

  std::mt19937_64 rng_;
  std::vector<std::unique_ptr<Parameter>> owned_;
  std::vector<GradCheckResult> results_;
};

}  // namespace

std::vector<GradCheckResult> run_gradcheck_suite(std::uint64_t seed) {
  Suite s(seed);

  s.binary("matmul", s.random(3, 4), s.random(4, 2), matmul);
  s.binary("add", s.random(3, 4), s.random(1, 4), add);
  s.binary("sub", s.random(3, 4), s.random(3, 4), sub);
  s.binary("mul", s.random(3, 4), s.random(3, 1), mul);
  s.binary("div", s.random(3, 4), s.away_from_zero(3, 4, 0.5), div);
  s.binary("squared_l2_distance", s.random(3, 4), s.random(3, 4), squared_l2_distance);
  s.binary("concat_cols", s.random(3, 2), s.random(3, 3), [](Var a, Var b) {
    const Var parts[] = {a, b};
    return concat_cols(parts);
  });
  s.binary("concat_rows", s.random(2, 3), s.random(1, 3), [](Var a, Var b) {
    const Var parts[] = {a, b};
    return concat_rows(parts);
  });

  s.unary("scale", s.random(2, 3), [](Var a) { return scale(a, -1.7); });
  s.unary("shift", s.random(2, 3), [](Var a) { return shift(a, 0.4); });
  s.unary("neg", s.random(2, 3), neg);
  s.unary("tanh", s.random(3, 3), [](Var a) { return tanh(a); });
  s.unary("sigmoid", s.random(3, 3), sigmoid);
  s.unary("relu", s.away_from_zero(3, 3, 0.1), relu);
  s.unary("leaky_relu", s.away_from_zero(3, 3, 0.1), [](Var a) { return leaky_relu(a, 0.01); });
  s.unary("exp", s.random(2, 3), [](Var a) { return exp(a); });
  s.unary("log", s.positive(2, 3), [](Var a) { return log(a); });
  s.unary("square", s.random(2, 3), square);
  s.unary("softmax", s.random(3, 4, 2.0), softmax);
  s.unary("log_softmax", s.random(3, 4, 2.0), log_softmax);
  Tensor mask = Tensor::matrix(2, 4, 1.0);
  mask(1, 3) = 0.0;
  mask(1, 2) = 0.0;
  s.unary("masked_softmax", s.random(2, 4), [mask](Var a) { return masked_softmax(a, mask); });
  s.unary("sum", s.random(2, 3), sum);
  s.unary("mean", s.random(2, 3), mean);
  s.unary("sum_rows", s.random(3, 4), sum_rows);
  s.unary("sum_cols", s.random(3, 4), sum_cols);
  s.unary("slice_cols", s.random(3, 5), [](Var a) { return slice_cols(a, 1, 3); });
  s.unary("slice_rows", s.random(4, 2), [](Var a) { return slice_rows(a, 1, 2); });
  s.unary("reshape", s.random(2, 6), [](Var a) { return reshape(a, 3, 4); });
  s.unary("transpose", s.random(2, 5), transpose);
  const std::vector<std::size_t> ids = {2, 0, 2, 3};
  s.unary("gather_rows", s.random(4, 3), [ids](Var a) { return gather_rows(a, ids); });
  const std::vector<std::size_t> cols = {1, 0, 3};
  s.unary("pick", s.random(3, 4), [cols](Var a) { return pick(a, cols); });

  // Composite modules.
  Tensor table = s.random(10, 4, 0.5);
  for (std::size_t c = 0; c < 4; ++c) table(0, c) = 0.0;
  EncoderConfig enc_config;
  enc_config.hidden = 3;
  enc_config.projection = 3;
  enc_config.attention = 4;
  auto encoder = std::make_shared<Encoder>(enc_config, table, 11);
  const auto pairs = std::make_shared<std::vector<TokenPair>>(std::vector<TokenPair>{
      {{2, 3, 4}, {5, 6}}, {{7}, {8, 9, 2, 3}}, {{4, 4}, {6}}});
  auto pair_ptrs = std::make_shared<std::vector<const TokenPair*>>();
  for (const auto& p : *pairs) pair_ptrs->push_back(&p);
  {
    auto params = encoder->parameters();
    params.erase(params.begin());  // frozen embedding table
    const Tensor probe = s.random(3, encoder->output_dim());
    s.run("encoder", params, [=](Tape& t) {
      return sum(mul(encoder->encode(t, *pair_ptrs, true), t.constant(probe)));
    });
  }
  {
    Parameter* w = s.keep("spectral.w", s.random(4, 3));
    auto state = std::make_shared<SpectralState>(init_spectral_state(4, 3, s.rng()));
    power_iteration(w->value, *state, 40);
    const Tensor probe = s.random(4, 3);
    s.run("spectral_norm", {w}, [=](Tape& t) {
      return sum(mul(spectral_normalize_fixed(t, t.param(*w, true), *state), t.constant(probe)));
    });
  }

  // Composed losses on encoder features.
  const std::size_t width = encoder->output_dim();
  auto classifier = std::make_shared<Classifier>(width, 4, 12);
  auto disc =
      std::make_shared<Discriminator>(width, DiscriminatorConfig{{5, 4}, true, 1, 0.01}, 13);
  auto recon = std::make_shared<Reconstructor>(width, ReconstructorConfig{{5, 2, 5}, 0.01}, 14);
  const std::vector<std::size_t> labels = {0, 3, 1};
  const Tensor source_features = s.random(4, width);
  const Tensor reference = s.random(3, width);
  auto enc_params = encoder->parameters();
  enc_params.erase(enc_params.begin());
  auto with = [&](std::vector<Parameter*> a, const std::vector<Parameter*>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };

  s.run("loss_cls", with(enc_params, classifier->parameters()), [=](Tape& t) {
    return loss_cls(classifier->logits(t, encoder->encode(t, *pair_ptrs, true), true), labels,
                    0.0);
  });
  s.run("loss_cls_smoothed", with(enc_params, classifier->parameters()), [=](Tape& t) {
    return loss_cls(classifier->logits(t, encoder->encode(t, *pair_ptrs, true), true), labels,
                    0.1);
  });
  s.run("loss_adv_d", disc->parameters(), [=](Tape& t) {
    return loss_adv_d(t, *disc, t.constant(source_features),
                      t.constant(encoder->encode(t, *pair_ptrs, false).value()), false);
  });
  s.run("loss_adv_m", enc_params, [=](Tape& t) {
    return loss_adv_m(t, *disc, encoder->encode(t, *pair_ptrs, true));
  });
  s.run("loss_recon", with(enc_params, recon->parameters()), [=](Tape& t) {
    return loss_recon(t, *recon, encoder->encode(t, *pair_ptrs, true), t.constant(reference),
                      true);
  });
  s.run("loss_sup", with(enc_params, classifier->parameters()), [=](Tape& t) {
    return loss_sup(classifier->logits(t, encoder->encode(t, *pair_ptrs, true), true), labels);
  });
  s.run("dann_domain_loss", disc->parameters(), [=](Tape& t) {
    return dann_domain_loss(t, *disc, t.constant(source_features),
                            t.constant(encoder->encode(t, *pair_ptrs, false).value()), 0.25,
                            false);
  });
  return s.take();
}

}  // namespace adda

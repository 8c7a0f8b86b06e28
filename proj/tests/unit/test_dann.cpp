#include <cmath>
#include <random>

#include "adda/autodiff/gradcheck.hpp"
#include "adda/autodiff/ops.hpp"
#include "adda/dann/dann.hpp"
#include "adda/experiment/experiment.hpp"
#include "doctest.h"

using namespace adda;

namespace {

Tensor random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::normal_distribution<double> dist;
  Tensor t = Tensor::matrix(rows, cols);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

struct Small {
  PreparedData data;
  ModelConfig model;
  TrainConfig train;
};

Small make_small() {
  SynthConfig synth;
  synth.source_train = 48;
  synth.source_dev = 16;
  synth.target_train = 48;
  synth.target_dev = 16;
  synth.target_test = 16;
  synth.seed = 9;
  Small s{prepare_synthetic(synth, 8, 2), {}, {}};
  s.model.encoder.hidden = 4;
  s.model.encoder.projection = 5;
  s.model.encoder.attention = 5;
  s.model.discriminator.hidden = {8};
  s.train.batch_size = 16;
  s.train.pretrain_epochs = 3;
  s.train.patience = 100;
  s.train.label_smoothing = false;
  s.train.seed = 4;
  return s;
}

}  // namespace

TEST_CASE("gradient reversal is identity forward and -lambda backward") {
  std::mt19937_64 rng(1);
  for (double lambda : {0.0, 0.25, 1.0, 3.5}) {
    Parameter x{"x", random_matrix(rng, 3, 4)};
    const Tensor upstream = random_matrix(rng, 3, 4);
    Tape tape;
    Var rev = gradient_reversal(tape.param(x, true), lambda);
    CHECK(rev.value() == x.value);
    const Gradients g = tape.backward(sum(mul(rev, tape.constant(upstream))));
    for (std::size_t i = 0; i < upstream.size(); ++i) {
      CHECK(g.at(&x)[i] == -lambda * upstream[i]);
    }
  }
  Tape tape;
  CHECK_THROWS(gradient_reversal(tape.constant(Tensor::matrix(1, 1)), NAN));
}

TEST_CASE("domain loss gradient splits into the D path and the reversed encoder path") {
  std::mt19937_64 rng(2);
  DiscriminatorConfig config{{5}, false, 1, 0.01};
  Discriminator d(4, config, 3);
  Parameter src{"src", random_matrix(rng, 3, 4)}, tgt{"tgt", random_matrix(rng, 2, 4)};
  const double lambda = 0.4;

  // D parameters see the ordinary gradient of the domain loss.
  auto d_params = d.parameters();
  CHECK(check_gradients("dann_d", d_params, [&](Tape& t) {
          return dann_domain_loss(t, d, t.constant(src.value), t.constant(tgt.value), lambda,
                                  false);
        }).max_relative_error < 1e-4);

  // Features see -lambda times the finite-difference gradient.
  Tape tape;
  const Gradients g = tape.backward(
      dann_domain_loss(tape, d, tape.param(src, true), tape.param(tgt, true), lambda, false));
  const double h = 1e-5;
  for (Parameter* p : {&src, &tgt}) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double keep = p->value[i];
      auto eval = [&] {
        Tape t;
        return dann_domain_loss(t, d, t.constant(src.value), t.constant(tgt.value), lambda, false)
            .value()
            .item();
      };
      p->value[i] = keep + h;
      const double up = eval();
      p->value[i] = keep - h;
      const double down = eval();
      p->value[i] = keep;
      const double fd = (up - down) / (2 * h);
      CHECK(std::abs(g.at(p)[i] - (-lambda * fd)) < 1e-8 * std::max(1.0, std::abs(fd)) + 1e-9);
    }
  }
}

TEST_CASE("lambda zero reproduces source-only training bitwise") {
  Small s = make_small();
  DannConfig dann;
  dann.lambda = 0.0;
  dann.lr = 1e-2;
  Model joint = Model::create(s.model, s.data.table.matrix(), 5);
  Model plain = joint;
  std::vector<std::uint64_t> joint_trace, plain_trace;
  train_dann(joint, s.train, dann, s.data.source_train, s.data.target_train, s.data.target_dev,
             [&](const StepEvent&) {
               joint_trace.push_back(hash_parameters(joint.source.parameters()) ^
                                     hash_parameters(joint.classifier.parameters()));
             });
  train_source_only(plain, s.train, dann, s.data.source_train, s.data.target_dev,
                    [&](const StepEvent&) {
                      plain_trace.push_back(hash_parameters(plain.source.parameters()) ^
                                            hash_parameters(plain.classifier.parameters()));
                    });
  REQUIRE(!joint_trace.empty());
  CHECK(joint_trace == plain_trace);
  const ModelHashes a = hash_model(joint), b = hash_model(plain);
  CHECK(a.source == b.source);
  CHECK(a.target == b.target);
  CHECK(a.classifier == b.classifier);
}

TEST_CASE("a positive lambda changes the trajectory and keeps M_t equal to M_s") {
  Small s = make_small();
  DannConfig dann;
  dann.lr = 1e-2;
  Model joint = Model::create(s.model, s.data.table.matrix(), 6);
  Model plain = joint;
  std::vector<std::uint64_t> joint_trace, plain_trace;
  const StageHistory h = train_dann(
      joint, s.train, dann, s.data.source_train, s.data.target_train, s.data.target_dev,
      [&](const StepEvent&) { joint_trace.push_back(hash_parameters(joint.source.parameters())); });
  train_source_only(plain, s.train, dann, s.data.source_train, s.data.target_dev,
                    [&](const StepEvent&) {
                      plain_trace.push_back(hash_parameters(plain.source.parameters()));
                    });
  REQUIRE(joint_trace.size() == plain_trace.size());
  for (std::size_t i = 0; i < joint_trace.size(); ++i) CHECK(joint_trace[i] != plain_trace[i]);
  CHECK(hash_model(joint).source == hash_model(joint).target);
  for (std::size_t e = 1; e < h.epochs.size(); ++e) CHECK(std::isfinite(h.epochs[e].loss_domain));
}

TEST_CASE("DANN configuration rejects unknown keys") {
  DannConfig c;
  CHECK_THROWS_AS(nlohmann::json({{"lambda", 0.1}, {"gamma", 2}}).get_to(c),
                  std::invalid_argument);
  nlohmann::json({{"lambda", 0.1}}).get_to(c);
  CHECK(c.lambda == 0.1);
  CHECK(c.lr == 2e-4);
}

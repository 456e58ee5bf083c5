// Copyright 2026 The dlfuzz Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include "dlfuzz/backend.hpp"
#include "dlfuzz/error.hpp"
#include "dlfuzz/interpreter.hpp"
#include "oracles.hpp"

using namespace dlfuzz;

namespace {

Operator op(OpTag t) { return Operator::with_defaults(t); }

GraphModel chain(TensorShape shape, std::initializer_list<Operator> ops) {
  EdgeMap e;
  int v = 0;
  for (const auto& o : ops) {
    e[{v, v + 1}] = o;
    ++v;
  }
  return GraphModel(v + 1, shape, e);
}

NativeBackend reference() { return NativeBackend("ref", BackendKind::NativeReference); }
NativeBackend alternate() { return NativeBackend("alt", BackendKind::NativeAlternate); }

}  // namespace

TEST_CASE("identity chain is exact") {
  Rng rng(1);
  auto x = random_tensor({1, 3, 8, 8}, rng);
  auto m = chain(x.shape, {op(OpTag::Identity), op(OpTag::Identity), op(OpTag::Identity)});
  auto be = reference();
  auto out = be.execute(m, x, 7);
  REQUIRE(out.ok());
  CHECK(bitwise_equal(out.output(), x));
  CHECK(out.elapsed_seconds > 0.0);
}

TEST_CASE("relu") {
  TensorF64 x({1, 1, 2, 2});
  x.data << -1, 0, 2, -3;
  auto m = chain(x.shape, {op(OpTag::ReLU)});
  auto ref = reference();
  auto alt = alternate();
  for (Backend* be : {static_cast<Backend*>(&ref), static_cast<Backend*>(&alt)}) {
    auto out = be->execute(m, x, 0);
    REQUIRE(out.ok());
    CHECK((out.output().data == (Eigen::ArrayXd(4) << 0, 0, 2, 0).finished()).all());
  }
}

TEST_CASE("3x3 SAME convolution with unit weights") {
  NativeOptions o;
  o.parameters = constant_parameters(1.0f);
  NativeBackend be("ref", BackendKind::NativeReference, o);
  TensorF64 x({1, 1, 3, 3});
  x.data.setOnes();
  Operator conv = op(OpTag::Conv2D);
  conv.params.kernel = 3;
  conv.params.dilation = 1;
  auto out = be.execute(chain(x.shape, {conv}), x, 0);
  REQUIRE(out.ok());
  const auto& y = out.output();
  CHECK(y(0, 0, 1, 1) == 9.0);
  CHECK(y(0, 0, 0, 0) == 4.0);
  CHECK(y(0, 0, 2, 2) == 4.0);
  CHECK(y(0, 0, 0, 1) == 6.0);
  CHECK(y(0, 0, 1, 2) == 6.0);
}

TEST_CASE("dilated convolution and pooling by hand") {
  TensorF64 x({1, 1, 1, 5});
  x.data << 1, 2, 3, 4, 5;
  using ops::conv2d;
  std::vector<double> w(9, 0.0);
  w[3] = 1.0;  // left tap of the middle row
  w[5] = 2.0;  // right tap
  auto y = conv2d<double>(x, w, 3, 2, false, Summation::Forward);
  // pad 2: y[i] = x[i-2] + 2 x[i+2]
  CHECK((y.data == (Eigen::ArrayXd(5) << 6, 8, 11, 2, 3).finished()).all());

  auto mx = ops::pool2d<double>(x, 2, false, Summation::Forward);
  CHECK((mx.data == (Eigen::ArrayXd(5) << 2, 3, 4, 5, 5).finished()).all());
  auto avg = ops::pool2d<double>(x, 3, true, Summation::Forward);
  CHECK((avg.data == (Eigen::ArrayXd(5) << 1.5, 2, 3, 4, 4.5).finished()).all());
}

TEST_CASE("softmax over channels") {
  TensorF64 x({1, 2, 1, 1});
  x.data << 0.0, std::log(3.0);
  auto y = ops::softmax_channels<double>(x, true, Summation::Forward);
  CHECK(y.data(0) == doctest::Approx(0.25));
  CHECK(y.data(1) == doctest::Approx(0.75));
  TensorF32 big({1, 2, 1, 1});
  big.data << 100.0f, 100.0f;
  CHECK(ops::softmax_channels<float>(big, true, Summation::Forward).data(0) == 0.5f);
  CHECK(std::isnan(ops::softmax_channels<float>(big, false, Summation::Forward).data(0)));
}

TEST_CASE("fan-in sums incoming edges") {
  TensorF64 x({1, 1, 1, 2});
  x.data << 1.0, -2.0;
  GraphModel m(3, x.shape,
               {{{0, 1}, op(OpTag::Identity)}, {{0, 2}, op(OpTag::ReLU)}, {{1, 2}, op(OpTag::Identity)}});
  auto out = reference().execute(m, x, 0);
  REQUIRE(out.ok());
  CHECK((out.output().data == (Eigen::ArrayXd(2) << 2.0, -2.0).finished()).all());
}

TEST_CASE("summation orders") {
  std::vector<float> t{1e8f, 1.0f, -1e8f, 1.0f};
  CHECK(accumulate<float>(t, Summation::Forward) == 1.0f);
  CHECK(accumulate<float>(t, Summation::Pairwise) == 0.0f);
}

TEST_CASE("benign models agree across native backends") {
  Rng rng(17);
  auto ref = reference();
  auto alt = alternate();
  const std::vector<OpTag> benign{OpTag::Identity, OpTag::ReLU};
  for (int t = 0; t < 100; ++t) {
    auto m = oracle::random_model(rng, 8, false);
    EdgeMap e;
    for (const auto& [k, _] : m.edges()) e[k] = op(benign[rng.below(2)]);
    GraphModel b(m.vertex_count(), m.input_shape(), e);
    TensorF64 x = random_tensor(b.input_shape(), rng);
    x.data *= 10.0;
    auto r = ref.execute(b, x, t), a = alt.execute(b, x, t);
    REQUIRE(r.ok());
    REQUIRE(a.ok());
    CHECK((r.output().data - a.output().data).abs().maxCoeff() <= 1e-4);
  }
}

TEST_CASE("deep conv chain diverges between f32 and f64") {
  Rng rng(2);
  std::vector<Operator> ops(20, op(OpTag::Conv2D));
  for (auto& o : ops) o.params.kernel = 3;
  EdgeMap e;
  for (int v = 0; v < 20; ++v) e[{v, v + 1}] = ops[v];
  GraphModel m(21, {1, 3, 8, 8}, e);
  auto x = random_tensor(m.input_shape(), rng);
  auto r = reference().execute(m, x, 3), a = alternate().execute(m, x, 3);
  REQUIRE(r.ok());
  REQUIRE(a.ok());
  CHECK((r.output().data - a.output().data).abs().maxCoeff() > 0.0);
}

TEST_CASE("execution is deterministic and parameters depend on the seed") {
  Rng rng(9);
  auto m = chain({1, 3, 6, 6}, {op(OpTag::Conv2D), op(OpTag::BatchNorm), op(OpTag::PReLU), op(OpTag::Dense1x1)});
  auto x = random_tensor(m.input_shape(), rng);
  auto be = alternate();
  auto a = be.execute(m, x, 5), b = be.execute(m, x, 5), c = be.execute(m, x, 6);
  CHECK(bitwise_equal(a.output(), b.output()));
  CHECK_FALSE(bitwise_equal(a.output(), c.output()));
  CHECK(a.elapsed_seconds == b.elapsed_seconds);
}

TEST_CASE("parameter generator") {
  ParameterRequest r{{0, 1}, OpTag::Conv2D, ParamRole::ConvWeight, 3, 27};
  CHECK(counter_uniform(1, r) == counter_uniform(1, r));
  CHECK(counter_uniform(1, r) != counter_uniform(2, r));
  auto r2 = r;
  r2.edge = {0, 2};
  CHECK(counter_uniform(1, r) != counter_uniform(1, r2));
  for (std::uint64_t i = 0; i < 1000; ++i) {
    r.index = i;
    const float u = counter_uniform(42, r);
    CHECK(u >= -1.0f);
    CHECK(u < 1.0f);
  }
  ParameterRequest var{{0, 1}, OpTag::BatchNorm, ParamRole::BatchNormVariance, 0, 1};
  CHECK(seeded_parameter(1, var) >= 0.5f);
}

TEST_CASE("dropout is identity at inference") {
  Rng rng(3);
  Operator d = op(OpTag::Dropout);
  d.params.rate = 0.5;
  auto m = chain({1, 2, 4, 4}, {d});
  auto x = random_tensor(m.input_shape(), rng);
  CHECK(bitwise_equal(reference().execute(m, x, 0).output(), x));
}

TEST_CASE("precondition failures throw") {
  auto be = reference();
  TensorF64 x({1, 1, 2, 2});
  CHECK_THROWS_AS(be.execute(GraphModel(3, x.shape), x, 0), ValidationError);
  auto m = chain({1, 1, 3, 3}, {op(OpTag::ReLU)});
  CHECK_THROWS_AS(be.execute(m, x, 0), ArgumentError);
}

TEST_CASE("timeout becomes a crash") {
  NativeOptions o;
  o.timeout_seconds = 0.0;
  NativeBackend be("ref", BackendKind::NativeReference, o);
  auto m = chain({1, 3, 16, 16}, {op(OpTag::Conv2D), op(OpTag::Conv2D), op(OpTag::Conv2D)});
  TensorF64 x(m.input_shape());
  auto out = be.execute(m, x, 0);
  REQUIRE_FALSE(out.ok());
  CHECK(out.crash().message == "timeout");
}

TEST_CASE("modeled timing grows with the model") {
  TensorF64 x({1, 3, 8, 8});
  auto small = chain(x.shape, {op(OpTag::ReLU)});
  Operator k5 = op(OpTag::Conv2D);
  k5.params.kernel = 5;
  auto large = chain(x.shape, {k5, k5, k5});
  auto be = reference();
  CHECK(be.execute(large, x, 0).elapsed_seconds > be.execute(small, x, 0).elapsed_seconds);
  NativeOptions wall;
  wall.timing = TimingMode::Wall;
  CHECK(NativeBackend("w", BackendKind::NativeReference, wall).execute(small, x, 0).elapsed_seconds > 0);
}

TEST_CASE("fault injection honors its trigger") {
  Rng rng(12);
  FaultConfig nan_cfg{FaultMode::Nan, OpTag::Conv2D, 1.0, BackendKind::NativeReference};
  FaultInjectionBackend fault("f", nan_cfg);
  auto ref = reference();
  for (int t = 0; t < 200; ++t) {
    auto m = oracle::random_model(rng, 6, false);
    auto x = random_tensor(m.input_shape(), rng);
    auto out = fault.execute(m, x, t);
    REQUIRE(out.ok());
    CHECK(out.output().has_nan() == fault.triggers_on(m));
    if (!fault.triggers_on(m)) CHECK(bitwise_equal(out.output(), ref.execute(m, x, t).output()));
  }

  auto m = chain({1, 1, 2, 2}, {op(OpTag::Conv2D)});
  TensorF64 x(m.input_shape());
  FaultInjectionBackend bias("b", {FaultMode::Bias, std::nullopt, 2.5, BackendKind::NativeReference});
  auto b = bias.execute(m, x, 0);
  CHECK(((b.output().data - ref.execute(m, x, 0).output().data) == 2.5).all());

  FaultInjectionBackend crash("c", {FaultMode::Crash, OpTag::Conv2D, 1.0, BackendKind::NativeReference});
  auto c = crash.execute(m, x, 0);
  REQUIRE_FALSE(c.ok());
  CHECK(c.crash().message.find("Conv2D") != std::string::npos);

  FaultInjectionBackend clean("n", {});
  CHECK(bitwise_equal(clean.execute(m, x, 0).output(), ref.execute(m, x, 0).output()));
}

TEST_CASE("dropout noise mode perturbs dropout") {
  Rng rng(4);
  Operator d = op(OpTag::Dropout);
  d.params.rate = 0.5;
  auto m = chain({1, 2, 4, 4}, {d});
  auto x = random_tensor(m.input_shape(), rng);
  FaultInjectionBackend noisy("d", {FaultMode::DropoutNoise, OpTag::Dropout, 1.0, BackendKind::NativeReference});
  auto out = noisy.execute(m, x, 0);
  REQUIRE(out.ok());
  CHECK_FALSE(bitwise_equal(out.output(), x));
}

TEST_CASE("make_backend and spec round trip") {
  nlohmann::json specs = nlohmann::json::array({
      {{"name", "r"}, {"kind", "native-reference"}},
      {{"name", "a"}, {"kind", "native-alternate"}},
      {{"name", "f"}, {"kind", "fault-injection"}, {"mode", "bias"}, {"trigger", "Softmax"}, {"bias", 3.0}},
  });
  for (const auto& s : specs) {
    auto b = make_backend(s);
    CHECK(b->name() == s["name"]);
    auto again = make_backend(b->spec());
    CHECK(again->spec() == b->spec());
  }
  CHECK_THROWS_AS(make_backend({{"name", "x"}, {"kind", "tpu"}}), ArgumentError);
  CHECK_THROWS_AS(make_backend({{"kind", "native-reference"}}), ArgumentError);
  CHECK_THROWS_AS(make_backend({{"name", "f"}, {"kind", "fault-injection"}, {"mode", "melt"}}), ArgumentError);
  CHECK_THROWS_AS(make_backend({{"name", "f"}, {"kind", "fault-injection"}, {"trigger", "Conv9"}}), ArgumentError);
}

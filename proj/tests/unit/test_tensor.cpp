#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "sgnet/errors.hpp"
#include "sgnet/ops.hpp"
#include "sgnet/parallel.hpp"
#include "sgnet/sgt1.hpp"
#include "sgnet/tape.hpp"
#include "testing.hpp"

using namespace sgnet;

TEST_CASE("shape and offsets") {
  const Shape s{2, 3, 4, 5};
  CHECK(s.numel() == 120);
  CHECK(s.plane() == 20);
  CHECK(offset(s, 1, 2, 3, 4) == 119);
  CHECK(offset(s, 0, 1, 0, 0) == 20);
  Tensor t(s, std::vector<double>(120, 0.0));
  CHECK_THROWS_AS(Tensor(s, std::vector<double>(7, 0.0)), ConfigError);
}

TEST_CASE("tensor handles alias; detach copies") {
  Tensor a = Tensor::full({1, 1, 2, 2}, 3.0);
  Tensor b = a;
  b.mutable_data()[0] = 7.0;
  CHECK(a.data()[0] == 7.0);
  Tensor c = a.detach();
  c.mutable_data()[0] = 1.0;
  CHECK(a.data()[0] == 7.0);
  CHECK_FALSE(c.same_as(a));
}

TEST_CASE("backward needs a scalar") {
  Tensor x = Tensor::full({1, 1, 2, 2}, 1.0, true);
  Tensor y = relu(x);
  CHECK_THROWS_AS(backward(y), UsageError);
  Tape::current().clear();
}

TEST_CASE("gradients accumulate over reused inputs") {
  Tensor x(Shape{1, 1, 1, 3}, {1.0, -2.0, 3.0}, true);
  backward(sum(add(mul(x, x), x)));
  const std::vector<double> expect{3.0, -3.0, 7.0};
  for (int i = 0; i < 3; ++i) CHECK(x.grad()[i] == doctest::Approx(expect[i]).epsilon(1e-15));
  CHECK(Tape::current().size() == 0);
}

TEST_CASE("no-grad guard suppresses recording") {
  Tensor x = Tensor::full({1, 1, 1, 2}, 1.0, true);
  {
    NoGradGuard g;
    Tensor y = add(x, x);
    CHECK(Tape::current().size() == 0);
    CHECK_FALSE(y.requires_grad());
  }
  Tensor y = add(x, x);
  CHECK(Tape::current().size() == 1);
  CHECK(y.requires_grad());
  Tape::current().clear();
}

TEST_CASE("first non-finite op is reported") {
  Tensor x(Shape{1, 1, 1, 2}, {1e308, 1.0}, true);
  Tensor y = relu(x);
  Tensor z = mul(y, Tensor::full({1, 1, 1, 2}, 10.0));
  Tensor w = add(z, z);
  REQUIRE(Tape::current().first_nonfinite_op().has_value());
  CHECK(*Tape::current().first_nonfinite_op() == "mul");
  Tape::current().clear();
}

TEST_CASE("sgt1 round trip and byte layout") {
  sgnet::Rng rng(5);
  const Tensor t = testing::random_tensor({2, 3, 4, 5}, rng);
  std::stringstream ss;
  sgt1::write(ss, t, 4);
  const std::string bytes = ss.str();
  CHECK(bytes.size() == sgt1::encoded_size(t, 4));
  CHECK(bytes.size() == 4 + 4 + 16 + 120 * 8);
  CHECK(bytes.substr(0, 4) == "SGT1");
  CHECK(static_cast<unsigned char>(bytes[4]) == 4);
  CHECK(static_cast<unsigned char>(bytes[8]) == 2);
  const Tensor back = sgt1::read(ss);
  CHECK(back.shape() == t.shape());
  for (std::size_t i = 0; i < t.numel(); ++i) CHECK(back.data()[i] == t.data()[i]);

  std::stringstream s3;
  const Tensor img = testing::random_tensor({1, 3, 4, 4}, rng);
  sgt1::write(s3, img, 3);
  CHECK(s3.str().size() == 4 + 4 + 12 + 48 * 8);
  CHECK(sgt1::read(s3).shape() == img.shape());
}

TEST_CASE("sgt1 rejects bad magic and truncation") {
  std::stringstream bad("XXXX0000");
  CHECK_THROWS_AS(sgt1::read(bad), IoError);
  sgnet::Rng rng(1);
  std::stringstream ss;
  sgt1::write(ss, testing::random_tensor({1, 1, 2, 2}, rng));
  std::string s = ss.str();
  std::stringstream cut(s.substr(0, s.size() - 3));
  CHECK_THROWS_AS(sgt1::read(cut), IoError);
}

TEST_CASE("parallel_for visits every index once") {
  setenv("SGNET_THREADS", "3", 1);
  CHECK(thread_count() == 3);
  std::vector<int> hits(101, 0);
  parallel_for(101, [&](int i) { hits[i]++; });
  for (int h : hits) CHECK(h == 1);
  setenv("SGNET_THREADS", "1", 1);
  CHECK(thread_count() == 1);
}

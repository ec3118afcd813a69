#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "occam/core.hpp"

using namespace occam;

TEST(ImageTensor, RejectsBadShapesAndValues) {
  EXPECT_THROW(ImageTensor(2, 4, 4), std::invalid_argument);
  EXPECT_THROW(ImageTensor(3, 0, 4), std::invalid_argument);
  EXPECT_THROW(ImageTensor(3, 2, 2, std::vector<float>(11, 0.f)), std::invalid_argument);
  EXPECT_THROW(ImageTensor(3, 1, 1, std::vector<float>{0.f, 1.5f, 0.f}), std::invalid_argument);
  ImageTensor img(4, 2, 3, 0.25f);
  EXPECT_THROW(img.set(0, 0, 0, -0.1f), std::invalid_argument);
  img.set(3, 1, 2, 1.0f);
  EXPECT_EQ(img.at(3, 1, 2), 1.0f);
  EXPECT_EQ(img.plane(3)[5], 1.0f);
  EXPECT_EQ(img.dims(), (ImageDims{2, 3}));
}

TEST(BinaryMask, AreaAndBoundingBox) {
  BinaryMask m(5, 6);
  EXPECT_TRUE(m.none());
  EXPECT_FALSE(m.bounding_box());
  m.set(1, 2);
  m.set(3, 4);
  EXPECT_EQ(m.area(), 2u);
  EXPECT_EQ(*m.bounding_box(), (BBox{1, 2, 4, 5}));
  const auto r = BinaryMask::from_bbox({5, 6}, {1, 1, 3, 4});
  EXPECT_EQ(r.area(), 6u);
  EXPECT_THROW(BinaryMask::from_bbox({5, 6}, {0, 0, 6, 2}), std::invalid_argument);
}

TEST(Iou, Cases) {
  BinaryMask a(4, 4), b(4, 4);
  EXPECT_EQ(iou(a, b), 0.0);
  a.set(0, 0);
  a.set(0, 1);
  b.set(0, 1);
  EXPECT_DOUBLE_EQ(iou(a, b), 0.5);
  EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
  EXPECT_THROW(iou(a, BinaryMask(3, 4)), std::invalid_argument);
}

TEST(Probabilities, SoftmaxAndEntropy) {
  const std::vector<double> logits{1.0, 1.0};
  const auto p = softmax(logits);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_NEAR(entropy(p), std::log(2.0), 1e-15);
  ASSERT_TRUE(p.logits());
  EXPECT_EQ(*p.logits(), logits);

  // large logits must not overflow
  const auto q = softmax(std::vector<double>{1000.0, 0.0});
  EXPECT_NEAR(q[0], 1.0, 1e-12);
  EXPECT_EQ(entropy(ClassProbabilities::from_probs({1.0, 0.0})), 0.0);
}

TEST(Probabilities, FromProbsValidation) {
  const auto p = ClassProbabilities::from_probs({0.2, 0.8 + 5e-7});
  EXPECT_NEAR(p[0] + p[1], 1.0, 1e-15);
  EXPECT_THROW(ClassProbabilities::from_probs({0.5, 0.6}), std::invalid_argument);
  EXPECT_THROW(ClassProbabilities::from_probs({-0.1, 1.1}), std::invalid_argument);
  EXPECT_THROW(ClassProbabilities::from_probs({}), std::invalid_argument);
}

TEST(Argmax, TiesGoLow) {
  EXPECT_EQ(argmax(std::vector<double>{0.2, 0.9, 0.9}), 1u);
  EXPECT_EQ(ClassProbabilities::from_probs({0.5, 0.5}).argmax(), 0u);
  EXPECT_THROW(argmax(std::vector<double>{}), std::invalid_argument);
}

TEST(Embedding, RejectsNonFinite) {
  EXPECT_THROW(Embedding({1.0, std::nan("")}), std::invalid_argument);
  EXPECT_DOUBLE_EQ(Embedding({3.0, 4.0}).norm(), 5.0);
}

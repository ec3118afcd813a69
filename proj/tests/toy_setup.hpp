#pragma once

#include <memory>
#include <vector>

#include "occam/backend.hpp"
#include "occam/maskops.hpp"
#include "occam/synthgen.hpp"

namespace testutil {

// Toy encoder with a prototype head fitted on whole-image gray crops.
inline occam::EnsembleSpec toy_ensemble(const occam::SynthDataset& train, int target = 224) {
  auto enc = std::make_shared<occam::ToyEncoder>();
  std::vector<occam::Embedding> features;
  std::vector<int> labels;
  for (const auto& s : train.samples) {
    const auto& ls = s.sample;
    const occam::BinaryMask full(ls.dims.height, ls.dims.width, true);
    const auto applied = occam::apply_gray_bg_crop(*ls.image, full, occam::GrayBgCrop{target, target, 0.5f});
    features.push_back(enc->encode({ls.id, -1, &applied}));
    labels.push_back(ls.label);
  }
  occam::EnsembleSpec ens;
  ens.members.push_back({enc, occam::fit_prototype_head(features, labels, train.class_names.classes)});
  return ens;
}

}  // namespace testutil

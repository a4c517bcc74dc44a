// Copyright 2026 The f16kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "f16/trainer.hpp"

namespace f16 {

void save_model(Archive& archive, const ToyModel<float>& model) {
  model.validate();
  archive.add("encoder/proj", model.encoder.projection());
  archive.add("encoder/meta",
              Tensor32({3}, {static_cast<float>(model.encoder.patch_grid()),
                             static_cast<float>(model.encoder.patch_dim()),
                             static_cast<float>(model.encoder.d())}));
  save_aligner(archive, model.aligner, model.encoder.patches());
  archive.add("head/W", model.head_w);
  archive.add("head/b", model.head_b);
  archive.add("head/meta", Tensor32({2}, {static_cast<float>(model.classes),
                                          static_cast<float>(model.fps)}));
}

ToyModel<float> load_model(const Archive& archive) {
  const Tensor32& enc_meta = archive.get("encoder/meta");
  if (enc_meta.rank() != 1 || enc_meta.dim(0) != 3) {
    throw FormatError("encoder/meta must hold [patch_grid, patch_dim, d]");
  }
  EncoderStub<float> encoder(static_cast<int>(enc_meta[0]),
                             archive.get("encoder/proj"));
  if (encoder.patch_dim() != static_cast<int>(enc_meta[1]) ||
      encoder.d() != static_cast<int>(enc_meta[2])) {
    throw FormatError("encoder/meta dims disagree with stored projection");
  }

  std::size_t patches = 0;
  HfrAlignerParams<float> aligner = load_aligner(archive, &patches);
  if (patches != encoder.patches()) {
    throw FormatError("aligner was built for " + std::to_string(patches) +
                      " patches but the encoder emits " +
                      std::to_string(encoder.patches()));
  }

  const Tensor32& head_meta = archive.get("head/meta");
  if (head_meta.rank() != 1 || head_meta.dim(0) != 2) {
    throw FormatError("head/meta must hold [classes, fps]");
  }
  ToyModel<float> model{std::move(encoder),
                        std::move(aligner),
                        archive.get("head/W"),
                        archive.get("head/b"),
                        static_cast<std::size_t>(head_meta[0]),
                        static_cast<int>(head_meta[1])};
  model.validate();
  return model;
}

}  // namespace f16

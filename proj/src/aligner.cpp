// Copyright 2026 The f16kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "f16/aligner.hpp"

namespace f16 {

void save_aligner(Archive& archive, const HfrAlignerParams<float>& params,
                  std::size_t patches) {
  params.validate();
  if (patches == 0) throw ConfigError("patch count must be positive");
  grid_side(patches);  // rejects non-square patch counts up front
  archive.add("aligner/W_P", params.w_p);
  archive.add("aligner/b_P", params.b_p);
  archive.add("aligner/W_Q", params.w_q);
  archive.add("aligner/b_Q", params.b_q);
  archive.add("aligner/meta",
              Tensor32({5}, {static_cast<float>(params.window),
                             static_cast<float>(params.d()),
                             static_cast<float>(params.h()),
                             static_cast<float>(patches),
                             static_cast<float>(static_cast<int>(params.pooling))}));
}

HfrAlignerParams<float> load_aligner(const Archive& archive,
                                     std::size_t* patches_out) {
  const Tensor32& meta = archive.get("aligner/meta");
  if (meta.rank() != 1 || meta.dim(0) != 5) {
    throw FormatError("aligner/meta must hold [w, d, h, p, pooling_code]");
  }
  const int pooling_code = static_cast<int>(meta[4]);
  if (pooling_code != 0 && pooling_code != 1) {
    throw FormatError("unknown pooling code " + std::to_string(pooling_code));
  }
  HfrAlignerParams<float> params;
  params.w_p = archive.get("aligner/W_P");
  params.b_p = archive.get("aligner/b_P");
  params.w_q = archive.get("aligner/W_Q");
  params.b_q = archive.get("aligner/b_Q");
  params.window = static_cast<std::size_t>(meta[0]);
  params.pooling = pooling_code == 0 ? Pooling::kPost : Pooling::kPre;
  params.validate();
  if (params.d() != static_cast<std::size_t>(meta[1]) ||
      params.h() != static_cast<std::size_t>(meta[2])) {
    throw FormatError("aligner/meta dims disagree with stored weight shapes");
  }
  if (patches_out != nullptr) *patches_out = static_cast<std::size_t>(meta[3]);
  return params;
}

void save_single_frame(Archive& archive, const SingleFrameAlignerParams<float>& base) {
  base.validate();
  archive.add("base/W_A", base.w_a);
  archive.add("base/b_A", base.b_a);
  archive.add("base/W_B", base.w_b);
  archive.add("base/b_B", base.b_b);
}

SingleFrameAlignerParams<float> load_single_frame(const Archive& archive) {
  SingleFrameAlignerParams<float> base{archive.get("base/W_A"),
                                       archive.get("base/b_A"),
                                       archive.get("base/W_B"),
                                       archive.get("base/b_B")};
  base.validate();
  return base;
}

}  // namespace f16

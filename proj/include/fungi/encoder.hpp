#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fungi/raster.hpp"
#include "fungi/types.hpp"

namespace fungi {

// Trainable layer groups, in unfreeze order reversed: heads train first,
// then g3 (text block + embedding table), g2, and finally g1 (patch
// projection + first image block).
enum class ParamGroup : int { G1 = 0, G2 = 1, G3 = 2, Heads = 3, LogTau = 4 };
inline constexpr int kNumParamGroups = 5;

const char* param_group_name(ParamGroup group);

struct FreezeMask {
  std::array<bool, kNumParamGroups> trainable{};

  bool is_trainable(ParamGroup group) const {
    return trainable[static_cast<std::size_t>(group)];
  }
  static FreezeMask none();
  static FreezeMask all();
};

struct EncoderDims {
  int patch = 8;        // image patch edge, pixels
  int hidden = 64;      // image tower width
  int text_hidden = 64; // token embedding / text tower width
  int out = 64;         // shared embedding dimension d

  int patch_dim() const { return patch * patch * 3; }
  void validate() const;
};

// Token -> index map frozen at build time; index 0 is the unknown token.
struct Vocabulary {
  std::vector<std::string> tokens;  // tokens[0] == "<unk>"
  std::map<std::string, int> index;

  static Vocabulary build(const std::vector<std::string>& captions);
  int lookup(const std::string& token) const;
  int size() const { return static_cast<int>(tokens.size()); }
};

// Image tower: patchify -> linear patch projection -> per-patch block g1
// (affine + tanh) -> mean pool over patches -> block g2 -> head. Weight
// matrices are applied as x * W with x as a row vector.
struct ImageEncoderParams {
  Mat w_patch;    // patch_dim x hidden   (g1)
  RowVec b_patch; // hidden               (g1)
  Mat w_g1;       // hidden x hidden      (g1)
  RowVec b_g1;    // hidden               (g1)
  Mat w_g2;       // hidden x hidden      (g2)
  RowVec b_g2;    // hidden               (g2)
  Mat w_head;     // hidden x out         (heads)
  RowVec b_head;  // out                  (heads)
};

// Text tower: tokenize -> embedding lookup -> mean pool -> block g3
// (affine + tanh) -> head.
struct TextEncoderParams {
  Mat embedding;  // vocab x text_hidden      (g3)
  Mat w_g3;       // text_hidden x text_hidden (g3)
  RowVec b_g3;    // text_hidden              (g3)
  Mat w_head;     // text_hidden x out        (heads)
  RowVec b_head;  // out                      (heads)
};

inline constexpr double kTauMin = 0.01;
inline constexpr double kTauMax = 1.0;
inline constexpr double kTauInit = 0.07;

struct EncoderPair {
  EncoderDims dims;
  Vocabulary vocab;
  ImageEncoderParams image;
  TextEncoderParams text;
  double log_temperature = std::log(kTauInit);
  FreezeMask mask;  // which groups the optimizer may update

  double temperature() const;  // exp(log_temperature) clamped to [kTauMin, kTauMax]

  // Same shapes, every tensor (and log_temperature) zeroed. Used for
  // gradients and optimizer moments.
  EncoderPair zeros_like() const;
};

// Scaled uniform init in +-1/sqrt(fan_in) per tensor (biases start at 0);
// log tau starts at ln(kTauInit); every group starts frozen.
EncoderPair init_params(std::uint64_t seed, const EncoderDims& dims, const Vocabulary& vocab);

// L2-normalized row embeddings. All forward passes are read-only over the
// parameters and safe to call concurrently.
Mat encode_images(const EncoderPair& pair, const std::vector<const RasterImage*>& images);
Vec encode_image(const EncoderPair& pair, const RasterImage& image);
Mat encode_texts(const EncoderPair& pair, const std::vector<std::string>& captions);
Vec encode_text(const EncoderPair& pair, const std::string& caption);

// Row per patch, patch pixels scaled to [0, 1], channels interleaved per
// pixel in row-major patch order. Image dimensions must divide by the patch
// size.
Mat patchify(const RasterImage& image, const EncoderDims& dims);

// Token ids for the encoder; an empty tokenization maps to {unknown}.
std::vector<int> token_ids(const Vocabulary& vocab, const std::string& caption);

// Flat named views over every tensor including log_temperature, in a fixed
// order shared by parameters, gradients and optimizer state.
struct TensorRef {
  const char* name;
  ParamGroup group;
  double* data;
  Index size;
};
std::vector<TensorRef> tensor_refs(EncoderPair& pair);

std::int64_t trainable_param_count(const EncoderPair& pair);

// Versioned checkpoint: JSON header (dims, vocabulary, freeze mask, config
// hash, tensor shapes) followed by raw little-endian doubles. Round-trips
// bit-exactly.
void save_checkpoint(const EncoderPair& pair, const std::string& path,
                     std::uint64_t config_hash);
EncoderPair load_checkpoint(const std::string& path, std::uint64_t* config_hash = nullptr);

}  // namespace fungi

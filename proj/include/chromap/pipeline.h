#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "chromap/dncm.h"
#include "chromap/image.h"
#include "chromap/model.h"
#include "chromap/presets.h"
#include "chromap/style_model.h"

namespace chromap {

inline constexpr int kDefaultPatchSize = 512;

class FingerprintMismatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Z: an image in the model's normalized color space. Kept unclamped so that
// stylizing it reproduces the training-time composition exactly.
struct NormalizedImage {
  Image z;
  int k = 0;
  Fingerprint fingerprint;
};

struct Normalized {
  NormalizedImage z;
  StyleParams params;  // (d, r) of the input image
};

struct PipelineOptions {
  int patch_size = kDefaultPatchSize;
  int workers = 1;
};

Normalized normalize(const StyleModel& model, const Image& image, const PipelineOptions& options = {});

// sDNCM(Z, r) with the stylizing projection pair, clamped to [0, 1].
Image stylize(const StyleModel& model, const NormalizedImage& z, const ColorMapMatrix& r,
              const PipelineOptions& options = {});
// Throws FingerprintMismatchError when the preset or Z came from another
// model, and std::invalid_argument for a normalizing-role preset.
Image stylize(const StyleModel& model, const NormalizedImage& z, const Preset& preset,
              const PipelineOptions& options = {});

// normalize(content) followed by stylize with the style image's r.
Image transfer(const StyleModel& model, const Image& content, const Image& style,
               const PipelineOptions& options = {});

// Video mode: d from the first frame and r from the style image are computed
// once and applied to every frame.
std::vector<Image> stylize_sequence(const StyleModel& model, std::span<const Image> frames, const Image& style,
                                    const PipelineOptions& options = {});

}  // namespace chromap

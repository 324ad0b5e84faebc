#include "chromap/pipeline.h"

namespace chromap {

namespace {

TiledOptions tiled(const PipelineOptions& options, Clamp clamp) {
  TiledOptions t;
  t.patch_size = options.patch_size;
  t.workers = options.workers;
  t.clamp = clamp;
  return t;
}

void check_fingerprint(const StyleModel& model, const Fingerprint& fp, const char* what) {
  if (fp != model.fingerprint()) {
    throw FingerprintMismatchError(std::string(what) + " fingerprint " + fp.hex() +
                                   " does not match model fingerprint " + model.fingerprint().hex());
  }
}

}  // namespace

Normalized normalize(const StyleModel& model, const Image& image, const PipelineOptions& options) {
  StyleParams params = model.encode(image);
  Image z = dncm_apply_tiled(image, params.d, model.params().normalizing, tiled(options, Clamp::kNo));
  return {NormalizedImage{std::move(z), model.k(), model.fingerprint()}, std::move(params)};
}

Image stylize(const StyleModel& model, const NormalizedImage& z, const ColorMapMatrix& r,
              const PipelineOptions& options) {
  check_fingerprint(model, z.fingerprint, "normalized image");
  return dncm_apply_tiled(z.z, r, model.params().stylizing, tiled(options, Clamp::kYes));
}

Image stylize(const StyleModel& model, const NormalizedImage& z, const Preset& preset,
              const PipelineOptions& options) {
  if (preset.role != ProjectionRole::kStylizing) {
    throw std::invalid_argument("preset '" + preset.name + "' holds a normalizing matrix");
  }
  check_fingerprint(model, preset.fingerprint, "preset");
  return stylize(model, z, preset.matrix, options);
}

Image transfer(const StyleModel& model, const Image& content, const Image& style, const PipelineOptions& options) {
  const Normalized n = normalize(model, content, options);
  return stylize(model, n.z, model.encode(style).r, options);
}

std::vector<Image> stylize_sequence(const StyleModel& model, std::span<const Image> frames, const Image& style,
                                    const PipelineOptions& options) {
  if (frames.empty()) throw std::invalid_argument("stylize_sequence needs at least one frame");
  const ColorMapMatrix d = model.encode(frames.front()).d;
  const ColorMapMatrix r = model.encode(style).r;
  std::vector<Image> out;
  out.reserve(frames.size());
  for (const Image& frame : frames) {
    const Image z = dncm_apply_tiled(frame, d, model.params().normalizing, tiled(options, Clamp::kNo));
    out.push_back(dncm_apply_tiled(z, r, model.params().stylizing, tiled(options, Clamp::kYes)));
  }
  return out;
}

}  // namespace chromap

#include "chromap/style_model.h"

#include "chromap/resample.h"

namespace chromap {

StyleModel::StyleModel(ModelParams params) : params_(std::move(params)) {
  params_.validate();
  fingerprint_ = chromap::fingerprint(params_);
}

std::shared_ptr<const StyleModel> StyleModel::load(const std::string& checkpoint_path) {
  return std::make_shared<const StyleModel>(load_checkpoint(checkpoint_path).model);
}

StyleParams StyleModel::encode(const Image& image) const {
  return encode(downsample(image, params_.config.thumbnail_size));
}

StyleParams StyleModel::encode(const Thumbnail& thumbnail) const {
  ++encoder_calls_;
  return chromap::encode(thumbnail, params_.config, params_.encoder);
}

}  // namespace chromap

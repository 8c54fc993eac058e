// Channel conditioning ahead of training: percentile contrast stretch,
// color reversal, CDF-based histogram matching against the label luminance,
// and stacking into the fixed three-channel model input.
#pragma once

#include <array>
#include <vector>

#include "parstain/config.hpp"
#include "parstain/image.hpp"

namespace parstain {

// Saturates the lowest low_pct% and highest high_pct% of pixel values and
// rescales the rest to [0,1]. Quantiles are linear-interpolated order
// statistics; a constant channel maps to all 0.5.
ChannelImage contrast_stretch(const ChannelImage& c, const PreprocessSection& cfg);

ChannelImage invert(const ChannelImage& c);

// 256-bin empirical CDF mapping out(x) = F_ref^-1(F_c(x)).
ChannelImage histogram_match(const ChannelImage& c, const ChannelImage& reference);

MultiChannelImage stack_channels(const ChannelImage& non_radiative, const ChannelImage& radiative,
                                 const ChannelImage& scattering);

// Rec. 601 luma of an RGB image, used as the histogram-match reference.
ChannelImage luminance(const RGBImage& rgb);

// Cumulative histogram (256 bins, normalized) of a unit-range channel; the
// persisted form of the histogram-match reference.
std::array<double, 256> channel_cdf(const ChannelImage& c);
ChannelImage histogram_match_cdf(const ChannelImage& c, const std::array<double, 256>& ref_cdf);

// Full conditioning pipeline for one channel, in the order
// contrast stretch -> invert -> histogram match.
ChannelImage preprocess_channel(const ChannelImage& c, const PreprocessSection& cfg,
                                const std::array<double, 256>* ref_cdf);

MultiChannelImage preprocess_stack(const MultiChannelImage& in, const PreprocessSection& cfg,
                                   const std::array<double, 256>* ref_cdf);

}  // namespace parstain

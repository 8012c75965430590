#pragma once

#include "quadmap/labelgen.hpp"
#include "quadmap/raster.hpp"
#include "quadmap/rng.hpp"

#include <span>
#include <vector>

namespace quadmap::train {

struct LossParams {
    double delta = 0.7; // quadratic/linear transition of the bounded loss
};

/// Piecewise-linear sigmoid: 0 below -3, (x+3)/6 on [-3, 3], 1 above 3.
double hard_sigmoid(double x);

/// Derivative of hard_sigmoid (1/6 strictly inside (-3, 3), else 0).
double hard_sigmoid_grad(double x);

/// Huber loss in the residual y - yhat: quadratic inside delta, linear outside.
double huber(double y, double yhat, LossParams p = {});

/// d huber / d yhat.
double huber_grad_pred(double y, double yhat, LossParams p = {});

/// d/dx huber(y, hard_sigmoid(x)) via the chain rule.
double loss_grad_logit(double y, double x, LossParams p = {});

struct PatchLoss {
    double value = 0.0;
    long valid_cells = 0;

    bool empty_mask() const { return valid_cells == 0; }
};

/// Mean huber(label, hard_sigmoid(logit)) over cells whose label is not -1.
/// A fully masked patch reports value 0 with valid_cells = 0.
PatchLoss masked_patch_loss(std::span<const float> logits, std::span<const float> labels,
                            LossParams p = {});

/// Selection weights proportional to (sum of valid density) + epsilon,
/// normalized to sum 1. epsilon = 0 is allowed when some quad has mass.
std::vector<double> weights_from_sums(std::span<const double> density_sums, double epsilon);
std::vector<double> quad_sampling_weights(std::span<const labels::LabelQuad> quads,
                                          double epsilon);

/// 512x512 image patch paired with its 64x64 label patch; the image origin
/// is always 8x the label origin.
struct PatchPair {
    int image_row = 0;
    int image_col = 0;
    int label_row = 0;
    int label_col = 0;

    static constexpr int kImageSize = 512;
    static constexpr int kLabelSize = 64;
};

/// Uniform draw over the 449x449 label origins of a 512-grid (two next01()
/// draws: row then column).
PatchPair sample_patch_pair(RandomStream& rng);

/// Geometric flips plus prior-channel erasure on a 4-band patch (bands 0-2
/// imagery, band 3 prior). Draw order, all from next01():
///   u1 horizontal flip if < 0.5; u2 vertical flip if < 0.5;
///   u3 erase gate if < 0.5; then s = 0.2 + 0.8*u4, r = 0.3 + 3.0*u5,
///   and up to 16 placement pairs (row = floor(u*h), col = floor(u*w)).
/// The window h x w uses h = round(sqrt(s*area*r)), w = round(sqrt(s*area/r)),
/// clamped to the patch; a placement is accepted once the in-bounds clipped
/// area is within 20% of s*area, otherwise the best attempt is kept.
void augment_sample(QuadRaster& patch, RandomStream& rng);

} // namespace quadmap::train

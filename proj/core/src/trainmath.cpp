#include "quadmap/trainmath.hpp"

#include "quadmap/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace quadmap::train {

double hard_sigmoid(double x) {
    if (x < -3.0) {
        return 0.0;
    }
    if (x > 3.0) {
        return 1.0;
    }
    return (x + 3.0) / 6.0;
}

double hard_sigmoid_grad(double x) {
    return (x > -3.0 && x < 3.0) ? 1.0 / 6.0 : 0.0;
}

double huber(double y, double yhat, LossParams p) {
    const double err = std::abs(y - yhat);
    if (err <= p.delta) {
        return 0.5 * err * err;
    }
    return p.delta * (err - 0.5 * p.delta);
}

double huber_grad_pred(double y, double yhat, LossParams p) {
    const double diff = yhat - y;
    if (std::abs(diff) <= p.delta) {
        return diff;
    }
    return diff > 0 ? p.delta : -p.delta;
}

double loss_grad_logit(double y, double x, LossParams p) {
    return huber_grad_pred(y, hard_sigmoid(x), p) * hard_sigmoid_grad(x);
}

PatchLoss masked_patch_loss(std::span<const float> logits, std::span<const float> labels,
                            LossParams p) {
    if (logits.size() != labels.size()) {
        throw ArgumentError("masked_patch_loss: logits and labels differ in size (" +
                            std::to_string(logits.size()) + " vs " +
                            std::to_string(labels.size()) + ")");
    }
    PatchLoss result;
    double sum = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == -1.0f) {
            continue;
        }
        sum += huber(labels[i], hard_sigmoid(logits[i]), p);
        ++result.valid_cells;
    }
    if (result.valid_cells > 0) {
        result.value = sum / static_cast<double>(result.valid_cells);
    }
    return result;
}

std::vector<double> weights_from_sums(std::span<const double> density_sums, double epsilon) {
    if (density_sums.empty()) {
        throw ArgumentError("sampling weights need at least one quad");
    }
    if (epsilon < 0) {
        throw ArgumentError("sampling epsilon must be non-negative");
    }
    std::vector<double> weights(density_sums.begin(), density_sums.end());
    double total = 0.0;
    for (double& w : weights) {
        w += epsilon;
        total += w;
    }
    if (total <= 0.0) {
        throw ArgumentError("sampling weights sum to zero; use a positive epsilon");
    }
    for (double& w : weights) {
        w /= total;
    }
    return weights;
}

std::vector<double> quad_sampling_weights(std::span<const labels::LabelQuad> quads,
                                          double epsilon) {
    std::vector<double> sums;
    sums.reserve(quads.size());
    for (const labels::LabelQuad& q : quads) {
        double s = 0.0;
        for (float v : q.density()) {
            if (v != labels::kLabelNodata) {
                s += v;
            }
        }
        sums.push_back(s);
    }
    return weights_from_sums(sums, epsilon);
}

PatchPair sample_patch_pair(RandomStream& rng) {
    constexpr int origins = kOutputPixels - PatchPair::kLabelSize + 1; // 449
    PatchPair p;
    p.label_row = static_cast<int>(draw_index(rng, origins));
    p.label_col = static_cast<int>(draw_index(rng, origins));
    p.image_row = p.label_row * kPoolFactor;
    p.image_col = p.label_col * kPoolFactor;
    return p;
}

namespace {

void flip_horizontal(QuadRaster& patch) {
    for (int b = 0; b < patch.bands; ++b) {
        for (int row = 0; row < patch.spec.height; ++row) {
            for (int col = 0; col < patch.spec.width / 2; ++col) {
                std::swap(patch.at(b, row, col),
                          patch.at(b, row, patch.spec.width - 1 - col));
            }
        }
    }
}

void flip_vertical(QuadRaster& patch) {
    for (int b = 0; b < patch.bands; ++b) {
        for (int row = 0; row < patch.spec.height / 2; ++row) {
            for (int col = 0; col < patch.spec.width; ++col) {
                std::swap(patch.at(b, row, col),
                          patch.at(b, patch.spec.height - 1 - row, col));
            }
        }
    }
}

} // namespace

void augment_sample(QuadRaster& patch, RandomStream& rng) {
    if (patch.bands != 4) {
        throw ArgumentError("augment_sample expects a 4-band patch (RGB + prior)");
    }
    if (rng.next01() < 0.5) {
        flip_horizontal(patch);
    }
    if (rng.next01() < 0.5) {
        flip_vertical(patch);
    }
    if (rng.next01() >= 0.5) {
        return;
    }

    const int h = patch.spec.height;
    const int w = patch.spec.width;
    const double area = static_cast<double>(h) * w;
    const double s = 0.2 + 0.8 * rng.next01();
    const double r = 0.3 + 3.0 * rng.next01();
    const double target = s * area;
    const int win_h = std::clamp(static_cast<int>(std::lround(std::sqrt(target * r))), 1, h);
    const int win_w = std::clamp(static_cast<int>(std::lround(std::sqrt(target / r))), 1, w);

    int best_top = 0;
    int best_left = 0;
    double best_dev = std::numeric_limits<double>::infinity();
    for (int attempt = 0; attempt < 16; ++attempt) {
        const int top = static_cast<int>(draw_index(rng, h));
        const int left = static_cast<int>(draw_index(rng, w));
        const double clipped = static_cast<double>(std::min(top + win_h, h) - top) *
                               (std::min(left + win_w, w) - left);
        const double dev = std::abs(clipped - target) / target;
        if (dev < best_dev) {
            best_dev = dev;
            best_top = top;
            best_left = left;
        }
        if (dev <= 0.2) {
            break;
        }
    }
    const int row_end = std::min(best_top + win_h, h);
    const int col_end = std::min(best_left + win_w, w);
    for (int row = best_top; row < row_end; ++row) {
        for (int col = best_left; col < col_end; ++col) {
            patch.at(3, row, col) = 0.0f;
        }
    }
}

} // namespace quadmap::train

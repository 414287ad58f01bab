#include "lmkg/nn/loss.hpp"

#include "lmkg/error.hpp"

#include <algorithm>
#include <cmath>

namespace lmkg::nn {

double qerror_loss(std::span<const double> predicted, std::span<const double> target, double log_min, double log_max,
                   std::vector<double> &grad) {
    if (!(log_max > log_min)) throw Error(ErrorCode::invalid_argument, "q-error loss needs log_max > log_min");
    if (predicted.size() != target.size() || predicted.empty())
        throw Error(ErrorCode::shape_mismatch, "q-error loss needs equal, non-empty batches");
    const double range = log_max - log_min;
    const double n = static_cast<double>(predicted.size());
    grad.assign(predicted.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double diff = predicted[i] - target[i];
        const double q = std::exp(std::abs(diff) * range);
        total += q;
        if (diff != 0.0) grad[i] = (diff > 0.0 ? 1.0 : -1.0) * range * q / n;
    }
    const double loss = total / n;
    if (!std::isfinite(loss)) throw Error(ErrorCode::non_finite, "q-error loss is not finite");
    return loss;
}

void softmax(std::span<const double> logits, std::span<double> out) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) sum += out[i] = std::exp(logits[i] - mx);
    for (auto &v : out) v /= sum;
}

double nll_loss(const Tensor &logits, const std::vector<std::size_t> &group_sizes, const std::vector<std::uint32_t> &ids,
                Tensor &grad) {
    const std::size_t batch = logits.rows();
    const std::size_t groups = group_sizes.size();
    std::size_t width = 0;
    for (auto g : group_sizes) width += g;
    if (logits.cols() != width || ids.size() != batch * groups)
        throw Error(ErrorCode::shape_mismatch, "NLL inputs do not match the group layout");
    grad.resize(batch, width);
    const double n = static_cast<double>(batch);
    double total = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
        auto row = logits.row(b);
        auto grow = grad.row(b);
        std::size_t off = 0;
        for (std::size_t g = 0; g < groups; ++g) {
            const auto V = group_sizes[g];
            const auto id = ids[b * groups + g];
            if (id >= V)
                throw Error(ErrorCode::out_of_range,
                            "id " + std::to_string(id) + " outside vocabulary of size " + std::to_string(V));
            auto lg = row.subspan(off, V);
            auto gg = grow.subspan(off, V);
            const double mx = *std::max_element(lg.begin(), lg.end());
            double sum = 0.0;
            for (std::size_t j = 0; j < V; ++j) sum += gg[j] = std::exp(lg[j] - mx);
            total += std::log(sum) + mx - lg[id];
            for (std::size_t j = 0; j < V; ++j) gg[j] /= sum * n;
            gg[id] -= 1.0 / n;
            off += V;
        }
    }
    const double loss = total / n;
    if (!std::isfinite(loss)) throw Error(ErrorCode::non_finite, "NLL loss is not finite");
    return loss;
}

} // namespace lmkg::nn

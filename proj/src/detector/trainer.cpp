#include "acp/detector/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/chrono.h>
#include <fmt/format.h>
#include <map>
#include <numeric>
#include <thread>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include "acp/detector/proposals.hpp"
#include "acp/seed.hpp"

namespace acp::detector {

namespace {

// Salts keep the derived streams apart.
constexpr std::uint64_t kInitSalt = 0x1001;
constexpr std::uint64_t kOrderSalt = 0x2002;
constexpr std::uint64_t kSampleSalt = 0x3003;
constexpr std::uint64_t kAugmentSalt = 0x4004;

int resolve_threads(const TrainOptions& options) {
    if (options.serial) return 1;
    if (options.threads > 0) return options.threads;
    return std::max(1u, std::thread::hardware_concurrency());
}

// Activation caches are allocated and freed every step; keep glibc from
// handing them back to the kernel (and faulting them in again) each time.
void keep_heap_resident() {
#ifdef __GLIBC__
    static const bool done = [] {
        mallopt(M_MMAP_THRESHOLD, 1 << 30);
        mallopt(M_TRIM_THRESHOLD, 1 << 30);
        return true;
    }();
    (void)done;
#endif
}

template <typename F>
void parallel_for(std::size_t n, int threads, F&& body) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t workers = std::min<std::size_t>(threads, n);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace

namespace {

// Head ROIs for validation: the anchors clipped to the crop. They do not depend
// on the weights, so validation losses stay comparable across training.
std::vector<Proposal> anchor_rois(std::span<const Anchor> anchors, const BoundingBox& frame) {
    std::vector<Proposal> out;
    for (const auto& a : anchors) {
        const BoundingBox b = clip_to(a.box, frame);
        if (b.width() >= 1.0 && b.height() >= 1.0) out.push_back({b, 0.0});
    }
    return out;
}

LossBreakdown run_sample(const Network& net, const TrainingSample& sample, std::mt19937_64& rng,
                         Gradients* grads, bool fixed_head_rois) {
    const DetectorConfig& config = net.config();
    const bool want_grads = grads != nullptr;
    const RpnOutput rpn = net.forward_rpn(sample.raster, want_grads);
    const auto anchors = generate_anchors(rpn.dims, config);
    const RpnTargets rpn_targets = make_rpn_targets(anchors, sample.boxes, config, rng);
    const auto proposals =
        fixed_head_rois ? anchor_rois(anchors, sample.raster.dims().frame()) : propose(rpn, anchors, config);
    const HeadTargets head_targets = make_head_targets(proposals, sample.boxes, config, rng);
    const HeadOutput head = net.forward_head(rpn, head_targets.rois, want_grads);
    OutputGradients dout;
    const LossBreakdown losses =
        compute_losses(rpn, head, rpn_targets, head_targets, config, want_grads ? &dout : nullptr);
    if (want_grads) net.backward(rpn, head, dout, *grads);
    return losses;
}

}  // namespace

LossBreakdown sample_loss(const Network& net, const TrainingSample& sample, std::mt19937_64& rng,
                          Gradients* grads) {
    return run_sample(net, sample, rng, grads, false);
}

LossBreakdown evaluate_loss(const Network& net, std::span<const TrainingSample> samples, std::uint64_t seed) {
    LossBreakdown sum;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        std::mt19937_64 rng(derive_seed(seed, i));
        sum += run_sample(net, samples[i], rng, nullptr, true);
    }
    return samples.empty() ? sum : sum.scaled(1.0 / double(samples.size()));
}

Network initial_network(const DetectorConfig& config) {
    return Network(config, derive_seed(config.seed, kInitSalt));
}

double learning_rate_at(const DetectorConfig& config, int step) {
    double lr = config.learning_rate;
    if (step < config.warmup_iterations) lr *= double(step + 1) / double(config.warmup_iterations);
    if (step >= int(std::ceil(config.lr_decay_fraction * config.iterations))) lr *= 0.1;
    return lr;
}

std::string loss_curve_csv(std::span<const StepRecord> curve) {
    std::string out = "step,rpn_cls,rpn_reg,head_cls,head_reg,total,split\n";
    for (const auto& r : curve) {
        const auto& l = r.losses;
        out += fmt::format("{},{:.8g},{:.8g},{:.8g},{:.8g},{:.8g},{}\n", r.step, l.rpn_cls, l.rpn_reg, l.head_cls,
                           l.head_reg, l.total, r.split);
    }
    return out;
}

TrainResult train_detector(const DetectorConfig& config, std::span<const TrainingSample> train,
                           std::span<const TrainingSample> val, const TrainOptions& options) {
    config.validate();
    keep_heap_resident();
    if (options.augment) options.augment->validate();
    if (train.empty() && config.iterations > 0) throw std::invalid_argument("no training samples");

    TrainResult result{initial_network(config), {}, {}};
    Network& net = result.network;
    result.metadata.split_seed = options.split_seed;

    const int threads = resolve_threads(options);
    const std::size_t per_sample = options.augment ? std::size_t(std::max(1, options.augment->per_sample_count)) : 1;
    const std::size_t pool_size = train.size() * per_sample;
    const std::size_t batch = std::size_t(config.batch_size);

    std::vector<double> velocity(net.params().total_size(), 0.0);
    std::vector<std::size_t> order;
    std::size_t cursor = 0, epoch = 0;
    auto next_index = [&] {
        if (cursor >= order.size()) {
            order.resize(pool_size);
            std::iota(order.begin(), order.end(), 0);
            std::mt19937_64 rng(derive_seed(derive_seed(config.seed, kOrderSalt), epoch++));
            std::shuffle(order.begin(), order.end(), rng);
            cursor = 0;
        }
        return order[cursor++];
    };

    auto materialize = [&](std::size_t pool_index) {
        const TrainingSample& src = train[pool_index / per_sample];
        if (!options.augment) return src;
        const std::size_t aug_index = pool_index % per_sample;
        AugmentedSample a = augment_one(src.id, src.raster, src.boxes, *options.augment,
                                        derive_seed(config.seed, kAugmentSalt), aug_index);
        return TrainingSample{src.id, std::move(a.raster), std::move(a.boxes)};
    };

    auto record = [&](StepRecord r) {
        if (options.on_record) options.on_record(r);
        result.curve.push_back(std::move(r));
    };

    std::optional<Network> best;
    double best_val = 0.0;
    auto validate_at = [&](int step) {
        if (val.empty()) return;
        const LossBreakdown v = evaluate_loss(net, val, derive_seed(config.seed, kSampleSalt));
        record({step, v, "val"});
        if (!best || v.total < best_val) {
            best = net;
            best_val = v.total;
            result.metadata.best_step = step;
            result.metadata.best_val_loss = v.total;
        }
    };

    for (int step = 0; step < config.iterations; ++step) {
        std::vector<std::size_t> picks(batch);
        for (auto& p : picks) p = next_index();

        std::vector<Gradients> grads(batch);
        std::vector<LossBreakdown> losses(batch);
        parallel_for(batch, threads, [&](std::size_t b) {
            const TrainingSample sample = materialize(picks[b]);
            std::mt19937_64 rng(derive_seed(derive_seed(config.seed, kSampleSalt), std::uint64_t(step) * batch + b));
            grads[b].assign(net.params().total_size(), 0.0);
            losses[b] = sample_loss(net, sample, rng, &grads[b]);
        });

        LossBreakdown mean;
        for (const auto& l : losses) mean += l;
        mean = mean.scaled(1.0 / double(batch));
        if (!mean.finite()) {
            throw NonFiniteLossError(step, fmt::format("non-finite loss at step {} (rpn_cls={}, rpn_reg={}, "
                                                       "head_cls={}, head_reg={})",
                                                       step, mean.rpn_cls, mean.rpn_reg, mean.head_cls,
                                                       mean.head_reg));
        }

        auto& w = net.params().values();
        const double lr = learning_rate_at(config, step);
        const double inv_batch = 1.0 / double(batch);
        for (std::size_t i = 0; i < w.size(); ++i) {
            double g = 0.0;
            for (std::size_t b = 0; b < batch; ++b) g += grads[b][i];
            g = g * inv_batch + config.weight_decay * w[i];
            velocity[i] = config.momentum * velocity[i] + g;
            w[i] -= lr * velocity[i];
        }
        result.metadata.final_losses = mean;
        result.metadata.iterations_run = step + 1;
        record({step, mean, "train"});

        if ((step + 1) % config.val_interval == 0 || step + 1 == config.iterations) validate_at(step + 1);
    }

    if (best) result.network = std::move(*best);
    return result;
}

}  // namespace acp::detector

#include "hsr/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "bytes.hpp"

namespace hsr {

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t * chunk; i < std::min(n, (t + 1) * chunk); ++i) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::uint32_t parameter_checksum(const Model& model) {
    bytes::Writer w;
    for (double p : model.parameters()) w.f64(p);
    return bytes::crc32(w.buffer());
}

double mean_loss(const Model& model, const std::vector<PatchPair>& pairs, std::span<const std::size_t> indices,
                 std::size_t threads) {
    if (indices.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::vector<double> losses(indices.size());
    parallel_for(indices.size(), threads, [&](std::size_t i) {
        const PatchPair& p = pairs[indices[i]];
        losses[i] = mse_loss(forward(model, p.lr), p.hr).loss;
    });
    return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
}

double learning_rate_at(const TrainConfig& config, std::size_t epoch) {
    const double lr0 = config.adam.learning_rate;
    if (!config.final_learning_rate || config.max_epochs <= 1) return lr0;
    const double t = static_cast<double>(epoch - 1) / static_cast<double>(config.max_epochs - 1);
    return *config.final_learning_rate + 0.5 * (lr0 - *config.final_learning_rate) * (1.0 + std::cos(M_PI * t));
}

TrainResult train(const TrainConfig& config, const std::vector<PatchPair>& pairs,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
    if (config.batch_size == 0) throw std::invalid_argument("batch size must be at least 1");
    if (config.patience == 0) throw std::invalid_argument("patience must be at least 1");
    if (pairs.empty()) throw std::invalid_argument("training needs at least one patch pair");
    const std::size_t s = static_cast<std::size_t>(config.scale);
    for (const PatchPair& p : pairs)
        if (p.hr.height() != p.lr.height() * s || p.hr.width() != p.lr.width() * s)
            throw std::invalid_argument("patch pairs do not match scale " + std::to_string(config.scale));

    Model model = build(config.arch, config.scale, config.seed, BuildOptions{config.final_relu});

    std::mt19937_64 rng(config.seed ^ 0x5eed5eed5eedULL);
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t n_val = static_cast<std::size_t>(std::lround(config.validation_fraction * pairs.size()));
    if (config.validation_fraction > 0.0 && pairs.size() >= 2) n_val = std::max<std::size_t>(n_val, 1);
    n_val = std::min(n_val, pairs.size() - 1);
    std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<long>(n_val));
    std::vector<std::size_t> tr(order.begin() + static_cast<long>(n_val), order.end());
    std::sort(val.begin(), val.end());
    std::sort(tr.begin(), tr.end());

    TrainResult result;
    result.train_pairs = tr.size();
    result.val_pairs = val.size();
    result.model = model;
    result.best_val_loss = std::numeric_limits<double>::infinity();

    AdamState adam(model.parameter_count(), config.adam);
    std::vector<double> params = model.parameters();
    std::ofstream log;
    if (!config.log.empty()) {
        log.open(config.log, std::ios::app);
        if (!log) throw std::runtime_error("cannot open training log " + config.log.string());
    }

    std::size_t since_best = 0;
    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::shuffle(tr.begin(), tr.end(), rng);
        adam.set_learning_rate(learning_rate_at(config, epoch));

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < tr.size(); start += config.batch_size) {
            const std::size_t n = std::min(config.batch_size, tr.size() - start);
            std::vector<std::vector<double>> grads(n);
            std::vector<double> losses(n);
            parallel_for(n, config.threads, [&](std::size_t i) {
                const PatchPair& p = pairs[tr[start + i]];
                const ForwardTrace trace = forward_trace(model, p.lr);
                LossResult l = mse_loss(trace.output(), p.hr);
                losses[i] = l.loss;
                grads[i] = backward(model, trace, l.grad).flat();
            });
            // Fixed summation order keeps runs bit-reproducible at any thread count.
            std::vector<double> g(params.size(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                loss_sum += losses[i];
                for (std::size_t k = 0; k < g.size(); ++k) g[k] += grads[i][k];
            }
            for (double& v : g) v /= static_cast<double>(n);
            adam.step(params, g);
            model.set_parameters(params);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(tr.size());
        rec.val_loss = val.empty() ? rec.train_loss : mean_loss(model, pairs, val, config.threads);
        rec.parameter_checksum = parameter_checksum(model);
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.log.push_back(rec);

        if (rec.val_loss < result.best_val_loss) {
            result.best_val_loss = rec.val_loss;
            result.best_epoch = epoch;
            result.model = model;
            since_best = 0;
            if (!config.checkpoint.empty()) save(model, config.checkpoint);
        } else {
            ++since_best;
        }

        if (log) {
            char line[128];
            std::snprintf(line, sizeof line, "%zu\t%.9g\t%.9g\t%.3f\n", epoch, rec.train_loss, rec.val_loss,
                          rec.seconds);
            log << line << std::flush;
        }
        if (on_epoch) on_epoch(rec);
        if (since_best >= config.patience) break;
    }
    return result;
}

TrainResult train(const TrainConfig& config, const std::function<void(const EpochRecord&)>& on_epoch) {
    if (native_scale(config.arch) != config.scale)
        throw std::invalid_argument(std::string(to_string(config.arch)) + " upscales by " +
                                    std::to_string(native_scale(config.arch)) + ", not " +
                                    std::to_string(config.scale));
    const PatchDataset ds = load_dataset(config.dataset, config.degradation);
    if (ds.manifest.scale != config.scale)
        throw std::invalid_argument("dataset scale " + std::to_string(ds.manifest.scale) +
                                    " does not match the requested scale " + std::to_string(config.scale));
    return train(config, ds.pairs, on_epoch);
}

}  // namespace hsr

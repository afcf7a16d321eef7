#include "vdt/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "vdt/config_json.hpp"
#include "vdt/errors.hpp"
#include "vdt/io.hpp"
#include "vdt/parallel.hpp"
#include "vdt/rng.hpp"

namespace vdt {

namespace {
constexpr uint64_t kNetInitTag = 0x12e7;
constexpr uint64_t kSrcPoolTag = 0x50a1;
constexpr uint64_t kTgtPoolTag = 0x50a2;
constexpr uint64_t kBatchTag = 0xba7c;
constexpr uint64_t kPrimalTag = 0x9121;
constexpr uint64_t kCfgDropTag = 0xcf6d;
}  // namespace

void TrainConfig::validate() const {
    if (horizon < 0) throw ConfigError("train: horizon must be >= 0");
    if (batch_size <= 0) throw ConfigError("train: batch_size must be positive");
    if (iterations < 0) throw ConfigError("train: iterations must be >= 0");
    if (primal_steps < 0) throw ConfigError("train: primal_steps must be >= 0");
    if (!(primal_stepsize > 0.0)) throw ConfigError("train: primal_stepsize must be positive");
    if (noise_std < 0.0) throw ConfigError("train: noise_std must be >= 0");
    if (!(dual_lr > 0.0)) throw ConfigError("train: dual_lr must be positive");
    if (cfg_uncond_prob < 0.0 || cfg_uncond_prob > 1.0) {
        throw ConfigError("train: cfg_uncond_prob must be in [0, 1]");
    }
    if (pool_size < batch_size) throw ConfigError("train: pool_size must be >= batch_size");
    if (eval_n <= 0) throw ConfigError("train: eval_n must be positive");
    source.validate();
    target.validate();
    network.validate();
    if (cfg_uncond_prob > 0.0 && network.num_labels == 0) {
        throw ConfigError("train: cfg_uncond_prob requires a conditional network");
    }
}

std::string TrainLog::to_csv() const {
    std::string out = "iter,lagrangian,cost,residual,grad_norm,seconds\n";
    char buf[256];
    for (const TrainRecord& r : records) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.3f\n", r.iteration,
                      r.lagrangian, r.cost, r.residual, r.grad_norm, r.seconds);
        out += buf;
    }
    return out;
}

std::vector<double> dual_gradient(const ParticleCloud& cloud, const ValueNetwork& net,
                                  const Batch& batch, int horizon, double* value_terms) {
    if (horizon != cloud.horizon) throw InputError("dual_gradient: horizon mismatch");
    if (batch.source_points.rows() != cloud.b) throw InputError("dual_gradient: batch size mismatch");
    if (net.input_dim() != cloud.d) throw InputError("dual_gradient: network dimension mismatch");

    const int d = cloud.d;
    const int ed = net.config().time_embed_dim;
    const Points embeds = time_embed_table(cloud.horizon, ed);
    const double w = 1.0 / cloud.b;

    const std::vector<ChainPair> pairs = chain_pairs(cloud);
    std::vector<const ChainPair*> active;
    active.reserve(pairs.size());
    for (const ChainPair& p : pairs) {
        // A coinciding interface contributes +grad - grad = 0 exactly.
        if (std::memcmp(p.pos, p.neg, sizeof(double) * d) != 0) active.push_back(&p);
    }

    const size_t n_params = net.params().size();
    std::vector<double> grad(n_params, 0.0);
    if (value_terms) *value_terms = 0.0;
    if (active.empty()) return grad;

    const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(active.size());
    const std::ptrdiff_t nblocks = block_count(m);
    std::vector<std::vector<double>> block_grads(static_cast<size_t>(nblocks));
    std::vector<double> block_values(static_cast<size_t>(nblocks), 0.0);

    parallel_for_blocks(m, [&](std::ptrdiff_t bi, std::ptrdiff_t begin, std::ptrdiff_t end) {
        const int count = static_cast<int>(end - begin);
        std::vector<double> xs(static_cast<size_t>(2 * count) * d);
        std::vector<double> eb(static_cast<size_t>(2 * count) * ed);
        std::vector<double> scales(static_cast<size_t>(2 * count));
        std::vector<int> lb(static_cast<size_t>(2 * count));
        for (std::ptrdiff_t k = begin; k < end; ++k) {
            const ChainPair& p = *active[k];
            const std::ptrdiff_t j = 2 * (k - begin);
            std::memcpy(xs.data() + j * d, p.pos, sizeof(double) * d);
            std::memcpy(xs.data() + (j + 1) * d, p.neg, sizeof(double) * d);
            std::memcpy(eb.data() + j * ed, embeds.row(p.level).data(), sizeof(double) * ed);
            std::memcpy(eb.data() + (j + 1) * ed, embeds.row(p.level).data(), sizeof(double) * ed);
            scales[static_cast<size_t>(j)] = w;
            scales[static_cast<size_t>(j) + 1] = -w;
            lb[static_cast<size_t>(j)] = p.label;
            lb[static_cast<size_t>(j) + 1] = p.label;
        }
        std::vector<double>& local = block_grads[static_cast<size_t>(bi)];
        local.assign(n_params, 0.0);
        std::vector<double> values(static_cast<size_t>(2 * count));
        net.grad_params_batch(xs.data(), 2 * count, eb.data(), false,
                              net.conditional() ? lb.data() : nullptr, scales.data(), local.data(),
                              values.data());
        double vsum = 0.0;
        for (int j = 0; j < 2 * count; ++j) {
            vsum += scales[static_cast<size_t>(j)] * values[static_cast<size_t>(j)];
        }
        block_values[static_cast<size_t>(bi)] = vsum;
    });

    // Ordered reduction: independent of the worker count.
    for (const auto& local : block_grads) {
        if (local.empty()) continue;
        for (size_t i = 0; i < n_params; ++i) grad[i] += local[i];
    }
    if (value_terms) {
        for (double v : block_values) *value_terms += v;
    }
    return grad;
}

TrainResult train(const TrainConfig& config, const TrainHooks& hooks) {
    config.validate();
    const Sample source_pool = sample(config.source, config.pool_size, mix(config.seed, kSrcPoolTag));
    const Sample target_pool = sample(config.target, config.pool_size, mix(config.seed, kTgtPoolTag));
    return train(config, source_pool, target_pool, hooks);
}

TrainResult train(const TrainConfig& config, const Sample& source_pool, const Sample& target_pool,
                  const TrainHooks& hooks) {
    config.validate();
    if (source_pool.points.cols() != config.network.input_dim) {
        throw ConfigError("train: network input_dim does not match data dimension");
    }
    if (config.network.num_labels > 0 && target_pool.labels.empty()) {
        throw ConfigError("train: conditional network requires a labeled target pool");
    }

    ValueNetwork net(config.network, mix(config.seed, kNetInitTag));
    OptimizerState opt = OptimizerState::for_network(net, config.dual_lr, config.adam_beta1,
                                                     config.adam_beta2, config.adam_epsilon);
    TrainLog log;
    log.records.reserve(static_cast<size_t>(config.iterations));
    const auto start = std::chrono::steady_clock::now();

    for (int t = 1; t <= config.iterations; ++t) {
        try {
            Batch batch = make_batch(source_pool, target_pool, config.batch_size, config.coupling,
                                     mix(config.seed, kBatchTag, static_cast<uint64_t>(t)));
            if (config.cfg_uncond_prob > 0.0 && !batch.labels.empty()) {
                for (int i = 0; i < config.batch_size; ++i) {
                    RngStream rng(mix(config.seed, kCfgDropTag, static_cast<uint64_t>(t),
                                      static_cast<uint64_t>(i)));
                    if (rng.next_unit() < config.cfg_uncond_prob) batch.labels[i] = -1;
                }
            }

            ParticleCloud cloud = init_particles(batch, config.horizon);
            for (int k = 1; k <= config.primal_steps; ++k) {
                primal_step(cloud, net, config.primal_stepsize, config.noise_std, config.horizon,
                            mix(config.seed, kPrimalTag, static_cast<uint64_t>(t),
                                static_cast<uint64_t>(k)));
            }

            double value_terms = 0.0;
            const std::vector<double> grad =
                dual_gradient(cloud, net, batch, config.horizon, &value_terms);

            TrainRecord rec;
            rec.iteration = t;
            rec.cost = mean_transport_cost(cloud);
            rec.lagrangian = rec.cost + value_terms;
            rec.residual = constraint_residual(cloud);
            double norm_sq = 0.0;
            for (double g : grad) norm_sq += g * g;
            rec.grad_norm = std::sqrt(norm_sq);
            if (!std::isfinite(rec.lagrangian) || !std::isfinite(rec.grad_norm)) {
                throw TrainingError("non-finite loss or gradient");
            }

            adam_step(net, opt, grad);

            rec.seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            log.records.push_back(rec);
            if (hooks.on_iteration) hooks.on_iteration(rec, net);
        } catch (const TrainingError& e) {
            throw TrainingError(std::string(e.what()) + " (iteration " + std::to_string(t) + ")", t);
        }
    }

    return TrainResult{Checkpoint(std::move(net), config, config.iterations), std::move(log)};
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    nlohmann::json layers = nlohmann::json::array();
    const auto& params = ckpt.net.params();
    for (const LayerView& lv : ckpt.net.layers()) {
        nlohmann::json layer;
        layer["weights"] = std::vector<double>(
            params.begin() + lv.w_offset,
            params.begin() + lv.w_offset + static_cast<std::ptrdiff_t>(lv.n_out) * lv.n_in);
        layer["bias"] = std::vector<double>(params.begin() + lv.b_offset,
                                            params.begin() + lv.b_offset + lv.n_out);
        layers.push_back(std::move(layer));
    }
    nlohmann::json network{{"config", to_json(ckpt.net.config())}, {"layers", std::move(layers)}};
    if (ckpt.net.conditional()) {
        const int rows = ckpt.net.config().num_labels + 1;
        const int led = ckpt.net.config().label_embed_dim;
        nlohmann::json table = nlohmann::json::array();
        for (int r = 0; r < rows; ++r) {
            const auto begin = params.begin() + ckpt.net.label_table_offset() +
                               static_cast<std::ptrdiff_t>(r) * led;
            table.push_back(std::vector<double>(begin, begin + led));
        }
        network["label_table"] = std::move(table);
    }

    nlohmann::json doc{{"version", ckpt.version},
                       {"network", std::move(network)},
                       {"train_config", to_json(ckpt.config)},
                       {"iteration", ckpt.iteration},
                       {"seed", ckpt.config.seed}};
    atomic_write_file(path, doc.dump(1));
}

Checkpoint load_checkpoint(const std::string& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("checkpoint " + path + ": parse error: " + e.what());
    }
    try {
        const int version = doc.at("version").get<int>();
        if (version != 1) {
            throw ConfigError("checkpoint " + path + ": unsupported version " +
                              std::to_string(version));
        }
        const nlohmann::json& network = doc.at("network");
        NetworkConfig net_config = network_config_from_json(network.at("config"));
        TrainConfig config = train_config_from_json(doc.at("train_config"));
        const int iteration = doc.at("iteration").get<int>();

        ValueNetwork net(net_config);
        auto& params = net.params();
        const nlohmann::json& layers = network.at("layers");
        if (layers.size() != net.layers().size()) {
            throw ConfigError("checkpoint " + path + ": layer count mismatch");
        }
        for (size_t l = 0; l < net.layers().size(); ++l) {
            const LayerView& lv = net.layers()[l];
            const auto weights = layers.at(l).at("weights").get<std::vector<double>>();
            const auto bias = layers.at(l).at("bias").get<std::vector<double>>();
            if (weights.size() != static_cast<size_t>(lv.n_out) * lv.n_in ||
                bias.size() != static_cast<size_t>(lv.n_out)) {
                throw ConfigError("checkpoint " + path + ": parameter count mismatch in layer " +
                                  std::to_string(l));
            }
            std::copy(weights.begin(), weights.end(), params.begin() + lv.w_offset);
            std::copy(bias.begin(), bias.end(), params.begin() + lv.b_offset);
        }
        if (net.conditional()) {
            const auto table = network.at("label_table").get<std::vector<std::vector<double>>>();
            const int rows = net_config.num_labels + 1;
            const int led = net_config.label_embed_dim;
            if (static_cast<int>(table.size()) != rows) {
                throw ConfigError("checkpoint " + path + ": label table row count mismatch");
            }
            for (int r = 0; r < rows; ++r) {
                if (static_cast<int>(table[r].size()) != led) {
                    throw ConfigError("checkpoint " + path + ": label table width mismatch");
                }
                std::copy(table[r].begin(), table[r].end(),
                          params.begin() + net.label_table_offset() +
                              static_cast<std::ptrdiff_t>(r) * led);
            }
        }
        return Checkpoint(std::move(net), std::move(config), iteration);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("checkpoint " + path + ": malformed document: " + e.what());
    }
}

}  // namespace vdt

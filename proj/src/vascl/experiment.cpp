#include "experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "adam.hpp"
#include "errors.hpp"

namespace vascl {

namespace {

using nlohmann::json;

// substream ids for the run seed
constexpr std::uint64_t kStreamInit = 1;
constexpr std::uint64_t kStreamSplit = 2;
constexpr std::uint64_t kStreamPairs = 3;
constexpr std::uint64_t kStreamEpochBase = 1000;
constexpr std::uint64_t kStreamView1Base = 1ull << 32;
constexpr std::uint64_t kStreamView2Base = 2ull << 32;
constexpr std::uint64_t kStreamPerturbBase = 3ull << 32;

Dataset build_dataset(const DataConfig& cfg, std::uint64_t seed) {
    if (cfg.kind == DataConfig::Kind::File) return load_embeddings(cfg.path);
    const MixtureSpec spec = make_blob_spec(cfg.components, cfg.dim, cfg.n, cfg.scale, cfg.std_dev);
    return generate_mixture(spec, seed);
}

Dataset subset(const Dataset& d, const std::vector<std::size_t>& idx) {
    Dataset out;
    out.x = Matrix(idx.size(), d.dim());
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < d.dim(); ++j) out.x(i, j) = d.x(idx[i], j);
    if (d.has_labels()) {
        out.labels.reserve(idx.size());
        for (std::size_t i : idx) out.labels.push_back(d.labels[i]);
    }
    out.ids.reserve(idx.size());
    for (std::size_t i : idx) out.ids.push_back(d.ids.empty() ? i : d.ids[i]);
    return out;
}

ModelParams init_model(const ExperimentConfig& cfg, std::size_t input_dim) {
    Rng rng = Rng::substream(cfg.seed, kStreamInit);
    std::size_t d = input_dim;
    for (std::size_t out : cfg.model.encoder_layers) d = out;
    const std::size_t hidden = cfg.model.head_hidden == 0 ? d : cfg.model.head_hidden;
    return ModelParams::init(input_dim, cfg.model.encoder_layers,
                             activation_from_string(cfg.model.activation), cfg.model.dropout,
                             hidden, cfg.model.head_out, rng);
}

int count_classes(const std::vector<int>& labels) {
    int c = 0;
    for (int v : labels) c = std::max(c, v + 1);
    return c;
}

double eval_spearman(const ModelParams& params, const Dataset& dataset,
                     const std::vector<ScoredPair>& pairs) {
    if (pairs.size() < 3) throw DataError("spearman: need at least 3 scored pairs");
    const Matrix e = encode_eval(params, dataset.x);
    std::vector<double> pred, gold;
    pred.reserve(pairs.size());
    gold.reserve(pairs.size());
    for (const ScoredPair& p : pairs) {
        if (p.a >= e.rows() || p.b >= e.rows()) throw DataError("spearman: pair index out of range");
        pred.push_back(cosine_sim(e.row(p.a), e.row(p.b)));
        gold.push_back(p.gold);
    }
    return spearman(pred, gold);
}

struct SnapshotMetrics {
    json record;
    double validation = 0.0;
};

SnapshotMetrics evaluate_snapshot(const ModelParams& params, const Dataset& holdout,
                                  const std::vector<ScoredPair>& pairs,
                                  const EvalOptions& options) {
    SnapshotMetrics out;
    const Matrix e = encode_eval(params, holdout.x);
    const DistanceKind dist = distance_from_string(options.distance);
    if (holdout.has_labels()) {
        std::vector<std::size_t> ks = options.purity_k;
        if (std::find(ks.begin(), ks.end(), std::size_t{10}) == ks.end()) ks.push_back(10);
        json purity = json::object();
        double purity10 = 0.0, dist10 = 0.0;
        for (const PurityPoint& p : neighborhood_purity(e, holdout.labels, ks, dist)) {
            purity["purity@" + std::to_string(p.k)] = p.true_positive_rate;
            purity["distance@" + std::to_string(p.k)] = p.mean_distance;
            if (p.k == 10) {
                purity10 = p.true_positive_rate;
                dist10 = p.mean_distance;
            }
        }
        out.record["purity"] = purity;
        if (options.validation_metric == "purity10") out.validation = purity10;
        out.record["mean_neighbor_distance@10"] = dist10;
    }
    if (!pairs.empty()) {
        const double rho = eval_spearman(params, holdout, pairs);
        out.record["spearman"] = rho;
        if (options.validation_metric == "spearman") out.validation = rho;
    }
    return out;
}

std::vector<ScoredPair> holdout_pairs(const ExperimentConfig& cfg, const Dataset& holdout) {
    if (cfg.data.kind != DataConfig::Kind::Mixture || !holdout.has_labels()) return {};
    const MixtureSpec spec =
        make_blob_spec(cfg.data.components, cfg.data.dim, cfg.data.n, cfg.data.scale,
                       cfg.data.std_dev);
    return generate_graded_pairs(holdout, spec, cfg.eval.num_pairs,
                                 Rng::substream(cfg.seed, kStreamPairs).next_u64());
}

}  // namespace

TrainResult run_training(const ExperimentConfig& config, const std::string& out_dir) {
    config.validate();
    std::filesystem::create_directories(out_dir);

    const Dataset dataset = build_dataset(config.data, config.seed);
    if (dataset.size() < config.schedule.batch_size) {
        throw DataError("training: dataset smaller than one batch");
    }

    // held-out split for periodic evaluation
    Rng split_rng = Rng::substream(config.seed, kStreamSplit);
    const std::vector<std::size_t> perm = split_rng.permutation(dataset.size());
    const auto holdout_n =
        static_cast<std::size_t>(config.eval.holdout_fraction * static_cast<double>(dataset.size()));
    const std::vector<std::size_t> holdout_idx(perm.begin(),
                                               perm.begin() + static_cast<std::ptrdiff_t>(holdout_n));
    const std::vector<std::size_t> train_idx(perm.begin() + static_cast<std::ptrdiff_t>(holdout_n),
                                             perm.end());
    const Dataset train = subset(dataset, train_idx);
    const Dataset holdout = holdout_n > 0 ? subset(dataset, holdout_idx) : train;
    const std::vector<ScoredPair> pairs = holdout_pairs(config, holdout);

    ModelParams params = init_model(config, dataset.dim());
    AdamState adam(config.optim.beta1, config.optim.beta2, config.optim.eps);
    {
        // encoder parameters first, head parameters last (canonical order)
        const auto list = param_list(params);
        for (std::size_t i = 0; i < list.size(); ++i) {
            const bool is_head = i >= list.size() - 4;
            adam.register_param(*list[i], is_head ? config.optim.lr_head : config.optim.lr_encoder);
        }
    }

    const std::string metrics_path = out_dir + "/metrics.jsonl";
    const std::string best_path = out_dir + "/best.ckpt";
    const std::string final_path = out_dir + "/final.ckpt";
    std::ofstream log(metrics_path);
    if (!log) throw DataError("training: cannot write " + metrics_path);
    {
        std::ofstream cfg_out(out_dir + "/config.json");
        cfg_out << config.to_json().dump(2) << "\n";
    }
    const std::string config_hash = config.hash();
    const bool augmented = config.mode == "vascl";

    double best_metric = -std::numeric_limits<double>::infinity();
    std::size_t step = 0;
    VasclLossResult last_loss;

    auto emit_eval = [&](std::size_t at_step) {
        SnapshotMetrics snap = evaluate_snapshot(params, holdout, pairs, config.eval);
        json rec;
        rec["step"] = at_step;
        rec["config_hash"] = config_hash;
        rec["seed"] = config.seed;
        rec["mode"] = config.mode;
        if (at_step > 0) {
            rec["loss_total"] = last_loss.total;
            rec["loss_instance"] = last_loss.instance_part;
            if (augmented) rec["loss_augmented"] = last_loss.augmented_part;
        }
        rec["eval"] = snap.record;
        log << rec.dump() << "\n";
        log.flush();
        if (snap.validation > best_metric) {
            best_metric = snap.validation;
            save_checkpoint(params, best_path);
        }
    };

    emit_eval(0);  // untrained snapshot

    bool done = false;
    for (std::size_t epoch = 0; epoch < config.schedule.epochs && !done; ++epoch) {
        const auto epoch_batches = batches(
            train.size(), config.schedule.batch_size,
            Rng::substream(config.seed, kStreamEpochBase + epoch).next_u64(), true);
        for (const auto& batch_idx : epoch_batches) {
            Matrix inputs(batch_idx.size(), train.dim());
            for (std::size_t i = 0; i < batch_idx.size(); ++i)
                for (std::size_t j = 0; j < train.dim(); ++j)
                    inputs(i, j) = train.x(batch_idx[i], j);
            Rng rng1 = Rng::substream(config.seed, kStreamView1Base + step);
            Rng rng2 = Rng::substream(config.seed, kStreamView2Base + step);
            Rng rngp = Rng::substream(config.seed, kStreamPerturbBase + step);
            try {
                last_loss = vascl_loss(params, inputs, config.loss, rng1, rng2, rngp, augmented);
                std::vector<Matrix*> plist = param_list(params);
                adam.step(plist, last_loss.param_grads);
            } catch (const NumericError& e) {
                std::ostringstream msg;
                msg << "training aborted at step " << step << " (epoch " << epoch
                    << "): " << e.what() << "; last loss total=" << last_loss.total
                    << " instance=" << last_loss.instance_part
                    << " augmented=" << last_loss.augmented_part;
                throw NumericError(msg.str());
            }
            ++step;
            if (step % config.schedule.eval_every == 0) emit_eval(step);
            if (config.schedule.max_steps > 0 && step >= config.schedule.max_steps) {
                done = true;
                break;
            }
        }
    }
    if (step % config.schedule.eval_every != 0) emit_eval(step);
    save_checkpoint(params, final_path);
    if (!std::filesystem::exists(best_path)) save_checkpoint(params, best_path);

    TrainResult result;
    result.best_checkpoint = best_path;
    result.final_checkpoint = final_path;
    result.metrics_path = metrics_path;
    result.best_metric = best_metric;
    result.steps = step;
    return result;
}

namespace {

json clustering_task(const Matrix& e, const std::vector<int>& labels, const EvalOptions& options,
                     std::uint64_t seed) {
    const int c = count_classes(labels);
    if (c < 2) throw DataError("clustering: need at least 2 classes");
    double acc_sum = 0.0;
    std::vector<double> accs;
    for (std::size_t run = 0; run < options.kmeans_runs; ++run) {
        const KMeansResult km =
            kmeans(e, static_cast<std::size_t>(c), Rng::substream(seed, 0xc0u + run).next_u64(),
                   100, 1);
        const double acc = hungarian_accuracy(km.assignments, labels);
        accs.push_back(acc);
        acc_sum += acc;
    }
    json out;
    out["accuracy"] = acc_sum / static_cast<double>(options.kmeans_runs);
    out["runs"] = options.kmeans_runs;
    return out;
}

json probe_task(const Matrix& e, const std::vector<int>& labels, const EvalOptions& options,
                std::uint64_t seed) {
    const int c = count_classes(labels);
    if (c < 2) throw DataError("probe: need at least 2 classes");
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(c));
    for (std::size_t i = 0; i < labels.size(); ++i)
        by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    for (const auto& members : by_class) {
        if (members.size() < 2 * options.probe_shots + 1) {
            throw DataError("probe: a class has too few instances for the requested shots");
        }
    }
    std::vector<double> accs;
    for (std::size_t split = 0; split < options.probe_splits; ++split) {
        Rng rng = Rng::substream(seed, 0x9b0u + split);
        std::vector<std::size_t> train_idx, val_idx, test_idx;
        for (const auto& members : by_class) {
            std::vector<std::size_t> order = rng.permutation(members.size());
            for (std::size_t i = 0; i < members.size(); ++i) {
                const std::size_t idx = members[order[i]];
                if (i < options.probe_shots) train_idx.push_back(idx);
                else if (i < 2 * options.probe_shots) val_idx.push_back(idx);
                else test_idx.push_back(idx);
            }
        }
        auto pick = [&](const std::vector<std::size_t>& idx) {
            LabeledEmbeddings out;
            out.x = Matrix(idx.size(), e.cols());
            for (std::size_t i = 0; i < idx.size(); ++i) {
                for (std::size_t j = 0; j < e.cols(); ++j) out.x(i, j) = e(idx[i], j);
                out.labels.push_back(labels[idx[i]]);
            }
            return out;
        };
        ProbeConfig pc;
        pc.seed = Rng::substream(seed, 0xab0u + split).next_u64();
        accs.push_back(linear_probe(pick(train_idx), pick(val_idx), pick(test_idx), pc));
    }
    double mean = 0.0;
    for (double a : accs) mean += a;
    mean /= static_cast<double>(accs.size());
    double var = 0.0;
    for (double a : accs) var += (a - mean) * (a - mean);
    json out;
    out["accuracy_mean"] = mean;
    out["accuracy_std"] = std::sqrt(var / static_cast<double>(accs.size()));
    out["splits"] = options.probe_splits;
    out["shots"] = options.probe_shots;
    return out;
}

// (anchor, same-class positive, other-class negative) triples from labels
json triples_task(const Matrix& e, const std::vector<int>& labels, const EvalOptions& options,
                  std::uint64_t seed) {
    const int c = count_classes(labels);
    if (c < 2) throw DataError("triples: need at least 2 classes");
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(c));
    for (std::size_t i = 0; i < labels.size(); ++i)
        by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    Rng rng = Rng::substream(seed, 0x791e5);
    const std::size_t n = std::min<std::size_t>(e.rows(), 2000);
    std::vector<std::size_t> anchors, positives, negatives;
    for (std::size_t t = 0; t < n; ++t) {
        const std::size_t a = rng.index(e.rows());
        const auto& same = by_class[static_cast<std::size_t>(labels[a])];
        if (same.size() < 2) continue;
        std::size_t p = a;
        while (p == a) p = same[rng.index(same.size())];
        std::size_t neg = a;
        while (labels[neg] == labels[a]) neg = rng.index(e.rows());
        anchors.push_back(a);
        positives.push_back(p);
        negatives.push_back(neg);
    }
    if (anchors.empty()) throw DataError("triples: could not form any triple");
    auto rows_of = [&](const std::vector<std::size_t>& idx) {
        Matrix out(idx.size(), e.cols());
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t j = 0; j < e.cols(); ++j) out(i, j) = e(idx[i], j);
        return out;
    };
    const TripleAnalysis analysis =
        triple_distance_analysis(rows_of(anchors), rows_of(positives), rows_of(negatives),
                                 distance_from_string(options.distance));
    json out;
    out["win_rate"] = analysis.win_rate;
    out["tie_rate"] = analysis.tie_rate;
    auto stats = [](const DistanceStats& s) {
        json j;
        j["mean"] = s.mean;
        j["std"] = s.stddev;
        j["deciles"] = s.deciles;
        return j;
    };
    out["positive_distance"] = stats(analysis.positive);
    out["negative_distance"] = stats(analysis.negative);
    out["count"] = anchors.size();
    return out;
}

}  // namespace

nlohmann::json run_eval(const ModelParams& params, const Dataset& dataset,
                        const std::vector<std::string>& tasks, const EvalOptions& options,
                        std::uint64_t seed, const std::vector<ScoredPair>* pairs) {
    if (dataset.dim() != params.input_dim) {
        throw DataError("eval: checkpoint input dim " + std::to_string(params.input_dim) +
                        " does not match data dim " + std::to_string(dataset.dim()));
    }
    const Matrix e = encode_eval(params, dataset.x);
    const DistanceKind dist = distance_from_string(options.distance);
    json record;
    record["seed"] = seed;
    for (const std::string& task : tasks) {
        if (task == "purity") {
            if (!dataset.has_labels()) throw DataError("purity task requires labeled data");
            json purity = json::object();
            for (const PurityPoint& p : neighborhood_purity(e, dataset.labels, options.purity_k, dist)) {
                purity["purity@" + std::to_string(p.k)] = p.true_positive_rate;
                purity["distance@" + std::to_string(p.k)] = p.mean_distance;
            }
            record["purity"] = purity;
        } else if (task == "clustering") {
            if (!dataset.has_labels()) throw DataError("clustering task requires labeled data");
            record["clustering"] = clustering_task(e, dataset.labels, options, seed);
        } else if (task == "probe") {
            if (!dataset.has_labels()) throw DataError("probe task requires labeled data");
            record["probe"] = probe_task(e, dataset.labels, options, seed);
        } else if (task == "triples") {
            if (!dataset.has_labels()) throw DataError("triples task requires labeled data");
            record["triples"] = triples_task(e, dataset.labels, options, seed);
        } else if (task == "spearman") {
            if (pairs == nullptr || pairs->empty()) {
                throw DataError("spearman task requires scored pairs (--pairs file)");
            }
            record["spearman"] = eval_spearman(params, dataset, *pairs);
        } else {
            throw ConfigError("unknown eval task: " + task);
        }
    }
    return record;
}

nlohmann::json run_analyze(const ModelParams& a, const ModelParams& b, const Dataset& dataset,
                           const EvalOptions& options, std::uint64_t seed) {
    if (a.input_dim != b.input_dim || a.input_dim != dataset.dim()) {
        throw DataError("analyze: checkpoint/data dimension mismatch");
    }
    json report;
    report["purity_k"] = options.purity_k;
    const char* names[2] = {"a", "b"};
    const ModelParams* models[2] = {&a, &b};
    for (int side = 0; side < 2; ++side) {
        json entry;
        if (dataset.has_labels()) {
            const std::vector<std::string> tasks = {"purity", "triples"};
            entry = run_eval(*models[side], dataset, tasks, options, seed);
        } else {
            entry["purity"] = "skipped (no labels)";
            entry["triples"] = "skipped (no labels)";
        }
        report[names[side]] = entry;
    }
    return report;
}

std::string render_analyze_csv(const nlohmann::json& report) {
    std::ostringstream out;
    out << "metric,a,b\n";
    if (report["a"].contains("purity") && report["a"]["purity"].is_object()) {
        for (const auto& k : report["purity_k"]) {
            const std::string key = "purity@" + std::to_string(k.get<std::size_t>());
            const std::string dkey = "distance@" + std::to_string(k.get<std::size_t>());
            out << key << "," << report["a"]["purity"][key].get<double>() << ","
                << report["b"]["purity"][key].get<double>() << "\n";
            out << dkey << "," << report["a"]["purity"][dkey].get<double>() << ","
                << report["b"]["purity"][dkey].get<double>() << "\n";
        }
    } else {
        out << "purity,skipped,skipped\n";
    }
    if (report["a"].contains("triples") && report["a"]["triples"].is_object()) {
        out << "triple_win_rate," << report["a"]["triples"]["win_rate"].get<double>() << ","
            << report["b"]["triples"]["win_rate"].get<double>() << "\n";
    }
    return out.str();
}

std::vector<ScoredPair> load_pairs_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("pairs: cannot open: " + path);
    std::vector<ScoredPair> pairs;
    std::string line;
    std::size_t record = 0;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        ScoredPair p;
        if (!(ls >> p.a >> p.b >> p.gold)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            throw DataError("pairs: malformed record " + std::to_string(record));
        }
        if (!std::isfinite(p.gold)) throw DataError("pairs: non-finite gold score");
        pairs.push_back(p);
        ++record;
    }
    if (pairs.empty()) throw DataError("pairs: empty file: " + path);
    return pairs;
}

}  // namespace vascl

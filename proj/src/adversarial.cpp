#include "xling/adversarial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace xling {

void SyntheticTaskSpec::validate() const {
    if (clustering.assignment.size() < 2)
        throw ValidationError("synthetic spec: need at least 2 domains");
    if (input_dim < 2)
        throw ValidationError("synthetic spec: input_dim must be >= 2");
    if (samples_per_domain < 1 || test_samples_per_domain < 1)
        throw ValidationError("synthetic spec: sample counts must be positive");
    if (cluster_rotation < 0.0 || cluster_rotation > M_PI / 2.0 + 1e-12)
        throw ValidationError("synthetic spec: cluster_rotation must lie in [0, pi/2]");
    if (within_noise < 0.0)
        throw ValidationError("synthetic spec: within_noise must be >= 0");
    if (domain_shift < 0.0)
        throw ValidationError("synthetic spec: domain_shift must be >= 0");
}

Clustering make_domain_clustering(std::size_t n_domains, std::size_t n_clusters) {
    if (n_clusters < 1 || n_clusters > n_domains)
        throw ValidationError("make_domain_clustering: cluster count out of range");
    if (n_domains > 26 * 26)
        throw ValidationError("make_domain_clustering: too many domains");
    std::vector<LanguageId> ids;
    for (std::size_t i = 0; i < n_domains; ++i) {
        std::string code = "d";
        code += static_cast<char>('a' + i / 26);
        code += static_cast<char>('a' + i % 26);
        ids.push_back(LanguageId{code});
    }
    Clustering c;
    c.k = n_clusters;
    const std::size_t base = n_domains / n_clusters;
    const std::size_t extra = n_domains % n_clusters;
    std::size_t pos = 0;
    for (std::size_t ci = 0; ci < n_clusters; ++ci) {
        const std::size_t size = base + (ci < extra ? 1 : 0);
        c.medoids.push_back(ids[pos]);
        for (std::size_t j = 0; j < size; ++j) c.assignment[ids[pos + j]] = ci;
        pos += size;
    }
    c.cost = 0.0;
    return c;
}

namespace {

std::mt19937_64 sub_rng(std::uint64_t seed, std::uint64_t tag) {
    // splitmix64 of (seed, tag) so parameter blocks draw from disjoint streams
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return std::mt19937_64(z ^ (z >> 31));
}

Eigen::MatrixXd randn(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = dist(rng);
    return m;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::vector<DomainDataset> gen_synthetic(const SyntheticTaskSpec& spec) {
    spec.validate();
    std::mt19937_64 rng = sub_rng(spec.seed, 0xDA7A);

    std::vector<Eigen::VectorXd> cluster_dirs;
    for (std::size_t ci = 0; ci < spec.clustering.k; ++ci) {
        Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.input_dim));
        const double angle = spec.cluster_rotation * static_cast<double>(ci);
        w(0) = std::cos(angle);
        w(1) = std::sin(angle);
        cluster_dirs.push_back(std::move(w));
    }

    std::vector<DomainDataset> out;
    for (const auto& [domain, cluster] : spec.clustering.assignment) {
        const bool is_medoid =
            std::find(spec.clustering.medoids.begin(), spec.clustering.medoids.end(),
                      domain) != spec.clustering.medoids.end();
        Eigen::VectorXd dir = cluster_dirs[cluster];
        if (!is_medoid) {
            dir += spec.within_noise * randn(spec.input_dim, 1, rng).col(0);
            dir.normalize();
        }
        DomainDataset ds;
        ds.domain = domain;
        ds.inputs = randn(spec.samples_per_domain, spec.input_dim, rng);
        ds.inputs.col(0).array() += spec.domain_shift * static_cast<double>(cluster);
        Eigen::VectorXi y(static_cast<Eigen::Index>(spec.samples_per_domain));
        for (Eigen::Index i = 0; i < ds.inputs.rows(); ++i)
            y(i) = ds.inputs.row(i).dot(dir) >= 0.0 ? 1 : 0;
        ds.labels = y;
        ds.test_inputs = randn(spec.test_samples_per_domain, spec.input_dim, rng);
        ds.test_inputs.col(0).array() += spec.domain_shift * static_cast<double>(cluster);
        ds.test_labels.resize(static_cast<Eigen::Index>(spec.test_samples_per_domain));
        for (Eigen::Index i = 0; i < ds.test_inputs.rows(); ++i)
            ds.test_labels(i) = ds.test_inputs.row(i).dot(dir) >= 0.0 ? 1 : 0;
        out.push_back(std::move(ds));
    }
    return out;
}

void strip_labels(std::vector<DomainDataset>& datasets,
                  const std::set<LanguageId>& labeled) {
    for (auto& ds : datasets)
        if (!labeled.count(ds.domain)) ds.labels.reset();
}

Linear::Linear(std::size_t in, std::size_t out, std::mt19937_64& rng) {
    W = randn(out, in, rng) / std::sqrt(static_cast<double>(in));
    b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out));
    zero_grad();
}

Eigen::MatrixXd Linear::forward(const Eigen::MatrixXd& X) {
    in_cache = X;
    return (X * W.transpose()).rowwise() + b.transpose();
}

Eigen::MatrixXd Linear::backward(const Eigen::MatrixXd& gout) {
    gW += gout.transpose() * in_cache;
    gb += gout.colwise().sum().transpose();
    return gout * W;
}

void Linear::zero_grad() {
    gW = Eigen::MatrixXd::Zero(W.rows(), W.cols());
    gb = Eigen::VectorXd::Zero(b.size());
}

void Linear::step(double lr) {
    W -= lr * gW;
    b -= lr * gb;
}

Encoder::Encoder(std::size_t input_dim, std::size_t width, std::size_t depth,
                 std::mt19937_64& rng) {
    if (depth < 1) throw ValidationError("encoder depth must be >= 1");
    std::size_t in = input_dim;
    for (std::size_t l = 0; l < depth; ++l) {
        layers_.emplace_back(in, width, rng);
        in = width;
    }
}

Eigen::MatrixXd Encoder::forward(const Eigen::MatrixXd& X) {
    act_cache_.clear();
    Eigen::MatrixXd h = X;
    for (auto& layer : layers_) {
        h = layer.forward(h).array().tanh();
        act_cache_.push_back(h);
    }
    return h;
}

void Encoder::backward(const Eigen::MatrixXd& gout) {
    Eigen::MatrixXd g = gout;
    for (std::size_t l = layers_.size(); l-- > 0;) {
        // through tanh: dg = g * (1 - h^2)
        g = g.cwiseProduct(
            (1.0 - act_cache_[l].array().square()).matrix());
        g = layers_[l].backward(g);
    }
}

void Encoder::zero_grad() {
    for (auto& layer : layers_) layer.zero_grad();
}

void Encoder::step(double lr) {
    for (auto& layer : layers_) layer.step(lr);
}

Eigen::VectorXd Encoder::flat_params() const {
    std::vector<double> vals;
    for (const auto& layer : layers_) {
        vals.insert(vals.end(), layer.W.data(), layer.W.data() + layer.W.size());
        vals.insert(vals.end(), layer.b.data(), layer.b.data() + layer.b.size());
    }
    return Eigen::Map<const Eigen::VectorXd>(vals.data(),
                                             static_cast<Eigen::Index>(vals.size()));
}

void Encoder::set_flat_params(const Eigen::VectorXd& params) {
    Eigen::Index pos = 0;
    for (auto& layer : layers_) {
        std::copy(params.data() + pos, params.data() + pos + layer.W.size(),
                  layer.W.data());
        pos += layer.W.size();
        std::copy(params.data() + pos, params.data() + pos + layer.b.size(),
                  layer.b.data());
        pos += layer.b.size();
    }
}

Eigen::VectorXd Encoder::flat_grads() const {
    std::vector<double> vals;
    for (const auto& layer : layers_) {
        vals.insert(vals.end(), layer.gW.data(), layer.gW.data() + layer.gW.size());
        vals.insert(vals.end(), layer.gb.data(), layer.gb.data() + layer.gb.size());
    }
    return Eigen::Map<const Eigen::VectorXd>(vals.data(),
                                             static_cast<Eigen::Index>(vals.size()));
}

const char* to_string(TrainMode mode) {
    switch (mode) {
        case TrainMode::Erm: return "erm";
        case TrainMode::Dann: return "dann";
        case TrainMode::Grda: return "grda";
    }
    return "?";
}

TrainMode train_mode_from_string(const std::string& tag) {
    if (tag == "erm") return TrainMode::Erm;
    if (tag == "dann") return TrainMode::Dann;
    if (tag == "grda") return TrainMode::Grda;
    throw ValidationError("unknown train mode '" + tag + "'");
}

double grda_pair_loss(const Eigen::MatrixXd& embeddings,
                      const std::vector<std::size_t>& domain_of_row,
                      const Eigen::MatrixXd& adjacency,
                      Eigen::MatrixXd* grad_out) {
    const auto n = static_cast<std::size_t>(embeddings.rows());
    if (domain_of_row.size() != n)
        throw ValidationError("grda_pair_loss: row/domain size mismatch");
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(embeddings.rows(), embeddings.cols());
    double loss = 0.0;
    std::size_t pairs = 0;
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = p + 1; q < n; ++q)
            if (domain_of_row[p] != domain_of_row[q]) ++pairs;
    if (pairs == 0) {
        if (grad_out) *grad_out = grad;
        return 0.0;
    }
    const double scale = 1.0 / static_cast<double>(pairs);
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) {
            if (domain_of_row[p] == domain_of_row[q]) continue;
            const double s = embeddings.row(p).dot(embeddings.row(q));
            const double prob = sigmoid(s);
            const double target = adjacency(static_cast<Eigen::Index>(domain_of_row[p]),
                                            static_cast<Eigen::Index>(domain_of_row[q]));
            // numerically stable BCE with logits
            loss += scale * (std::max(s, 0.0) - s * target + std::log1p(std::exp(-std::abs(s))));
            const double ds = scale * (prob - target);
            grad.row(p) += ds * embeddings.row(q);
            grad.row(q) += ds * embeddings.row(p);
        }
    }
    if (grad_out) *grad_out = grad;
    return loss;
}

TrainResult train(const std::vector<DomainDataset>& datasets, const TrainConfig& config) {
    if (datasets.empty()) throw ValidationError("train: no datasets");
    const std::size_t n_domains = datasets.size();
    const auto input_dim = static_cast<std::size_t>(datasets.front().inputs.cols());
    std::size_t n_labeled = 0;
    for (const auto& ds : datasets)
        if (ds.labels) ++n_labeled;
    if (n_labeled == 0) throw ValidationError("train: no labeled source dataset");
    if (config.epochs < 1 || config.batch_size < 1)
        throw ValidationError("train: epochs and batch size must be positive");
    if (config.lambda_max < 0.0) throw ValidationError("train: lambda must be >= 0");

    // Graph adjacency over domains, grda only.
    Eigen::MatrixXd adjacency;
    if (config.mode == TrainMode::Grda) {
        if (!config.graph)
            throw ValidationError("train: grda mode requires a relation graph");
        const LanguageGraph& g = *config.graph;
        std::set<LanguageId> graph_nodes(g.nodes.begin(), g.nodes.end());
        std::set<LanguageId> domains;
        for (const auto& ds : datasets) domains.insert(ds.domain);
        if (graph_nodes != domains)
            throw ValidationError("train: graph node set must equal the domain set");
        adjacency.resize(static_cast<Eigen::Index>(n_domains),
                         static_cast<Eigen::Index>(n_domains));
        for (std::size_t i = 0; i < n_domains; ++i) {
            const std::size_t gi = std::distance(
                g.nodes.begin(),
                std::find(g.nodes.begin(), g.nodes.end(), datasets[i].domain));
            for (std::size_t j = 0; j < n_domains; ++j) {
                const std::size_t gj = std::distance(
                    g.nodes.begin(),
                    std::find(g.nodes.begin(), g.nodes.end(), datasets[j].domain));
                adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    g.edge(gi, gj) ? 1.0 : 0.0;
            }
        }
    }

    // Independent init streams per parameter block keep erm/dann/grda
    // trajectories comparable under identical seeds.
    auto rng_enc = sub_rng(config.seed, 1);
    auto rng_task = sub_rng(config.seed, 2);
    auto rng_disc = sub_rng(config.seed, 3);
    auto rng_shuffle = sub_rng(config.seed, 4);

    Encoder encoder(input_dim, config.width, config.depth, rng_enc);
    Linear task_head(config.width, 1, rng_task);
    Linear disc;
    if (config.mode == TrainMode::Dann)
        disc = Linear(config.width, n_domains, rng_disc);
    else if (config.mode == TrainMode::Grda)
        disc = Linear(config.width, config.node_embedding_dim, rng_disc);

    const std::size_t per_dom = std::max<std::size_t>(1, config.batch_size / n_domains);
    std::size_t steps = SIZE_MAX;
    for (const auto& ds : datasets)
        steps = std::min(steps, static_cast<std::size_t>(ds.inputs.rows()) / per_dom);
    steps = std::max<std::size_t>(1, steps);

    TrainResult result;
    result.mode = config.mode;
    result.seed = config.seed;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const double half = static_cast<double>(config.epochs) / 2.0;
        const double lambda =
            config.lambda_max * std::min(1.0, static_cast<double>(epoch) / half);

        // Per-domain shuffles drawn identically in every mode.
        std::vector<std::vector<std::size_t>> order(n_domains);
        for (std::size_t d = 0; d < n_domains; ++d) {
            order[d].resize(static_cast<std::size_t>(datasets[d].inputs.rows()));
            std::iota(order[d].begin(), order[d].end(), 0);
            std::shuffle(order[d].begin(), order[d].end(), rng_shuffle);
        }

        double epoch_task = 0.0, epoch_adv = 0.0;
        for (std::size_t step = 0; step < steps; ++step) {
            // Stratified batch: per_dom rows from every domain.
            const std::size_t batch_rows = per_dom * n_domains;
            Eigen::MatrixXd X(static_cast<Eigen::Index>(batch_rows),
                              static_cast<Eigen::Index>(input_dim));
            std::vector<std::size_t> dom_of_row(batch_rows);
            std::vector<double> labels(batch_rows, -1.0);  // -1 = unlabeled
            std::size_t row = 0;
            for (std::size_t d = 0; d < n_domains; ++d) {
                for (std::size_t i = 0; i < per_dom; ++i, ++row) {
                    const std::size_t src = order[d][step * per_dom + i];
                    X.row(static_cast<Eigen::Index>(row)) =
                        datasets[d].inputs.row(static_cast<Eigen::Index>(src));
                    dom_of_row[row] = d;
                    if (datasets[d].labels)
                        labels[row] = (*datasets[d].labels)(static_cast<Eigen::Index>(src));
                }
            }

            encoder.zero_grad();
            task_head.zero_grad();
            Eigen::MatrixXd H = encoder.forward(X);

            // Task loss on labeled rows.
            Eigen::MatrixXd logits = task_head.forward(H);
            std::size_t labeled_rows = 0;
            for (double y : labels)
                if (y >= 0.0) ++labeled_rows;
            Eigen::MatrixXd g_logits = Eigen::MatrixXd::Zero(logits.rows(), 1);
            double task_loss = 0.0;
            for (std::size_t r = 0; r < batch_rows; ++r) {
                if (labels[r] < 0.0) continue;
                const double z = logits(static_cast<Eigen::Index>(r), 0);
                const double y = labels[r];
                task_loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
                g_logits(static_cast<Eigen::Index>(r), 0) =
                    (sigmoid(z) - y) / static_cast<double>(labeled_rows);
            }
            task_loss /= static_cast<double>(labeled_rows);
            Eigen::MatrixXd gH = task_head.backward(g_logits);

            // Adversary: discriminator minimizes its loss; the encoder sees
            // the reversed gradient.
            double adv_loss = 0.0;
            if (config.mode != TrainMode::Erm) {
                disc.zero_grad();
                const Eigen::MatrixXd H_rev = grad_reverse_forward(H);
                Eigen::MatrixXd gH_adv;
                if (config.mode == TrainMode::Dann) {
                    Eigen::MatrixXd dlogits = disc.forward(H_rev);
                    Eigen::MatrixXd g_dlogits(dlogits.rows(), dlogits.cols());
                    for (std::size_t r = 0; r < batch_rows; ++r) {
                        Eigen::VectorXd rowv = dlogits.row(static_cast<Eigen::Index>(r));
                        const double m = rowv.maxCoeff();
                        Eigen::VectorXd ex = (rowv.array() - m).exp();
                        const double denom = ex.sum();
                        Eigen::VectorXd p = ex / denom;
                        const auto d = static_cast<Eigen::Index>(dom_of_row[r]);
                        adv_loss += -(std::log(p(d)));
                        p(d) -= 1.0;
                        g_dlogits.row(static_cast<Eigen::Index>(r)) =
                            p.transpose() / static_cast<double>(batch_rows);
                    }
                    adv_loss /= static_cast<double>(batch_rows);
                    gH_adv = disc.backward(g_dlogits);
                } else {
                    Eigen::MatrixXd Z = disc.forward(H_rev);
                    Eigen::MatrixXd gZ;
                    adv_loss = grda_pair_loss(Z, dom_of_row, adjacency, &gZ);
                    gH_adv = disc.backward(gZ);
                }
                if (lambda != 0.0) gH += grad_reverse_backward(lambda, gH_adv);
                disc.step(config.learning_rate);
            }

            encoder.backward(gH);
            encoder.step(config.learning_rate);
            task_head.step(config.learning_rate);

            if (!std::isfinite(task_loss) || !std::isfinite(adv_loss))
                throw ComputeError("train: non-finite loss at epoch " +
                                   std::to_string(epoch));
            epoch_task += task_loss;
            epoch_adv += adv_loss;
        }
        result.task_curve.push_back(epoch_task / static_cast<double>(steps));
        result.adv_curve.push_back(epoch_adv / static_cast<double>(steps));
    }

    // Held-out evaluation per domain.
    for (const auto& ds : datasets) {
        Eigen::MatrixXd H = encoder.forward(ds.test_inputs);
        Eigen::MatrixXd logits = task_head.forward(H);
        std::size_t correct = 0;
        for (Eigen::Index i = 0; i < logits.rows(); ++i) {
            const int pred = logits(i, 0) >= 0.0 ? 1 : 0;
            if (pred == ds.test_labels(i)) ++correct;
        }
        result.accuracy[ds.domain] =
            static_cast<double>(correct) / static_cast<double>(logits.rows());
    }
    return result;
}

DeltaReport evaluate_transfer(const std::string& task,
                              const std::vector<SimOutcome>& outcomes) {
    DeltaReport report;
    report.task = task;
    std::map<std::pair<std::string, ModelScale>, std::pair<double, std::size_t>> erm;
    for (const auto& o : outcomes)
        if (o.mode == TrainMode::Erm) {
            auto& [sum, count] = erm[{o.label, o.scale}];
            sum += o.f1;
            ++count;
        }
    std::map<std::string, std::map<ModelScale, std::pair<double, std::size_t>>> sums;
    for (const auto& o : outcomes) {
        if (o.mode == TrainMode::Erm) continue;
        const std::string key = o.label + "/" + to_string(o.mode);
        if (std::find(report.labels.begin(), report.labels.end(), key) ==
            report.labels.end())
            report.labels.push_back(key);
        auto& [sum, count] = sums[key][o.scale];
        sum += o.f1;
        ++count;
        if (!erm.count({o.label, o.scale}))
            throw ValidationError("evaluate_transfer: missing erm baseline for " +
                                  o.label + " at scale " + to_string(o.scale));
    }
    for (const auto& [key, by_scale] : sums) {
        const std::string label = key.substr(0, key.find('/'));
        for (const auto& [scale, acc] : by_scale) {
            const auto& base = erm.at({label, scale});
            report.deltas[key][scale] =
                acc.first / static_cast<double>(acc.second) -
                base.first / static_cast<double>(base.second);
        }
    }
    return report;
}

std::string train_result_to_json(const TrainResult& r) {
    nlohmann::json j;
    j["mode"] = to_string(r.mode);
    j["seed"] = r.seed;
    nlohmann::json acc = nlohmann::json::object();
    for (const auto& [domain, a] : r.accuracy) acc[domain.code] = a;
    j["accuracy"] = acc;
    j["task_curve"] = r.task_curve;
    j["adv_curve"] = r.adv_curve;
    return j.dump(2);
}

std::string curves_to_csv(const TrainResult& r) {
    std::ostringstream out;
    out << "epoch,task_loss,adv_loss\n";
    out.precision(17);
    for (std::size_t e = 0; e < r.task_curve.size(); ++e)
        out << e << ',' << r.task_curve[e] << ',' << r.adv_curve[e] << "\n";
    return out.str();
}

SyntheticTaskSpec task_spec_from_json(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    SyntheticTaskSpec spec;
    if (j.contains("clustering")) {
        spec.clustering = clustering_from_json(j.at("clustering").dump());
    } else {
        spec.clustering = make_domain_clustering(j.at("n_domains").get<std::size_t>(),
                                                 j.at("n_clusters").get<std::size_t>());
    }
    spec.input_dim = j.value("input_dim", spec.input_dim);
    spec.samples_per_domain = j.value("samples_per_domain", spec.samples_per_domain);
    spec.test_samples_per_domain =
        j.value("test_samples_per_domain", spec.test_samples_per_domain);
    spec.cluster_rotation = j.value("cluster_rotation", spec.cluster_rotation);
    spec.within_noise = j.value("within_noise", spec.within_noise);
    spec.domain_shift = j.value("domain_shift", spec.domain_shift);
    spec.seed = j.value("seed", spec.seed);
    spec.validate();
    return spec;
}

TrainConfig train_config_from_json(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    TrainConfig config;
    config.width = j.value("width", config.width);
    config.depth = j.value("depth", config.depth);
    config.node_embedding_dim = j.value("node_embedding_dim", config.node_embedding_dim);
    config.lambda_max = j.value("lambda_max", config.lambda_max);
    config.learning_rate = j.value("learning_rate", config.learning_rate);
    config.epochs = j.value("epochs", config.epochs);
    config.batch_size = j.value("batch_size", config.batch_size);
    config.seed = j.value("seed", config.seed);
    if (j.contains("mode"))
        config.mode = train_mode_from_string(j.at("mode").get<std::string>());
    return config;
}

}  // namespace xling

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xling/selection.hpp"

namespace xling {

// Synthetic multi-domain binary classification scenario. Each cluster owns a
// unit label direction; successive clusters are separated by
// cluster_rotation, member domains are perturbed copies of their medoid's
// direction, and labels are the sign of direction . input.
struct SyntheticTaskSpec {
    Clustering clustering;  // over synthetic domain ids
    std::size_t input_dim = 8;
    std::size_t samples_per_domain = 400;
    std::size_t test_samples_per_domain = 200;
    double cluster_rotation = 0.0;  // radians, [0, pi/2]
    double within_noise = 0.0;
    // Translation of cluster c's input clouds by c * domain_shift along the
    // first axis. Zero keeps all domain marginals identical (domain identity
    // is then invisible to any discriminator); positive values make cluster
    // membership recoverable from the inputs and skew label prevalence per
    // cluster, the regime adversarial alignment targets.
    double domain_shift = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct DomainDataset {
    LanguageId domain;
    Eigen::MatrixXd inputs;                     // training rows
    std::optional<Eigen::VectorXi> labels;      // absent = unlabeled domain
    Eigen::MatrixXd test_inputs;                // held-out evaluation split
    Eigen::VectorXi test_labels;
};

std::vector<DomainDataset> gen_synthetic(const SyntheticTaskSpec& spec);

// Drops training labels for every domain not in `labeled`; test labels stay.
void strip_labels(std::vector<DomainDataset>& datasets,
                  const std::set<LanguageId>& labeled);

// Clustering over synthetic domain ids daa, dab, ...; contiguous blocks,
// first domain of each block is the medoid.
Clustering make_domain_clustering(std::size_t n_domains, std::size_t n_clusters);

// Gradient reversal contract: forward is the identity, backward scales the
// incoming gradient by -lambda.
inline Eigen::MatrixXd grad_reverse_forward(const Eigen::MatrixXd& v) { return v; }
inline Eigen::MatrixXd grad_reverse_backward(double lambda, const Eigen::MatrixXd& g) {
    return (-lambda) * g;
}

// Fully connected layer with cached input for backprop.
struct Linear {
    Eigen::MatrixXd W;  // out x in
    Eigen::VectorXd b;
    Eigen::MatrixXd gW;
    Eigen::VectorXd gb;
    Eigen::MatrixXd in_cache;

    Linear() = default;
    Linear(std::size_t in, std::size_t out, std::mt19937_64& rng);
    Eigen::MatrixXd forward(const Eigen::MatrixXd& X);
    Eigen::MatrixXd backward(const Eigen::MatrixXd& gout);
    void zero_grad();
    void step(double lr);
};

// Encoder: `depth` Linear layers, tanh after each.
class Encoder {
public:
    Encoder() = default;
    Encoder(std::size_t input_dim, std::size_t width, std::size_t depth,
            std::mt19937_64& rng);

    Eigen::MatrixXd forward(const Eigen::MatrixXd& X);
    void backward(const Eigen::MatrixXd& gout);  // accumulates layer grads
    void zero_grad();
    void step(double lr);

    Eigen::VectorXd flat_params() const;
    void set_flat_params(const Eigen::VectorXd& params);
    Eigen::VectorXd flat_grads() const;

private:
    std::vector<Linear> layers_;
    std::vector<Eigen::MatrixXd> act_cache_;
};

enum class TrainMode { Erm, Dann, Grda };

const char* to_string(TrainMode mode);
TrainMode train_mode_from_string(const std::string& tag);

struct TrainConfig {
    std::size_t width = 16;
    std::size_t depth = 1;
    std::size_t node_embedding_dim = 4;
    double lambda_max = 1.0;   // linear ramp 0 -> lambda_max over first half
    double learning_rate = 0.05;
    std::size_t epochs = 40;
    std::size_t batch_size = 128;  // total per step, stratified across domains
    std::uint64_t seed = 0;
    TrainMode mode = TrainMode::Erm;
    std::optional<LanguageGraph> graph;  // required for grda
};

struct TrainResult {
    TrainMode mode = TrainMode::Erm;
    std::uint64_t seed = 0;
    std::map<LanguageId, double> accuracy;  // per-domain test accuracy in [0,1]
    std::vector<double> task_curve;         // per-epoch mean task loss
    std::vector<double> adv_curve;          // per-epoch mean adversarial loss
};

TrainResult train(const std::vector<DomainDataset>& datasets, const TrainConfig& config);

// Mean binary cross-entropy of sigmoid(z_i . z_j) against the adjacency
// entry of the two rows' domains, over all cross-domain pairs. Exposed so an
// independent pair-enumeration oracle can check the training-path value.
double grda_pair_loss(const Eigen::MatrixXd& embeddings,
                      const std::vector<std::size_t>& domain_of_row,
                      const Eigen::MatrixXd& adjacency,
                      Eigen::MatrixXd* grad_out = nullptr);

struct SimOutcome {
    std::string label;  // configuration label, e.g. "medoids*"
    TrainMode mode = TrainMode::Erm;
    ModelScale scale = ModelScale::Base;
    double f1 = 0.0;  // mean target-cluster score, percentage scale
};

// Per (label, scale, adversarial mode): mean score minus the matching erm
// mean. Labels in the output read "<label>/<mode>".
DeltaReport evaluate_transfer(const std::string& task,
                              const std::vector<SimOutcome>& outcomes);

std::string train_result_to_json(const TrainResult& r);
std::string curves_to_csv(const TrainResult& r);
SyntheticTaskSpec task_spec_from_json(const std::string& json_text);
TrainConfig train_config_from_json(const std::string& json_text);

}  // namespace xling

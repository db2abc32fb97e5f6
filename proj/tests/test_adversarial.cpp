#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "xling/adversarial.hpp"

using namespace xling;

namespace {

SyntheticTaskSpec basic_spec(std::size_t n_domains, std::size_t n_clusters,
                             double rotation, double noise, std::uint64_t seed) {
    SyntheticTaskSpec spec;
    spec.clustering = make_domain_clustering(n_domains, n_clusters);
    spec.input_dim = 6;
    spec.samples_per_domain = 300;
    spec.test_samples_per_domain = 200;
    spec.cluster_rotation = rotation;
    spec.within_noise = noise;
    spec.seed = seed;
    return spec;
}

std::set<LanguageId> cluster_domains(const Clustering& c, std::size_t cluster) {
    std::set<LanguageId> out;
    for (const auto& [lang, ci] : c.assignment)
        if (ci == cluster) out.insert(lang);
    return out;
}

}  // namespace

TEST_CASE("domain clustering helper") {
    auto c = make_domain_clustering(5, 2);
    CHECK(c.k == 2);
    CHECK(c.assignment.size() == 5);
    CHECK(c.medoids.size() == 2);
    for (std::size_t ci = 0; ci < c.medoids.size(); ++ci)
        CHECK(c.assignment.at(c.medoids[ci]) == ci);
}

TEST_CASE("gen_synthetic shape contract") {
    auto spec = basic_spec(5, 2, 0.3, 0.1, 7);
    spec.samples_per_domain = 400;
    auto data = gen_synthetic(spec);
    REQUIRE(data.size() == 5);
    for (const auto& ds : data) {
        CHECK(ds.inputs.rows() == 400);
        CHECK(ds.inputs.cols() == 6);
        REQUIRE(ds.labels.has_value());
        CHECK(ds.labels->size() == 400);
        CHECK(ds.test_inputs.rows() == 200);
    }
    // determinism
    auto again = gen_synthetic(spec);
    CHECK(data[0].inputs == again[0].inputs);
    CHECK(*data[0].labels == *again[0].labels);
}

TEST_CASE("homogeneous limit: one shared label function") {
    // rotation 0, noise 0: a model trained on any one domain scores equally
    // (within 2%) on every other domain
    auto spec = basic_spec(4, 2, 0.0, 0.0, 3);
    auto data = gen_synthetic(spec);
    strip_labels(data, {data[0].domain});
    TrainConfig config;
    config.epochs = 60;
    config.seed = 5;
    auto result = train(data, config);
    const double ref = result.accuracy.at(data[0].domain);
    for (const auto& ds : data)
        CHECK(result.accuracy.at(ds.domain) == doctest::Approx(ref).epsilon(0.02));
}

TEST_CASE("orthogonal clusters: cross-cluster transfer is chance level") {
    // rotation pi/2, 2 clusters: probe fit on cluster 0 sits near 50% on
    // cluster 1, averaged over seeds
    double sum = 0.0;
    std::size_t count = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto spec = basic_spec(4, 2, M_PI / 2.0, 0.0, 100 + seed);
        auto data = gen_synthetic(spec);
        strip_labels(data, cluster_domains(spec.clustering, 0));
        TrainConfig config;
        config.epochs = 40;
        config.seed = seed;
        auto result = train(data, config);
        for (const auto& domain : cluster_domains(spec.clustering, 1)) {
            sum += result.accuracy.at(domain);
            ++count;
        }
    }
    CHECK(sum / static_cast<double>(count) == doctest::Approx(0.5).epsilon(0.06));
}

TEST_CASE("grad reverse contract") {
    Eigen::MatrixXd v = Eigen::MatrixXd::Random(3, 4);
    CHECK(grad_reverse_forward(v) == v);
    Eigen::MatrixXd g = Eigen::MatrixXd::Random(3, 4);
    Eigen::MatrixXd r = grad_reverse_backward(1.0, g);
    CHECK(r == (-g).eval());
}

TEST_CASE("end-to-end reversed gradients match finite differences") {
    // loss = mean BCE of head(grad_reverse(enc(x))) against fixed targets;
    // backprop through the reversal must equal -lambda times the plain
    // gradient, checked against central differences
    std::mt19937_64 rng(17);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 init(seed * 7919 + 13);
        const std::size_t in_dim = 3, width = 4, rows = 6;
        Encoder enc(in_dim, width, 2, init);
        Linear head(width, 1, init);
        const double lambda = 0.25 + 0.5 * (seed % 3);

        Eigen::MatrixXd X(rows, in_dim);
        Eigen::VectorXd y(rows);
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = normal(rng);
            y(i) = (i % 2 == 0) ? 1.0 : 0.0;
        }

        auto loss_of = [&](Encoder& e) {
            Eigen::MatrixXd H = grad_reverse_forward(e.forward(X));
            Eigen::MatrixXd z = head.forward(H);
            double loss = 0.0;
            for (Eigen::Index i = 0; i < z.rows(); ++i) {
                const double zi = z(i, 0);
                loss += std::max(zi, 0.0) - zi * y(i) + std::log1p(std::exp(-std::abs(zi)));
            }
            return loss / static_cast<double>(rows);
        };

        // analytic gradient through the reversal
        enc.zero_grad();
        Eigen::MatrixXd H = grad_reverse_forward(enc.forward(X));
        Eigen::MatrixXd z = head.forward(H);
        Eigen::MatrixXd gz(z.rows(), 1);
        for (Eigen::Index i = 0; i < z.rows(); ++i)
            gz(i, 0) = (1.0 / (1.0 + std::exp(-z(i, 0))) - y(i)) / static_cast<double>(rows);
        head.zero_grad();
        Eigen::MatrixXd gH = head.backward(gz);
        enc.backward(grad_reverse_backward(lambda, gH));
        Eigen::VectorXd analytic = enc.flat_grads();

        // central finite differences of the unreversed loss, scaled by -lambda
        const double eps = 1e-6;
        Eigen::VectorXd params = enc.flat_params();
        for (Eigen::Index p = 0; p < params.size(); p += std::max<Eigen::Index>(1, params.size() / 11)) {
            Eigen::VectorXd bumped = params;
            bumped(p) += eps;
            enc.set_flat_params(bumped);
            const double up = loss_of(enc);
            bumped(p) -= 2 * eps;
            enc.set_flat_params(bumped);
            const double down = loss_of(enc);
            enc.set_flat_params(params);
            const double fd = -lambda * (up - down) / (2 * eps);
            const double tol = 1e-4 * std::max(1.0, std::abs(fd));
            CHECK(std::abs(analytic(p) - fd) <= tol);
        }
    }
}

TEST_CASE("lambda zero: dann and grda task curves bit-identical to erm") {
    auto spec = basic_spec(4, 2, 1.0, 0.1, 9);
    spec.samples_per_domain = 120;
    auto data = gen_synthetic(spec);
    strip_labels(data, cluster_domains(spec.clustering, 0));

    TrainConfig erm_config;
    erm_config.epochs = 10;
    erm_config.seed = 21;
    erm_config.mode = TrainMode::Erm;
    auto erm = train(data, erm_config);

    TrainConfig dann_config = erm_config;
    dann_config.mode = TrainMode::Dann;
    dann_config.lambda_max = 0.0;
    auto dann = train(data, dann_config);
    CHECK(erm.task_curve == dann.task_curve);
    CHECK(erm.accuracy == dann.accuracy);

    TrainConfig grda_config = erm_config;
    grda_config.mode = TrainMode::Grda;
    grda_config.lambda_max = 0.0;
    grda_config.graph = build_relation_graph(spec.clustering);
    auto grda = train(data, grda_config);
    CHECK(erm.task_curve == grda.task_curve);
    CHECK(erm.accuracy == grda.accuracy);
}

TEST_CASE("erm task loss non-increasing on homogeneous scenario") {
    auto spec = basic_spec(3, 1, 0.0, 0.0, 2);
    auto data = gen_synthetic(spec);
    TrainConfig config;
    config.epochs = 30;
    config.batch_size = 900;  // full batch smooths the curve
    config.seed = 4;
    auto result = train(data, config);
    for (std::size_t e = 1; e < result.task_curve.size(); ++e)
        CHECK(result.task_curve[e] <= result.task_curve[e - 1] + 1e-12);
}

TEST_CASE("grda pair loss matches the pair-enumeration oracle") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t rows = 12, emb = 3, n_dom = 3;
    Eigen::MatrixXd Z(rows, emb);
    for (Eigen::Index i = 0; i < Z.rows(); ++i)
        for (Eigen::Index j = 0; j < Z.cols(); ++j) Z(i, j) = normal(rng);
    std::vector<std::size_t> dom(rows);
    for (std::size_t i = 0; i < rows; ++i) dom[i] = i % n_dom;

    SUBCASE("complete graph: all targets 1") {
        Eigen::MatrixXd A = Eigen::MatrixXd::Ones(n_dom, n_dom);
        const double got = grda_pair_loss(Z, dom, A, nullptr);
        // independent oracle: enumerate pairs, plain BCE on sigmoid
        double want = 0.0;
        std::size_t pairs = 0;
        for (std::size_t p = 0; p < rows; ++p)
            for (std::size_t q = p + 1; q < rows; ++q) {
                if (dom[p] == dom[q]) continue;
                const double s = Z.row(p).dot(Z.row(q));
                const double prob = 1.0 / (1.0 + std::exp(-s));
                want += -std::log(prob);  // target 1
                ++pairs;
            }
        want /= static_cast<double>(pairs);
        CHECK(got == doctest::Approx(want).epsilon(1e-6));
    }

    SUBCASE("mixed adjacency with gradient check") {
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n_dom, n_dom);
        A(0, 1) = A(1, 0) = 1.0;
        Eigen::MatrixXd grad;
        const double base = grda_pair_loss(Z, dom, A, &grad);
        // finite differences on a few embedding entries
        const double eps = 1e-6;
        for (Eigen::Index i = 0; i < 4; ++i) {
            Eigen::MatrixXd Zp = Z, Zm = Z;
            Zp(i, 0) += eps;
            Zm(i, 0) -= eps;
            const double fd =
                (grda_pair_loss(Zp, dom, A, nullptr) - grda_pair_loss(Zm, dom, A, nullptr)) /
                (2 * eps);
            CHECK(grad(i, 0) == doctest::Approx(fd).epsilon(1e-4));
        }
        CHECK(base > 0.0);
    }
}

TEST_CASE("train validation errors") {
    auto spec = basic_spec(3, 1, 0.0, 0.0, 1);
    spec.samples_per_domain = 50;
    auto data = gen_synthetic(spec);
    strip_labels(data, {});
    TrainConfig config;
    CHECK_THROWS_AS(train(data, config), ValidationError);  // no labeled source

    auto labeled = gen_synthetic(spec);
    TrainConfig grda_config;
    grda_config.mode = TrainMode::Grda;
    CHECK_THROWS_AS(train(labeled, grda_config), ValidationError);  // missing graph
    grda_config.graph = build_relation_graph(make_domain_clustering(4, 2));
    CHECK_THROWS_AS(train(labeled, grda_config), ValidationError);  // node set mismatch
}

TEST_CASE("evaluate_transfer") {
    std::vector<SimOutcome> outcomes{
        {"medoids*", TrainMode::Erm, ModelScale::Base, 70.0},
        {"medoids*", TrainMode::Dann, ModelScale::Base, 66.5},
        {"medoids*", TrainMode::Grda, ModelScale::Base, 72.0},
    };
    auto report = evaluate_transfer("toy", outcomes);
    CHECK(report.deltas.at("medoids*/dann").at(ModelScale::Base) == doctest::Approx(-3.5));
    CHECK(report.deltas.at("medoids*/grda").at(ModelScale::Base) == doctest::Approx(2.0));

    std::vector<SimOutcome> self_only{
        {"medoids*", TrainMode::Erm, ModelScale::Base, 70.0},
        {"medoids*", TrainMode::Erm, ModelScale::Base, 71.0}};
    auto zero = evaluate_transfer("toy", self_only);
    CHECK(zero.deltas.empty());  // erm against itself produces no delta rows

    std::vector<SimOutcome> no_base{{"x*", TrainMode::Dann, ModelScale::Base, 60.0}};
    CHECK_THROWS_AS(evaluate_transfer("toy", no_base), ValidationError);
}

TEST_CASE("domain_shift translates each cluster along the first axis") {
    SyntheticTaskSpec spec;
    spec.clustering = make_domain_clustering(4, 2);
    spec.input_dim = 4;
    spec.samples_per_domain = 2000;
    spec.test_samples_per_domain = 100;
    spec.domain_shift = 3.0;
    spec.seed = 17;
    auto data = gen_synthetic(spec);
    for (const auto& ds : data) {
        const std::size_t cluster = spec.clustering.assignment.at(ds.domain);
        const double expected = spec.domain_shift * static_cast<double>(cluster);
        CHECK(ds.inputs.col(0).mean() == doctest::Approx(expected).epsilon(0.1));
        for (Eigen::Index c = 1; c < ds.inputs.cols(); ++c)
            CHECK(std::abs(ds.inputs.col(c).mean()) < 0.1);
        // shifted clusters have skewed label prevalence; unshifted stay balanced
        const double prevalence = ds.labels->cast<double>().mean();
        if (cluster == 0)
            CHECK(prevalence == doctest::Approx(0.5).epsilon(0.1));
        else
            CHECK(prevalence > 0.8);
    }
    CHECK_THROWS_AS(
        [] {
            SyntheticTaskSpec bad;
            bad.clustering = make_domain_clustering(4, 2);
            bad.domain_shift = -1.0;
            bad.validate();
        }(),
        ValidationError);
}

TEST_CASE("spec and config json parsing") {
    auto spec = task_spec_from_json(R"({
        "n_domains": 6, "n_clusters": 2, "input_dim": 4,
        "samples_per_domain": 50, "cluster_rotation": 0.5,
        "within_noise": 0.05, "domain_shift": 1.5, "seed": 3})");
    CHECK(spec.clustering.k == 2);
    CHECK(spec.input_dim == 4);
    CHECK(spec.domain_shift == 1.5);

    auto config = train_config_from_json(R"({
        "mode": "dann", "epochs": 5, "lambda_max": 0.7, "seed": 11})");
    CHECK(config.mode == TrainMode::Dann);
    CHECK(config.epochs == 5);
    CHECK(config.lambda_max == 0.7);

    CHECK_THROWS_AS(task_spec_from_json(R"({"n_domains": 4, "n_clusters": 2,
        "cluster_rotation": 9.0})"),
                    ValidationError);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pkgenex/rng.hpp"
#include "pkgenex/train_eval.hpp"

using namespace pkgenex;
using namespace pkgenex::train_eval;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
}

predictor::PkLinearHead head_for(Eigen::Index n_genes, Eigen::Index d,
                                 double lambda, std::uint64_t seed) {
    auto head = random_baseline(n_genes, d, Matrix::Zero(n_genes, d), lambda, seed);
    head.clamp_output = false;
    return head;
}

// Linearly related data: y = W A_true^T + noise.
struct Task {
    Matrix w_train, y_train, w_val, y_val;
};

Task linear_task(Eigen::Index n_train, Eigen::Index n_val, Eigen::Index n_genes,
                 Eigen::Index d, double noise, std::uint64_t seed) {
    Rng rng(seed);
    const Matrix a_true = random_matrix(n_genes, d, seed + 1);
    Task t;
    t.w_train = random_matrix(n_train, d, seed + 2);
    t.w_val = random_matrix(n_val, d, seed + 3);
    t.y_train = t.w_train * a_true.transpose();
    t.y_val = t.w_val * a_true.transpose();
    for (Eigen::Index i = 0; i < n_train; ++i)
        for (Eigen::Index j = 0; j < n_genes; ++j)
            t.y_train(i, j) += noise * rng.normal();
    for (Eigen::Index i = 0; i < n_val; ++i)
        for (Eigen::Index j = 0; j < n_genes; ++j)
            t.y_val(i, j) += noise * rng.normal();
    return t;
}

}  // namespace

TEST_CASE("bh_adjust hand example") {
    Vector p(4);
    p << 0.01, 0.02, 0.03, 0.04;
    const Vector q = bh_adjust(p);
    for (int i = 0; i < 4; ++i) CHECK(q[i] == doctest::Approx(0.04).epsilon(1e-12));
}

TEST_CASE("bh_adjust single value is the identity") {
    Vector p(1);
    p << 0.123;
    CHECK(bh_adjust(p)[0] == 0.123);
}

TEST_CASE("bh_adjust equals the quadratic definition oracle") {
    // q_i = min over j with p_j >= p_i of (m * p_j / rank_j), clipped at 1.
    Rng rng(71);
    for (int trial = 0; trial < 20; ++trial) {
        const int m = 3 + static_cast<int>(rng.below(60));
        Vector p(m);
        for (int i = 0; i < m; ++i) p[i] = rng.uniform();
        const Vector q = bh_adjust(p);

        std::vector<int> order(m);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return p[a] < p[b]; });
        std::vector<int> rank(m);
        for (int k = 0; k < m; ++k) rank[order[k]] = k + 1;
        for (int i = 0; i < m; ++i) {
            double best = 1.0;
            for (int j = 0; j < m; ++j)
                if (rank[j] >= rank[i])
                    best = std::min(best, m * p[j] / rank[j]);
            CHECK(std::abs(q[i] - best) < 1e-15);
        }
    }
}

TEST_CASE("bh_adjust is monotone in p") {
    Rng rng(72);
    Vector p(50);
    for (int i = 0; i < 50; ++i) p[i] = rng.uniform();
    const Vector q = bh_adjust(p);
    for (int i = 0; i < 50; ++i)
        for (int j = 0; j < 50; ++j)
            if (p[i] <= p[j]) CHECK(q[i] <= q[j] + 1e-15);
}

TEST_CASE("per_gene_pearson exact and degenerate columns") {
    Matrix pred(4, 2), truth(4, 2);
    pred.col(0) << 1, 2, 3, 4;
    truth.col(0) << 2, 4, 6, 8;  // r = 1
    pred.col(1) << 5, 5, 5, 5;   // constant prediction
    truth.col(1) << 1, 2, 3, 4;
    const auto res = per_gene_pearson(pred, truth);
    CHECK(res.r[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(res.p[0] < 1e-6);
    CHECK(res.r[1] == 0.0);
    CHECK(res.p[1] == 1.0);
    CHECK(res.degenerate[1]);
    CHECK(!res.degenerate[0]);
}

TEST_CASE("per_gene_pearson p-value matches a permutation oracle within x3") {
    // One moderately correlated column; the permutation null at ~100k draws
    // should bracket the parametric p within a factor of 3.
    Rng rng(81);
    const int n = 40;
    Matrix pred(n, 1), truth(n, 1);
    for (int i = 0; i < n; ++i) {
        pred(i, 0) = rng.normal();
        truth(i, 0) = 0.45 * pred(i, 0) + rng.normal();
    }
    const auto res = per_gene_pearson(pred, truth);
    REQUIRE(!res.degenerate[0]);
    const double r_obs = std::abs(res.r[0]);

    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    int hits = 0;
    const int n_perm = 100000;
    Matrix shuffled = pred;
    for (int t = 0; t < n_perm; ++t) {
        rng.shuffle(idx);
        for (int i = 0; i < n; ++i) shuffled(i, 0) = pred(idx[i], 0);
        const auto pr = per_gene_pearson(shuffled, truth);
        if (std::abs(pr.r[0]) >= r_obs) ++hits;
    }
    const double p_perm = (hits + 1.0) / (n_perm + 1.0);
    CHECK(res.p[0] > p_perm / 3.0);
    CHECK(res.p[0] < p_perm * 3.0);
}

TEST_CASE("significant_genes decision table") {
    std::vector<std::string> genes{"a", "b", "c", "d"};
    PearsonResult pr;
    pr.r.resize(4);
    pr.p.resize(4);
    pr.r << 0.9, -0.9, 0.9, 0.9;
    pr.p << 1e-6, 1e-6, 1e-6, 1e-6;
    pr.degenerate = {false, false, false, true};
    Vector baseline(4);
    baseline << 0.1, 0.1, 0.95, 0.1;  // gene c loses to the baseline
    const auto rep = significant_genes(genes, pr, baseline, 0.05, 0.5);
    CHECK(rep.n_significant == 1);
    CHECK(rep.significant == std::vector<bool>{true, false, false, false});
    CHECK(rep.lambda_used == 0.5);
    CHECK(rep.per_gene_q.size() == 4);
}

TEST_CASE("random_baseline calibration: few significant genes on pure noise") {
    const int n_genes = 400, d = 8, n = 60;
    int total_sig = 0;
    for (int trial = 0; trial < 3; ++trial) {
        const Matrix w = random_matrix(n, d, 900 + trial);
        const Matrix y = random_matrix(n, n_genes, 950 + trial).array() + 5.0;
        auto head = head_for(n_genes, d, 0.0, 1000 + trial);
        std::vector<std::string> genes;
        for (int i = 0; i < n_genes; ++i) genes.push_back("g" + std::to_string(i));
        const auto rep = evaluate_head(head, w, y, genes, 0.05, 42 + trial);
        total_sig += rep.n_significant;
    }
    // Over 1200 gene tests on noise, BH at alpha=0.05 keeps this tiny.
    CHECK(total_sig <= 0.05 * 3 * n_genes);
}

TEST_CASE("train_model overfits a clean linear task") {
    const auto t = linear_task(120, 30, 15, 6, 0.01, 500);
    auto head = head_for(15, 6, 0.0, 501);
    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.max_epochs = 150;
    cfg.patience = 149;
    cfg.seed = 7;
    const double initial = predictor::mse(
        predictor::pk_forward_batch(head, t.w_train), t.y_train);
    const auto hist = train_model(head, t.w_train, t.y_train, t.w_val, t.y_val, cfg);
    const double final_mse = predictor::mse(
        predictor::pk_forward_batch(head, t.w_train), t.y_train);
    CHECK(final_mse < 0.1 * initial);
    CHECK(hist.best_val_pearson > 0.9);
    CHECK(!hist.epochs.empty());
}

TEST_CASE("sgd also reduces the training loss") {
    const auto t = linear_task(100, 20, 10, 5, 0.01, 510);
    auto head = head_for(10, 5, 0.0, 511);
    TrainConfig cfg;
    cfg.optimizer = Optimizer::sgd;
    cfg.learning_rate = 0.5;
    cfg.max_epochs = 100;
    cfg.patience = 99;
    const double initial = predictor::mse(
        predictor::pk_forward_batch(head, t.w_train), t.y_train);
    train_model(head, t.w_train, t.y_train, t.w_val, t.y_val, cfg);
    CHECK(predictor::mse(predictor::pk_forward_batch(head, t.w_train), t.y_train) <
          0.5 * initial);
}

TEST_CASE("early stopping fires on an unlearnable validation set") {
    // Validation targets are pure noise, so val Pearson cannot improve for
    // long; patience must end training before max_epochs.
    auto t = linear_task(80, 40, 8, 4, 0.01, 520);
    t.y_val = random_matrix(40, 8, 521);
    auto head = head_for(8, 4, 0.0, 522);
    TrainConfig cfg;
    cfg.max_epochs = 200;
    cfg.patience = 5;
    const auto hist = train_model(head, t.w_train, t.y_train, t.w_val, t.y_val, cfg);
    CHECK(hist.stopped_early);
    CHECK(static_cast<int>(hist.epochs.size()) < cfg.max_epochs);
    CHECK(hist.best_epoch <= static_cast<int>(hist.epochs.size()) - 1);
}

TEST_CASE("train_model restores the best snapshot") {
    const auto t = linear_task(100, 30, 10, 5, 0.05, 530);
    auto head = head_for(10, 5, 0.0, 531);
    TrainConfig cfg;
    cfg.max_epochs = 80;
    cfg.patience = 79;
    const auto hist = train_model(head, t.w_train, t.y_train, t.w_val, t.y_val, cfg);
    const auto pr = per_gene_pearson(predictor::pk_forward_batch(head, t.w_val),
                                     t.y_val);
    CHECK(pr.r.mean() == doctest::Approx(hist.best_val_pearson).epsilon(1e-9));
}

TEST_CASE("train_model is bitwise deterministic") {
    const auto t = linear_task(60, 20, 6, 3, 0.1, 540);
    TrainConfig cfg;
    cfg.max_epochs = 30;
    cfg.seed = 13;
    auto h1 = head_for(6, 3, 0.0, 541);
    auto h2 = h1;
    train_model(h1, t.w_train, t.y_train, t.w_val, t.y_val, cfg);
    train_model(h2, t.w_train, t.y_train, t.w_val, t.y_val, cfg);
    CHECK(h1.A == h2.A);
    CHECK(h1.b == h2.b);
}

TEST_CASE("train config validation") {
    TrainConfig cfg;
    cfg.patience = cfg.max_epochs + 1;
    CHECK_THROWS(cfg.validate());
    cfg = {};
    cfg.learning_rate = 0.0;
    CHECK_THROWS(cfg.validate());
    cfg = {};
    cfg.batch_size = 0;
    CHECK_THROWS(cfg.validate());
}

TEST_CASE("lambda_sweep puts 0 first and selects a valid index") {
    const int n_genes = 12, d = 4;
    FoldData fold;
    const auto t = linear_task(80, 20, n_genes, d, 0.2, 560);
    fold.w_train = t.w_train;
    fold.y_train = t.y_train.array() + 6.0;
    fold.w_val = t.w_val;
    fold.y_val = t.y_val.array() + 6.0;
    fold.w_test = random_matrix(25, d, 561);
    fold.y_test = (fold.w_test * random_matrix(n_genes, d, 562).transpose()).array() + 6.0;
    for (int i = 0; i < n_genes; ++i) fold.gene_ids.push_back("g" + std::to_string(i));

    const Matrix g = random_matrix(n_genes, d, 563).cwiseAbs();
    TrainConfig cfg;
    cfg.max_epochs = 15;
    cfg.patience = 14;
    cfg.seed = 3;
    const auto sweep = lambda_sweep(fold, g, {0.1, 0.5, 0.9}, cfg);
    REQUIRE(sweep.lambdas.size() == 4);
    CHECK(sweep.lambdas[0] == 0.0);
    CHECK(sweep.reports.size() == 4);
    CHECK(sweep.histories.size() == 4);
    CHECK(sweep.selected_index >= 0);
    CHECK(sweep.selected_index < 4);
    CHECK(sweep.selected_lambda == sweep.lambdas[sweep.selected_index]);
    // Selection maximizes n_significant with ties toward smaller lambda.
    for (int i = 0; i < 4; ++i) {
        CHECK(sweep.reports[sweep.selected_index].n_significant >=
              sweep.reports[i].n_significant);
        if (sweep.reports[i].n_significant ==
                sweep.reports[sweep.selected_index].n_significant)
            CHECK(sweep.selected_lambda <= sweep.lambdas[i]);
    }
    for (int i = 0; i < 4; ++i) CHECK(sweep.reports[i].lambda_used == sweep.lambdas[i]);
}

TEST_CASE("lambda=0 sweep entry matches a plain-head evaluation") {
    const int n_genes = 8, d = 3;
    FoldData fold;
    const auto t = linear_task(60, 15, n_genes, d, 0.3, 570);
    fold.w_train = t.w_train;
    fold.y_train = t.y_train.array() + 6.0;
    fold.w_val = t.w_val;
    fold.y_val = t.y_val.array() + 6.0;
    fold.w_test = random_matrix(20, d, 571);
    fold.y_test = (fold.w_test * random_matrix(n_genes, d, 572).transpose()).array() + 6.0;
    for (int i = 0; i < n_genes; ++i) fold.gene_ids.push_back("g" + std::to_string(i));

    const Matrix g_pk = random_matrix(n_genes, d, 573).cwiseAbs();
    TrainConfig cfg;
    cfg.max_epochs = 10;
    cfg.patience = 9;
    cfg.seed = 5;
    const auto a = lambda_sweep(fold, g_pk, {0.5}, cfg);
    const auto b = lambda_sweep(fold, Matrix::Zero(n_genes, d), {0.5}, cfg);
    // With lambda=0 the G matrix is inert; identical results either way.
    CHECK(a.reports[0].per_gene_r == b.reports[0].per_gene_r);
    CHECK(a.reports[0].n_significant == b.reports[0].n_significant);
}

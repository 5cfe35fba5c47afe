#ifndef PKGENEX_TRAIN_EVAL_HPP
#define PKGENEX_TRAIN_EVAL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "pkgenex/predictor.hpp"
#include "pkgenex/types.hpp"

namespace pkgenex::train_eval {

enum class Optimizer { sgd, adam };

struct TrainConfig {
    double learning_rate = 1e-3;
    Optimizer optimizer = Optimizer::adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int batch_size = 32;
    int max_epochs = 200;
    int patience = 20;
    std::uint64_t seed = 0;

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    double train_mse = 0.0;
    double val_pearson = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    int best_epoch = -1;
    double best_val_pearson = 0.0;
    bool stopped_early = false;
};

// MSE training with Pearson-based early stopping: after each epoch the mean
// per-gene Pearson on the validation set is computed, the best snapshot is
// kept, and training halts after `patience` non-improving epochs. The head is
// left at the best-validation parameters.
TrainHistory train_model(predictor::PkLinearHead& head, const Matrix& w_train,
                         const Matrix& y_train, const Matrix& w_val,
                         const Matrix& y_val, const TrainConfig& cfg);

struct PearsonResult {
    Vector r;
    Vector p;  // two-sided, from the t-statistic with n-2 df
    std::vector<bool> degenerate;
};

// Per-column Pearson r and p-value; constant columns get r=0, p=1, flagged.
PearsonResult per_gene_pearson(const Matrix& pred, const Matrix& truth);

// Benjamini-Hochberg step-up adjusted values, monotone, clipped at 1.
Vector bh_adjust(const Vector& p);

// Significant iff q < alpha, r > 0, r > baseline_r, and not degenerate.
EvalReport significant_genes(const std::vector<std::string>& gene_ids,
                             const PearsonResult& pr, const Vector& baseline_r,
                             double alpha, double lambda_used);

// Untrained head with seeded random A, b; lambda and G as configured.
predictor::PkLinearHead random_baseline(Eigen::Index n_genes, Eigen::Index d,
                                        const Matrix& G, double lambda,
                                        std::uint64_t seed);

struct FoldData {
    Matrix w_train, y_train;
    Matrix w_val, y_val;
    Matrix w_test, y_test;
    std::vector<std::string> gene_ids;
};

// Evaluate a trained head on test data against a random baseline.
EvalReport evaluate_head(const predictor::PkLinearHead& head, const Matrix& w_test,
                         const Matrix& y_test,
                         const std::vector<std::string>& gene_ids, double alpha,
                         std::uint64_t baseline_seed);

struct SweepResult {
    std::vector<double> lambdas;       // 0 first, then the grid
    std::vector<EvalReport> reports;   // on the test split, aligned to lambdas
    std::vector<TrainHistory> histories;
    double selected_lambda = 0.0;
    int selected_index = 0;
};

struct SweepOptions {
    double alpha = 0.05;
    bool select_on_validation = false;  // default mirrors test-split selection
};

// Trains one model per lambda (plus the lambda=0 baseline) against a fixed
// embedding matrix G; selects the lambda maximizing n_significant, ties broken
// toward smaller lambda.
SweepResult lambda_sweep(const FoldData& fold, const Matrix& G,
                         const std::vector<double>& grid, const TrainConfig& cfg,
                         const SweepOptions& opt = {});

}  // namespace pkgenex::train_eval

#endif

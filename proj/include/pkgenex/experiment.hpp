#ifndef PKGENEX_EXPERIMENT_HPP
#define PKGENEX_EXPERIMENT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "pkgenex/train_eval.hpp"
#include "pkgenex/types.hpp"

namespace pkgenex::experiment {

enum class PkSource { none, internal, external, combined };

const char* pk_source_name(PkSource s);

struct ExperimentConfig {
    std::string expression_path;
    std::string embeddings_path;       // PKMX matrix
    std::string embedding_ids_path;    // sample-id sidecar
    std::string external_graph_path;   // optional, enables external/combined
    std::vector<PkSource> sources = {PkSource::internal};

    double tau = 0.85;
    Eigen::Index block = 1024;

    int nmf_max_iter = 500;
    double nmf_tol = 1e-5;

    std::vector<double> lambda_grid = {0.1, 0.2, 0.5, 0.8, 0.9};
    train_eval::TrainConfig train;
    double alpha = 0.05;

    int n_folds = 5;
    double train_ratio = 0.72, val_ratio = 0.08, test_ratio = 0.20;

    std::uint64_t seed = 0;
    std::string out_dir;

    void validate() const;  // referenced files must exist
};

// Plain-text key-value config file ("key<TAB>value", '#' comments).
ExperimentConfig load_experiment_config(const std::string& path);

struct FoldSummary {
    int fold = 0;
    PkSource source = PkSource::none;
    int lambda0_significant = 0;
    double best_lambda = 0.0;
    int best_significant = 0;
    std::size_t graph_genes = 0;
    std::size_t graph_pairs = 0;
};

struct ExperimentResult {
    std::vector<FoldSummary> fold_summaries;
    std::string summary_path;
};

// Per fold: build/ingest the PK graph (fold-local for internal), embed via
// NMF, sweep lambda (including the lambda=0 baseline), and write reports plus
// a summary table under cfg.out_dir. Deterministic given the config seeds.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Content hash used in the manifest (FNV-1a 64-bit over file bytes).
std::uint64_t file_content_hash(const std::string& path);

}  // namespace pkgenex::experiment

#endif

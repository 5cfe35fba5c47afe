#ifndef PKGENEX_SYNTH_HPP
#define PKGENEX_SYNTH_HPP

#include <cstdint>
#include <vector>

#include "pkgenex/types.hpp"

namespace pkgenex::synth {

// Latent-factor generator with known module structure: a per-patient latent z
// drives both expression (through per-module loading directions) and the
// sample embeddings (through a random full-rank map), so the true
// co-expression graph and the predictability of each gene are known exactly.
struct SynthConfig {
    int n_patients = 100;
    int samples_per_patient = 1;
    int n_genes = 500;
    int n_modules = 10;
    int genes_per_module = 20;
    int latent_dim = 10;     // m
    int embed_dim = 32;      // d
    double expression_noise = 0.1;  // sigma_e
    double embedding_noise = 0.1;   // sigma_w
    int patches_per_sample = 4;
    std::uint64_t seed = 0;

    // Module genes sit at baseline + loading . z; jitter on loadings scales
    // with expression_noise so the noiseless case is exactly rank-1 per module.
    double baseline = 5.0;
    double loading_gain = 1.0;

    void validate() const;
};

struct SynthDataset {
    ExpressionMatrix expression;
    EmbeddingTable embeddings;
    std::vector<PatchSet> patch_sets;
};

SynthDataset generate_dataset(const SynthConfig& cfg);

// Known ground truth: complete graph within each module, background isolated.
CoexpressionGraph true_graph(const SynthConfig& cfg);

struct RecoveryMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

RecoveryMetrics graph_recovery_metrics(const CoexpressionGraph& predicted,
                                       const CoexpressionGraph& truth);

}  // namespace pkgenex::synth

#endif

#ifndef PKGENEX_TYPES_HPP
#define PKGENEX_TYPES_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pkgenex {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Samples x genes nonnegative expression values with identifiers.
struct ExpressionMatrix {
    std::vector<std::string> sample_ids;   // unique, one per row
    std::vector<std::string> patient_ids;  // aligned to samples, may repeat
    std::vector<std::string> gene_ids;     // unique, one per column
    Matrix values;                         // n_samples x n_genes, finite, >= 0

    std::size_t n_samples() const { return sample_ids.size(); }
    std::size_t n_genes() const { return gene_ids.size(); }

    // Throws std::invalid_argument on any invariant violation.
    void validate() const;
};

/// Per-sample embedding vectors (precomputed slide embeddings).
struct EmbeddingTable {
    std::vector<std::string> sample_ids;
    Eigen::Index dim = 0;
    Matrix vectors;  // n_samples x dim

    void validate() const;
};

/// Patch-level embeddings for a single sample.
struct PatchSet {
    std::string sample_id;
    Matrix patches;  // n_patches x d_patch, n_patches >= 1
};

enum class Split { train, val, test };

/// Patient-level cross-validation assignments.
struct FoldSpec {
    int n_folds = 5;
    std::uint64_t seed = 0;
    // assignments[fold][patient_id] = split
    std::vector<std::map<std::string, Split>> assignments;

    Split split_of(int fold, const std::string& patient) const;
    void validate() const;
};

/// Undirected gene-gene network; edges stored once with i < j.
struct CoexpressionGraph {
    std::vector<std::string> gene_ids;               // sorted, unique
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;  // i < j, sorted
    std::vector<double> weights;                     // empty or aligned to edges
    std::optional<double> tau;                       // construction threshold

    bool has_weights() const { return !weights.empty(); }
    std::size_t n_edges() const { return edges.size(); }
};

/// Sparse symmetric 0/1 matrix in CSR form.
struct AdjacencyMatrix {
    std::vector<std::string> gene_ids;  // aligned to rows/cols
    std::vector<std::size_t> row_ptr;   // size n+1
    std::vector<std::uint32_t> col_idx; // both (i,j) and (j,i) stored

    std::size_t size() const { return gene_ids.size(); }
    std::size_t nnz() const { return col_idx.size(); }
    std::size_t degree(std::size_t i) const { return row_ptr[i + 1] - row_ptr[i]; }
    bool row_is_zero(std::size_t i) const { return degree(i) == 0; }

    Matrix dense() const;
};

/// Nonnegative factorization output: M ~ G * Y^T.
struct GeneEmbeddings {
    std::vector<std::string> gene_ids;
    Matrix G;  // n_genes x d, >= 0; zero rows for out-of-network genes
    Matrix Y;  // n_genes x d, >= 0
    Eigen::Index d = 0;
    double final_loss = 0.0;
    int iterations_run = 0;
};

/// Per-gene evaluation: correlations, adjusted p-values, significance.
struct EvalReport {
    std::vector<std::string> gene_ids;
    Vector per_gene_r;
    Vector per_gene_p;
    Vector per_gene_q;
    Vector baseline_r;
    std::vector<bool> significant;
    std::vector<bool> degenerate;
    int n_significant = 0;
    double lambda_used = 0.0;
};

}  // namespace pkgenex

#endif

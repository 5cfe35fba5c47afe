#ifndef PKGENEX_DATAIO_HPP
#define PKGENEX_DATAIO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "pkgenex/types.hpp"

namespace pkgenex::dataio {

// TSV, row 1 = "sample_id<TAB>patient_id<TAB><gene ids...>", one sample per row.
ExpressionMatrix load_expression_matrix(const std::string& path);
void save_expression_matrix(const ExpressionMatrix& expr, const std::string& path);

// Edge list TSV: "gene_a<TAB>gene_b[<TAB>correlation]", '#' starts a comment.
CoexpressionGraph load_graph_edgelist(const std::string& path);
void save_graph_edgelist(const CoexpressionGraph& g, const std::string& path);

// Binary matrix: magic "PKMX", version u16, rows u64, cols u64, f64 LE row-major.
void save_matrix(const Matrix& m, const std::string& path);
Matrix load_matrix(const std::string& path);

// One id per line; sidecar for PKMX gene embeddings.
void save_id_list(const std::vector<std::string>& ids, const std::string& path);
std::vector<std::string> load_id_list(const std::string& path);

EmbeddingTable load_embedding_table(const std::string& matrix_path,
                                    const std::string& ids_path);

// Patient-level folds; deterministic given seed, test splits partition patients.
FoldSpec make_folds(const std::vector<std::string>& patient_ids, int n_folds,
                    double train_ratio, double val_ratio, double test_ratio,
                    std::uint64_t seed);

void save_fold_spec(const FoldSpec& spec, const std::string& path);
FoldSpec load_fold_spec(const std::string& path);

// Induced subgraph on the given gene universe.
CoexpressionGraph align_gene_universe(const CoexpressionGraph& graph,
                                      const std::vector<std::string>& genes);

// FNV-1a 64-bit over the concatenated ids; stored in model artifacts so a
// loaded head can be checked against a gene universe.
std::uint64_t gene_list_hash(const std::vector<std::string>& ids);

}  // namespace pkgenex::dataio

namespace pkgenex::predictor {
struct PkLinearHead;
}

namespace pkgenex::dataio {

// Model artifact: magic "PKMH", version, lambda, clamp flag, shapes, gene-id
// hash, then A, b, G as little-endian f64 blocks.
void save_head(const predictor::PkLinearHead& head, std::uint64_t gene_hash,
               const std::string& path);
predictor::PkLinearHead load_head(const std::string& path,
                                  std::uint64_t* gene_hash = nullptr);

}  // namespace pkgenex::dataio

#endif

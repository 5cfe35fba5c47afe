#ifndef PKGENEX_EMBEDQC_HPP
#define PKGENEX_EMBEDQC_HPP

#include <map>
#include <string>
#include <vector>

#include "pkgenex/types.hpp"

namespace pkgenex::embedqc {

// Distances are configurable; defaults follow the library's convention of
// cosine over adjacency rows and Euclidean over embeddings.
enum class HdMetric { cosine_adjacency };
enum class LdMetric { euclidean, cosine };

struct NpOptions {
    int k = 100;
    HdMetric hd = HdMetric::cosine_adjacency;
    LdMetric ld = LdMetric::euclidean;
};

struct NeighborhoodReport {
    int k = 0;
    std::map<std::string, double> per_gene_overlap;
    double np_score = 0.0;
    int genes_evaluated = 0;
};

// Top-k neighbors of gene i in graph space: cosine similarity between binary
// adjacency rows, ties broken by ascending gene index. Only genes with a
// nonzero row participate.
std::vector<std::uint32_t> hd_neighbors(const AdjacencyMatrix& m, std::uint32_t i,
                                        int k);

// Top-k neighbors of gene i in embedding space, among genes with nonzero
// embedding rows; ascending Euclidean distance, ties by ascending index.
std::vector<std::uint32_t> ld_neighbors(const GeneEmbeddings& emb, std::uint32_t i,
                                        int k, LdMetric metric = LdMetric::euclidean);

// Mean top-k neighbor overlap between graph space and embedding space,
// averaged over in-network genes.
NeighborhoodReport np_score(const AdjacencyMatrix& m, const GeneEmbeddings& emb,
                            const NpOptions& opt);
NeighborhoodReport np_score(const AdjacencyMatrix& m, const GeneEmbeddings& emb,
                            int k);

}  // namespace pkgenex::embedqc

#endif

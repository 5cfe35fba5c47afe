#ifndef PKGENEX_NMF_HPP
#define PKGENEX_NMF_HPP

#include <cstdint>

#include "pkgenex/types.hpp"

namespace pkgenex::nmf {

// M[i][j] = M[j][i] = 1 iff the edge is present and both endpoints are in the
// universe; rows follow the universe order.
AdjacencyMatrix adjacency_from_graph(const CoexpressionGraph& g,
                                     const std::vector<std::string>& universe);

// Build directly from symmetric entries, for test construction. Pairs may be
// given in either orientation; the diagonal is allowed here.
AdjacencyMatrix adjacency_from_pairs(
    const std::vector<std::string>& gene_ids,
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& entries);

// Squared Frobenius norm of M - G*Y^T, computed without materializing G*Y^T:
// nnz(M) - 2*sum_entries (GY^T)_ij + trace((G^T G)(Y^T Y)).
double frobenius_loss(const AdjacencyMatrix& m, const Matrix& g, const Matrix& y);

// One round of multiplicative updates for the Frobenius objective; G first,
// then Y against the updated G. Loss is non-increasing up to float slack.
void update_step(const AdjacencyMatrix& m, Matrix& g, Matrix& y);

struct FactorizeOptions {
    int max_iter = 500;
    double tol = 1e-5;  // relative loss improvement
    std::uint64_t seed = 0;
};

GeneEmbeddings factorize(const AdjacencyMatrix& m, Eigen::Index d,
                         const FactorizeOptions& opt);

}  // namespace pkgenex::nmf

#endif

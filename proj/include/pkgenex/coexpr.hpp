#ifndef PKGENEX_COEXPR_HPP
#define PKGENEX_COEXPR_HPP

#include <cstdint>
#include <span>

#include "pkgenex/types.hpp"

namespace pkgenex::coexpr {

// Sample Pearson correlation. A zero-variance input yields 0 with the
// degenerate flag set instead of NaN.
double pearson_corr(std::span<const double> x, std::span<const double> y,
                    bool* degenerate = nullptr);

enum class ThresholdMode { signed_corr, absolute };

struct BuildOptions {
    double tau = 0.85;
    Eigen::Index block = 1024;          // column block size for tiling
    ThresholdMode mode = ThresholdMode::signed_corr;
    bool keep_weights = true;
};

// Thresholded co-expression graph. Edge (i,j) present iff the (signed, by
// default) correlation between gene profiles exceeds tau. Computation is tiled
// in column blocks so the full n_genes^2 matrix is never materialized.
CoexpressionGraph build_graph(const ExpressionMatrix& expr, const BuildOptions& opt);
CoexpressionGraph build_graph(const ExpressionMatrix& expr, double tau,
                              Eigen::Index block = 1024);

// Restrict to a subset of sample rows (fold-local graph construction).
CoexpressionGraph build_graph_rows(const ExpressionMatrix& expr,
                                   const std::vector<std::size_t>& rows,
                                   const BuildOptions& opt);

// Node and edge union; when both graphs weight the same edge the larger
// magnitude wins.
CoexpressionGraph union_graphs(const CoexpressionGraph& a, const CoexpressionGraph& b);

struct GraphStats {
    std::size_t n_genes_in_network = 0;  // nodes with degree >= 1
    std::size_t n_pairs = 0;
};

GraphStats graph_stats(const CoexpressionGraph& g);

}  // namespace pkgenex::coexpr

#endif

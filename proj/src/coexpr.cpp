#include "pkgenex/coexpr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pkgenex::coexpr {

double pearson_corr(std::span<const double> x, std::span<const double> y,
                    bool* degenerate) {
    if (x.size() != y.size())
        throw std::invalid_argument("pearson_corr: length mismatch");
    if (x.size() < 2)
        throw std::invalid_argument("pearson_corr: need at least 2 observations");
    if (degenerate) *degenerate = false;
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

namespace {

// Column-standardized copy: zero mean, unit centered norm. Zero-variance
// columns become all-zero so they never pass a positive threshold.
Matrix standardize_columns(const Matrix& values) {
    Matrix x = values;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        auto col = x.col(j);
        col.array() -= col.mean();
        const double norm = col.norm();
        if (norm > 0.0)
            col /= norm;
        else
            col.setZero();
    }
    return x;
}

}  // namespace

CoexpressionGraph build_graph_rows(const ExpressionMatrix& expr,
                                   const std::vector<std::size_t>& rows,
                                   const BuildOptions& opt) {
    if (!(opt.tau > 0.0 && opt.tau < 1.0))
        throw std::invalid_argument("build_graph: tau must be in (0,1)");
    if (opt.block < 1)
        throw std::invalid_argument("build_graph: block must be positive");
    if (rows.size() < 2)
        throw std::invalid_argument("build_graph: need at least 2 samples");

    Matrix sub(rows.size(), expr.values.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= expr.n_samples())
            throw std::invalid_argument("build_graph: sample row out of range");
        sub.row(i) = expr.values.row(rows[i]);
    }
    const Matrix x = standardize_columns(sub);
    const Eigen::Index n_genes = x.cols();

    // Sorted-id indexing for canonical edge order.
    std::vector<std::uint32_t> order(n_genes);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return expr.gene_ids[a] < expr.gene_ids[b];
    });
    std::vector<std::uint32_t> sorted_index(n_genes);
    for (std::uint32_t k = 0; k < n_genes; ++k) sorted_index[order[k]] = k;

    CoexpressionGraph g;
    g.gene_ids.resize(n_genes);
    for (Eigen::Index k = 0; k < n_genes; ++k) g.gene_ids[k] = expr.gene_ids[order[k]];
    g.tau = opt.tau;

    struct WEdge {
        std::uint32_t i, j;
        double w;
    };
    std::vector<WEdge> found;
    const Eigen::Index block = opt.block;
    for (Eigen::Index a = 0; a < n_genes; a += block) {
        const Eigen::Index aw = std::min(block, n_genes - a);
        for (Eigen::Index b = a; b < n_genes; b += block) {
            const Eigen::Index bw = std::min(block, n_genes - b);
            const Matrix tile = x.middleCols(a, aw).transpose() * x.middleCols(b, bw);
            for (Eigen::Index p = 0; p < aw; ++p) {
                const Eigen::Index q0 = (a == b) ? p + 1 : 0;
                for (Eigen::Index q = q0; q < bw; ++q) {
                    const double r = std::clamp(tile(p, q), -1.0, 1.0);
                    const double test =
                        opt.mode == ThresholdMode::absolute ? std::abs(r) : r;
                    if (test > opt.tau) {
                        std::uint32_t i = sorted_index[a + p];
                        std::uint32_t j = sorted_index[b + q];
                        if (i > j) std::swap(i, j);
                        found.push_back({i, j, r});
                    }
                }
            }
        }
    }
    std::sort(found.begin(), found.end(), [](const WEdge& l, const WEdge& r) {
        return std::tie(l.i, l.j) < std::tie(r.i, r.j);
    });
    g.edges.reserve(found.size());
    if (opt.keep_weights) g.weights.reserve(found.size());
    for (const auto& e : found) {
        g.edges.emplace_back(e.i, e.j);
        if (opt.keep_weights) g.weights.push_back(e.w);
    }
    return g;
}

CoexpressionGraph build_graph(const ExpressionMatrix& expr, const BuildOptions& opt) {
    std::vector<std::size_t> rows(expr.n_samples());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return build_graph_rows(expr, rows, opt);
}

CoexpressionGraph build_graph(const ExpressionMatrix& expr, double tau,
                              Eigen::Index block) {
    BuildOptions opt;
    opt.tau = tau;
    opt.block = block;
    return build_graph(expr, opt);
}

CoexpressionGraph union_graphs(const CoexpressionGraph& a, const CoexpressionGraph& b) {
    CoexpressionGraph out;
    out.gene_ids.resize(a.gene_ids.size() + b.gene_ids.size());
    auto end = std::set_union(a.gene_ids.begin(), a.gene_ids.end(),
                              b.gene_ids.begin(), b.gene_ids.end(),
                              out.gene_ids.begin());
    out.gene_ids.erase(end, out.gene_ids.end());

    auto remap = [&](const CoexpressionGraph& g, std::vector<std::uint32_t>& map) {
        map.resize(g.gene_ids.size());
        for (std::size_t i = 0; i < g.gene_ids.size(); ++i) {
            auto it = std::lower_bound(out.gene_ids.begin(), out.gene_ids.end(),
                                       g.gene_ids[i]);
            map[i] = static_cast<std::uint32_t>(it - out.gene_ids.begin());
        }
    };
    std::vector<std::uint32_t> map_a, map_b;
    remap(a, map_a);
    remap(b, map_b);

    const bool weighted = a.has_weights() || b.has_weights();
    std::map<std::pair<std::uint32_t, std::uint32_t>, double> merged;
    auto add = [&](const CoexpressionGraph& g, const std::vector<std::uint32_t>& map) {
        for (std::size_t k = 0; k < g.edges.size(); ++k) {
            std::uint32_t i = map[g.edges[k].first];
            std::uint32_t j = map[g.edges[k].second];
            if (i > j) std::swap(i, j);
            const double w = g.has_weights() ? g.weights[k] : 0.0;
            auto [it, inserted] = merged.emplace(std::make_pair(i, j), w);
            if (!inserted && std::abs(w) > std::abs(it->second)) it->second = w;
        }
    };
    add(a, map_a);
    add(b, map_b);
    for (const auto& [key, w] : merged) {
        out.edges.push_back(key);
        if (weighted) out.weights.push_back(w);
    }
    return out;
}

GraphStats graph_stats(const CoexpressionGraph& g) {
    std::vector<char> seen(g.gene_ids.size(), 0);
    for (const auto& e : g.edges) {
        seen[e.first] = 1;
        seen[e.second] = 1;
    }
    GraphStats s;
    s.n_genes_in_network =
        static_cast<std::size_t>(std::count(seen.begin(), seen.end(), 1));
    s.n_pairs = g.edges.size();
    return s;
}

}  // namespace pkgenex::coexpr

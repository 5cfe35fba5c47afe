#include "pkgenex/nmf.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "pkgenex/rng.hpp"

namespace pkgenex::nmf {

namespace {

constexpr double kDenomGuard = 1e-12;

AdjacencyMatrix from_neighbor_sets(
    std::vector<std::string> gene_ids,
    const std::vector<std::set<std::uint32_t>>& neighbors) {
    AdjacencyMatrix m;
    m.gene_ids = std::move(gene_ids);
    const std::size_t n = m.gene_ids.size();
    m.row_ptr.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i)
        m.row_ptr[i + 1] = m.row_ptr[i] + neighbors[i].size();
    m.col_idx.reserve(m.row_ptr[n]);
    for (std::size_t i = 0; i < n; ++i)
        for (std::uint32_t j : neighbors[i]) m.col_idx.push_back(j);
    return m;
}

// M * X for dense X, exploiting 0/1 entries.
Matrix spmm(const AdjacencyMatrix& m, const Matrix& x) {
    Matrix out = Matrix::Zero(m.size(), x.cols());
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k)
            out.row(i) += x.row(m.col_idx[k]);
    return out;
}

}  // namespace

AdjacencyMatrix adjacency_from_graph(const CoexpressionGraph& g,
                                     const std::vector<std::string>& universe) {
    std::unordered_map<std::string, std::uint32_t> index;
    for (std::uint32_t i = 0; i < universe.size(); ++i) index[universe[i]] = i;
    std::vector<std::set<std::uint32_t>> neighbors(universe.size());
    for (const auto& e : g.edges) {
        auto a = index.find(g.gene_ids[e.first]);
        auto b = index.find(g.gene_ids[e.second]);
        if (a == index.end() || b == index.end()) continue;
        if (a->second == b->second) continue;
        neighbors[a->second].insert(b->second);
        neighbors[b->second].insert(a->second);
    }
    return from_neighbor_sets(universe, neighbors);
}

AdjacencyMatrix adjacency_from_pairs(
    const std::vector<std::string>& gene_ids,
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& entries) {
    std::vector<std::set<std::uint32_t>> neighbors(gene_ids.size());
    for (const auto& [i, j] : entries) {
        neighbors[i].insert(j);
        neighbors[j].insert(i);
    }
    return from_neighbor_sets(gene_ids, neighbors);
}

double frobenius_loss(const AdjacencyMatrix& m, const Matrix& g, const Matrix& y) {
    const auto n = static_cast<Eigen::Index>(m.size());
    if (g.rows() != n || y.rows() != n || g.cols() != y.cols())
        throw std::invalid_argument("frobenius_loss: shape mismatch");
    double cross = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k)
            cross += g.row(i).dot(y.row(m.col_idx[k]));
    const Matrix gtg = g.transpose() * g;
    const Matrix yty = y.transpose() * y;
    const double quad = (gtg.array() * yty.array()).sum();  // trace(GtG * YtY)
    const double loss = static_cast<double>(m.nnz()) - 2.0 * cross + quad;
    return std::max(loss, 0.0);
}

void update_step(const AdjacencyMatrix& m, Matrix& g, Matrix& y) {
    const auto n = static_cast<Eigen::Index>(m.size());
    if (g.rows() != n || y.rows() != n || g.cols() != y.cols())
        throw std::invalid_argument("update_step: shape mismatch");
    if ((g.array() < 0.0).any() || (y.array() < 0.0).any())
        throw std::invalid_argument("update_step: negative factor entry");

    // G <- G .* (M Y) ./ (G (Y^T Y) + eps)
    {
        const Matrix num = spmm(m, y);
        const Matrix den = g * (y.transpose() * y);
        g.array() *= num.array() / (den.array() + kDenomGuard);
    }
    // Y <- Y .* (M^T G) ./ (Y (G^T G) + eps); M is symmetric.
    {
        const Matrix num = spmm(m, g);
        const Matrix den = y * (g.transpose() * g);
        y.array() *= num.array() / (den.array() + kDenomGuard);
    }
}

GeneEmbeddings factorize(const AdjacencyMatrix& m, Eigen::Index d,
                         const FactorizeOptions& opt) {
    const auto n = static_cast<Eigen::Index>(m.size());
    if (d < 1) throw std::invalid_argument("factorize: d must be >= 1");
    if (d > n) throw std::invalid_argument("factorize: d exceeds gene count");
    if (opt.max_iter < 1) throw std::invalid_argument("factorize: max_iter must be >= 1");

    GeneEmbeddings out;
    out.gene_ids = m.gene_ids;
    out.d = d;

    const double mean_entry =
        n > 0 ? static_cast<double>(m.nnz()) / (static_cast<double>(n) * n) : 0.0;
    if (m.nnz() == 0) {
        out.G = Matrix::Zero(n, d);
        out.Y = Matrix::Zero(n, d);
        return out;
    }
    const double scale = std::sqrt(mean_entry / static_cast<double>(d));
    Rng rng(opt.seed);
    out.G.resize(n, d);
    out.Y.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) out.G(i, j) = scale * rng.uniform_open();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) out.Y(i, j) = scale * rng.uniform_open();

    double prev = frobenius_loss(m, out.G, out.Y);
    int iter = 0;
    while (iter < opt.max_iter) {
        update_step(m, out.G, out.Y);
        ++iter;
        const double loss = frobenius_loss(m, out.G, out.Y);
        const double rel = (prev - loss) / (prev > 0.0 ? prev : 1.0);
        prev = loss;
        if (rel >= 0.0 && rel < opt.tol) break;
    }
    // Out-of-network genes keep exact zero rows.
    for (Eigen::Index i = 0; i < n; ++i)
        if (m.row_is_zero(static_cast<std::size_t>(i))) out.G.row(i).setZero();
    out.final_loss = frobenius_loss(m, out.G, out.Y);
    out.iterations_run = iter;
    return out;
}

}  // namespace pkgenex::nmf

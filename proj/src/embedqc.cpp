#include "pkgenex/embedqc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace pkgenex::embedqc {

namespace {

// Sorted intersection size of two CSR rows.
std::size_t row_intersection(const AdjacencyMatrix& m, std::uint32_t a,
                             std::uint32_t b) {
    std::size_t ka = m.row_ptr[a], kb = m.row_ptr[b];
    const std::size_t ea = m.row_ptr[a + 1], eb = m.row_ptr[b + 1];
    std::size_t count = 0;
    while (ka < ea && kb < eb) {
        if (m.col_idx[ka] < m.col_idx[kb])
            ++ka;
        else if (m.col_idx[kb] < m.col_idx[ka])
            ++kb;
        else {
            ++count;
            ++ka;
            ++kb;
        }
    }
    return count;
}

// Top-k indices by descending score, ties by ascending index.
std::vector<std::uint32_t> top_k(const std::vector<std::uint32_t>& candidates,
                                 const std::vector<double>& score, int k) {
    std::vector<std::uint32_t> order = candidates;
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (score[a] != score[b]) return score[a] > score[b];
        return a < b;
    });
    order.resize(k);
    return order;
}

std::vector<std::uint32_t> evaluable_genes(const AdjacencyMatrix& m) {
    std::vector<std::uint32_t> out;
    for (std::uint32_t i = 0; i < m.size(); ++i)
        if (!m.row_is_zero(i)) out.push_back(i);
    return out;
}

std::vector<std::uint32_t> hd_rank(const AdjacencyMatrix& m,
                                   const std::vector<std::uint32_t>& candidates,
                                   std::uint32_t i, int k) {
    std::vector<double> score(m.size(), 0.0);
    std::vector<std::uint32_t> others;
    others.reserve(candidates.size());
    const double di = static_cast<double>(m.degree(i));
    for (std::uint32_t j : candidates) {
        if (j == i) continue;
        others.push_back(j);
        const double dj = static_cast<double>(m.degree(j));
        score[j] = static_cast<double>(row_intersection(m, i, j)) / std::sqrt(di * dj);
    }
    return top_k(others, score, k);
}

std::vector<std::uint32_t> ld_rank(const Matrix& g,
                                   const std::vector<std::uint32_t>& candidates,
                                   std::uint32_t i, int k, LdMetric metric) {
    std::vector<double> score(g.rows(), 0.0);
    std::vector<std::uint32_t> others;
    others.reserve(candidates.size());
    for (std::uint32_t j : candidates) {
        if (j == i) continue;
        others.push_back(j);
        if (metric == LdMetric::euclidean) {
            score[j] = -(g.row(i) - g.row(j)).norm();  // negated: larger is closer
        } else {
            const double denom = g.row(i).norm() * g.row(j).norm();
            score[j] = denom > 0.0 ? g.row(i).dot(g.row(j)) / denom : 0.0;
        }
    }
    return top_k(others, score, k);
}

}  // namespace

std::vector<std::uint32_t> hd_neighbors(const AdjacencyMatrix& m, std::uint32_t i,
                                        int k) {
    if (i >= m.size()) throw std::invalid_argument("hd_neighbors: index out of range");
    if (m.row_is_zero(i))
        throw std::invalid_argument("hd_neighbors: gene has an empty adjacency row");
    const auto candidates = evaluable_genes(m);
    if (k < 1 || static_cast<std::size_t>(k) >= candidates.size())
        throw std::invalid_argument("hd_neighbors: k out of range");
    return hd_rank(m, candidates, i, k);
}

std::vector<std::uint32_t> ld_neighbors(const GeneEmbeddings& emb, std::uint32_t i,
                                        int k, LdMetric metric) {
    if (static_cast<Eigen::Index>(i) >= emb.G.rows())
        throw std::invalid_argument("ld_neighbors: index out of range");
    if (emb.G.row(i).isZero(0.0))
        throw std::invalid_argument("ld_neighbors: gene has a zero embedding row");
    std::vector<std::uint32_t> candidates;
    for (std::uint32_t j = 0; j < emb.G.rows(); ++j)
        if (!emb.G.row(j).isZero(0.0)) candidates.push_back(j);
    if (k < 1 || static_cast<std::size_t>(k) >= candidates.size())
        throw std::invalid_argument("ld_neighbors: k out of range");
    return ld_rank(emb.G, candidates, i, k, metric);
}

NeighborhoodReport np_score(const AdjacencyMatrix& m, const GeneEmbeddings& emb,
                            const NpOptions& opt) {
    if (static_cast<std::size_t>(emb.G.rows()) != m.size())
        throw std::invalid_argument("np_score: embedding rows do not match adjacency");
    const auto candidates = evaluable_genes(m);
    if (opt.k < 1 || static_cast<std::size_t>(opt.k) >= candidates.size())
        throw std::invalid_argument("np_score: need more than k evaluable genes");

    NeighborhoodReport report;
    report.k = opt.k;
    double total = 0.0;
    for (std::uint32_t i : candidates) {
        const auto hd = hd_rank(m, candidates, i, opt.k);
        const auto ld = ld_rank(emb.G, candidates, i, opt.k, opt.ld);
        std::unordered_set<std::uint32_t> hd_set(hd.begin(), hd.end());
        int overlap = 0;
        for (std::uint32_t j : ld)
            if (hd_set.count(j)) ++overlap;
        const double frac = static_cast<double>(overlap) / opt.k;
        report.per_gene_overlap[m.gene_ids[i]] = frac;
        total += frac;
    }
    report.genes_evaluated = static_cast<int>(candidates.size());
    report.np_score = total / static_cast<double>(candidates.size());
    return report;
}

NeighborhoodReport np_score(const AdjacencyMatrix& m, const GeneEmbeddings& emb,
                            int k) {
    NpOptions opt;
    opt.k = k;
    return np_score(m, emb, opt);
}

}  // namespace pkgenex::embedqc

#include "pkgenex/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

#include "pkgenex/rng.hpp"

namespace pkgenex::synth {

namespace {

std::string padded_id(char prefix, int index, int width) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%c%0*d", prefix, width, index);
    return buf;
}

int id_width(int count) {
    int w = 1;
    for (int v = count; v >= 10; v /= 10) ++w;
    return std::max(w, 5);
}

Vector random_normal_vector(Rng& rng, Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
    return v;
}

// Module latent directions: orthonormal while they fit in the latent space,
// random unit vectors beyond that.
std::vector<Vector> module_directions(Rng& rng, int n_modules, int m) {
    std::vector<Vector> dirs;
    for (int k = 0; k < n_modules; ++k) {
        Vector v = random_normal_vector(rng, m);
        if (k < m) {
            for (const auto& u : dirs) v -= u.dot(v) * u;
        }
        double norm = v.norm();
        while (norm < 1e-8) {
            v = random_normal_vector(rng, m);
            if (k < m)
                for (const auto& u : dirs) v -= u.dot(v) * u;
            norm = v.norm();
        }
        dirs.push_back(v / norm);
    }
    return dirs;
}

}  // namespace

void SynthConfig::validate() const {
    if (n_patients < 1 || samples_per_patient < 1 || n_genes < 1)
        throw std::invalid_argument("synth config: sizes must be positive");
    if (n_modules < 0 || genes_per_module < 0 ||
        static_cast<long>(n_modules) * genes_per_module > n_genes)
        throw std::invalid_argument(
            "synth config: module genes must fit within n_genes");
    if (latent_dim < 1 || embed_dim < 1)
        throw std::invalid_argument("synth config: dimensions must be positive");
    if (latent_dim > embed_dim)
        throw std::invalid_argument("synth config: latent_dim must be <= embed_dim");
    if (expression_noise < 0.0 || embedding_noise < 0.0)
        throw std::invalid_argument("synth config: noise scales must be >= 0");
    if (patches_per_sample < 1)
        throw std::invalid_argument("synth config: patches_per_sample >= 1");
}

SynthDataset generate_dataset(const SynthConfig& cfg) {
    cfg.validate();
    const int n_module_genes = cfg.n_modules * cfg.genes_per_module;
    const int n_samples = cfg.n_patients * cfg.samples_per_patient;
    const int gw = id_width(cfg.n_genes);
    const int sw = id_width(n_samples);
    const int pw = id_width(cfg.n_patients);

    Rng global(Rng::derive(cfg.seed, 1));

    // Embedding map Q: embed_dim x latent_dim, full rank w.h.p.
    Matrix q(cfg.embed_dim, cfg.latent_dim);
    const double qscale = 1.0 / std::sqrt(static_cast<double>(cfg.latent_dim));
    for (Eigen::Index i = 0; i < q.rows(); ++i)
        for (Eigen::Index j = 0; j < q.cols(); ++j) q(i, j) = qscale * global.normal();

    const auto dirs = module_directions(global, cfg.n_modules, cfg.latent_dim);

    // Per-gene loadings; direction jitter scales with the expression noise so
    // the noiseless configuration is exactly rank-1 per module.
    const double jitter = 0.2 * cfg.expression_noise;
    Matrix loadings = Matrix::Zero(cfg.n_genes, cfg.latent_dim);
    for (int g = 0; g < n_module_genes; ++g) {
        const int k = g / cfg.genes_per_module;
        Vector row = cfg.loading_gain * dirs[k];
        if (jitter > 0.0) row += jitter * random_normal_vector(global, cfg.latent_dim);
        loadings.row(g) = row.transpose();
    }

    SynthDataset out;
    out.expression.gene_ids.resize(cfg.n_genes);
    for (int g = 0; g < cfg.n_genes; ++g)
        out.expression.gene_ids[g] = padded_id('G', g, gw);
    out.expression.values.resize(n_samples, cfg.n_genes);
    out.embeddings.dim = cfg.embed_dim;
    out.embeddings.vectors.resize(n_samples, cfg.embed_dim);

    int sample_index = 0;
    for (int p = 0; p < cfg.n_patients; ++p) {
        Rng prng(Rng::derive(cfg.seed, 10000 + static_cast<std::uint64_t>(p)));
        const Vector z = random_normal_vector(prng, cfg.latent_dim);
        for (int s = 0; s < cfg.samples_per_patient; ++s, ++sample_index) {
            Rng srng(Rng::derive(cfg.seed,
                                 20000 + static_cast<std::uint64_t>(sample_index)));
            out.expression.sample_ids.push_back(padded_id('S', sample_index, sw));
            out.expression.patient_ids.push_back(padded_id('P', p, pw));

            for (int g = 0; g < cfg.n_genes; ++g) {
                double v = cfg.baseline;
                if (g < n_module_genes)
                    v += loadings.row(g).dot(z);
                else
                    v += srng.normal();  // idiosyncratic background signal
                v += cfg.expression_noise * srng.normal();
                out.expression.values(sample_index, g) = std::max(v, 0.0);
            }

            Vector w = q * z;
            for (Eigen::Index i = 0; i < w.size(); ++i)
                w[i] += cfg.embedding_noise * srng.normal();
            out.embeddings.vectors.row(sample_index) = w.transpose();
            out.embeddings.sample_ids.push_back(out.expression.sample_ids.back());

            PatchSet ps;
            ps.sample_id = out.expression.sample_ids.back();
            ps.patches.resize(cfg.patches_per_sample, cfg.embed_dim);
            for (int pi = 0; pi < cfg.patches_per_sample; ++pi)
                for (Eigen::Index i = 0; i < w.size(); ++i)
                    ps.patches(pi, i) = w[i] + cfg.embedding_noise * srng.normal();
            out.patch_sets.push_back(std::move(ps));
        }
    }
    out.expression.validate();
    out.embeddings.validate();
    return out;
}

CoexpressionGraph true_graph(const SynthConfig& cfg) {
    cfg.validate();
    const int gw = id_width(cfg.n_genes);
    CoexpressionGraph g;
    g.gene_ids.resize(cfg.n_genes);
    for (int i = 0; i < cfg.n_genes; ++i) g.gene_ids[i] = padded_id('G', i, gw);
    for (int k = 0; k < cfg.n_modules; ++k) {
        const int base = k * cfg.genes_per_module;
        for (int a = 0; a < cfg.genes_per_module; ++a)
            for (int b = a + 1; b < cfg.genes_per_module; ++b)
                g.edges.emplace_back(base + a, base + b);
    }
    std::sort(g.edges.begin(), g.edges.end());
    return g;
}

RecoveryMetrics graph_recovery_metrics(const CoexpressionGraph& predicted,
                                       const CoexpressionGraph& truth) {
    auto edge_set = [](const CoexpressionGraph& g) {
        std::set<std::pair<std::string, std::string>> s;
        for (const auto& e : g.edges) {
            auto a = g.gene_ids[e.first], b = g.gene_ids[e.second];
            if (b < a) std::swap(a, b);
            s.emplace(a, b);
        }
        return s;
    };
    const auto pred = edge_set(predicted);
    const auto truth_set = edge_set(truth);
    std::size_t hits = 0;
    for (const auto& e : pred)
        if (truth_set.count(e)) ++hits;
    RecoveryMetrics m;
    m.precision = pred.empty() ? 0.0 : static_cast<double>(hits) / pred.size();
    m.recall = truth_set.empty() ? 0.0 : static_cast<double>(hits) / truth_set.size();
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    return m;
}

}  // namespace pkgenex::synth

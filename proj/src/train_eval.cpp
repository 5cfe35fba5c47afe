#include "pkgenex/train_eval.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "pkgenex/rng.hpp"

namespace pkgenex::train_eval {

void TrainConfig::validate() const {
    if (learning_rate <= 0.0)
        throw std::invalid_argument("train config: learning rate must be positive");
    if (batch_size < 1) throw std::invalid_argument("train config: batch size >= 1");
    if (max_epochs < 1) throw std::invalid_argument("train config: max_epochs >= 1");
    if (patience >= max_epochs)
        throw std::invalid_argument("train config: patience must be < max_epochs");
}

namespace {

double mean_val_pearson(const PearsonResult& pr) {
    double sum = 0.0;
    int count = 0;
    for (Eigen::Index g = 0; g < pr.r.size(); ++g) {
        if (!pr.degenerate[g]) {
            sum += pr.r[g];
            ++count;
        }
    }
    return count > 0 ? sum / count : 0.0;
}

struct AdamState {
    Matrix mA, vA;
    Vector mb, vb;
    int t = 0;
};

void apply_step(predictor::PkLinearHead& head, const predictor::HeadGradients& g,
                const TrainConfig& cfg, AdamState& st) {
    if (cfg.optimizer == Optimizer::sgd) {
        head.A -= cfg.learning_rate * g.dA;
        head.b -= cfg.learning_rate * g.db;
        return;
    }
    ++st.t;
    const double c1 = 1.0 - std::pow(cfg.beta1, st.t);
    const double c2 = 1.0 - std::pow(cfg.beta2, st.t);
    st.mA = cfg.beta1 * st.mA + (1.0 - cfg.beta1) * g.dA;
    st.vA = cfg.beta2 * st.vA.array().matrix() +
            (1.0 - cfg.beta2) * g.dA.array().square().matrix();
    st.mb = cfg.beta1 * st.mb + (1.0 - cfg.beta1) * g.db;
    st.vb = cfg.beta2 * st.vb.array().matrix() +
            (1.0 - cfg.beta2) * g.db.array().square().matrix();
    head.A.array() -= cfg.learning_rate * (st.mA.array() / c1) /
                      ((st.vA.array() / c2).sqrt() + cfg.eps);
    head.b.array() -= cfg.learning_rate * (st.mb.array() / c1) /
                      ((st.vb.array() / c2).sqrt() + cfg.eps);
}

}  // namespace

TrainHistory train_model(predictor::PkLinearHead& head, const Matrix& w_train,
                         const Matrix& y_train, const Matrix& w_val,
                         const Matrix& y_val, const TrainConfig& cfg) {
    cfg.validate();
    head.validate();
    if (w_train.rows() == 0 || w_val.rows() == 0)
        throw std::invalid_argument("train_model: empty split");
    if (y_train.rows() != w_train.rows() || y_val.rows() != w_val.rows())
        throw std::invalid_argument("train_model: targets not aligned to inputs");

    const auto n_train = w_train.rows();
    std::vector<Eigen::Index> order(n_train);
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    AdamState st;
    st.mA = Matrix::Zero(head.A.rows(), head.A.cols());
    st.vA = st.mA;
    st.mb = Vector::Zero(head.b.size());
    st.vb = st.mb;

    TrainHistory hist;
    Matrix best_A = head.A;
    Vector best_b = head.b;
    double best_val = -std::numeric_limits<double>::infinity();
    int since_best = 0;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        Rng rng(Rng::derive(cfg.seed, static_cast<std::uint64_t>(epoch)));
        rng.shuffle(order);
        for (Eigen::Index start = 0; start < n_train; start += cfg.batch_size) {
            const Eigen::Index bs = std::min<Eigen::Index>(cfg.batch_size, n_train - start);
            Matrix bw(bs, w_train.cols()), bt(bs, y_train.cols());
            for (Eigen::Index i = 0; i < bs; ++i) {
                bw.row(i) = w_train.row(order[start + i]);
                bt.row(i) = y_train.row(order[start + i]);
            }
            const auto grads = predictor::pk_grad(head, bw, bt);
            apply_step(head, grads, cfg, st);
        }
        const double train_mse =
            predictor::mse(predictor::pk_forward_batch(head, w_train), y_train);
        if (!std::isfinite(train_mse))
            throw std::runtime_error("train_model: non-finite training loss at epoch " +
                                     std::to_string(epoch));
        const auto val_pred = predictor::pk_forward_batch(head, w_val);
        const double val_pearson = mean_val_pearson(per_gene_pearson(val_pred, y_val));
        hist.epochs.push_back({epoch, train_mse, val_pearson});
        if (val_pearson > best_val) {
            best_val = val_pearson;
            best_A = head.A;
            best_b = head.b;
            hist.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            hist.stopped_early = true;
            break;
        }
    }
    head.A = best_A;
    head.b = best_b;
    hist.best_val_pearson = best_val;
    return hist;
}

PearsonResult per_gene_pearson(const Matrix& pred, const Matrix& truth) {
    if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
        throw std::invalid_argument("per_gene_pearson: shape mismatch");
    const auto n = pred.rows();
    if (n < 3) throw std::invalid_argument("per_gene_pearson: need n >= 3");
    const auto n_genes = pred.cols();

    PearsonResult out;
    out.r.resize(n_genes);
    out.p.resize(n_genes);
    out.degenerate.assign(n_genes, false);
    const boost::math::students_t dist(static_cast<double>(n - 2));
    for (Eigen::Index g = 0; g < n_genes; ++g) {
        Vector x = pred.col(g), y = truth.col(g);
        x.array() -= x.mean();
        y.array() -= y.mean();
        const double sxx = x.squaredNorm(), syy = y.squaredNorm();
        if (sxx == 0.0 || syy == 0.0) {
            out.r[g] = 0.0;
            out.p[g] = 1.0;
            out.degenerate[g] = true;
            continue;
        }
        const double r = std::clamp(x.dot(y) / std::sqrt(sxx * syy), -1.0, 1.0);
        out.r[g] = r;
        const double denom = 1.0 - r * r;
        if (denom <= 0.0) {
            out.p[g] = 0.0;
        } else {
            const double t = r * std::sqrt(static_cast<double>(n - 2) / denom);
            out.p[g] = 2.0 * boost::math::cdf(dist, -std::abs(t));
        }
    }
    return out;
}

Vector bh_adjust(const Vector& p) {
    const auto m = p.size();
    for (Eigen::Index i = 0; i < m; ++i)
        if (!(p[i] >= 0.0 && p[i] <= 1.0))
            throw std::invalid_argument("bh_adjust: p-value outside [0,1]");
    std::vector<Eigen::Index> order(m);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return p[a] < p[b]; });
    Vector q(m);
    double running = 1.0;
    for (Eigen::Index k = m; k >= 1; --k) {
        const Eigen::Index idx = order[k - 1];
        const double adj = p[idx] * static_cast<double>(m) / static_cast<double>(k);
        running = std::min(running, adj);
        q[idx] = running;
    }
    return q;
}

EvalReport significant_genes(const std::vector<std::string>& gene_ids,
                             const PearsonResult& pr, const Vector& baseline_r,
                             double alpha, double lambda_used) {
    const auto n = pr.r.size();
    if (static_cast<Eigen::Index>(gene_ids.size()) != n || baseline_r.size() != n)
        throw std::invalid_argument("significant_genes: length mismatch");
    EvalReport rep;
    rep.gene_ids = gene_ids;
    rep.per_gene_r = pr.r;
    rep.per_gene_p = pr.p;
    rep.per_gene_q = bh_adjust(pr.p);
    rep.baseline_r = baseline_r;
    rep.degenerate = pr.degenerate;
    rep.significant.assign(n, false);
    rep.lambda_used = lambda_used;
    for (Eigen::Index g = 0; g < n; ++g) {
        const bool sig = !pr.degenerate[g] && rep.per_gene_q[g] < alpha &&
                         pr.r[g] > 0.0 && pr.r[g] > baseline_r[g];
        rep.significant[g] = sig;
        if (sig) ++rep.n_significant;
    }
    return rep;
}

predictor::PkLinearHead random_baseline(Eigen::Index n_genes, Eigen::Index d,
                                        const Matrix& G, double lambda,
                                        std::uint64_t seed) {
    Rng rng(seed);
    predictor::PkLinearHead head;
    head.A.resize(n_genes, d);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (Eigen::Index i = 0; i < n_genes; ++i)
        for (Eigen::Index j = 0; j < d; ++j) head.A(i, j) = scale * rng.normal();
    head.b.resize(n_genes);
    for (Eigen::Index i = 0; i < n_genes; ++i) head.b[i] = 0.01 * rng.normal();
    head.G = G.rows() == n_genes ? G : Matrix::Zero(n_genes, d);
    head.lambda = lambda;
    return head;
}

EvalReport evaluate_head(const predictor::PkLinearHead& head, const Matrix& w_test,
                         const Matrix& y_test,
                         const std::vector<std::string>& gene_ids, double alpha,
                         std::uint64_t baseline_seed) {
    const auto pred = predictor::pk_forward_batch(head, w_test);
    const auto pr = per_gene_pearson(pred, y_test);
    const auto base_head = random_baseline(head.n_genes(), head.dim(), head.G,
                                           head.lambda, baseline_seed);
    const auto base_pred = predictor::pk_forward_batch(base_head, w_test);
    const auto base_pr = per_gene_pearson(base_pred, y_test);
    return significant_genes(gene_ids, pr, base_pr.r, alpha, head.lambda);
}

SweepResult lambda_sweep(const FoldData& fold, const Matrix& G,
                         const std::vector<double>& grid, const TrainConfig& cfg,
                         const SweepOptions& opt) {
    if (grid.empty()) throw std::invalid_argument("lambda_sweep: empty grid");
    for (double l : grid)
        if (l < 0.0 || l > 1.0)
            throw std::invalid_argument("lambda_sweep: lambda outside [0,1]");

    SweepResult res;
    res.lambdas.push_back(0.0);
    for (double l : grid)
        if (l != 0.0) res.lambdas.push_back(l);

    const auto n_genes = fold.y_train.cols();
    const auto d = fold.w_train.cols();
    std::vector<int> val_counts;
    for (std::size_t li = 0; li < res.lambdas.size(); ++li) {
        predictor::PkLinearHead head = predictor::make_plain_head(n_genes, d);
        head.G = G;
        head.lambda = res.lambdas[li];
        TrainConfig run_cfg = cfg;
        run_cfg.seed = Rng::derive(cfg.seed, 1000 + li);
        res.histories.push_back(train_model(head, fold.w_train, fold.y_train,
                                            fold.w_val, fold.y_val, run_cfg));
        const std::uint64_t baseline_seed = Rng::derive(cfg.seed, 2000 + li);
        res.reports.push_back(evaluate_head(head, fold.w_test, fold.y_test,
                                            fold.gene_ids, opt.alpha, baseline_seed));
        if (opt.select_on_validation) {
            val_counts.push_back(evaluate_head(head, fold.w_val, fold.y_val,
                                               fold.gene_ids, opt.alpha,
                                               baseline_seed)
                                     .n_significant);
        }
    }
    int best = 0;
    for (std::size_t li = 1; li < res.lambdas.size(); ++li) {
        const int count = opt.select_on_validation ? val_counts[li]
                                                   : res.reports[li].n_significant;
        const int best_count = opt.select_on_validation
                                   ? val_counts[best]
                                   : res.reports[best].n_significant;
        if (count > best_count ||
            (count == best_count && res.lambdas[li] < res.lambdas[best]))
            best = static_cast<int>(li);
    }
    res.selected_index = best;
    res.selected_lambda = res.lambdas[best];
    return res;
}

}  // namespace pkgenex::train_eval

#include "pkgenex/predictor.hpp"

#include <cmath>
#include <stdexcept>

#include "pkgenex/rng.hpp"

namespace pkgenex::predictor {

void PkLinearHead::validate() const {
    if (A.rows() != G.rows() || A.cols() != G.cols())
        throw std::invalid_argument("head: A and G must share a shape");
    if (b.size() != A.rows())
        throw std::invalid_argument("head: b length must equal n_genes");
    if (lambda < 0.0 || lambda > 1.0)
        throw std::invalid_argument("head: lambda must be in [0,1]");
    if ((G.array() < 0.0).any())
        throw std::invalid_argument("head: G must be nonnegative");
}

PkLinearHead make_plain_head(Eigen::Index n_genes, Eigen::Index d) {
    PkLinearHead head;
    head.A = Matrix::Zero(n_genes, d);
    head.b = Vector::Zero(n_genes);
    head.G = Matrix::Zero(n_genes, d);
    head.lambda = 0.0;
    return head;
}

Matrix pk_raw_batch(const PkLinearHead& head, const Matrix& w_batch) {
    if (w_batch.cols() != head.dim())
        throw std::invalid_argument("pk_forward: embedding dimension mismatch");
    Matrix raw = (1.0 - head.lambda) * (w_batch * head.A.transpose());
    if (head.lambda != 0.0) raw.noalias() += head.lambda * (w_batch * head.G.transpose());
    raw.rowwise() += head.b.transpose();
    return raw;
}

Matrix pk_forward_batch(const PkLinearHead& head, const Matrix& w_batch) {
    Matrix raw = pk_raw_batch(head, w_batch);
    if (head.clamp_output) raw = raw.cwiseMax(0.0);
    return raw;
}

Vector pk_forward(const PkLinearHead& head, const Vector& w) {
    return pk_forward_batch(head, w.transpose()).row(0).transpose();
}

double mse(const Matrix& pred, const Matrix& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw std::invalid_argument("mse: shape mismatch");
    return (pred - target).squaredNorm() /
           static_cast<double>(pred.rows() * pred.cols());
}

namespace {

// d(MSE)/d(raw), with zero subgradient where the output clamp is active.
Matrix raw_residual(const PkLinearHead& head, const Matrix& raw,
                    const Matrix& targets) {
    Matrix pred = head.clamp_output ? raw.cwiseMax(0.0).eval() : raw;
    Matrix grad = 2.0 * (pred - targets) /
                  static_cast<double>(raw.rows() * raw.cols());
    if (head.clamp_output)
        grad = (raw.array() < 0.0).select(Matrix::Zero(raw.rows(), raw.cols()), grad);
    return grad;
}

}  // namespace

HeadGradients pk_grad(const PkLinearHead& head, const Matrix& batch_w,
                      const Matrix& batch_targets) {
    if (batch_w.rows() == 0)
        throw std::invalid_argument("pk_grad: empty batch");
    if (batch_targets.rows() != batch_w.rows() ||
        batch_targets.cols() != head.n_genes())
        throw std::invalid_argument("pk_grad: target shape mismatch");
    const Matrix raw = pk_raw_batch(head, batch_w);
    const Matrix grad = raw_residual(head, raw, batch_targets);
    HeadGradients out;
    out.dA = (1.0 - head.lambda) * (grad.transpose() * batch_w);
    out.db = grad.colwise().sum().transpose();
    return out;
}

MlpEncoder make_encoder(Eigen::Index d_patch, Eigen::Index hidden, Eigen::Index d,
                        std::uint64_t seed) {
    Rng rng(seed);
    MlpEncoder enc;
    auto fill = [&](Matrix& m, Eigen::Index rows, Eigen::Index cols) {
        m.resize(rows, cols);
        const double scale = std::sqrt(2.0 / static_cast<double>(cols));
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
    };
    fill(enc.W1, hidden, d_patch);
    fill(enc.W2, d, hidden);
    enc.b1 = Vector::Zero(hidden);
    enc.b2 = Vector::Zero(d);
    return enc;
}

Vector mlp_encode(const MlpEncoder& enc, const PatchSet& patches) {
    if (patches.patches.rows() < 1)
        throw std::invalid_argument("mlp_encode: empty patch set");
    if (patches.patches.cols() != enc.patch_dim())
        throw std::invalid_argument("mlp_encode: patch dimension mismatch");
    const Vector pooled = patches.patches.colwise().mean().transpose();
    const Vector hidden = ((enc.W1 * pooled + enc.b1).array().max(0.0)).matrix();
    return enc.W2 * hidden + enc.b2;
}

FullGradients encoder_grad(const PkLinearHead& head, const MlpEncoder& enc,
                           const std::vector<PatchSet>& batch,
                           const Matrix& batch_targets) {
    if (batch.empty()) throw std::invalid_argument("encoder_grad: empty batch");
    const auto n = static_cast<Eigen::Index>(batch.size());
    if (batch_targets.rows() != n || batch_targets.cols() != head.n_genes())
        throw std::invalid_argument("encoder_grad: target shape mismatch");

    Matrix pooled(n, enc.patch_dim());
    Matrix pre_hidden(n, enc.hidden_dim());
    Matrix hidden(n, enc.hidden_dim());
    Matrix w(n, enc.out_dim());
    for (Eigen::Index s = 0; s < n; ++s) {
        pooled.row(s) = batch[s].patches.colwise().mean();
        pre_hidden.row(s) =
            (enc.W1 * pooled.row(s).transpose() + enc.b1).transpose();
        hidden.row(s) = pre_hidden.row(s).cwiseMax(0.0);
        w.row(s) = (enc.W2 * hidden.row(s).transpose() + enc.b2).transpose();
    }

    const Matrix raw = pk_raw_batch(head, w);
    const Matrix grad = raw_residual(head, raw, batch_targets);

    FullGradients out;
    out.head.dA = (1.0 - head.lambda) * (grad.transpose() * w);
    out.head.db = grad.colwise().sum().transpose();

    // Backprop to w: d(raw)/d(w) = (1-lambda) A + lambda G.
    const Matrix effective = (1.0 - head.lambda) * head.A + head.lambda * head.G;
    const Matrix dw = grad * effective;                      // n x d
    const Matrix dhidden_pre =
        (dw * enc.W2).array() * (pre_hidden.array() > 0.0).cast<double>();  // n x h

    out.encoder.dW2 = dw.transpose() * hidden;
    out.encoder.db2 = dw.colwise().sum().transpose();
    out.encoder.dW1 = dhidden_pre.transpose() * pooled;
    out.encoder.db1 = dhidden_pre.colwise().sum().transpose();
    return out;
}

}  // namespace pkgenex::predictor

#ifndef PKGENEX_PREDICTOR_HPP
#define PKGENEX_PREDICTOR_HPP

#include "pkgenex/types.hpp"

namespace pkgenex::predictor {

// Linear prediction head with an injected frozen embedding term:
//   g = clamp0((1-lambda) * w A^T + lambda * w G^T + b)
struct PkLinearHead {
    Matrix A;        // n_genes x d, trainable
    Vector b;        // n_genes, trainable
    Matrix G;        // n_genes x d, frozen, elementwise >= 0
    double lambda = 0.0;
    bool clamp_output = true;

    Eigen::Index n_genes() const { return A.rows(); }
    Eigen::Index dim() const { return A.cols(); }
    void validate() const;
};

// Head with lambda = 0 and a zero G block of matching shape.
PkLinearHead make_plain_head(Eigen::Index n_genes, Eigen::Index d);

Vector pk_forward(const PkLinearHead& head, const Vector& w);
// Batched: rows of w_batch are samples; output n x n_genes.
Matrix pk_forward_batch(const PkLinearHead& head, const Matrix& w_batch);
// Pre-clamp affine value, used by gradients and the lambda-affinity property.
Matrix pk_raw_batch(const PkLinearHead& head, const Matrix& w_batch);

struct HeadGradients {
    Matrix dA;  // n_genes x d
    Vector db;  // n_genes
};

// Analytic gradient of mean squared error (mean over batch * genes) w.r.t. A
// and b. G is frozen. Clamped outputs contribute zero subgradient.
HeadGradients pk_grad(const PkLinearHead& head, const Matrix& batch_w,
                      const Matrix& batch_targets);

double mse(const Matrix& pred, const Matrix& target);

// Mean-pool + two affine maps with a rectifier in between. Stands in for the
// heavier aggregators; output dimension must match the head's d.
struct MlpEncoder {
    Matrix W1;  // hidden x d_patch
    Vector b1;  // hidden
    Matrix W2;  // d x hidden
    Vector b2;  // d

    Eigen::Index patch_dim() const { return W1.cols(); }
    Eigen::Index hidden_dim() const { return W1.rows(); }
    Eigen::Index out_dim() const { return W2.rows(); }
};

MlpEncoder make_encoder(Eigen::Index d_patch, Eigen::Index hidden, Eigen::Index d,
                        std::uint64_t seed);

Vector mlp_encode(const MlpEncoder& enc, const PatchSet& patches);

struct EncoderGradients {
    Matrix dW1;
    Vector db1;
    Matrix dW2;
    Vector db2;
};

// Gradients of the downstream MSE through head and encoder for a batch of
// patch sets. Head gradients come out too so a joint step is one call.
struct FullGradients {
    HeadGradients head;
    EncoderGradients encoder;
};

FullGradients encoder_grad(const PkLinearHead& head, const MlpEncoder& enc,
                           const std::vector<PatchSet>& batch,
                           const Matrix& batch_targets);

}  // namespace pkgenex::predictor

#endif

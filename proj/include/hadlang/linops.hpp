#pragma once

#include <Eigen/Core>

#include <memory>
#include <vector>

namespace hadlang {

// Abstract linear map A: R^cols -> R^rows with exact adjoint.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  virtual Eigen::Index rows() const = 0;
  virtual Eigen::Index cols() const = 0;
  virtual Eigen::VectorXd apply(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd apply_adjoint(const Eigen::VectorXd& w) const = 0;
};

using LinOpPtr = std::shared_ptr<const LinearOperator>;

LinOpPtr dense_operator(Eigen::MatrixXd matrix);

// Orthonormal multi-level Haar transform W, full depth (log2 length levels).
// forward=true applies W; the adjoint equals the inverse. Length must be a
// power of two.
LinOpPtr haar_operator(Eigen::Index length, bool forward = true);

// Zero-phase circular convolution: kernel tap j acts at offset j - (len-1)/2,
// so a symmetric kernel gives a self-adjoint operator.
LinOpPtr convolution_operator(Eigen::VectorXd kernel, Eigen::Index length);

// Row selector keeping the given indices; adjoint zero-fills.
LinOpPtr mask_operator(std::vector<Eigen::Index> keep, Eigen::Index length);

// outer * inner (apply runs inner first).
LinOpPtr compose(LinOpPtr outer, LinOpPtr inner);

Eigen::VectorXd haar_forward(const Eigen::VectorXd& x);
Eigen::VectorXd haar_inverse(const Eigen::VectorXd& coeffs);
Eigen::VectorXd circular_convolve(const Eigen::VectorXd& kernel, const Eigen::VectorXd& x);

// Discrete Gaussian taps at offsets -radius..radius, normalized to sum 1.
Eigen::VectorXd gaussian_kernel(double sigma, int radius);

// Materialize as a dense matrix (test oracle / small problems only).
Eigen::MatrixXd to_dense(const LinearOperator& op);

struct NormEstimate {
  double value = 0.0;  // spectral norm ||A||; L = value^2
  bool converged = false;
  int iterations = 0;
};

// Power iteration on A^T A; on non-convergence the last iterate is returned
// with converged=false.
NormEstimate operator_norm_estimate(const LinearOperator& op, double tol = 1e-10,
                                    int max_iters = 10000);

}  // namespace hadlang

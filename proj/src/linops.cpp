#include "hadlang/linops.hpp"

#include "hadlang/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace hadlang {

namespace {

void check_dim(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want)
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (got " +
                                std::to_string(got) + ", want " + std::to_string(want) + ")");
}

bool is_power_of_two(Eigen::Index n) { return n > 0 && (n & (n - 1)) == 0; }

class DenseOperator final : public LinearOperator {
 public:
  explicit DenseOperator(Eigen::MatrixXd m) : m_(std::move(m)) {}
  Eigen::Index rows() const override { return m_.rows(); }
  Eigen::Index cols() const override { return m_.cols(); }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const override {
    check_dim(x.size(), m_.cols(), "dense apply");
    return m_ * x;
  }
  Eigen::VectorXd apply_adjoint(const Eigen::VectorXd& w) const override {
    check_dim(w.size(), m_.rows(), "dense adjoint");
    return m_.transpose() * w;
  }

 private:
  Eigen::MatrixXd m_;
};

class HaarOperator final : public LinearOperator {
 public:
  HaarOperator(Eigen::Index n, bool forward) : n_(n), forward_(forward) {
    if (!is_power_of_two(n)) throw std::invalid_argument("haar: length must be a power of two");
  }
  Eigen::Index rows() const override { return n_; }
  Eigen::Index cols() const override { return n_; }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const override {
    check_dim(x.size(), n_, "haar apply");
    return forward_ ? haar_forward(x) : haar_inverse(x);
  }
  Eigen::VectorXd apply_adjoint(const Eigen::VectorXd& w) const override {
    check_dim(w.size(), n_, "haar adjoint");
    // W is orthogonal: W^T = W^{-1}.
    return forward_ ? haar_inverse(w) : haar_forward(w);
  }

 private:
  Eigen::Index n_;
  bool forward_;
};

class ConvolutionOperator final : public LinearOperator {
 public:
  ConvolutionOperator(Eigen::VectorXd kernel, Eigen::Index n) : k_(std::move(kernel)), n_(n) {
    if (k_.size() == 0) throw std::invalid_argument("convolution: empty kernel");
    if (k_.size() > n_) throw std::invalid_argument("convolution: kernel longer than signal");
  }
  Eigen::Index rows() const override { return n_; }
  Eigen::Index cols() const override { return n_; }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const override {
    check_dim(x.size(), n_, "convolution apply");
    return circular_convolve(k_, x);
  }
  Eigen::VectorXd apply_adjoint(const Eigen::VectorXd& w) const override {
    check_dim(w.size(), n_, "convolution adjoint");
    // Correlation: reverse the kernel about its center.
    const Eigen::Index m = k_.size();
    const Eigen::Index center = (m - 1) / 2;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
    for (Eigen::Index i = 0; i < n_; ++i) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        Eigen::Index idx = (i + (j - center)) % n_;
        if (idx < 0) idx += n_;
        acc += k_[j] * w[idx];
      }
      out[i] = acc;
    }
    return out;
  }

 private:
  Eigen::VectorXd k_;
  Eigen::Index n_;
};

class MaskOperator final : public LinearOperator {
 public:
  MaskOperator(std::vector<Eigen::Index> keep, Eigen::Index n) : keep_(std::move(keep)), n_(n) {
    for (Eigen::Index i : keep_)
      if (i < 0 || i >= n_) throw std::invalid_argument("mask: index out of range");
  }
  Eigen::Index rows() const override { return static_cast<Eigen::Index>(keep_.size()); }
  Eigen::Index cols() const override { return n_; }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const override {
    check_dim(x.size(), n_, "mask apply");
    Eigen::VectorXd out(rows());
    for (Eigen::Index r = 0; r < rows(); ++r) out[r] = x[keep_[r]];
    return out;
  }
  Eigen::VectorXd apply_adjoint(const Eigen::VectorXd& w) const override {
    check_dim(w.size(), rows(), "mask adjoint");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
    for (Eigen::Index r = 0; r < rows(); ++r) out[keep_[r]] += w[r];
    return out;
  }

 private:
  std::vector<Eigen::Index> keep_;
  Eigen::Index n_;
};

class ComposeOperator final : public LinearOperator {
 public:
  ComposeOperator(LinOpPtr outer, LinOpPtr inner)
      : outer_(std::move(outer)), inner_(std::move(inner)) {
    if (!outer_ || !inner_) throw std::invalid_argument("compose: null operator");
    if (outer_->cols() != inner_->rows())
      throw std::invalid_argument("compose: inner rows must match outer cols");
  }
  Eigen::Index rows() const override { return outer_->rows(); }
  Eigen::Index cols() const override { return inner_->cols(); }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const override {
    return outer_->apply(inner_->apply(x));
  }
  Eigen::VectorXd apply_adjoint(const Eigen::VectorXd& w) const override {
    return inner_->apply_adjoint(outer_->apply_adjoint(w));
  }

 private:
  LinOpPtr outer_, inner_;
};

}  // namespace

LinOpPtr dense_operator(Eigen::MatrixXd matrix) {
  return std::make_shared<DenseOperator>(std::move(matrix));
}
LinOpPtr haar_operator(Eigen::Index length, bool forward) {
  return std::make_shared<HaarOperator>(length, forward);
}
LinOpPtr convolution_operator(Eigen::VectorXd kernel, Eigen::Index length) {
  return std::make_shared<ConvolutionOperator>(std::move(kernel), length);
}
LinOpPtr mask_operator(std::vector<Eigen::Index> keep, Eigen::Index length) {
  return std::make_shared<MaskOperator>(std::move(keep), length);
}
LinOpPtr compose(LinOpPtr outer, LinOpPtr inner) {
  return std::make_shared<ComposeOperator>(std::move(outer), std::move(inner));
}

Eigen::VectorXd haar_forward(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  if (!is_power_of_two(n)) throw std::invalid_argument("haar_forward: length must be a power of two");
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  Eigen::VectorXd work = x, tmp(n);
  for (Eigen::Index len = n; len >= 2; len /= 2) {
    const Eigen::Index half = len / 2;
    for (Eigen::Index i = 0; i < half; ++i) {
      tmp[i] = (work[2 * i] + work[2 * i + 1]) * inv_sqrt2;
      tmp[half + i] = (work[2 * i] - work[2 * i + 1]) * inv_sqrt2;
    }
    work.head(len) = tmp.head(len);
  }
  return work;
}

Eigen::VectorXd haar_inverse(const Eigen::VectorXd& coeffs) {
  const Eigen::Index n = coeffs.size();
  if (!is_power_of_two(n)) throw std::invalid_argument("haar_inverse: length must be a power of two");
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  Eigen::VectorXd work = coeffs, tmp(n);
  for (Eigen::Index len = 2; len <= n; len *= 2) {
    const Eigen::Index half = len / 2;
    for (Eigen::Index i = 0; i < half; ++i) {
      tmp[2 * i] = (work[i] + work[half + i]) * inv_sqrt2;
      tmp[2 * i + 1] = (work[i] - work[half + i]) * inv_sqrt2;
    }
    work.head(len) = tmp.head(len);
  }
  return work;
}

Eigen::VectorXd circular_convolve(const Eigen::VectorXd& kernel, const Eigen::VectorXd& x) {
  const Eigen::Index m = kernel.size();
  const Eigen::Index n = x.size();
  if (m == 0) throw std::invalid_argument("circular_convolve: empty kernel");
  if (m > n) throw std::invalid_argument("circular_convolve: kernel longer than signal");
  const Eigen::Index center = (m - 1) / 2;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      Eigen::Index idx = (i - (j - center)) % n;
      if (idx < 0) idx += n;
      acc += kernel[j] * x[idx];
    }
    out[i] = acc;
  }
  return out;
}

Eigen::VectorXd gaussian_kernel(double sigma, int radius) {
  if (!(sigma > 0.0) || radius < 0) throw std::invalid_argument("gaussian_kernel: bad parameters");
  Eigen::VectorXd k(2 * radius + 1);
  for (int j = -radius; j <= radius; ++j)
    k[j + radius] = std::exp(-0.5 * (j / sigma) * (j / sigma));
  k /= k.sum();
  return k;
}

Eigen::MatrixXd to_dense(const LinearOperator& op) {
  Eigen::MatrixXd m(op.rows(), op.cols());
  Eigen::VectorXd e = Eigen::VectorXd::Zero(op.cols());
  for (Eigen::Index j = 0; j < op.cols(); ++j) {
    e[j] = 1.0;
    m.col(j) = op.apply(e);
    e[j] = 0.0;
  }
  return m;
}

NormEstimate operator_norm_estimate(const LinearOperator& op, double tol, int max_iters) {
  NormEstimate est;
  RngStream rng(0x5EEDCAFEF00DULL, 0);  // fixed internal stream, keeps the estimate deterministic
  Eigen::VectorXd v = rng.normal_vec(op.cols());
  v.normalize();
  double prev = 0.0;
  for (int it = 1; it <= max_iters; ++it) {
    Eigen::VectorXd av = op.apply(v);
    const double sigma = av.norm();
    est.iterations = it;
    if (sigma == 0.0) {
      // v in the null space; restart from a fresh direction.
      v = rng.normal_vec(op.cols());
      v.normalize();
      continue;
    }
    est.value = sigma;
    if (it > 1 && std::abs(sigma - prev) <= tol * std::max(1.0, sigma)) {
      est.converged = true;
      return est;
    }
    prev = sigma;
    v = op.apply_adjoint(av);
    v.normalize();
  }
  return est;
}

}  // namespace hadlang

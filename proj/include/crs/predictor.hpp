#pragma once

#include <Eigen/Core>

namespace crs {

/// Data prediction x_hat(x, alpha). Implementations must be deterministic and
/// safe to call concurrently.
class Predictor {
 public:
  virtual ~Predictor() = default;

  virtual Eigen::Index dim() const = 0;

  virtual void predict_data(const Eigen::Ref<const Eigen::VectorXd>& x, double alpha,
                            Eigen::Ref<Eigen::VectorXd> out) const = 0;

  Eigen::VectorXd predict_data(const Eigen::Ref<const Eigen::VectorXd>& x, double alpha) const {
    Eigen::VectorXd out(dim());
    predict_data(x, alpha, out);
    return out;
  }

  /// Noise prediction through x = alpha x_hat + sigma eps_hat.
  virtual Eigen::VectorXd predict_noise(const Eigen::Ref<const Eigen::VectorXd>& x,
                                        double alpha) const;
};

}  // namespace crs

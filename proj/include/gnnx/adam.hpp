#ifndef GNNX_ADAM_HPP_
#define GNNX_ADAM_HPP_

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace gnnx {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Each parameter tensor owns a slot; call
// BeginStep() once per iteration before updating the slots.
class Adam {
 public:
  explicit Adam(AdamOptions options) : options_(options) {}

  void BeginStep() { ++step_; }

  void Update(std::size_t slot, std::span<double> param, std::span<const double> grad) {
    if (param.size() != grad.size()) {
      throw std::invalid_argument("Adam: parameter and gradient sizes differ");
    }
    if (slot >= first_.size()) {
      first_.resize(slot + 1);
      second_.resize(slot + 1);
    }
    auto& m = first_[slot];
    auto& v = second_[slot];
    if (m.empty()) {
      m.assign(param.size(), 0.0);
      v.assign(param.size(), 0.0);
    }
    const double correction1 = 1.0 - std::pow(options_.beta1, step_);
    const double correction2 = 1.0 - std::pow(options_.beta2, step_);
    for (std::size_t i = 0; i < param.size(); ++i) {
      m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * grad[i];
      v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * grad[i] * grad[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      param[i] -= options_.learning_rate * m_hat / (std::sqrt(v_hat) + options_.eps);
    }
  }

  int step() const { return step_; }

 private:
  AdamOptions options_;
  int step_ = 0;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
};

}  // namespace gnnx

#endif  // GNNX_ADAM_HPP_

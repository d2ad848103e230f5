#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <string>

#include "agc/fdia.hpp"

namespace agc {

/// Secondary (AGC) controller contract. `observe` is called once per control
/// period with the possibly corrupted measurements and returns the per-area
/// commands P_C. Controllers do not saturate their output; the plant does.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual Eigen::VectorXd observe(const MeasurementFrame& frame) = 0;
  virtual void reset() = 0;
  virtual std::string name() const = 0;
};

/// Primary control only.
class ZeroController final : public Controller {
 public:
  explicit ZeroController(std::size_t areas) : areas_(areas) {}
  Eigen::VectorXd observe(const MeasurementFrame&) override {
    return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(areas_));
  }
  void reset() override {}
  std::string name() const override { return "zero"; }

 private:
  std::size_t areas_;
};

}  // namespace agc

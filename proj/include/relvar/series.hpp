#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "relvar/errors.hpp"

namespace relvar::mi {

// An ordered list of finite reals. Finiteness is checked once at construction
// so downstream numeric code never has to re-validate.
class ScalarSeries {
  public:
    explicit ScalarSeries(std::vector<double> values) : values_(std::move(values)) {
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!std::isfinite(values_[i])) {
                raise(errc::invalid_config,
                      "non-finite value at position " + std::to_string(i));
            }
        }
    }

    const std::vector<double>& values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

  private:
    std::vector<double> values_;
};

}  // namespace relvar::mi

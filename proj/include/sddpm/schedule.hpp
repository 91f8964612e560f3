#pragma once

#include <cmath>
#include <vector>

#include "sddpm/common.hpp"

namespace sddpm {

// Discrete DDPM noise schedule. All arrays are 1-indexed by diffusion step t
// through the accessors; storage is double regardless of compute precision so
// the identities hold to full precision.
//   alpha_t = 1 - beta_t,  alpha_bar_t = prod alpha,  a(t) = sqrt(alpha_bar_t),
//   sigma(t) = sqrt(1 - alpha_bar_t)
class NoiseSchedule {
  public:
    static NoiseSchedule linear(int64_t n, double beta_start, double beta_end) {
        check_arg(n >= 1, "schedule: need at least one step");
        check_arg(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0,
                  strfmt("schedule: invalid beta range [%g, %g]", beta_start, beta_end));
        std::vector<double> betas(static_cast<size_t>(n));
        for (int64_t i = 0; i < n; ++i) {
            double f = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
            betas[static_cast<size_t>(i)] = beta_start + (beta_end - beta_start) * f;
        }
        return NoiseSchedule(std::move(betas));
    }

    static NoiseSchedule from_betas(std::vector<double> betas) { return NoiseSchedule(std::move(betas)); }

    int64_t steps() const { return static_cast<int64_t>(beta_.size()); }

    double beta(int64_t t) const { return beta_[idx(t)]; }
    double alpha(int64_t t) const { return alpha_[idx(t)]; }
    double alpha_bar(int64_t t) const { return alpha_bar_[idx(t)]; }
    double a(int64_t t) const { return a_[idx(t)]; }
    double sigma(int64_t t) const { return sigma_[idx(t)]; }

    // Posterior variance beta_tilde_t = beta_t (1 - abar_{t-1}) / (1 - abar_t);
    // zero at t = 1.
    double beta_tilde(int64_t t) const {
        idx(t);
        if (t == 1) return 0.0;
        return beta(t) * (1.0 - alpha_bar(t - 1)) / (1.0 - alpha_bar(t));
    }

  private:
    explicit NoiseSchedule(std::vector<double> betas) : beta_(std::move(betas)) {
        check_arg(!beta_.empty(), "schedule: empty beta array");
        int64_t n = steps();
        alpha_.resize(static_cast<size_t>(n));
        alpha_bar_.resize(static_cast<size_t>(n));
        a_.resize(static_cast<size_t>(n));
        sigma_.resize(static_cast<size_t>(n));
        double prod = 1.0;
        for (int64_t i = 0; i < n; ++i) {
            double b = beta_[static_cast<size_t>(i)];
            check_arg(b > 0.0 && b < 1.0, strfmt("schedule: beta_%lld = %g out of (0,1)", static_cast<long long>(i + 1), b));
            if (i > 0)
                check_arg(b >= beta_[static_cast<size_t>(i - 1)], "schedule: betas must be nondecreasing");
            alpha_[static_cast<size_t>(i)] = 1.0 - b;
            prod *= alpha_[static_cast<size_t>(i)];
            alpha_bar_[static_cast<size_t>(i)] = prod;
            a_[static_cast<size_t>(i)] = std::sqrt(prod);
            sigma_[static_cast<size_t>(i)] = std::sqrt(1.0 - prod);
        }
    }

    size_t idx(int64_t t) const {
        check_arg(t >= 1 && t <= steps(), strfmt("schedule: step %lld outside [1, %lld]", static_cast<long long>(t),
                                                 static_cast<long long>(steps())));
        return static_cast<size_t>(t - 1);
    }

    std::vector<double> beta_, alpha_, alpha_bar_, a_, sigma_;
};

inline NoiseSchedule make_schedule(int64_t n, double beta_start, double beta_end) {
    return NoiseSchedule::linear(n, beta_start, beta_end);
}

}  // namespace sddpm

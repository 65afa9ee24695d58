#include "pdmp/tank/params.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pdmp/hash.hpp"

namespace pdmp::tank {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("invalid tank parameter: " + what);
}

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void TankParams::validate() const {
  require(positive(b1) && positive(b2) && positive(bc) && positive(bd),
          "b1, b2, bc, bd must be positive");
  require(std::isfinite(theta_ref), "theta_ref must be finite");
  require(positive(theta_in), "theta_in must be positive");
  for (double li : l) require(std::isfinite(li) && li >= 0.0, "l must be nonnegative");
  require(positive(G), "G must be positive");
  require(positive(K), "K must be positive");
  require(p_control >= 0.0 && p_control <= 1.0, "p_control must lie in [0, 1]");
  require(stuck_on_prob >= 0.0 && stuck_on_prob <= 1.0,
          "stuck_on_prob must lie in [0, 1]");
  require(positive(h_dry) && h_dry < h_low && h_low < h_high && h_high < h_over,
          "thresholds must satisfy 0 < h_dry < h_low < h_high < h_over");
  require(h0 > h_dry && h0 < h_over, "h0 must lie strictly between h_dry and h_over");
  require(theta_in < theta_hot, "theta_in must be below theta_hot");
  require(theta0 >= theta_in && theta0 < theta_hot, "theta0 must lie in [theta_in, theta_hot)");
  require(positive(horizon), "horizon must be positive");
  require(positive(alpha), "alpha must be positive");
  require(theta_normal > theta_in && theta_normal < theta_hot,
          "theta_normal must lie in (theta_in, theta_hot)");
}

std::uint64_t TankParams::dynamics_hash() const noexcept {
  Fnv1a h;
  h.str("tank-dynamics-v1");
  for (double v : {b1, b2, bc, bd, theta_ref, theta_in, l[0], l[1], l[2], G, K, p_control,
                   stuck_on_prob, h0, theta0, h_dry, h_low, h_high, h_over, theta_hot,
                   horizon}) {
    h.f64(v);
  }
  return h.value();
}

std::uint64_t TankParams::reward_hash() const noexcept {
  Fnv1a h;
  h.str("tank-reward-v1");
  for (double v : {alpha, theta_normal, theta_hot, h_dry, h_low, h_high, h_over}) h.f64(v);
  return h.value();
}

}  // namespace pdmp::tank

#include "pdmp/tank/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include <boost/numeric/odeint.hpp>

#include "pdmp/simulator.hpp"

namespace pdmp::tank {
namespace {

namespace odeint = boost::numeric::odeint;

constexpr double kBisectionTolerance = 1e-9;  // hours

constexpr std::array<UnitState, kUnits> kFillCommand{UnitState::On, UnitState::On,
                                                     UnitState::Off};
constexpr std::array<UnitState, kUnits> kDrainCommand{UnitState::Off, UnitState::Off,
                                                      UnitState::On};

double theta_closed_form(const TankParams& p, int inflow, int slope, double h, double h1,
                         double theta, double u) {
  if (slope == 0) {
    if (inflow > 0) {
      const double eq = p.theta_in + p.K / (inflow * p.G);
      return eq + (theta - eq) * std::exp(-inflow * p.G * u / h);
    }
    return theta + p.K * u / h;
  }
  if (inflow > 0) {
    const double eq = p.theta_in + p.K / (inflow * p.G);
    return eq + (theta - eq) * std::pow(h1 / h, -static_cast<double>(inflow) / slope);
  }
  return theta + p.K / (slope * p.G) * std::log(h1 / h);
}

double theta_adaptive(const TankParams& p, int inflow, int slope, double h, double theta,
                      double u) {
  using Vec = std::array<double, 1>;
  const double rate = slope * p.G;
  auto rhs = [&](const Vec& y, Vec& dy, double tau) {
    dy[0] = (inflow * p.G * (p.theta_in - y[0]) + p.K) / (h + rate * tau);
  };
  auto stepper = odeint::make_controlled<odeint::runge_kutta_cash_karp54<Vec>>(1e-12, 1e-9);
  Vec y{theta};
  odeint::integrate_adaptive(stepper, rhs, y, 0.0, u, std::min(u, 1e-2));
  return y[0];
}

}  // namespace

double temperature_factor(const TankParams& p, double theta) noexcept {
  const double d = theta - p.theta_ref;
  return (p.b1 * std::exp(p.bc * d) + p.b2 * std::exp(-p.bd * d)) / (p.b1 + p.b2);
}

double unit_intensity(const TankParams& p, const TankMode& mode, int unit,
                      double theta) noexcept {
  if (is_stuck(mode.units[unit])) return 0.0;
  return temperature_factor(p, theta) * p.l[unit];
}

double live_rate_sum(const TankParams& p, const TankMode& mode) noexcept {
  double sum = 0.0;
  for (int i = 0; i < kUnits; ++i) {
    if (!is_stuck(mode.units[i])) sum += p.l[i];
  }
  return sum;
}

LevelTemperature tank_flow(const TankParams& p, const TankMode& mode, double h, double theta,
                           double u, ThetaSolver solver) {
  if (u == 0.0) return {h, theta};
  const int inflow = mode.inflow();
  const int slope = mode.level_slope();
  const double h1 = h + slope * p.G * u;
  if (!(h1 > 0.0) || !(h > 0.0)) {
    throw ModelEvaluationError("tank flow drove the level to a nonpositive value");
  }
  const double theta1 = solver == ThetaSolver::ClosedForm
                            ? theta_closed_form(p, inflow, slope, h, h1, theta, u)
                            : theta_adaptive(p, inflow, slope, h, theta, u);
  return {h1, theta1};
}

BoundaryHit next_boundary(const TankParams& p, const HybridState& s, ThetaSolver solver) {
  const TankMode mode = TankMode::decode(s.mode);
  const double h = s.x[0];
  const double rate = mode.level_slope() * p.G;

  BoundaryHit hit{p.horizon - s.t, Boundary::Horizon};
  auto consider = [&](double threshold, Boundary which) {
    const double dt = (threshold - h) / rate;
    if (dt > 0.0 && dt < hit.time) hit = {dt, which};
  };
  if (rate < 0.0) {
    consider(p.h_dry, Boundary::Dry);
    if (mode.controller_working()) consider(p.h_low, Boundary::Low);
  } else if (rate > 0.0) {
    consider(p.h_over, Boundary::Overflow);
    if (mode.controller_working()) consider(p.h_high, Boundary::High);
  }

  // Temperature is monotone along a flow, so a crossing exists iff the end
  // point is already past the threshold.
  const double end_theta = tank_flow(p, mode, h, s.x[1], hit.time, solver).theta;
  if (end_theta >= p.theta_hot) {
    double lo = 0.0;
    double hi = hit.time;
    while (hi - lo > kBisectionTolerance) {
      const double mid = 0.5 * (lo + hi);
      if (tank_flow(p, mode, h, s.x[1], mid, solver).theta >= p.theta_hot) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    hit = {hi, Boundary::Hot};
  }
  return hit;
}

TopEvent top_event(const TankParams& p, const HybridState& s) noexcept {
  if (s.x[0] <= p.h_dry) return TopEvent::DryOut;
  if (s.x[0] >= p.h_over) return TopEvent::Overflow;
  if (s.x[1] >= p.theta_hot) return TopEvent::Hot;
  return TopEvent::None;
}

TankModel::TankModel(TankParams params, ThetaSolver solver)
    : params_(params), solver_(solver) {
  params_.validate();
}

HybridState TankModel::initial_state() const {
  return HybridState{TankMode{}.encode(), {params_.h0, params_.theta0}, 0.0};
}

StateBox TankModel::state_box() const {
  return StateBox{{params_.h_dry, params_.theta_in},
                  {params_.h_over, params_.theta_hot},
                  params_.horizon};
}

HybridState TankModel::flow(const HybridState& s, double u) const {
  const auto [h, theta] = tank_flow(params_, TankMode::decode(s.mode), s.x[0], s.x[1], u, solver_);
  return HybridState{s.mode, {h, theta}, s.t + u};
}

double TankModel::boundary_time(const HybridState& s) const {
  return next_boundary(params_, s, solver_).time;
}

HybridState TankModel::boundary_state(const HybridState& s, double tstar) const {
  const BoundaryHit hit = next_boundary(params_, s, solver_);
  HybridState out = flow(s, tstar);
  if (tstar != hit.time) return out;
  switch (hit.which) {
    case Boundary::Dry: out.x[0] = params_.h_dry; break;
    case Boundary::Low: out.x[0] = params_.h_low; break;
    case Boundary::High: out.x[0] = params_.h_high; break;
    case Boundary::Overflow: out.x[0] = params_.h_over; break;
    case Boundary::Hot: out.x[1] = params_.theta_hot; break;
    case Boundary::Horizon: out.t = params_.horizon; break;
  }
  return out;
}

double TankModel::intensity(const HybridState& s) const {
  return temperature_factor(params_, s.x[1]) * live_rate_sum(params_, TankMode::decode(s.mode));
}

double TankModel::intensity_bound(ModeId mode) const {
  // a(theta) is convex, so on [theta_in, theta_hot] it peaks at an end.
  const double a_max = std::max(temperature_factor(params_, params_.theta_hot),
                                temperature_factor(params_, params_.theta_in));
  return a_max * live_rate_sum(params_, TankMode::decode(mode));
}

double TankModel::segment_intensity_bound(const HybridState& s, double span) const {
  const TankMode mode = TankMode::decode(s.mode);
  const double rates = live_rate_sum(params_, mode);
  if (rates == 0.0) return 0.0;
  if (!std::isfinite(span)) return intensity_bound(s.mode);
  // theta is monotone along the flow and a(theta) is convex, so the maximum
  // over the segment sits at one of its ends.
  const double theta_end = flow(s, span).x[1];
  return std::max(temperature_factor(params_, s.x[1]), temperature_factor(params_, theta_end)) *
         rates;
}

HybridState TankModel::kernel(const HybridState& at, JumpKind kind, RandomStream& rng) const {
  if (is_absorbing(at)) throw std::logic_error("tank kernel invoked in an absorbing state");
  TankMode mode = TankMode::decode(at.mode);
  HybridState out = at;

  if (kind == JumpKind::Random) {
    const double total = live_rate_sum(params_, mode);
    if (!(total > 0.0)) throw std::logic_error("random jump in a mode with no live unit");
    // a(theta) multiplies every rate, so the failing unit is chosen by l_i.
    double pick = rng.uniform() * total;
    int unit = -1;
    for (int i = 0; i < kUnits; ++i) {
      if (is_stuck(mode.units[i])) continue;
      unit = i;
      if (pick < params_.l[i]) break;
      pick -= params_.l[i];
    }
    mode.units[unit] =
        rng.uniform() < params_.stuck_on_prob ? UnitState::StuckOn : UnitState::StuckOff;
    out.mode = mode.encode();
    return out;
  }

  if (kind != JumpKind::Boundary || !mode.controller_working()) {
    throw std::logic_error("tank kernel: no control law applies here");
  }
  const double h = at.x[0];
  const bool low = h == params_.h_low && mode.level_slope() < 0;
  const bool high = h == params_.h_high && mode.level_slope() > 0;
  if (!low && !high) throw std::logic_error("tank kernel: boundary is not a control threshold");

  if (rng.uniform() < params_.p_control) {
    mode = mode.with_command(low ? kFillCommand : kDrainCommand);
  } else {
    mode.controller = Controller::Failed;
  }
  out.mode = mode.encode();
  return out;
}

TerminalCause TankModel::absorption(const HybridState& s) const {
  if (top_event(params_, s) != TopEvent::None) return TerminalCause::TopEvent;
  if (s.t >= params_.horizon) return TerminalCause::Horizon;
  return TerminalCause::None;
}

}  // namespace pdmp::tank

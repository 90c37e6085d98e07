//! Cart-pole with sampled physics, discretized onto a grid shared by the family.
//!
//! Each `(cell, action)` pair maps deterministically to the cell containing
//! one explicit Euler step taken from the cell centre. Leaving the angle or
//! track bounds moves to a single absorbing failure state.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{TabularMdp, Transition};
use crate::seed;

pub const PUSH_LEFT: usize = 0;
pub const PUSH_RIGHT: usize = 1;

/// Closed interval a physical parameter is sampled from uniformly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub const fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        // Always draw, so the stream stays aligned when a range is a point.
        let u: f64 = rng.gen();
        self.lo + u * (self.hi - self.lo)
    }

    fn check(&self, name: &str, positive: bool) -> Result<()> {
        let ok = self.lo.is_finite()
            && self.hi.is_finite()
            && self.lo <= self.hi
            && if positive { self.lo > 0.0 } else { self.lo >= 0.0 };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("invalid range for {name}: [{}, {}]", self.lo, self.hi)))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CartPoleParams {
    /// Half-length of the pole, as in the classic formulation.
    pub pole_length: Range,
    pub pole_mass: Range,
    pub cart_mass: Range,
    pub gravity: Range,
    pub force_magnitude: Range,
    pub fail_angle_deg: Range,
    pub angle_bins: usize,
    pub angular_velocity_bins: usize,
    pub position_bins: usize,
    pub velocity_bins: usize,
    pub angular_velocity_limit: f64,
    pub position_limit: f64,
    pub velocity_limit: f64,
    pub time_step: f64,
    pub max_episode_steps: usize,
    pub discount: f64,
}

impl Default for CartPoleParams {
    fn default() -> Self {
        Self {
            pole_length: Range::new(0.3, 0.7),
            pole_mass: Range::new(0.05, 0.2),
            cart_mass: Range::new(0.8, 1.2),
            gravity: Range::new(8.0, 11.0),
            force_magnitude: Range::new(7.0, 13.0),
            fail_angle_deg: Range::new(10.0, 15.0),
            angle_bins: 11,
            angular_velocity_bins: 7,
            position_bins: 5,
            velocity_bins: 5,
            angular_velocity_limit: 2.0,
            position_limit: 2.4,
            velocity_limit: 2.0,
            time_step: 0.05,
            max_episode_steps: 200,
            discount: 0.99,
        }
    }
}

/// One concrete physics setting drawn from [`CartPoleParams`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartPolePhysics {
    pub pole_length: f64,
    pub pole_mass: f64,
    pub cart_mass: f64,
    pub gravity: f64,
    pub force_magnitude: f64,
    pub fail_angle_deg: f64,
}

/// Continuous state `(angle, angular velocity, position, velocity)`.
pub type PoleState = [f64; 4];

impl CartPolePhysics {
    pub fn fail_angle(&self) -> f64 {
        self.fail_angle_deg.to_radians()
    }

    /// One explicit Euler step of the classic cart-pole equations.
    pub fn euler_step(&self, state: PoleState, action: usize, dt: f64) -> PoleState {
        let [theta, theta_dot, x, x_dot] = state;
        let force = if action == PUSH_RIGHT {
            self.force_magnitude
        } else {
            -self.force_magnitude
        };
        let total_mass = self.pole_mass + self.cart_mass;
        let pm_len = self.pole_mass * self.pole_length;
        let (sin, cos) = theta.sin_cos();
        let temp = (force + pm_len * theta_dot * theta_dot * sin) / total_mass;
        let theta_acc = (self.gravity * sin - cos * temp)
            / (self.pole_length * (4.0 / 3.0 - self.pole_mass * cos * cos / total_mass));
        let x_acc = temp - pm_len * theta_acc * cos / total_mass;
        [
            theta + dt * theta_dot,
            theta_dot + dt * theta_acc,
            x + dt * x_dot,
            x_dot + dt * x_acc,
        ]
    }
}

/// The family-wide discretization grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CartPoleGrid {
    bins: [usize; 4],
    limits: [f64; 4],
}

impl CartPoleGrid {
    pub fn new(params: &CartPoleParams) -> Self {
        Self {
            bins: [
                params.angle_bins,
                params.angular_velocity_bins,
                params.position_bins,
                params.velocity_bins,
            ],
            limits: [
                params.fail_angle_deg.hi.to_radians(),
                params.angular_velocity_limit,
                params.position_limit,
                params.velocity_limit,
            ],
        }
    }

    pub fn num_cells(&self) -> usize {
        self.bins.iter().product()
    }

    /// Index of the absorbing failure state (one past the last cell).
    pub fn failure_state(&self) -> usize {
        self.num_cells()
    }

    fn width(&self, dim: usize) -> f64 {
        2.0 * self.limits[dim] / self.bins[dim] as f64
    }

    fn bin(&self, dim: usize, value: f64) -> usize {
        let raw = ((value + self.limits[dim]) / self.width(dim)).floor();
        raw.clamp(0.0, (self.bins[dim] - 1) as f64) as usize
    }

    pub fn cell_of(&self, state: PoleState) -> usize {
        (0..4).fold(0, |idx, d| idx * self.bins[d] + self.bin(d, state[d]))
    }

    pub fn cell_center(&self, cell: usize) -> PoleState {
        let mut rest = cell;
        let mut out = [0.0; 4];
        for d in (0..4).rev() {
            let i = rest % self.bins[d];
            rest /= self.bins[d];
            out[d] = -self.limits[d] + (i as f64 + 0.5) * self.width(d);
        }
        out
    }
}

impl CartPoleParams {
    pub fn validate(&self) -> Result<()> {
        self.pole_length.check("pole_length", true)?;
        self.pole_mass.check("pole_mass", true)?;
        self.cart_mass.check("cart_mass", true)?;
        self.gravity.check("gravity", false)?;
        self.force_magnitude.check("force_magnitude", false)?;
        self.fail_angle_deg.check("fail_angle_deg", true)?;
        let bins = [
            self.angle_bins,
            self.angular_velocity_bins,
            self.position_bins,
            self.velocity_bins,
        ];
        if bins.iter().any(|&b| b == 0 || b % 2 == 0) {
            return Err(Error::config("cart-pole bin counts must be odd and positive"));
        }
        let limits = [self.angular_velocity_limit, self.position_limit, self.velocity_limit];
        if limits.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
            return Err(Error::config("cart-pole state limits must be positive"));
        }
        if !(self.time_step > 0.0) || self.max_episode_steps == 0 {
            return Err(Error::config("time_step and max_episode_steps must be positive"));
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return Err(Error::config("discount must lie in [0, 1]"));
        }
        let angle_limit = self.fail_angle_deg.hi;
        let upright_half_width = angle_limit / self.angle_bins as f64;
        if self.fail_angle_deg.lo <= upright_half_width {
            return Err(Error::config(format!(
                "angle grid too coarse: upright cell spans ±{upright_half_width:.3}° but tasks may fail at {:.3}°",
                self.fail_angle_deg.lo
            )));
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.angle_bins * self.angular_velocity_bins * self.position_bins * self.velocity_bins + 1
    }

    pub fn sample_physics(&self, seed: u64) -> CartPolePhysics {
        let mut rng = seed::rng(seed);
        CartPolePhysics {
            pole_length: self.pole_length.sample(&mut rng),
            pole_mass: self.pole_mass.sample(&mut rng),
            cart_mass: self.cart_mass.sample(&mut rng),
            gravity: self.gravity.sample(&mut rng),
            force_magnitude: self.force_magnitude.sample(&mut rng),
            fail_angle_deg: self.fail_angle_deg.sample(&mut rng),
        }
    }
}

/// Discretizes the cart-pole under the given physics onto the family grid.
pub fn discretize(params: &CartPoleParams, physics: &CartPolePhysics) -> Result<TabularMdp> {
    params.validate()?;
    let grid = CartPoleGrid::new(params);
    let cells = grid.num_cells();
    let failure = grid.failure_state();
    let fail_angle = physics.fail_angle();

    let mut dynamics = Vec::with_capacity((cells + 1) * 2);
    for cell in 0..cells {
        let center = grid.cell_center(cell);
        for action in [PUSH_LEFT, PUSH_RIGHT] {
            let next = physics.euler_step(center, action, params.time_step);
            let failed = !next.iter().all(|v| v.is_finite())
                || next[0].abs() > fail_angle
                || next[2].abs() > params.position_limit;
            dynamics.push(vec![if failed {
                Transition::new(failure, 0.0, 1.0)
            } else {
                Transition::new(grid.cell_of(next), 1.0, 1.0)
            }]);
        }
    }
    dynamics.push(vec![Transition::new(failure, 0.0, 1.0)]);
    dynamics.push(vec![Transition::new(failure, 0.0, 1.0)]);

    let mut mu = vec![0.0; cells + 1];
    mu[grid.cell_of([0.0; 4])] = 1.0;
    TabularMdp::new(
        cells + 1,
        2,
        dynamics,
        params.discount,
        mu,
        &[failure],
        params.max_episode_steps,
    )
}

/// Samples physics from `seed` and discretizes it.
pub fn generate_cartpole(seed: u64, params: &CartPoleParams) -> Result<TabularMdp> {
    params.validate()?;
    discretize(params, &params.sample_physics(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{rollout, SoftmaxPolicy};

    #[test]
    fn no_gravity_no_force_never_falls() {
        let params = CartPoleParams {
            gravity: Range::point(0.0),
            force_magnitude: Range::point(0.0),
            discount: 1.0,
            max_episode_steps: 150,
            ..CartPoleParams::default()
        };
        let mdp = generate_cartpole(3, &params).unwrap();
        let policy = SoftmaxPolicy::uniform(mdp.num_states(), 2);
        for seed in 0..5 {
            let t = rollout(&mdp, &policy, seed).unwrap();
            assert_eq!(t.return_value, 150.0);
        }
    }

    #[test]
    fn same_seed_same_dynamics() {
        let p = CartPoleParams::default();
        assert_eq!(generate_cartpole(9, &p).unwrap(), generate_cartpole(9, &p).unwrap());
        assert_ne!(generate_cartpole(9, &p).unwrap(), generate_cartpole(10, &p).unwrap());
    }

    #[test]
    fn transition_matches_hand_stepped_dynamics() {
        let params = CartPoleParams::default();
        let physics = params.sample_physics(17);
        let mdp = discretize(&params, &physics).unwrap();

        // Cell with angle bin 6, angular-velocity bin 3, position bin 2, velocity bin 3.
        let (ia, iw, ix, iv) = (6usize, 3usize, 2usize, 3usize);
        let cell = ((ia * 7 + iw) * 5 + ix) * 5 + iv;
        let a_lim = 15f64.to_radians();
        let center = |i: usize, lim: f64, n: usize| -lim + (i as f64 + 0.5) * 2.0 * lim / n as f64;
        let (th, thd, x, xd) = (
            center(ia, a_lim, 11),
            center(iw, 2.0, 7),
            center(ix, 2.4, 5),
            center(iv, 2.0, 5),
        );

        // Classic cart-pole equations with a push to the right.
        let f = physics.force_magnitude;
        let (mp, mc, l, g) = (physics.pole_mass, physics.cart_mass, physics.pole_length, physics.gravity);
        let tm = mp + mc;
        let temp = (f + mp * l * thd * thd * th.sin()) / tm;
        let th_acc = (g * th.sin() - th.cos() * temp) / (l * (4.0 / 3.0 - mp * th.cos().powi(2) / tm));
        let x_acc = temp - mp * l * th_acc * th.cos() / tm;
        let dt = 0.05;
        let next = [th + dt * thd, thd + dt * th_acc, x + dt * xd, xd + dt * x_acc];

        let to_bin = |v: f64, lim: f64, n: usize| {
            (((v + lim) / (2.0 * lim / n as f64)).floor()).clamp(0.0, (n - 1) as f64) as usize
        };
        let failed = next[0].abs() > physics.fail_angle_deg.to_radians() || next[2].abs() > 2.4;
        let expected = if failed {
            11 * 7 * 5 * 5
        } else {
            ((to_bin(next[0], a_lim, 11) * 7 + to_bin(next[1], 2.0, 7)) * 5
                + to_bin(next[2], 2.4, 5))
                * 5
                + to_bin(next[3], 2.0, 5)
        };
        let t = mdp.transitions(cell, PUSH_RIGHT);
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].next_state, expected);
        assert_eq!(t[0].reward, if failed { 0.0 } else { 1.0 });
    }

    #[test]
    fn coarse_angle_grid_is_config_error() {
        let p = CartPoleParams {
            angle_bins: 3,
            fail_angle_deg: Range::new(4.0, 15.0),
            ..CartPoleParams::default()
        };
        assert!(generate_cartpole(1, &p).unwrap_err().is_config());
    }

    #[test]
    fn shares_state_encoding_across_family() {
        let p = CartPoleParams::default();
        let a = generate_cartpole(1, &p).unwrap();
        let b = generate_cartpole(2, &p).unwrap();
        assert!(a.same_shape(&b));
        assert_eq!(a.num_states(), 11 * 7 * 5 * 5 + 1);
    }
}

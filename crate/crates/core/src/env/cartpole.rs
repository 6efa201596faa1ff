use std::f64::consts::PI;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{Environment, Interval, StartRegion};
use crate::error::{Error, Result};
use crate::fuzzy::ActionBound;
use crate::scalar::{all_finite, Scalar};

/// Cart-pole state in the order used by state vectors: pole angle (0 is
/// upright), angular velocity, cart position, cart velocity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartPoleState<F> {
    pub theta: F,
    pub theta_dot: F,
    pub rho: F,
    pub rho_dot: F,
}

impl<F: Scalar> CartPoleState<F> {
    pub fn to_vec(self) -> Vec<F> {
        vec![self.theta, self.theta_dot, self.rho, self.rho_dot]
    }

    pub fn from_slice(s: &[F]) -> Result<Self> {
        match s {
            [theta, theta_dot, rho, rho_dot] => Ok(Self {
                theta: *theta,
                theta_dot: *theta_dot,
                rho: *rho,
                rho_dot: *rho_dot,
            }),
            _ => Err(Error::structure(format!("cart-pole state has 4 entries, got {}", s.len()))),
        }
    }
}

/// Frictionless cart-pole swing-up on an unbounded track.
///
/// Integrated with semi-implicit Euler; the angle is wrapped into `[-pi, pi]`
/// so the pole can swing through. Reward is 0 while the successor state has
/// `|theta| < 0.5` and `|rho| < 0.5`, otherwise -1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartPole<F> {
    pub cart_mass: F,
    pub pole_mass: F,
    /// Distance from the hinge to the pole's center of mass.
    pub half_length: F,
    pub gravity: F,
    pub dt: F,
    pub max_force: F,
}

impl<F: Scalar> Default for CartPole<F> {
    fn default() -> Self {
        Self {
            cart_mass: F::of(1.0),
            pole_mass: F::of(0.1),
            half_length: F::of(0.5),
            gravity: F::of(9.8),
            dt: F::of(0.02),
            max_force: F::of(30.0),
        }
    }
}

impl<F: Scalar> CartPole<F> {
    pub fn new() -> Self {
        Self::default()
    }

    /// `[-pi, pi] x {0} x {0} x {0}`: where recorded trajectories begin.
    pub fn dataset_region() -> StartRegion<F> {
        let pi = F::of(PI);
        StartRegion::new(vec![
            Interval::new(-pi, pi),
            Interval::point(F::zero()),
            Interval::point(F::zero()),
            Interval::point(F::zero()),
        ])
    }

    /// `[-pi, pi] x {0} x [-0.5, 0.5] x {0}`: training and test start states.
    pub fn evaluation_region() -> StartRegion<F> {
        let pi = F::of(PI);
        StartRegion::new(vec![
            Interval::new(-pi, pi),
            Interval::point(F::zero()),
            Interval::new(F::of(-0.5), F::of(0.5)),
            Interval::point(F::zero()),
        ])
    }

    pub fn reward(next: &[F]) -> F {
        let limit = F::of(0.5);
        if next[0].abs() < limit && next[2].abs() < limit {
            F::zero()
        } else {
            -F::one()
        }
    }

    /// Mechanical energy with the potential measured from the hanging position.
    pub fn energy(&self, s: &[F]) -> F {
        let (theta, omega, v) = (s[0], s[1], s[3]);
        let (m, l) = (self.pole_mass, self.half_length);
        let half = F::of(0.5);
        let cart = half * self.cart_mass * v * v;
        let vx = v + l * theta.cos() * omega;
        let vy = -l * theta.sin() * omega;
        let pole = half * m * (vx * vx + vy * vy) + half * (m * l * l / F::of(3.0)) * omega * omega;
        let potential = m * self.gravity * l * (F::one() + theta.cos());
        cart + pole + potential
    }

    pub fn wrap_angle(theta: F) -> F {
        let pi = F::of(PI);
        let two_pi = F::of(2.0 * PI);
        let mut t = (theta + pi) % two_pi;
        if t < F::zero() {
            t += two_pi;
        }
        t - pi
    }
}

impl<F: Scalar> Environment<F> for CartPole<F> {
    fn name(&self) -> String {
        "cartpole-swingup".into()
    }

    fn state_dim(&self) -> usize {
        4
    }

    fn action_bounds(&self) -> Vec<ActionBound<F>> {
        vec![ActionBound::symmetric(self.max_force)]
    }

    fn feature_scales(&self) -> Vec<F> {
        vec![F::of(PI), F::of(5.0), F::one(), F::of(2.0)]
    }

    #[inline]
    fn step_into(&self, state: &[F], action: &[F], next: &mut [F]) -> Result<F> {
        if state.len() != 4 || action.len() != 1 || next.len() != 4 {
            return Err(Error::structure("cart-pole expects a 4-d state and 1-d action"));
        }
        if !all_finite(state) || !action[0].is_finite() {
            return Err(Error::Domain(format!("non-finite cart-pole input {state:?} / {action:?}")));
        }
        let force = action[0].max(-self.max_force).min(self.max_force);
        let (theta, omega, rho, v) = (state[0], state[1], state[2], state[3]);
        let total = self.cart_mass + self.pole_mass;
        let pml = self.pole_mass * self.half_length;
        let (sin, cos) = (theta.sin(), theta.cos());

        let temp = (force + pml * omega * omega * sin) / total;
        let theta_acc = (self.gravity * sin - cos * temp)
            / (self.half_length * (F::of(4.0 / 3.0) - self.pole_mass * cos * cos / total));
        let rho_acc = temp - pml * theta_acc * cos / total;

        let omega_next = omega + self.dt * theta_acc;
        let v_next = v + self.dt * rho_acc;
        let theta_next = theta + self.dt * omega_next;
        next[0] = if theta_next.abs() > F::of(PI) { Self::wrap_angle(theta_next) } else { theta_next };
        next[1] = omega_next;
        next[2] = rho + self.dt * v_next;
        next[3] = v_next;
        Ok(Self::reward(next))
    }

    fn sample_initial(&self, region: &StartRegion<F>, rng: &mut dyn RngCore) -> Vec<F> {
        region.sample(rng)
    }
}

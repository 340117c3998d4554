//! Built-in benchmark problems.
//!
//! All four ship with analytically understood behavior and are referenced
//! by name from experiment configs:
//!
//! - `uniform-f`: every action identical (`a = 1`, `b = c = 0`, `f = 1`,
//!   `g = 0` on `[0,1]`). The regularized value is
//!   `(1 + eps * H(0)) x (1 - x) / 2`, the control is uniform.
//! - `two-action-gap`: two identical diffusions with rewards 0 and 1; the
//!   residual gap is exactly 1 everywhere, which makes it the canonical
//!   exact-regularization benchmark.
//! - `sign-switch-drift`: reward difference `f1 - f2 = x - 1/2` changes sign
//!   inside the domain, forcing a control switch and a curved value.
//! - `box-2d`: two actions with different diagonal diffusions on the unit
//!   square.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{constant, ActionCoefficients, ActionModel, BoxDomain};

fn unit_interval_action(a: f64, reward: crate::model::ScalarField) -> ActionCoefficients {
    ActionCoefficients {
        diffusion: vec![constant(a)],
        drift: vec![constant(0.0)],
        discount: constant(0.0),
        reward,
    }
}

/// `K` identical actions with unit diffusion and unit reward on `[0, 1]`.
pub fn uniform_f(num_actions: usize) -> ActionModel {
    ActionModel {
        dim: 1,
        domain: BoxDomain::new(vec![0.0], vec![1.0]).unwrap(),
        ellipticity: 2.0,
        actions: (0..num_actions)
            .map(|_| unit_interval_action(1.0, constant(1.0)))
            .collect(),
        exit_reward: constant(0.0),
    }
}

/// Two actions, rewards 0 and 1, identical unit diffusions on `[0, 1]`.
pub fn two_action_gap() -> ActionModel {
    ActionModel {
        dim: 1,
        domain: BoxDomain::new(vec![0.0], vec![1.0]).unwrap(),
        ellipticity: 2.0,
        actions: vec![
            unit_interval_action(1.0, constant(0.0)),
            unit_interval_action(1.0, constant(1.0)),
        ],
        exit_reward: constant(0.0),
    }
}

/// Two actions whose reward difference `x - 1/2` switches sign at the
/// domain midpoint.
pub fn sign_switch_drift() -> ActionModel {
    ActionModel {
        dim: 1,
        domain: BoxDomain::new(vec![0.0], vec![1.0]).unwrap(),
        ellipticity: 2.0,
        actions: vec![
            unit_interval_action(1.0, Arc::new(|x: &[f64]| x[0] - 0.5)),
            unit_interval_action(1.0, constant(0.0)),
        ],
        exit_reward: constant(0.0),
    }
}

/// Two actions with different diagonal diffusions on the unit square.
pub fn box_2d() -> ActionModel {
    let action = |a11: f64, a22: f64, reward: crate::model::ScalarField| ActionCoefficients {
        diffusion: vec![constant(a11), constant(0.0), constant(a22)],
        drift: vec![constant(0.0), constant(0.0)],
        discount: constant(0.0),
        reward,
    };
    ActionModel {
        dim: 2,
        domain: BoxDomain::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap(),
        ellipticity: 1.0,
        actions: vec![
            action(1.0, 0.5, constant(1.0)),
            action(
                0.5,
                1.0,
                Arc::new(|x: &[f64]| 1.0 + 0.5 * (std::f64::consts::PI * x[0]).sin()),
            ),
        ],
        exit_reward: constant(0.0),
    }
}

/// Looks up a problem by its config name.
pub fn by_name(name: &str, num_actions: usize) -> Result<ActionModel> {
    match name {
        "uniform-f" => Ok(uniform_f(num_actions)),
        "two-action-gap" => Ok(two_action_gap()),
        "sign-switch-drift" => Ok(sign_switch_drift()),
        "box-2d" => Ok(box_2d()),
        other => Err(Error::ConfigValidation {
            key: "problem.name".into(),
            message: format!(
                "unknown problem `{other}` (expected uniform-f, two-action-gap, \
                 sign-switch-drift or box-2d)"
            ),
        }),
    }
}

//! Multi-step open-loop validation error.

use ndarray::Array2;

use super::data::Trajectory;
use super::model::Dynamics;
use crate::error::{Error, Result};

/// Mean over every trajectory and every start offset `t` with `t + H <= len` of
/// `(1/H) Σ_h ½‖s_{t+h} − ŝ_{t+h}‖²`, where `ŝ` is propagated open loop from the
/// recorded `s_t` under the recorded actions. Errors are in raw state units.
pub fn h_step_validation<D: Dynamics + ?Sized>(model: &D, val_trajs: &[Trajectory], horizon: usize) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be >= 1".into()));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for traj in val_trajs.iter().filter(|t| t.len() >= horizon) {
        let ts = traj.transitions();
        let n = ts[0].state.len();
        let m = ts[0].action.len();
        let starts = ts.len() - horizon + 1;
        // All start offsets advance together as one batch.
        let mut pred = Array2::from_shape_fn((starts, n), |(t, j)| ts[t].state[j]);
        let mut err = vec![0.0; starts];
        for h in 0..horizon {
            let actions = Array2::from_shape_fn((starts, m), |(t, j)| ts[t + h].action[j]);
            pred = model.predict_batch(pred.view(), actions.view())?;
            for (t, e) in err.iter_mut().enumerate() {
                let truth = &ts[t + h].next_state;
                *e += truth
                    .iter()
                    .zip(pred.row(t))
                    .map(|(a, b)| 0.5 * (a - b) * (a - b))
                    .sum::<f64>();
            }
        }
        total += err.iter().map(|e| e / horizon as f64).sum::<f64>();
        count += starts;
    }
    if count == 0 {
        return Err(Error::InvalidArgument(format!(
            "horizon {horizon} is longer than every validation trajectory"
        )));
    }
    let value = total / count as f64;
    if !value.is_finite() {
        return Err(Error::Numerical(format!("non-finite {horizon}-step validation error")));
    }
    Ok(value)
}

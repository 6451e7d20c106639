//! Cartesian sweep expansion. The first axis varies slowest, so point order
//! follows the declared axis order.

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone)]
pub struct SweepPoint {
    /// `(path, value)` for every axis, in axis order.
    pub coords: Vec<(String, toml::Value)>,
    pub config: RunConfig,
}

pub fn expand(cfg: &RunConfig) -> Result<Vec<SweepPoint>, CliError> {
    let Some(sweep) = cfg.sweep.as_ref() else {
        return Ok(vec![SweepPoint {
            coords: Vec::new(),
            config: cfg.clone(),
        }]);
    };
    let mut total: usize = 1;
    for (i, axis) in sweep.axes.iter().enumerate() {
        if axis.values.is_empty() {
            return Err(CliError::config(format!(
                "`sweep.axes[{i}]` ({}) has no values",
                axis.path
            )));
        }
        if sweep.axes[..i].iter().any(|a| a.path == axis.path) {
            return Err(CliError::config(format!("sweep path `{}` repeated", axis.path)));
        }
        total = total.saturating_mul(axis.values.len());
    }
    if total > sweep.budget {
        return Err(CliError::config(format!(
            "sweep has {total} points, budget is {}",
            sweep.budget
        )));
    }
    let mut points = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rem = flat;
        let mut idx = vec![0; sweep.axes.len()];
        for (a, axis) in sweep.axes.iter().enumerate().rev() {
            idx[a] = rem % axis.values.len();
            rem /= axis.values.len();
        }
        let mut config = cfg.clone();
        let mut coords = Vec::with_capacity(idx.len());
        for (axis, &k) in sweep.axes.iter().zip(&idx) {
            let v = &axis.values[k];
            config = config.with_value(&axis.path, v)?;
            coords.push((axis.path.clone(), v.clone()));
        }
        points.push(SweepPoint { coords, config });
    }
    Ok(points)
}

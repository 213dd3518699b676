//! Embedded adaptive Runge–Kutta 5(4) (Dormand–Prince) with step rejection,
//! a blow-up ceiling, forced nodes, and cubic Hermite dense output.

use thiserror::Error;

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize, PartialEq)]
pub struct IvpConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Stop with a blow-up flag when the sup norm of the state exceeds this.
    pub norm_ceiling: f64,
}

impl Default for IvpConfig {
    fn default() -> Self {
        IvpConfig {
            rtol: 1e-10,
            atol: 1e-10,
            max_steps: 1_000_000,
            norm_ceiling: 1e6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum StopReason {
    Completed,
    BlowUp,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IvpError {
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("step budget exhausted after {0} steps")]
    MaxStepsExceeded(usize),
    #[error("right-hand side failed at t = {t}: {message}")]
    RhsFailure { t: f64, message: String },
}

/// Nodes of the accepted mesh: state and derivative at each time.
#[derive(Debug, Clone)]
pub struct IvpSolution {
    pub ts: Vec<f64>,
    pub ys: Vec<Vec<f64>>,
    pub fs: Vec<Vec<f64>>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub stop: StopReason,
}

impl IvpSolution {
    /// Cubic Hermite interpolation on the accepted mesh.
    pub fn sample_at(&self, t: f64) -> Vec<f64> {
        let n = self.ts.len();
        assert!(n >= 1, "empty solution");
        if n == 1 {
            return self.ys[0].clone();
        }
        let forward = self.ts[n - 1] >= self.ts[0];
        let mut i = 0;
        while i + 2 < n && ((forward && self.ts[i + 1] < t) || (!forward && self.ts[i + 1] > t)) {
            i += 1;
        }
        let (t0, t1) = (self.ts[i], self.ts[i + 1]);
        let h = t1 - t0;
        let s = if h == 0.0 { 0.0 } else { (t - t0) / h };
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        (0..self.ys[0].len())
            .map(|k| {
                h00 * self.ys[i][k]
                    + h10 * h * self.fs[i][k]
                    + h01 * self.ys[i + 1][k]
                    + h11 * h * self.fs[i + 1][k]
            })
            .collect()
    }
}

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

/// Integrate `y' = rhs(t, y)` from `t0` to `t1` (either direction).
/// `forced_nodes` are times the mesh must hit exactly (sorted toward `t1`).
pub fn integrate_ivp<R>(
    mut rhs: R,
    t0: f64,
    t1: f64,
    y0: &[f64],
    cfg: &IvpConfig,
    forced_nodes: &[f64],
) -> Result<IvpSolution, (IvpError, IvpSolution)>
where
    R: FnMut(f64, &[f64]) -> Result<Vec<f64>, String>,
{
    let n = y0.len();
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut f = match rhs(t, &y) {
        Ok(v) => v,
        Err(message) => {
            let sol = IvpSolution {
                ts: vec![t0],
                ys: vec![y],
                fs: vec![vec![0.0; n]],
                steps_accepted: 0,
                steps_rejected: 0,
                stop: StopReason::Completed,
            };
            return Err((IvpError::RhsFailure { t, message }, sol));
        }
    };

    let mut sol = IvpSolution {
        ts: vec![t],
        ys: vec![y.clone()],
        fs: vec![f.clone()],
        steps_accepted: 0,
        steps_rejected: 0,
        stop: StopReason::Completed,
    };

    let span = (t1 - t0).abs();
    if span == 0.0 {
        return Ok(sol);
    }
    let mut h = dir * (span / 100.0).clamp(1e-10, 1e-2);
    let mut nodes: Vec<f64> = forced_nodes
        .iter()
        .cloned()
        .filter(|&s| (s - t0) * dir > 0.0 && (t1 - s) * dir > 0.0)
        .collect();
    nodes.sort_by(|a, b| ((a - t0) * dir).partial_cmp(&((b - t0) * dir)).unwrap());
    let mut next_node = 0usize;

    let mut steps = 0usize;
    loop {
        if (t1 - t) * dir <= 0.0 {
            break;
        }
        steps += 1;
        if steps > cfg.max_steps {
            return Err((IvpError::MaxStepsExceeded(cfg.max_steps), sol));
        }
        // clamp to the next forced node or the end time
        let target = if next_node < nodes.len() {
            nodes[next_node]
        } else {
            t1
        };
        if (t + h - target) * dir > 0.0 {
            h = target - t;
        }
        if h.abs() < 1e-14 * t.abs().max(1.0) {
            return Err((IvpError::StepSizeUnderflow { t }, sol));
        }

        // Dormand-Prince stages (k1 = f by FSAL)
        let mut k = vec![f.clone()];
        let mut failed: Option<String> = None;
        for stage in 0..6 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = A[stage][j];
                if a != 0.0 {
                    for idx in 0..n {
                        ys[idx] += h * a * kj[idx];
                    }
                }
            }
            match rhs(t + C[stage] * h, &ys) {
                Ok(v) => k.push(v),
                Err(m) => {
                    failed = Some(m);
                    break;
                }
            }
        }
        if let Some(message) = failed {
            return Err((IvpError::RhsFailure { t, message }, sol));
        }

        // 5th-order solution is the last stage argument; error from E weights
        let mut y_new = y.clone();
        for (j, kj) in k.iter().enumerate().take(6) {
            let a = A[5][j];
            if a != 0.0 {
                for idx in 0..n {
                    y_new[idx] += h * a * kj[idx];
                }
            }
        }
        let f_new = k[6].clone();
        let mut err_sq = 0.0;
        for idx in 0..n {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[idx];
            }
            e *= h;
            let sc = cfg.atol + cfg.rtol * y[idx].abs().max(y_new[idx].abs());
            err_sq += (e / sc) * (e / sc);
        }
        let err = (err_sq / n as f64).sqrt();

        if err <= 1.0 {
            t += h;
            y = y_new;
            f = f_new;
            sol.ts.push(t);
            sol.ys.push(y.clone());
            sol.fs.push(f.clone());
            sol.steps_accepted += 1;
            if next_node < nodes.len() && (t - nodes[next_node]).abs() < 1e-12 * t.abs().max(1.0) {
                next_node += 1;
            }
            let norm = y.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if norm > cfg.norm_ceiling {
                sol.stop = StopReason::BlowUp;
                return Ok(sol);
            }
        } else {
            sol.steps_rejected += 1;
        }
        let factor = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
        h *= factor;
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_exponential() {
        let sol = integrate_ivp(
            |_t, y| Ok(vec![y[0]]),
            0.0,
            1.0,
            &[1.0],
            &IvpConfig::default(),
            &[],
        )
        .unwrap();
        let last = sol.ys.last().unwrap()[0];
        assert!((last - 1.0f64.exp()).abs() < 1e-9);
        assert_eq!(sol.stop, StopReason::Completed);
    }

    #[test]
    fn respects_forced_nodes_and_dense_output() {
        let sol = integrate_ivp(
            |t, _y| Ok(vec![(2.0 * t).cos()]),
            0.0,
            2.0,
            &[0.0],
            &IvpConfig::default(),
            &[0.777],
        )
        .unwrap();
        assert!(sol.ts.iter().any(|&t| (t - 0.777).abs() < 1e-12));
        let mid = sol.sample_at(1.3)[0];
        // cubic Hermite on the accepted mesh is O(h^4); the mesh is coarse here
        assert!((mid - (2.0f64 * 1.3).sin() / 2.0).abs() < 1e-4);
    }

    #[test]
    fn flags_blow_up() {
        // y' = y² blows up at t = 1
        let sol = integrate_ivp(
            |_t, y| Ok(vec![y[0] * y[0]]),
            0.0,
            2.0,
            &[1.0],
            &IvpConfig {
                norm_ceiling: 1e5,
                ..IvpConfig::default()
            },
            &[],
        )
        .unwrap();
        assert_eq!(sol.stop, StopReason::BlowUp);
        let t_last = *sol.ts.last().unwrap();
        assert!((t_last - 1.0).abs() < 1e-4, "stopped at {t_last}");
    }

    #[test]
    fn integrates_backward() {
        let sol = integrate_ivp(
            |_t, y| Ok(vec![y[0]]),
            0.0,
            -1.0,
            &[1.0],
            &IvpConfig::default(),
            &[],
        )
        .unwrap();
        let last = sol.ys.last().unwrap()[0];
        assert!((last - (-1.0f64).exp()).abs() < 1e-9);
    }
}

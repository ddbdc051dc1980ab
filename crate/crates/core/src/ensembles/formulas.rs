//! Per-pattern quantities shared by the ensemble trainers.

pub fn mean(o: &[f64]) -> f64 {
    o.iter().sum::<f64>() / o.len() as f64
}

/// Correlation penalty `P_i = (O_i − Ō) Σ_{j≠i} (O_j − Ō)`.
pub fn ncl_penalty(o: &[f64], i: usize) -> f64 {
    let m = mean(o);
    let others: f64 = o
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, oj)| oj - m)
        .sum();
    (o[i] - m) * others
}

/// `∂P_i/∂O_i = −(O_i − Ō)`, treating the other outputs as fixed in the
/// deviation sum.
pub fn ncl_penalty_gradient(o: &[f64], i: usize) -> f64 {
    -(o[i] - mean(o))
}

/// Expertise targets `h_i ∝ exp(−½(y − O_i)²)`.
pub fn gncl_target(y: f64, o: &[f64]) -> Vec<f64> {
    normalize_log(o.iter().map(|oi| -0.5 * (y - oi) * (y - oi)).collect())
}

/// Posterior `h_i ∝ g_i exp(−½(y − O_i)² + λ P_i)`.
pub fn mnce_posterior(y: f64, o: &[f64], g: &[f64], lambda: f64) -> Vec<f64> {
    let logs = o
        .iter()
        .zip(g)
        .enumerate()
        .map(|(i, (oi, gi))| gi.ln() + (-0.5 * (y - oi) * (y - oi) + lambda * ncl_penalty(o, i)))
        .collect();
    normalize_log(logs)
}

/// Penalty derivative used by the MNCE expert update:
/// `g_i Σ_{j≠i}(O_j − Ō) + g_i (M − 1)(O_i − Ō)`.
pub fn mnce_penalty_gradient(o: &[f64], g: &[f64], i: usize) -> f64 {
    let m = mean(o);
    let others: f64 = o
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, oj)| oj - m)
        .sum();
    g[i] * others + g[i] * (o.len() as f64 - 1.0) * (o[i] - m)
}

fn normalize_log(logs: Vec<f64>) -> Vec<f64> {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

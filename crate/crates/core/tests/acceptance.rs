//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line for
//! each and exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::Rng as _;
use rootclass::dataset::{generate_synthetic, ClassLabel, Dataset, NoiseModel, SyntheticConfig};
use rootclass::ensembles::{
    epoch_order, gncl_gate_deltas, init_experts, mnce_deltas, ncl_deltas, train_me, train_mnce, train_ncl,
    GatingNetwork, MlpNetwork, TrainConfig, WeightDeltas,
};
use rootclass::evaluation::ClassifierKind;
use rootclass::features::{
    acceleration, assemble, slice_features, velocity, window_slices, Block, VelocityConvention, Window, WindowSpec,
};
use rootclass::pca::PcaModel;
use rootclass::pipeline::{cmd_run, execute, RunConfig, RESULTS_FILE};
use rootclass::seed::{rng_from_seed, Rng};
use rootclass::svm::{default_sigmoid_a, gram_matrix, train_smo, KernelSpec, SmoParams};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// Small numeric oracles

fn sig(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Forward pass written out independently of the library.
fn mlp_out(net: &MlpNetwork, x: &[f64]) -> Vec<f64> {
    let layer = |w: &[Vec<f64>], input: &[f64]| -> Vec<f64> {
        w.iter()
            .map(|row| {
                let mut z = row[input.len()];
                for (a, b) in row.iter().zip(input) {
                    z += a * b;
                }
                sig(z)
            })
            .collect()
    };
    let h = layer(&net.w_h, x);
    layer(&net.w_y, &h)
}

fn softmax(v: &[f64]) -> Vec<f64> {
    let e: Vec<f64> = v.iter().map(|x| x.exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|x| x / s).collect()
}

fn params_mut(net: &mut MlpNetwork) -> Vec<&mut f64> {
    net.w_h.iter_mut().chain(net.w_y.iter_mut()).flatten().collect()
}

/// Central finite-difference gradient of `f` with respect to every weight.
fn fd_grad(net: &MlpNetwork, f: impl Fn(&MlpNetwork) -> f64) -> Vec<f64> {
    const EPS: f64 = 1e-6;
    let count = net.flat_weights().len();
    (0..count)
        .map(|p| {
            let mut plus = net.clone();
            *params_mut(&mut plus).remove(p) += EPS;
            let mut minus = net.clone();
            *params_mut(&mut minus).remove(p) -= EPS;
            (f(&plus) - f(&minus)) / (2.0 * EPS)
        })
        .collect()
}

fn flat(d: &WeightDeltas) -> Vec<f64> {
    d.w_h.iter().chain(&d.w_y).flatten().copied().collect()
}

/// Relative error between the analytic deltas and `-eta * grad`.
fn rel_err(deltas: &WeightDeltas, grad: &[f64], eta: f64) -> f64 {
    let a = flat(deltas);
    let num: f64 = a.iter().zip(grad).map(|(a, g)| (a + eta * g).powi(2)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ng: f64 = grad.iter().map(|v| (eta * v).powi(2)).sum::<f64>().sqrt();
    num / na.max(ng).max(1e-300)
}

fn rand_net(inputs: usize, hidden: usize, outputs: usize, rng: &mut Rng) -> MlpNetwork {
    let mut net = MlpNetwork::zeros(inputs, hidden, outputs);
    for w in params_mut(&mut net) {
        *w = rng.random_range(-1.0..1.0);
    }
    net
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
    ev
}

// ---------------------------------------------------------------------------
// 1. Gradient fidelity

fn gradient_fidelity() -> Outcome {
    let mut rng = rng_from_seed(101);
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    let mut record = |e: f64, what: &str, cfg: usize| -> Result<(), String> {
        worst = worst.max(e);
        checks += 1;
        ensure(e <= 1e-4, || format!("{what} config {cfg}: relative error {e:.3e}"))
    };
    let configs = 25;
    for cfg in 0..configs {
        let d = rng.random_range(1..=5);
        let hidden = rng.random_range(2..=5);
        let m = rng.random_range(2..=5);
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
        let lambda = rng.random_range(0.05..1.0);
        let eta = rng.random_range(0.05..0.5);
        let experts: Vec<MlpNetwork> = (0..m).map(|_| rand_net(d, hidden, 1, &mut rng)).collect();
        let gate = GatingNetwork::new(rand_net(d, hidden, m, &mut rng));

        let o: Vec<f64> = experts.iter().map(|e| mlp_out(e, &x)[0]).collect();
        let ob = o.iter().sum::<f64>() / m as f64;
        let og = mlp_out(&gate.net, &x);
        let g = softmax(&og);

        // NCL: E_i = ½(y − O_i)² + λ (O_i − Ō) Σ_{j≠i}(O_j − Ō), others frozen.
        let nd = ncl_deltas(&experts, &x, y, lambda, eta).map_err(|e| e.to_string())?;
        for i in 0..m {
            let others: f64 = (0..m).filter(|&j| j != i).map(|j| o[j] - ob).sum();
            let grad = fd_grad(&experts[i], |net| {
                let oi = mlp_out(net, &x)[0];
                0.5 * (y - oi).powi(2) + lambda * (oi - ob) * others
            });
            record(rel_err(&nd[i], &grad, eta), "NCL expert", cfg)?;
        }

        // Gated NCL gate: cross-entropy surrogate with fixed targets.
        let terms: Vec<f64> = o.iter().map(|oi| (-0.5 * (y - oi).powi(2)).exp()).collect();
        let tsum: f64 = terms.iter().sum();
        let target: Vec<f64> = terms.iter().map(|t| t / tsum).collect();
        let gd = gncl_gate_deltas(&gate, &o, &x, y, eta).map_err(|e| e.to_string())?;
        let grad = fd_grad(&gate.net, |net| {
            let out = mlp_out(net, &x);
            -(0..m).map(|k| (target[k] - g[k]) * out[k]).sum::<f64>()
        });
        record(rel_err(&gd, &grad, eta), "GNCL gate", cfg)?;

        // MNCE with λ > 0: posterior and penalty derivative frozen.
        let penalty = |i: usize| -> f64 { (o[i] - ob) * (0..m).filter(|&j| j != i).map(|j| o[j] - ob).sum::<f64>() };
        let w: Vec<f64> = (0..m).map(|i| g[i] * (-0.5 * (y - o[i]).powi(2) + lambda * penalty(i)).exp()).collect();
        let wsum: f64 = w.iter().sum();
        let h: Vec<f64> = w.iter().map(|v| v / wsum).collect();
        let (ed, gd) = mnce_deltas(&experts, &gate, &x, y, lambda, eta, eta).map_err(|e| e.to_string())?;
        for i in 0..m {
            let others: f64 = (0..m).filter(|&j| j != i).map(|j| o[j] - ob).sum();
            let dpen = g[i] * others + g[i] * (m as f64 - 1.0) * (o[i] - ob);
            let grad = fd_grad(&experts[i], |net| {
                let oi = mlp_out(net, &x)[0];
                h[i] * (0.5 * (y - oi).powi(2) + lambda * dpen * oi)
            });
            record(rel_err(&ed[i], &grad, eta), "MNCE expert", cfg)?;
        }
        let grad = fd_grad(&gate.net, |net| {
            let out = mlp_out(net, &x);
            -(0..m).map(|k| (h[k] - g[k]) * out[k]).sum::<f64>()
        });
        record(rel_err(&gd, &grad, eta), "MNCE gate", cfg)?;

        // λ = 0: the exact mixture negative log-likelihood.
        let nll = |experts: &[MlpNetwork], gate: &MlpNetwork| -> f64 {
            let gg = softmax(&mlp_out(gate, &x));
            let s: f64 = experts
                .iter()
                .zip(&gg)
                .map(|(e, gi)| gi * (-0.5 * (y - mlp_out(e, &x)[0]).powi(2)).exp())
                .sum();
            -s.ln()
        };
        let (ed, gd) = mnce_deltas(&experts, &gate, &x, y, 0.0, eta, eta).map_err(|e| e.to_string())?;
        for i in 0..m {
            let grad = fd_grad(&experts[i], |net| {
                let mut all = experts.clone();
                all[i] = net.clone();
                nll(&all, &gate.net)
            });
            record(rel_err(&ed[i], &grad, eta), "ME expert (exact likelihood)", cfg)?;
        }
        let grad = fd_grad(&gate.net, |net| nll(&experts, net));
        record(rel_err(&gd, &grad, eta), "ME gate (exact likelihood)", cfg)?;
    }
    Ok(format!("{configs} configurations, {checks} delta sets, worst relative error {worst:.2e}"))
}

// ---------------------------------------------------------------------------
// 2. Reduction identities

fn toy_data(n: usize, d: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<ClassLabel>) {
    let mut rng = rng_from_seed(seed);
    let labels: Vec<ClassLabel> = (0..n)
        .map(|i| if i % 2 == 0 { ClassLabel::Wild } else { ClassLabel::Mutated })
        .collect();
    let pts = labels
        .iter()
        .map(|l| {
            let shift = if *l == ClassLabel::Mutated { 0.7 } else { -0.7 };
            (0..d).map(|_| shift + rng.random_range(-1.0..1.0)).collect()
        })
        .collect();
    (pts, labels)
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

fn reduction_identities() -> Outcome {
    let (pts, labels) = toy_data(20, 3, 7);
    let cfg = TrainConfig {
        epochs: 5,
        seed: 42,
        ..TrainConfig::default()
    };
    let steps = cfg.epochs * pts.len();

    let me = train_me(&pts, &labels, &cfg).map_err(|e| e.to_string())?;
    let mnce = train_mnce(&pts, &labels, &cfg, 0.0).map_err(|e| e.to_string())?;
    for (a, b) in me.experts.iter().zip(&mnce.experts) {
        ensure(bits(&a.flat_weights()) == bits(&b.flat_weights()), || "MNCE(0) expert differs from ME".into())?;
    }
    let (ga, gb) = (me.gate.as_ref().unwrap(), mnce.gate.as_ref().unwrap());
    ensure(bits(&ga.net.flat_weights()) == bits(&gb.net.flat_weights()), || "MNCE(0) gate differs from ME".into())?;

    // The same 100 steps against a hand-written mixture-of-experts step.
    let d = pts[0].len();
    let mut experts = init_experts(d, &cfg);
    let mut gate = rootclass::ensembles::init_gate(d, &cfg);
    let (mut ox, mut og) = (experts.clone(), gate.net.clone());
    for epoch in 0..cfg.epochs {
        for idx in epoch_order(pts.len(), cfg.seed, "epoch", epoch) {
            let (x, y) = (&pts[idx], labels[idx].unit());
            let (ed, gd) = mnce_deltas(&experts, &gate, x, y, 0.0, cfg.eta_expert, cfg.eta_gate).map_err(|e| e.to_string())?;
            for (e, dl) in experts.iter_mut().zip(&ed) {
                e.apply(dl);
            }
            gate.net.apply(&gd);
            oracle_me_step(&mut ox, &mut og, x, y, cfg.eta_expert, cfg.eta_gate);
        }
    }
    let drift = experts
        .iter()
        .zip(&ox)
        .flat_map(|(a, b)| a.flat_weights().into_iter().zip(b.flat_weights()))
        .chain(gate.net.flat_weights().into_iter().zip(og.flat_weights()))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ensure(drift < 1e-10, || format!("mixture steps drift {drift:.2e} from the hand-written step"))?;
    ensure(
        experts.iter().zip(&me.experts).all(|(a, b)| bits(&a.flat_weights()) == bits(&b.flat_weights())),
        || "stepwise mixture differs from train_me".into(),
    )?;

    let ncl = train_ncl(&pts, &labels, &cfg, 0.0).map_err(|e| e.to_string())?;
    let mut plain = init_experts(d, &cfg);
    for epoch in 0..cfg.epochs {
        for idx in epoch_order(pts.len(), cfg.seed, "epoch", epoch) {
            for net in &mut plain {
                net.backprop_step(&pts[idx], labels[idx].unit(), cfg.eta_expert).map_err(|e| e.to_string())?;
            }
        }
    }
    for (a, b) in ncl.experts.iter().zip(&plain) {
        ensure(bits(&a.flat_weights()) == bits(&b.flat_weights()), || "NCL(0) differs from independent BP".into())?;
    }
    Ok(format!("{steps} steps: MNCE(0) = ME and NCL(0) = plain BP bit for bit; hand-written ME drift {drift:.1e}"))
}

/// One mixture-of-experts step written from the model equations.
fn oracle_me_step(experts: &mut [MlpNetwork], gate: &mut MlpNetwork, x: &[f64], y: f64, eta_e: f64, eta_g: f64) {
    fn step(net: &mut MlpNetwork, x: &[f64], err: &[f64], eta: f64) {
        let hid: Vec<f64> = net
            .w_h
            .iter()
            .map(|w| sig(w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[x.len()]))
            .collect();
        let out: Vec<f64> = net
            .w_y
            .iter()
            .map(|w| sig(w.iter().zip(&hid).map(|(a, b)| a * b).sum::<f64>() + w[hid.len()]))
            .collect();
        let dout: Vec<f64> = (0..out.len()).map(|k| err[k] * out[k] * (1.0 - out[k])).collect();
        let dhid: Vec<f64> = (0..hid.len())
            .map(|h| (0..out.len()).map(|k| net.w_y[k][h] * dout[k]).sum::<f64>() * hid[h] * (1.0 - hid[h]))
            .collect();
        for k in 0..out.len() {
            for h in 0..hid.len() {
                net.w_y[k][h] += eta * dout[k] * hid[h];
            }
            net.w_y[k][hid.len()] += eta * dout[k];
        }
        for h in 0..hid.len() {
            for i in 0..x.len() {
                net.w_h[h][i] += eta * dhid[h] * x[i];
            }
            net.w_h[h][x.len()] += eta * dhid[h];
        }
    }
    let o: Vec<f64> = experts.iter().map(|e| mlp_out(e, x)[0]).collect();
    let g = softmax(&mlp_out(gate, x));
    let w: Vec<f64> = o.iter().zip(&g).map(|(oi, gi)| gi * (-0.5 * (y - oi).powi(2)).exp()).collect();
    let s: f64 = w.iter().sum();
    let h: Vec<f64> = w.iter().map(|v| v / s).collect();
    for (i, e) in experts.iter_mut().enumerate() {
        step(e, x, &[h[i] * (y - o[i])], eta_e);
    }
    let gerr: Vec<f64> = h.iter().zip(&g).map(|(a, b)| a - b).collect();
    step(gate, x, &gerr, eta_g);
}

// ---------------------------------------------------------------------------
// 3. SVM against a brute-force QP

fn dual(q: &[Vec<f64>], a: &[f64]) -> f64 {
    let n = a.len();
    let quad: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| a[i] * a[j] * q[i][j]).sum();
    a.iter().sum::<f64>() - 0.5 * quad
}

/// Projection onto `{0 ≤ α ≤ C, Σ yα = 0}` by bisection on the multiplier.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |mu: f64| -> Vec<f64> { v.iter().zip(y).map(|(vi, yi)| (vi - mu * yi).clamp(0.0, c)).collect() };
    let phi = |mu: f64| -> f64 { at(mu).iter().zip(y).map(|(a, yi)| a * yi).sum() };
    let bound = v.iter().fold(0.0f64, |m, x| m.max(x.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Accelerated projected gradient ascent on the dual.
fn qp_oracle(q: &[Vec<f64>], y: &[f64], c: f64) -> f64 {
    let n = y.len();
    let lip: f64 = (0..n).map(|i| q[i][i]).sum::<f64>().max(1e-12);
    let grad = |a: &[f64]| -> Vec<f64> { (0..n).map(|i| 1.0 - (0..n).map(|j| q[i][j] * a[j]).sum::<f64>()).collect() };
    let mut a = vec![0.0; n];
    let mut z = a.clone();
    let mut t = 1.0f64;
    let mut best = dual(q, &a);
    for _ in 0..20000 {
        let g = grad(&z);
        let v: Vec<f64> = z.iter().zip(&g).map(|(zi, gi)| zi + gi / lip).collect();
        let next = project(&v, y, c);
        let tn = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        z = next.iter().zip(&a).map(|(n, o)| n + (t - 1.0) / tn * (n - o)).collect();
        a = next;
        t = tn;
        best = best.max(dual(q, &a));
    }
    best
}

fn svm_oracle() -> Outcome {
    let mut rng = rng_from_seed(303);
    let sets = 60;
    let tol = 1e-3;
    let mut worst_gap: f64 = 0.0;
    let mut worst_kkt: f64 = 0.0;
    for s in 0..sets {
        let n = rng.random_range(3..=6);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..2).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let mut labels: Vec<ClassLabel> = (0..n)
            .map(|_| if rng.random_bool(0.5) { ClassLabel::Mutated } else { ClassLabel::Wild })
            .collect();
        labels[0] = ClassLabel::Wild;
        labels[1] = ClassLabel::Mutated;
        let kernel = if s % 2 == 0 {
            KernelSpec::Linear
        } else {
            KernelSpec::Gaussian {
                sigma: rng.random_range(0.5..2.0),
            }
        };
        let c = [0.5, 1.0, 2.0][s % 3];
        let params = SmoParams {
            c,
            tol,
            max_passes: 100,
            seed: s as u64,
        };
        let model = train_smo(&pts, &labels, &kernel, &params).map_err(|e| e.to_string())?;
        let y: Vec<f64> = labels.iter().map(|l| l.signed()).collect();
        let k = |a: &[f64], b: &[f64]| -> f64 {
            match &kernel {
                KernelSpec::Linear => a.iter().zip(b).map(|(x, z)| x * z).sum(),
                KernelSpec::Gaussian { sigma } => {
                    (-a.iter().zip(b).map(|(x, z)| (x - z).powi(2)).sum::<f64>() / (2.0 * sigma * sigma)).exp()
                }
                _ => unreachable!(),
            }
        };
        let q: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| y[i] * y[j] * k(&pts[i], &pts[j])).collect()).collect();
        let alpha = model.alpha();
        let w_smo = dual(&q, alpha);
        let w_opt = qp_oracle(&q, &y, c);
        let gap = (w_smo - w_opt).abs();
        worst_gap = worst_gap.max(gap);
        ensure(gap <= 1e-3, || format!("set {s}: W(α) = {w_smo}, brute-force optimum {w_opt}"))?;

        let b = model.bias();
        for i in 0..n {
            let f: f64 = (0..n).map(|j| alpha[j] * y[j] * k(&pts[j], &pts[i])).sum::<f64>() + b;
            let yf = y[i] * f;
            let r = if alpha[i] <= 1e-12 * c {
                (1.0 - yf).max(0.0)
            } else if alpha[i] >= c * (1.0 - 1e-12) {
                (yf - 1.0).max(0.0)
            } else {
                (yf - 1.0).abs()
            };
            worst_kkt = worst_kkt.max(r);
        }
        ensure(worst_kkt <= tol, || format!("set {s}: KKT residual {worst_kkt:.2e} over tol {tol}"))?;
        let eq: f64 = alpha.iter().zip(&y).map(|(a, y)| a * y).sum();
        ensure(eq.abs() < 1e-9, || format!("set {s}: Σαy = {eq}"))?;
    }
    Ok(format!("{sets} sets, worst |ΔW| {worst_gap:.2e}, worst KKT residual {worst_kkt:.2e}"))
}

// ---------------------------------------------------------------------------
// 4. Kernel properties

fn kernel_properties() -> Outcome {
    let mut rng = rng_from_seed(404);
    let mut min_eig = f64::INFINITY;
    for s in 0..100 {
        let n = rng.random_range(2..=20);
        let d = rng.random_range(1..=5);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
        let sigma = rng.random_range(0.3..3.0);
        let gram = gram_matrix(&KernelSpec::Gaussian { sigma }, &pts).map_err(|e| e.to_string())?;
        for i in 0..n {
            for j in 0..n {
                let sq: f64 = pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b).powi(2)).sum();
                let direct = (-sq / (2.0 * sigma * sigma)).exp();
                ensure((gram[i][j] - direct).abs() < 1e-14, || format!("set {s}: Gaussian entry ({i},{j}) wrong"))?;
            }
        }
        let ev = *jacobi_eigenvalues(gram).last().unwrap();
        min_eig = min_eig.min(ev);
        ensure(ev >= -1e-8, || format!("set {s}: smallest eigenvalue {ev:e}"))?;

        let sg = gram_matrix(
            &KernelSpec::Sigmoid {
                a: rng.random_range(-1.0..1.0),
                b: rng.random_range(-1.0..1.0),
            },
            &pts,
        )
        .map_err(|e| e.to_string())?;
        for i in 0..n {
            for j in 0..n {
                ensure(sg[i][j].to_bits() == sg[j][i].to_bits(), || format!("set {s}: sigmoid Gram asymmetric"))?;
            }
        }
    }
    for d in 1..=64 {
        let a = default_sigmoid_a(d).map_err(|e| e.to_string())?;
        ensure(a == 1.0 / d as f64, || format!("default a for d={d} is {a}"))?;
    }
    ensure(default_sigmoid_a(0).is_err(), || "default a accepted d = 0".into())?;
    Ok(format!("100 Gaussian Gram matrices, smallest eigenvalue {min_eig:.2e}; sigmoid symmetric; a = 1/d"))
}

// ---------------------------------------------------------------------------
// 5. PCA properties

fn pca_properties() -> Outcome {
    let mut rng = rng_from_seed(505);
    let mut worst_orth: f64 = 0.0;
    let mut worst_eig: f64 = 0.0;
    for s in 0..40 {
        let d = rng.random_range(2..=6);
        let n = rng.random_range(d + 2..=40);
        let mix: Vec<Vec<f64>> = (0..d).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let data: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let z: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                (0..d).map(|r| 3.0 + (0..d).map(|c| mix[r][c] * z[c]).sum::<f64>()).collect()
            })
            .collect();

        let mean: Vec<f64> = (0..d).map(|j| data.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
        let cov: Vec<Vec<f64>> = (0..d)
            .map(|a| {
                (0..d)
                    .map(|b| data.iter().map(|r| (r[a] - mean[a]) * (r[b] - mean[b])).sum::<f64>() / (n - 1) as f64)
                    .collect()
            })
            .collect();
        let oracle = jacobi_eigenvalues(cov);

        let kmax = d.min(n - 1);
        let mut prev = f64::INFINITY;
        for k in 1..=kmax {
            let pca = PcaModel::fit(&data, k).map_err(|e| e.to_string())?;
            let comps = pca.components();
            for i in 0..k {
                for j in 0..k {
                    let dot: f64 = comps[i].iter().zip(&comps[j]).map(|(a, b)| a * b).sum();
                    let e = (dot - if i == j { 1.0 } else { 0.0 }).abs();
                    worst_orth = worst_orth.max(e);
                    ensure(e <= 1e-8, || format!("set {s}, k={k}: components {i},{j} dot {dot}"))?;
                }
            }
            for (i, ev) in pca.eigenvalues().iter().enumerate() {
                let e = (ev - oracle[i]).abs() / oracle[0].max(1.0);
                worst_eig = worst_eig.max(e);
                ensure(e <= 1e-8, || format!("set {s}: eigenvalue {i}: {ev} vs {}", oracle[i]))?;
            }
            let err: f64 = data
                .iter()
                .map(|r| {
                    let rec = pca.reconstruct_row(&pca.transform_row(r).unwrap());
                    r.iter().zip(&rec).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
                })
                .sum::<f64>()
                / n as f64;
            ensure(err <= prev + 1e-12, || format!("set {s}: reconstruction error rose at k={k}: {prev} -> {err}"))?;
            prev = err;
        }
    }
    Ok(format!("40 data sets, worst orthonormality error {worst_orth:.1e}, worst eigenvalue error {worst_eig:.1e}"))
}

// ---------------------------------------------------------------------------
// 6. Feature pipeline

fn feature_pipeline() -> Outcome {
    let mut rng = rng_from_seed(606);
    for s in 0..1000 {
        let len = rng.random_range(3..=60);
        let series: Vec<f64> = (0..len).map(|_| rng.random_range(-100.0..100.0)).collect();
        let v = velocity(&series, VelocityConvention::Difference).map_err(|e| e.to_string())?;
        let a = acceleration(&v).map_err(|e| e.to_string())?;
        let v_ref: Vec<f64> = (0..len - 1).map(|t| series[t + 1] - series[t]).collect();
        let a_ref: Vec<f64> = (0..len - 2)
            .map(|t| (series[t + 2] - series[t + 1]) - (series[t + 1] - series[t]))
            .collect();
        ensure(bits(&v) == bits(&v_ref), || format!("series {s}: velocity differs"))?;
        ensure(bits(&a) == bits(&a_ref), || format!("series {s}: acceleration differs"))?;
    }

    for s in 0..100 {
        let (n, t, k) = (rng.random_range(1..=4), rng.random_range(5..=30), rng.random_range(1..=4));
        let scores: Vec<Vec<Vec<f64>>> = (0..n)
            .map(|_| (0..t).map(|_| (0..k).map(|_| rng.random_range(-5.0..5.0)).collect()).collect())
            .collect();
        let fm = assemble(&scores, true, true, VelocityConvention::Difference).map_err(|e| e.to_string())?;
        let layout = *fm.layout();
        for (i, row) in fm.rows().iter().enumerate() {
            for f in 0..t {
                for j in 0..k {
                    let col = layout.column(Block::Score, f, j).unwrap();
                    ensure(row[col] == scores[i][f][j], || format!("case {s}: score column lookup"))?;
                }
            }
        }
        let full = slice_features(&fm, Window::new(0, t - 1)).map_err(|e| e.to_string())?;
        ensure(full.rows() == fm.rows(), || format!("case {s}: full-range slice changed the rows"))?;
        let start = rng.random_range(0..=t - 3);
        let end = rng.random_range(start + 2..t);
        let sliced = slice_features(&fm, Window::new(start, end)).map_err(|e| e.to_string())?;
        let sub: Vec<Vec<Vec<f64>>> = scores.iter().map(|sc| sc[start..=end].to_vec()).collect();
        let direct = assemble(&sub, true, true, VelocityConvention::Difference).map_err(|e| e.to_string())?;
        ensure(sliced.rows() == direct.rows(), || format!("case {s}: slice differs from assembling the sub-range"))?;
    }

    for s in 0..50 {
        let frames = rng.random_range(1..=400);
        let length = rng.random_range(1..=frames);
        let stride = rng.random_range(1..=50);
        let w = window_slices(frames, WindowSpec { length, stride }).map_err(|e| e.to_string())?;
        let expected = (frames - length) / stride + 1;
        ensure(w.len() == expected, || format!("case {s}: {} windows, expected {expected}", w.len()))?;
    }
    Ok("1000 series exact; 100 assemble/slice round trips; 50 window counts".into())
}

// ---------------------------------------------------------------------------
// 7. End-to-end synthetic protocol

/// Nearest class centroid on mean frame-to-frame displacement over
/// `[start, end]`, cross-validated with folds dealt round-robin per class.
fn nearest_centroid_error(ds: &Dataset, start: usize, end: usize, k: usize) -> f64 {
    let feats: Vec<Vec<f64>> = ds
        .samples()
        .iter()
        .map(|s| (0..ds.dim()).map(|j| (s.frames[end][j] - s.frames[start][j]) / (end - start) as f64).collect())
        .collect();
    let labels = ds.labels();
    let mut fold = vec![0; labels.len()];
    let mut counters = [0usize; 2];
    for (i, l) in labels.iter().enumerate() {
        let c = usize::from(*l == ClassLabel::Mutated);
        fold[i] = counters[c] % k;
        counters[c] += 1;
    }
    let mut total = 0.0;
    for f in 0..k {
        let centroid = |class: ClassLabel| -> Vec<f64> {
            let members: Vec<&Vec<f64>> = (0..labels.len()).filter(|&i| fold[i] != f && labels[i] == class).map(|i| &feats[i]).collect();
            (0..ds.dim()).map(|j| members.iter().map(|m| m[j]).sum::<f64>() / members.len() as f64).collect()
        };
        let (cw, cm) = (centroid(ClassLabel::Wild), centroid(ClassLabel::Mutated));
        let dist = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum() };
        let test: Vec<usize> = (0..labels.len()).filter(|&i| fold[i] == f).collect();
        let wrong = test
            .iter()
            .filter(|&&i| {
                let pred = if dist(&feats[i], &cm) < dist(&feats[i], &cw) { ClassLabel::Mutated } else { ClassLabel::Wild };
                pred != labels[i]
            })
            .count();
        total += wrong as f64 / test.len() as f64;
    }
    total / k as f64
}

fn mean_over_windows(run: &rootclass::pipeline::PairingRun, c: usize) -> f64 {
    run.windows.iter().map(|w| w.cells[c].error).sum::<f64>() / run.windows.len() as f64
}

fn protocol_a() -> Result<String, String> {
    let oracle: Vec<f64> = (1..=10)
        .map(|seed| {
            let ds = generate_synthetic(&SyntheticConfig {
                seed,
                ..SyntheticConfig::default()
            })
            .unwrap();
            nearest_centroid_error(&ds, 0, ds.frames() - 1, 5)
        })
        .collect();
    let oracle_mean = oracle.iter().sum::<f64>() / oracle.len() as f64;
    ensure((0.10..=0.20).contains(&oracle_mean), || format!("nearest-centroid oracle error {oracle_mean:.3} outside [0.10, 0.20]"))?;

    let cfg = RunConfig {
        seed: 1,
        lambda_sweep: false,
        window: WindowSpec { length: 40, stride: 65 },
        ..RunConfig::default()
    };
    let results = execute(&cfg).map_err(|e| e.to_string())?;
    let run = &results.runs[0];
    let mut parts = Vec::new();
    for (c, name) in run.classifiers.iter().enumerate() {
        let e = mean_over_windows(run, c);
        ensure(e < 0.5, || format!("{name}: mean CV error {e:.3} not below 0.5"))?;
        parts.push(format!("{name} {e:.3}"));
    }
    Ok(format!("oracle {oracle_mean:.3}; mean CV error over {} windows: {}", run.windows.len(), parts.join(", ")))
}

fn signal_config(seed: u64) -> SyntheticConfig {
    SyntheticConfig {
        seed,
        noise_sd: 0.25,
        signal_frames: Some((50, 89)),
        background_sd: 10.0,
        ..SyntheticConfig::default()
    }
}

fn protocol_b() -> Result<String, String> {
    let syn = signal_config(1);
    let ds = generate_synthetic(&syn).map_err(|e| e.to_string())?;
    let windows = window_slices(ds.frames(), WindowSpec::default()).map_err(|e| e.to_string())?;
    let oracle: Vec<f64> = windows.iter().map(|w| nearest_centroid_error(&ds, w.start, w.end, 6)).collect();
    let target = windows.iter().position(|w| *w == Window::new(50, 89)).unwrap();
    let runner_up = oracle.iter().enumerate().filter(|(i, _)| *i != target).map(|(_, e)| *e).fold(f64::INFINITY, f64::min);
    ensure(oracle[target] < runner_up, || {
        format!("oracle: window 50-89 error {} not strictly below every other window ({runner_up})", oracle[target])
    })?;

    let cfg = RunConfig {
        seed: 1,
        synthetic: syn,
        folds: 6,
        classifiers: vec![ClassifierKind::LinearSvm],
        ..RunConfig::default()
    };
    let results = execute(&cfg).map_err(|e| e.to_string())?;
    let best = &results.runs[0].best[0];
    ensure(best.window == Window::new(50, 89), || format!("linear SVM best window {} (error {:.3})", best.window, best.error))?;
    Ok(format!(
        "oracle separates only 50-89 ({:.3} vs {runner_up:.3}); linear SVM best window {} at error {:.3} over {} windows",
        oracle[target],
        best.window,
        best.error,
        results.runs[0].windows.len()
    ))
}

fn protocol_c() -> Result<String, String> {
    let mut wins = 0;
    let mut parts = Vec::new();
    for seed in 1..=5 {
        let base = RunConfig {
            seed,
            synthetic: SyntheticConfig {
                noise_sd: 0.1,
                noise_model: NoiseModel::RandomWalk,
                offset_sd: 100.0,
                ..SyntheticConfig::default()
            },
            folds: 6,
            window: WindowSpec { length: 40, stride: 65 },
            classifiers: vec![ClassifierKind::LinearSvm],
            standardize: Some(true),
            ..RunConfig::default()
        };
        let scores_only = RunConfig {
            include_velocity: false,
            include_acceleration: false,
            ..base.clone()
        };
        let with = execute(&base).map_err(|e| e.to_string())?;
        let without = execute(&scores_only).map_err(|e| e.to_string())?;
        let (a, b) = (mean_over_windows(&with.runs[0], 0), mean_over_windows(&without.runs[0], 0));
        if a < b {
            wins += 1;
        }
        parts.push(format!("{b:.3}->{a:.3}"));
    }
    ensure(wins >= 3, || format!("velocity/acceleration helped on {wins} of 5 seeds ({})", parts.join(", ")))?;
    Ok(format!("scores-only -> with vel/acc, mean CV error: {} ({wins}/5 improved)", parts.join(", ")))
}

fn end_to_end() -> Outcome {
    let a = protocol_a()?;
    let b = protocol_b()?;
    let c = protocol_c()?;
    Ok(format!("(a) {a}\n        (b) {b}\n        (c) {c}"))
}

// ---------------------------------------------------------------------------
// 8. Protocol defaults

fn protocol_defaults() -> Outcome {
    for cfg in [RunConfig::default(), RunConfig::parse("").map_err(|e| e.to_string())?] {
        ensure(cfg.folds == 5, || format!("folds = {}", cfg.folds))?;
        ensure(cfg.ensemble.hidden == 4, || format!("hidden = {}", cfg.ensemble.hidden))?;
        ensure(cfg.ensemble.eta_expert == 0.15, || format!("eta_expert = {}", cfg.ensemble.eta_expert))?;
        ensure(cfg.ensemble.eta_gate == 0.1, || format!("eta_gate = {}", cfg.ensemble.eta_gate))?;
        ensure(cfg.window.length == 40, || format!("window length = {}", cfg.window.length))?;
        ensure(cfg.pca_components == 30, || format!("pca components = {}", cfg.pca_components))?;
        ensure(cfg.include_velocity && cfg.include_acceleration, || "velocity/acceleration off".into())?;
        ensure(cfg.window.stride == 1, || "stride not 1".into())?;
        ensure(cfg.classifiers == ClassifierKind::ALL.to_vec(), || "classifier list".into())?;
    }
    let t = TrainConfig::default();
    ensure(t.hidden == 4 && t.eta_expert == 0.15 && t.eta_gate == 0.1, || "TrainConfig defaults".into())?;
    Ok("folds 5, hidden 4, eta 0.15/0.1, window 40, 30 components".into())
}

// ---------------------------------------------------------------------------
// 9. Determinism

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = RunConfig::parse(
        "seed = 11\nsynthetic.n_per_class = 10\nsynthetic.frames = 60\nwindow_stride = 10\n\
         ensemble.epochs = 40\nensemble.lambda_grid = 0, 0.5, 1\n",
    )
    .map_err(|e| e.to_string())?;
    let mut files = Vec::new();
    for (name, jobs) in [("serial", 1), ("parallel", 4), ("again", 3)] {
        let run = RunConfig {
            jobs,
            out: dir.path().join(name),
            ..cfg.clone()
        };
        cmd_run(&run).map_err(|e| e.to_string())?;
        files.push(std::fs::read(run.out.join(RESULTS_FILE)).map_err(|e| e.to_string())?);
    }
    ensure(files[0] == files[1] && files[1] == files[2], || "results files differ between runs".into())?;
    Ok(format!("3 runs (jobs 1, 4, 3) produced identical {}-byte results files", files[0].len()))
}

// ---------------------------------------------------------------------------

struct Criterion {
    id: &'static str,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion { id: "1", name: "gradient fidelity", limit: Duration::from_secs(10), run: gradient_fidelity },
        Criterion { id: "2", name: "reduction identities", limit: Duration::from_secs(5), run: reduction_identities },
        Criterion { id: "3", name: "SVM oracle equivalence", limit: Duration::from_secs(60), run: svm_oracle },
        Criterion { id: "4", name: "kernel properties", limit: Duration::from_secs(10), run: kernel_properties },
        Criterion { id: "5", name: "PCA properties", limit: Duration::from_secs(10), run: pca_properties },
        Criterion { id: "6", name: "feature pipeline", limit: Duration::from_secs(5), run: feature_pipeline },
        Criterion { id: "7", name: "end-to-end synthetic protocol", limit: Duration::from_secs(600), run: end_to_end },
        Criterion { id: "8", name: "protocol defaults", limit: Duration::from_secs(1), run: protocol_defaults },
        Criterion { id: "9", name: "determinism", limit: Duration::ZERO, run: determinism },
    ];
    let mut failed = 0;
    let mut e2e_time = Duration::ZERO;
    for c in &criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        let limit = if c.id == "9" { 2 * e2e_time } else { c.limit };
        if c.id == "7" {
            e2e_time = elapsed;
        }
        let outcome = outcome.and_then(|detail| {
            if elapsed <= limit {
                Ok(detail)
            } else {
                Err(format!("took {:.2}s, limit {:.2}s ({detail})", elapsed.as_secs_f64(), limit.as_secs_f64()))
            }
        });
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d.clone()),
            Err(d) => {
                failed += 1;
                ("FAIL", d.clone())
            }
        };
        println!("{tag} criterion {}: {} [{:.2}s] {detail}", c.id, c.name, elapsed.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}

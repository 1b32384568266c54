//! Binary classification with a `d → 5 → 5 → 1` ELU network and the logistic
//! (cross-entropy) loss `ℓ(y, f) = ln(1 + e^{-y f})`.
//!
//! The input gradient `∇_x ℓ` is written out as an explicit backward pass; evaluating
//! that closed form in dual numbers gives exact Jacobian-vector products of
//! `θ ↦ (ℓ_i(θ), ∇_x ℓ_i(θ))`.

use std::io::Write;
use std::ops::{Add, Mul, Neg, Sub};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{check_rho, ClassificationDataset, NormKind, OuterLayout};
use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix};
use crate::problem::{sample_point, CompositeMinimaxProblem, ProblemConstants};
use crate::sets::ConvexSet;
use crate::support::SupportSet;

/// Width of both hidden layers.
pub const HIDDEN: usize = 5;

/// Forward-mode dual number `v + d ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Dual {
    v: f64,
    d: f64,
}

impl Dual {
    fn constant(v: f64) -> Self {
        Dual { v, d: 0.0 }
    }
    fn scale(self, s: f64) -> Self {
        Dual {
            v: self.v * s,
            d: self.d * s,
        }
    }
    fn elu(self) -> Self {
        if self.v > 0.0 {
            self
        } else {
            let e = self.v.exp();
            Dual { v: e - 1.0, d: e * self.d }
        }
    }
    /// Derivative of ELU, with `elu'(0) = 1`.
    fn elu_prime(self) -> Self {
        if self.v >= 0.0 {
            Dual::constant(1.0)
        } else {
            let e = self.v.exp();
            Dual { v: e, d: e * self.d }
        }
    }
    fn sigmoid(self) -> Self {
        let s = sigmoid(self.v);
        Dual {
            v: s,
            d: s * (1.0 - s) * self.d,
        }
    }
    fn softplus(self) -> Self {
        Dual {
            v: softplus(self.v),
            d: sigmoid(self.v) * self.d,
        }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual {
            v: self.v + o.v,
            d: self.d + o.d,
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual {
            v: self.v - o.v,
            d: self.d - o.d,
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual {
            v: self.v * o.v,
            d: self.v * o.d + self.d * o.v,
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual { v: -self.v, d: -self.d }
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// Weights of the network, flattened as `(W1, b1, W2, b2, w3, b3)` with row-major
/// matrices (`W1` is `5 × d`, `W2` is `5 × 5`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub w1: DenseMatrix,
    pub b1: Vec<f64>,
    pub w2: DenseMatrix,
    pub b2: Vec<f64>,
    pub w3: Vec<f64>,
    pub b3: f64,
}

impl MlpParams {
    /// Number of parameters for input dimension `d`.
    pub fn dim(d: usize) -> usize {
        HIDDEN * d + HIDDEN + HIDDEN * HIDDEN + HIDDEN + HIDDEN + 1
    }

    pub fn zeros(d: usize) -> Self {
        Self::unflatten(d, &vec![0.0; Self::dim(d)]).expect("matching length")
    }

    /// Gaussian weights scaled by `1/√fan_in`, zero biases.
    pub fn init(d: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = |fan_in: usize| -> f64 {
            let v: f64 = StandardNormal.sample(&mut rng);
            v / (fan_in as f64).sqrt()
        };
        let w1 = (0..HIDDEN * d).map(|_| g(d)).collect();
        let w2 = (0..HIDDEN * HIDDEN).map(|_| g(HIDDEN)).collect();
        let w3 = (0..HIDDEN).map(|_| g(HIDDEN)).collect();
        Self {
            w1: DenseMatrix::from_row_major(HIDDEN, d, w1),
            b1: vec![0.0; HIDDEN],
            w2: DenseMatrix::from_row_major(HIDDEN, HIDDEN, w2),
            b2: vec![0.0; HIDDEN],
            w3,
            b3: 0.0,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.cols()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(Self::dim(self.input_dim()));
        out.extend_from_slice(self.w1.as_slice());
        out.extend_from_slice(&self.b1);
        out.extend_from_slice(self.w2.as_slice());
        out.extend_from_slice(&self.b2);
        out.extend_from_slice(&self.w3);
        out.push(self.b3);
        out
    }

    pub fn unflatten(d: usize, theta: &[f64]) -> Result<Self> {
        crate::error::check_dim("MLP parameters", Self::dim(d), theta.len())?;
        let mut at = 0;
        let mut take = |k: usize| {
            let s = theta[at..at + k].to_vec();
            at += k;
            s
        };
        Ok(Self {
            w1: DenseMatrix::from_row_major(HIDDEN, d, take(HIDDEN * d)),
            b1: take(HIDDEN),
            w2: DenseMatrix::from_row_major(HIDDEN, HIDDEN, take(HIDDEN * HIDDEN)),
            b2: take(HIDDEN),
            w3: take(HIDDEN),
            b3: take(1)[0],
        })
    }

    /// Network output `f_θ(x)`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let theta: Vec<Dual> = self.flatten().into_iter().map(Dual::constant).collect();
        forward(&theta, self.input_dim(), x).0.v
    }
}

/// Offsets of the parameter groups in the flat vector.
struct Offsets {
    b1: usize,
    w2: usize,
    b2: usize,
    w3: usize,
    b3: usize,
}

fn offsets(d: usize) -> Offsets {
    let b1 = HIDDEN * d;
    let w2 = b1 + HIDDEN;
    let b2 = w2 + HIDDEN * HIDDEN;
    let w3 = b2 + HIDDEN;
    Offsets {
        b1,
        w2,
        b2,
        w3,
        b3: w3 + HIDDEN,
    }
}

/// Output `f`, and `∇_x f` by the explicit backward pass.
fn forward(p: &[Dual], d: usize, x: &[f64]) -> (Dual, Vec<Dual>) {
    let o = offsets(d);
    let zero = Dual::constant(0.0);
    let mut h1 = [zero; HIDDEN];
    let mut e1 = [zero; HIDDEN];
    for k in 0..HIDDEN {
        let mut a = p[o.b1 + k];
        for j in 0..d {
            a = a + p[k * d + j].scale(x[j]);
        }
        h1[k] = a.elu();
        e1[k] = a.elu_prime();
    }
    let mut h2 = [zero; HIDDEN];
    let mut e2 = [zero; HIDDEN];
    for i in 0..HIDDEN {
        let mut a = p[o.b2 + i];
        for k in 0..HIDDEN {
            a = a + p[o.w2 + i * HIDDEN + k] * h1[k];
        }
        h2[i] = a.elu();
        e2[i] = a.elu_prime();
    }
    let mut f = p[o.b3];
    for i in 0..HIDDEN {
        f = f + p[o.w3 + i] * h2[i];
    }
    let delta2: Vec<Dual> = (0..HIDDEN).map(|i| p[o.w3 + i] * e2[i]).collect();
    let delta1: Vec<Dual> = (0..HIDDEN)
        .map(|k| {
            let mut s = zero;
            for i in 0..HIDDEN {
                s = s + p[o.w2 + i * HIDDEN + k] * delta2[i];
            }
            e1[k] * s
        })
        .collect();
    let grad: Vec<Dual> = (0..d)
        .map(|j| {
            let mut s = zero;
            for k in 0..HIDDEN {
                s = s + p[k * d + j] * delta1[k];
            }
            s
        })
        .collect();
    (f, grad)
}

/// Loss and its input gradient for one sample.
fn sample_terms(p: &[Dual], d: usize, x: &[f64], label: f64) -> (Dual, Vec<Dual>) {
    let (f, grad) = forward(p, d, x);
    let t = -f.scale(label);
    let loss = t.softplus();
    let dl_df = -t.sigmoid().scale(label);
    (loss, grad.into_iter().map(|g| dl_df * g).collect())
}

/// The network problem; `θ` is the flat parameter vector of [`MlpParams`].
#[derive(Debug, Clone)]
pub struct MlpWdro {
    data: ClassificationDataset,
    layout: OuterLayout,
    trust_radius: f64,
    set_x: ConvexSet,
    set_y: ConvexSet,
    constants: ProblemConstants,
}

impl MlpWdro {
    /// Builds the problem with trust radius 10.
    pub fn new(data: ClassificationDataset, rho: f64, p: NormKind) -> Result<Self> {
        Self::with_trust_radius(data, rho, p, 10.0)
    }

    /// No closed-form `L_c` exists for the network, so the Lipschitz moduli of the
    /// Jacobian and of `∇_w F` are probed on sampled pairs in `‖θ‖ ≤ R` (fixed seed) and
    /// declared with a safety factor of 2.
    pub fn with_trust_radius(data: ClassificationDataset, rho: f64, p: NormKind, trust_radius: f64) -> Result<Self> {
        check_rho(rho)?;
        if data.is_empty() {
            return Err(Error::InsufficientData("empty dataset".into()));
        }
        if !(trust_radius > 0.0 && trust_radius.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "trust_radius",
                reason: format!("must be positive and finite, got {trust_radius}"),
            });
        }
        let (n, d) = (data.len(), data.dim());
        let layout = OuterLayout { n, d, rho, p };
        let set_y = ConvexSet::simplex(n)?;
        let l_h = layout.l_h();
        let mut problem = Self {
            data,
            layout,
            trust_radius,
            set_x: ConvexSet::whole_space(MlpParams::dim(d)),
            constants: ProblemConstants::new(l_h, 1.0, set_y.diameter())?,
            set_y,
        };
        let (l_c, l_w) = problem.probe_moduli(24);
        let mut constants = ProblemConstants::new(l_h, 2.0 * l_c.max(1e-12), problem.set_y.diameter())?;
        if 2.0 * l_w > constants.l() {
            constants = constants.with_l_override(2.0 * l_w)?;
        }
        problem.constants = constants;
        Ok(problem)
    }

    fn probe_moduli(&self, pairs: usize) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let dim = self.dim_x();
        let ball = ConvexSet::ball(vec![0.0; dim], self.trust_radius).expect("positive radius");
        let small = ConvexSet::ball(vec![0.0; dim], 0.1 * self.trust_radius).expect("positive radius");
        let (mut l_c, mut l_w): (f64, f64) = (0.0, 0.0);
        for _ in 0..pairs {
            let a = sample_point(&ball, &mut rng, 1.0);
            let b = linalg::add(&a, &sample_point(&small, &mut rng, 1.0));
            let dist = linalg::dist(&a, &b);
            if dist == 0.0 {
                continue;
            }
            let (ja, jb) = (self.jacobian(&a, &[]), self.jacobian(&b, &[]));
            let diff = DenseMatrix::from_row_major(ja.rows(), ja.cols(), linalg::sub(ja.as_slice(), jb.as_slice()));
            l_c = l_c.max(diff.spectral_norm_estimate() / dist);
            let (ga, gb) = (self.layout.grad_w(&self.c_eval(&a, &[])), self.layout.grad_w(&self.c_eval(&b, &[])));
            l_w = l_w.max(linalg::dist(&ga, &gb) / dist);
        }
        (l_c, l_w)
    }

    pub fn data(&self) -> &ClassificationDataset {
        &self.data
    }

    pub fn trust_radius(&self) -> f64 {
        self.trust_radius
    }

    fn terms(&self, theta: &[f64], tangent: Option<&[f64]>) -> Vec<Dual> {
        let d = self.layout.d;
        let p: Vec<Dual> = match tangent {
            Some(v) => theta.iter().zip(v).map(|(a, b)| Dual { v: *a, d: *b }).collect(),
            None => theta.iter().map(|a| Dual::constant(*a)).collect(),
        };
        let n = self.layout.n;
        let mut losses = Vec::with_capacity(n);
        let mut grads = Vec::with_capacity(n * d);
        for i in 0..n {
            let (l, g) = sample_terms(&p, d, self.data.features.row(i), self.data.labels[i]);
            losses.push(l);
            grads.extend(g);
        }
        losses.extend(grads);
        losses
    }

    /// `g(θ) = (1/N) Σ_i ℓ_i(θ) + ρ max_i ‖∇_x ℓ_i(θ)‖_p`.
    pub fn objective_g(&self, theta: &[f64]) -> f64 {
        let z = self.c_eval(theta, &[]);
        let loss = z[..self.layout.n].iter().sum::<f64>() / self.layout.n as f64;
        let reg = (0..self.layout.n)
            .map(|i| self.layout.p.norm(self.layout.grad_block(&z, i)))
            .fold(0.0, f64::max);
        loss + self.layout.rho * reg
    }

    /// Fraction of samples of `data` with `sign(f_θ(x)) = y` (`f = 0` counts as `+1`).
    pub fn accuracy(data: &ClassificationDataset, theta: &[f64]) -> Result<f64> {
        let net = MlpParams::unflatten(data.dim(), theta)?;
        let hits = (0..data.len())
            .filter(|&i| {
                let f = net.predict(data.features.row(i));
                (if f >= 0.0 { 1.0 } else { -1.0 }) == data.labels[i]
            })
            .count();
        Ok(hits as f64 / data.len() as f64)
    }
}

impl CompositeMinimaxProblem for MlpWdro {
    fn name(&self) -> String {
        format!("mlp-wdro(N={}, d={}, rho={}, p={})", self.layout.n, self.layout.d, self.layout.rho, self.layout.p)
    }
    fn dim_x(&self) -> usize {
        MlpParams::dim(self.layout.d)
    }
    fn dim_y(&self) -> usize {
        self.layout.n
    }
    fn dim_z(&self) -> usize {
        self.layout.dim_z()
    }
    fn c_eval(&self, theta: &[f64], _w: &[f64]) -> Vec<f64> {
        self.terms(theta, None).into_iter().map(|t| t.v).collect()
    }
    fn c_jvp(&self, theta: &[f64], _w: &[f64], v: &[f64]) -> Vec<f64> {
        self.terms(theta, Some(v)).into_iter().map(|t| t.d).collect()
    }
    fn c_vjp(&self, theta: &[f64], w: &[f64], u: &[f64]) -> Vec<f64> {
        self.jacobian(theta, w).tr_mul_vec(u)
    }
    fn h_eval(&self, z: &[f64], w: &[f64]) -> f64 {
        self.layout.h_eval(z, w)
    }
    fn h_subgrad(&self, z: &[f64], w: &[f64]) -> Vec<f64> {
        self.layout.h_subgrad(z, w)
    }
    fn grad_y(&self, theta: &[f64], w: &[f64]) -> Vec<f64> {
        self.layout.grad_w(&self.c_eval(theta, w))
    }
    fn set_x(&self) -> &ConvexSet {
        &self.set_x
    }
    fn set_y(&self) -> &ConvexSet {
        &self.set_y
    }
    fn constants(&self) -> &ProblemConstants {
        &self.constants
    }
    fn max_oracle(&self, theta: &[f64]) -> Option<(f64, Vec<f64>)> {
        Some(self.layout.max_over_simplex(&self.c_eval(theta, &[])))
    }
    fn h_support(&self, w: &[f64]) -> Option<SupportSet> {
        Some(self.layout.support(w))
    }
}

/// Writes `x1,x2,<method>...` rows of network outputs on a `steps × steps` grid over
/// `[lo, hi]²`, one column per named parameter vector.
pub fn write_decision_boundary<W: Write>(mut w: W, methods: &[(&str, &[f64])], lo: f64, hi: f64, steps: usize) -> Result<()> {
    if steps < 2 || !(hi > lo) {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: format!("need steps >= 2 and hi > lo, got {steps} over [{lo}, {hi}]"),
        });
    }
    let nets = methods
        .iter()
        .map(|(_, theta)| MlpParams::unflatten(2, theta))
        .collect::<Result<Vec<_>>>()?;
    let mut header = vec!["x1".to_string(), "x2".to_string()];
    header.extend(methods.iter().map(|(name, _)| name.to_string()));
    writeln!(w, "{}", header.join(","))?;
    let h = (hi - lo) / (steps - 1) as f64;
    for i in 0..steps {
        for j in 0..steps {
            let p = [lo + i as f64 * h, lo + j as f64 * h];
            let mut row = vec![format!("{}", p[0]), format!("{}", p[1])];
            row.extend(nets.iter().map(|n| format!("{:e}", n.predict(&p))));
            writeln!(w, "{}", row.join(","))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::evaluate_f;
    use crate::wdro::synth_ring_classification;
    use approx::assert_abs_diff_eq;

    #[test]
    fn parameter_count_and_round_trip() {
        assert_eq!(MlpParams::dim(2), 51);
        let p = MlpParams::init(2, 9);
        let flat = p.flatten();
        assert_eq!(flat.len(), 51);
        assert_eq!(MlpParams::unflatten(2, &flat).unwrap(), p);
        assert!(MlpParams::unflatten(2, &flat[1..]).is_err());
    }

    #[test]
    fn zero_network_gives_log_two() {
        let data = synth_ring_classification(30, 1.2, 1).unwrap();
        let n = data.len();
        let prob = MlpWdro::new(data, 1.0, NormKind::L2).unwrap();
        let theta = vec![0.0; 51];
        let w = vec![1.0 / n as f64; n];
        assert_abs_diff_eq!(evaluate_f(&prob, &theta, &w).unwrap(), 2f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(prob.objective_g(&theta), 2f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn softplus_is_stable() {
        assert_abs_diff_eq!(softplus(0.0), 2f64.ln());
        assert_abs_diff_eq!(softplus(800.0), 800.0);
        assert!(softplus(-800.0) >= 0.0);
        assert_abs_diff_eq!(sigmoid(-800.0), 0.0);
    }

    #[test]
    fn boundary_csv_has_one_column_per_method() {
        let theta = MlpParams::init(2, 1).flatten();
        let mut buf = Vec::new();
        write_decision_boundary(&mut buf, &[("plda", &theta), ("sgda", &theta)], -1.0, 1.0, 3).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x1,x2,plda,sgda");
        assert_eq!(lines.len(), 10);
    }
}

//! Discrete-time extended signals: truncation semi-inner products, causal
//! operators, time-stepped loop solutions and empirical gain measurement.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::quadform::HermitianForm2;
use crate::relation::{ratio, LoopFlags, LoopWitness, Pointwise};
use crate::space::{Field, PairVector, Space, Vector};
use crate::{Error, Result, Tolerance};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// One channel of samples, zero beyond the stored horizon.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Signal {
    pub samples: Vec<Complex64>,
}

impl Signal {
    pub fn new(samples: Vec<Complex64>) -> Self {
        Self { samples }
    }

    pub fn real(samples: &[f64]) -> Self {
        Self::new(samples.iter().map(|&x| Complex64::from(x)).collect())
    }

    pub fn zeros(len: usize) -> Self {
        Self::new(vec![ZERO; len])
    }

    pub fn impulse(len: usize) -> Self {
        let mut s = Self::zeros(len);
        if len > 0 {
            s.samples[0] = Complex64::from(1.0);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn at(&self, t: usize) -> Complex64 {
        self.samples.get(t).copied().unwrap_or(ZERO)
    }

    pub fn is_real(&self) -> bool {
        self.samples.iter().all(|z| z.im == 0.0)
    }

    /// Zero-extends or truncates to `len` samples.
    pub fn resized(&self, len: usize) -> Signal {
        Signal::new((0..len).map(|t| self.at(t)).collect())
    }

    /// `‖x‖_T`.
    pub fn norm_to(&self, horizon: usize) -> f64 {
        truncated_sip(self, self, horizon).re.max(0.0).sqrt()
    }

    pub fn to_vector(&self, space: &Space) -> Result<Vector> {
        space.vector(self.resized(space.dim()).samples)
    }

    pub fn from_vector(v: &Vector) -> Signal {
        Signal::new(v.coords().to_vec())
    }
}

/// `⟨x, y⟩_T = Σ_{t<T} conj(x_t) y_t`.
pub fn truncated_sip(x: &Signal, y: &Signal, horizon: usize) -> Complex64 {
    (0..horizon).map(|t| x.at(t).conj() * y.at(t)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CausalOperator {
    /// `s⁺ = A s + B x`, `y = C s + D x`, zero initial state.
    StateSpace {
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        c: Vec<f64>,
        d: f64,
    },
    /// `y_t = Σ_k h_k x_{t−k}`.
    Fir {
        taps: Vec<f64>,
    },
    StaticNl {
        map: Pointwise,
    },
    Delay {
        steps: usize,
    },
    Gain {
        k: f64,
    },
    /// Applied left to right.
    Series {
        stages: Vec<CausalOperator>,
    },
}

impl CausalOperator {
    pub fn state_space(a: Vec<Vec<f64>>, b: Vec<f64>, c: Vec<f64>, d: f64) -> Result<Self> {
        let n = a.len();
        if a.iter().any(|row| row.len() != n) || b.len() != n || c.len() != n {
            return Err(Error::InvalidSpace(format!(
                "state-space dimensions disagree: A is {n}x?, B has {}, C has {}",
                b.len(),
                c.len()
            )));
        }
        Ok(CausalOperator::StateSpace { a, b, c, d })
    }

    pub fn scalar_state_space(a: f64, b: f64, c: f64, d: f64) -> Self {
        CausalOperator::StateSpace {
            a: vec![vec![a]],
            b: vec![b],
            c: vec![c],
            d,
        }
    }

    /// `k` times a delay of one step.
    pub fn delayed_gain(k: f64) -> Self {
        CausalOperator::Series {
            stages: vec![CausalOperator::Delay { steps: 1 }, CausalOperator::Gain { k }],
        }
    }

    /// Output at time `t` does not depend on the input at time `t`.
    pub fn strictly_causal(&self) -> bool {
        match self {
            CausalOperator::StateSpace { d, .. } => *d == 0.0,
            CausalOperator::Fir { taps } => taps.first().is_none_or(|h| *h == 0.0),
            CausalOperator::StaticNl { map } => map.eval(Complex64::from(1.0)) == ZERO && map.is_linear(),
            CausalOperator::Delay { steps } => *steps >= 1,
            CausalOperator::Gain { k } => *k == 0.0,
            CausalOperator::Series { stages } => stages.iter().any(|s| s.strictly_causal()),
        }
    }

    pub fn is_linear(&self) -> bool {
        match self {
            CausalOperator::StaticNl { map } => map.is_linear(),
            CausalOperator::Series { stages } => stages.iter().all(|s| s.is_linear()),
            _ => true,
        }
    }

    pub fn stepper(&self) -> Stepper {
        let state = match self {
            CausalOperator::StateSpace { b, .. } => StepState::Vector(vec![ZERO; b.len()]),
            CausalOperator::Fir { taps } => StepState::Vector(vec![ZERO; taps.len().saturating_sub(1)]),
            CausalOperator::Delay { steps } => StepState::Vector(vec![ZERO; *steps]),
            CausalOperator::StaticNl { .. } | CausalOperator::Gain { .. } => StepState::None,
            CausalOperator::Series { stages } => StepState::Stages(stages.iter().map(|s| s.stepper()).collect()),
        };
        Stepper {
            op: self.clone(),
            state,
        }
    }
}

#[derive(Debug, Clone)]
enum StepState {
    None,
    /// State vector, FIR history (most recent first) or delay line (most
    /// recent first).
    Vector(Vec<Complex64>),
    Stages(Vec<Stepper>),
}

/// Incremental evaluation of a [`CausalOperator`]: `output` reads the
/// current output for a candidate input without changing state, `advance`
/// commits the input and moves to the next time step.
#[derive(Debug, Clone)]
pub struct Stepper {
    op: CausalOperator,
    state: StepState,
}

impl Stepper {
    pub fn output(&self, x: Complex64) -> Complex64 {
        match (&self.op, &self.state) {
            (CausalOperator::StateSpace { c, d, .. }, StepState::Vector(s)) => {
                c.iter().zip(s).map(|(ci, si)| *ci * si).sum::<Complex64>() + *d * x
            }
            (CausalOperator::Fir { taps }, StepState::Vector(h)) => match taps.split_first() {
                None => ZERO,
                Some((h0, rest)) => *h0 * x + rest.iter().zip(h).map(|(k, v)| *k * v).sum::<Complex64>(),
            },
            (CausalOperator::Delay { steps }, StepState::Vector(line)) => {
                if *steps == 0 {
                    x
                } else {
                    line[steps - 1]
                }
            }
            (CausalOperator::StaticNl { map }, _) => map.eval(x),
            (CausalOperator::Gain { k }, _) => *k * x,
            (CausalOperator::Series { .. }, StepState::Stages(stages)) => stages.iter().fold(x, |v, s| s.output(v)),
            _ => unreachable!("stepper state matches its operator"),
        }
    }

    pub fn advance(&mut self, x: Complex64) {
        match (&self.op, &mut self.state) {
            (CausalOperator::StateSpace { a, b, .. }, StepState::Vector(s)) => {
                let next: Vec<Complex64> = a
                    .iter()
                    .zip(b)
                    .map(|(row, bi)| row.iter().zip(s.iter()).map(|(aij, sj)| *aij * sj).sum::<Complex64>() + *bi * x)
                    .collect();
                *s = next;
            }
            (CausalOperator::Fir { .. }, StepState::Vector(h))
            | (CausalOperator::Delay { .. }, StepState::Vector(h)) => {
                if !h.is_empty() {
                    h.rotate_right(1);
                    h[0] = x;
                }
            }
            (CausalOperator::Series { .. }, StepState::Stages(stages)) => {
                let mut v = x;
                for s in stages.iter_mut() {
                    let next = s.output(v);
                    s.advance(v);
                    v = next;
                }
            }
            _ => {}
        }
    }
}

/// Forward recursion; the output has the input's horizon.
pub fn simulate(op: &CausalOperator, x: &Signal) -> Signal {
    let mut st = op.stepper();
    let out = x
        .samples
        .iter()
        .map(|&xt| {
            let y = st.output(xt);
            st.advance(xt);
            y
        })
        .collect();
    Signal::new(out)
}

/// Time-domain loop solution together with its signal space.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopSolution {
    pub space: Space,
    pub witness: LoopWitness,
}

/// Solves `e₁ = u₁ + Φ(u₂ + G e₁)` one time step at a time.
///
/// With a strictly causal element the step is a forward substitution. For
/// two linear operators with feedthrough the step equation is affine and is
/// solved directly; otherwise a fixed-point iteration is attempted.
pub fn solve_loop(g: &CausalOperator, phi: &CausalOperator, u1: &Signal, u2: &Signal) -> Result<LoopSolution> {
    let len = u1.len().max(u2.len());
    let mut sg = g.stepper();
    let mut sp = phi.stepper();
    let (mut e1s, mut e2s, mut y1s, mut y2s) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for t in 0..len {
        let (a1, a2) = (u1.at(t), u2.at(t));
        let (e1, y1, e2, y2);
        if g.strictly_causal() {
            y1 = sg.output(ZERO);
            e2 = a2 + y1;
            y2 = sp.output(e2);
            e1 = a1 + y2;
        } else if phi.strictly_causal() {
            y2 = sp.output(ZERO);
            e1 = a1 + y2;
            y1 = sg.output(e1);
            e2 = a2 + y1;
        } else {
            let f = |e: Complex64| a1 + sp.output(a2 + sg.output(e));
            let solved = if g.is_linear() && phi.is_linear() {
                let f0 = f(ZERO);
                let s = f(Complex64::from(1.0)) - f0;
                let denom = Complex64::from(1.0) - s;
                if denom.norm() <= 1e-12 {
                    None
                } else {
                    Some(f0 / denom)
                }
            } else {
                let mut e = a1;
                let mut found = None;
                for _ in 0..500 {
                    let next = f(e);
                    if (next - e).norm() <= 1e-14 * (1.0 + next.norm()) {
                        found = Some(next);
                        break;
                    }
                    e = next;
                }
                found
            };
            e1 = solved.ok_or(Error::AlgebraicLoop(t))?;
            y1 = sg.output(e1);
            e2 = a2 + y1;
            y2 = sp.output(e2);
        }
        sg.advance(e1);
        sp.advance(e2);
        e1s.push(e1);
        e2s.push(e2);
        y1s.push(y1);
        y2s.push(y2);
    }
    let complex = [u1, u2].iter().any(|s| !s.is_real()) || [&e1s, &y2s].iter().any(|v| v.iter().any(|z| z.im != 0.0));
    let field = if complex { Field::Complex } else { Field::Real };
    let space = Space::truncated(field, len, len);
    let vec = |v: Vec<Complex64>| space.vector(v);
    let u1v = u1.resized(len).to_vector(&space)?;
    let u2v = u2.resized(len).to_vector(&space)?;
    let (e1v, e2v, y1v, y2v) = (vec(e1s)?, vec(e2s)?, vec(y1s)?, vec(y2s)?);
    let tol = Tolerance::DEFAULT;
    let close = |a: &Vector, b: &Signal| {
        let b = b.to_vector(&space).expect("same horizon");
        a.distance(&b).map(|d| d <= tol.slack(a.norm().max(b.norm())))
    };
    let mut witness = LoopWitness {
        u1: u1v,
        u2: u2v,
        y1: y1v,
        y2: y2v,
        e1: e1v,
        e2: e2v,
        flags: LoopFlags::default(),
    };
    let (ra, rc) = witness.summing_residuals();
    witness.flags = LoopFlags {
        a: ra <= tol.slack(witness.e1.norm()),
        b: close(&witness.y2, &simulate(phi, &Signal::from_vector(&witness.e2)))?,
        c: rc <= tol.slack(witness.e2.norm()),
        d: close(&witness.y1, &simulate(g, &Signal::from_vector(&witness.e1)))?,
    };
    Ok(LoopSolution { space, witness })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalGainReport {
    pub inputs: usize,
    pub horizons: Vec<usize>,
    /// `max_i ‖y‖_T / ‖u‖_T` for each horizon in `horizons`.
    pub per_horizon: Vec<f64>,
    pub max_ratio: f64,
    pub worst_input: Option<usize>,
    pub certified_gamma: Option<f64>,
    pub within_certified: Option<bool>,
    /// Truncated `N`-constraint on `G` over the bank's error signals `e₁`.
    pub g_constraint_holds: Option<bool>,
    /// Truncated `M`-constraint on `Φ` over the bank's error signals `e₂`.
    pub phi_constraint_holds: Option<bool>,
}

/// `⟨(x, y), A (x, y)⟩_T`.
pub fn truncated_qc(a: &HermitianForm2, x: &Signal, y: &Signal, horizon: usize) -> f64 {
    a.m11 * truncated_sip(x, x, horizon).re
        + 2.0 * (a.m12 * truncated_sip(x, y, horizon)).re
        + a.m22 * truncated_sip(y, y, horizon).re
}

/// Largest `‖y‖_T/‖u‖_T` over the bank and horizons, compared with the
/// certified bound when `(M, N)` is supplied.
pub fn empirical_gain(
    g: &CausalOperator,
    phi: &CausalOperator,
    bank: &[(Signal, Signal)],
    horizons: &[usize],
    mn: Option<(&HermitianForm2, &HermitianForm2)>,
    tol: &Tolerance,
) -> Result<EmpiricalGainReport> {
    let mut per_horizon = vec![0.0f64; horizons.len()];
    let mut max_ratio = 0.0f64;
    let mut worst_input = None;
    let mut g_ok = true;
    let mut phi_ok = true;
    for (i, (u1, u2)) in bank.iter().enumerate() {
        let sol = solve_loop(g, phi, u1, u2)?;
        let w = &sol.witness;
        let sig = |v: &Vector| Signal::from_vector(v);
        let (u1s, u2s, y1s, y2s, e1s, e2s) = (sig(&w.u1), sig(&w.u2), sig(&w.y1), sig(&w.y2), sig(&w.e1), sig(&w.e2));
        for (k, &t) in horizons.iter().enumerate() {
            let un = u1s.norm_to(t).hypot(u2s.norm_to(t));
            let yn = y1s.norm_to(t).hypot(y2s.norm_to(t));
            let r = ratio(yn, un);
            per_horizon[k] = per_horizon[k].max(r);
            if r > max_ratio {
                max_ratio = r;
                worst_input = Some(i);
            }
            if let Some((m, n)) = mn {
                let scale_g = n.frobenius() * (e1s.norm_to(t).powi(2) + y1s.norm_to(t).powi(2));
                g_ok &= tol.nonneg(truncated_qc(n, &y1s, &e1s, t), scale_g);
                let scale_p = m.frobenius() * (e2s.norm_to(t).powi(2) + y2s.norm_to(t).powi(2));
                phi_ok &= tol.nonneg(truncated_qc(m, &e2s, &y2s, t), scale_p);
            }
        }
    }
    let certified_gamma = match mn {
        Some((m, n)) => crate::certify::gain_bound(m, n).ok().map(|b| b.gamma),
        None => None,
    };
    Ok(EmpiricalGainReport {
        inputs: bank.len(),
        horizons: horizons.to_vec(),
        per_horizon,
        max_ratio,
        worst_input,
        certified_gamma,
        within_certified: certified_gamma.map(|gm| max_ratio <= gm + tol.slack(gm)),
        g_constraint_holds: mn.map(|_| g_ok),
        phi_constraint_holds: mn.map(|_| phi_ok),
    })
}

/// Seeded bank of `count` input pairs of length `len` with standard normal
/// samples.
pub fn random_bank(count: usize, len: usize, field: Field, seed: u64) -> Vec<(Signal, Signal)> {
    use rand::SeedableRng;
    let space = Space::truncated(field, len, len);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let a = Signal::from_vector(&space.random_vector(&mut rng));
            let b = Signal::from_vector(&space.random_vector(&mut rng));
            (a, b)
        })
        .collect()
}

/// Pair form of a truncated signal pair, for use with the generic checks.
pub fn signal_pair(space: &Space, a: &Signal, b: &Signal) -> Result<PairVector> {
    PairVector::new(a.to_vector(space)?, b.to_vector(space)?)
}

/// One sample per row: `re` or `re,im`.
pub fn read_signal_csv(path: &Path) -> Result<Signal> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Io(e.to_string()))?;
    let mut samples = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Io(e.to_string()))?;
        let parse = |i: usize| -> Result<f64> {
            record
                .get(i)
                .unwrap_or("0")
                .parse::<f64>()
                .map_err(|e| Error::Io(format!("{}:{}: {e}", path.display(), row + 1)))
        };
        match record.len() {
            1 | 2 => samples.push(Complex64::new(
                parse(0)?,
                if record.len() == 2 { parse(1)? } else { 0.0 },
            )),
            n => {
                return Err(Error::Io(format!(
                    "{}:{}: expected 1 or 2 columns, got {n}",
                    path.display(),
                    row + 1
                )))
            }
        }
    }
    Ok(Signal::new(samples))
}

/// CSV text of a signal: one column for real signals, `re,im` otherwise.
pub fn signal_to_csv(signal: &Signal) -> String {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_writer(Vec::new());
    let real = signal.is_real();
    for z in &signal.samples {
        let res = if real {
            writer.write_record([format!("{}", z.re)])
        } else {
            writer.write_record([format!("{}", z.re), format!("{}", z.im)])
        };
        res.expect("writing to memory cannot fail");
    }
    String::from_utf8(writer.into_inner().expect("in-memory writer flushes")).expect("csv output is UTF-8")
}

pub fn write_signal_csv(path: &Path, signal: &Signal) -> Result<()> {
    std::fs::write(path, signal_to_csv(signal))?;
    Ok(())
}

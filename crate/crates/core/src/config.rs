//! JSON analysis configs and the command drivers behind the `robustbound`
//! binary.
//!
//! Each command returns a [`CommandOutput`]: a deterministic text report, a
//! JSON sidecar with every intermediate constant, and any artifact files
//! (signal CSVs, interpolant descriptions) as in-memory contents.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::certify::{check_condition_i, gain_bound, search_condition_i, ConditionCheck, EpsGrid, SearchOutcome};
use crate::classic::{to_mn, ClassicSpec};
use crate::interpolate::{extend, verify_interpolant, InterpolantCase};
use crate::l2e::{empirical_gain, random_bank, read_signal_csv, signal_to_csv, CausalOperator, Signal};
use crate::quadform::HermitianForm2;
use crate::relation::{Pointwise, Relation};
use crate::space::{Field, Space, Vector};
use crate::worstcase::{augment_probes, defeat_gain, DefeatOutcome, WorstCaseResult};
use crate::{Error, Result, Tolerance};

/// A real number or a `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarSpec {
    Real(f64),
    Complex([f64; 2]),
}

impl ScalarSpec {
    pub fn value(&self) -> Complex64 {
        match *self {
            ScalarSpec::Real(x) => Complex64::from(x),
            ScalarSpec::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    Euclidean { field: Field, dim: usize },
    Weighted { field: Field, gram: Vec<Vec<ScalarSpec>> },
    Truncated { field: Field, len: usize, horizon: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RelationSpec {
    ScaledIdentity { scale: ScalarSpec },
    LinearMap { matrix: Vec<Vec<ScalarSpec>> },
    Pointwise { map: Pointwise },
    SampledGraph { pairs: Vec<[Vec<ScalarSpec>; 2]> },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    /// Random unit probes added after the explicit ones.
    #[serde(default = "default_probe_count")]
    pub count: usize,
    #[serde(default)]
    pub vectors: Vec<Vec<ScalarSpec>>,
}

fn default_probe_count() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    #[serde(default = "default_input_count")]
    pub count: usize,
    #[serde(default = "default_input_len")]
    pub len: usize,
    /// `[u1, u2]` CSV paths, relative to the config file.
    #[serde(default)]
    pub files: Vec<[PathBuf; 2]>,
}

impl Default for InputSpec {
    fn default() -> Self {
        Self {
            count: default_input_count(),
            len: default_input_len(),
            files: Vec::new(),
        }
    }
}

fn default_input_count() -> usize {
    20
}

fn default_input_len() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorSpec {
    pub e: Vec<ScalarSpec>,
    pub y: Vec<ScalarSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorPair {
    pub g: CausalOperator,
    pub phi: CausalOperator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default)]
    pub space: Option<SpaceSpec>,
    #[serde(default)]
    pub m: Option<[[ScalarSpec; 2]; 2]>,
    #[serde(default)]
    pub n: Option<[[ScalarSpec; 2]; 2]>,
    #[serde(default)]
    pub classic: Option<ClassicSpec>,
    #[serde(default)]
    pub g: Option<RelationSpec>,
    #[serde(default)]
    pub phi: Option<RelationSpec>,
    #[serde(default)]
    pub operators: Option<OperatorPair>,
    #[serde(default)]
    pub probes: ProbeSpec,
    #[serde(default)]
    pub inputs: InputSpec,
    #[serde(default)]
    pub horizons: Option<Vec<usize>>,
    #[serde(default)]
    pub target_gamma: Option<f64>,
    #[serde(default)]
    pub eps_grid: EpsGrid,
    #[serde(default)]
    pub tolerance: Option<Tolerance>,
    #[serde(default)]
    pub anchor: Option<AnchorSpec>,
    /// Random samples used to verify an interpolant.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Directory that relative input paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_samples() -> usize {
    100
}

impl AnalysisConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: AnalysisConfig = serde_json::from_str(text)
            .map_err(|e| Error::config(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.m, &self.classic) {
            (Some(_), Some(_)) => {
                return Err(Error::config(
                    "classic",
                    "give either raw m/n or a classic spec, not both",
                ))
            }
            (None, _) if self.n.is_some() => return Err(Error::config("n", "n requires m")),
            _ => {}
        }
        if let Some(t) = self.target_gamma {
            if t.is_nan() || t <= 0.0 {
                return Err(Error::config("target_gamma", format!("must be positive, got {t}")));
            }
        }
        if self.eps_grid.min_exp == 0 || self.eps_grid.min_exp > self.eps_grid.max_exp {
            return Err(Error::config("eps_grid", "need 1 <= min_exp <= max_exp"));
        }
        let tol = self.tol();
        for (name, m) in [("m", &self.m), ("n", &self.n)] {
            if let Some(e) = m {
                form(e, &tol).map_err(|err| Error::config(name, err.to_string()))?;
            }
        }
        Ok(())
    }

    pub fn tol(&self) -> Tolerance {
        self.tolerance.unwrap_or(Tolerance::DEFAULT)
    }

    pub fn space(&self) -> Result<Space> {
        let spec = self.space.as_ref().ok_or_else(|| Error::config("space", "missing"))?;
        match spec {
            SpaceSpec::Euclidean { field, dim } => Ok(Space::euclidean(*field, *dim)),
            SpaceSpec::Weighted { field, gram } => {
                let n = gram.len();
                if gram.iter().any(|r| r.len() != n) {
                    return Err(Error::config("space.gram", "gram must be square"));
                }
                let m = DMatrix::from_fn(n, n, |i, j| gram[i][j].value());
                Space::weighted(*field, m).map_err(|e| Error::config("space.gram", e.to_string()))
            }
            SpaceSpec::Truncated { field, len, horizon } => Ok(Space::truncated(*field, *len, *horizon)),
        }
    }

    /// `(M, N)` from the raw entries or the classic spec.
    pub fn forms(&self) -> Result<(HermitianForm2, Option<HermitianForm2>)> {
        let tol = self.tol();
        if let Some(c) = &self.classic {
            let map = to_mn(c)?;
            return Ok((map.m, Some(map.n)));
        }
        let m = self
            .m
            .as_ref()
            .ok_or_else(|| Error::config("m", "missing (give m or classic)"))?;
        let m = form(m, &tol)?;
        let n = self.n.as_ref().map(|n| form(n, &tol)).transpose()?;
        Ok((m, n))
    }

    pub fn relation(&self, which: &str) -> Result<Relation> {
        let spec = match which {
            "g" => &self.g,
            _ => &self.phi,
        };
        let spec = spec.as_ref().ok_or_else(|| Error::config(which, "missing"))?;
        let space = self.space()?;
        build_relation(&space, spec).map_err(|e| Error::config(which, e.to_string()))
    }

    /// Explicit probes followed by `probes.count` seeded random unit vectors.
    pub fn probe_set(&self, space: &Space) -> Result<Vec<Vector>> {
        let explicit = self
            .probes
            .vectors
            .iter()
            .map(|v| vector(space, v))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::config("probes.vectors", e.to_string()))?;
        Ok(augment_probes(space, &explicit, self.probes.count, self.seed))
    }

    pub fn input_bank(&self) -> Result<Vec<(Signal, Signal)>> {
        if self.inputs.files.is_empty() {
            return Ok(random_bank(
                self.inputs.count,
                self.inputs.len,
                Field::Real,
                self.seed.wrapping_add(1),
            ));
        }
        self.inputs
            .files
            .iter()
            .map(|[a, b]| {
                Ok((
                    read_signal_csv(&self.base_dir.join(a))?,
                    read_signal_csv(&self.base_dir.join(b))?,
                ))
            })
            .collect()
    }
}

fn form(e: &[[ScalarSpec; 2]; 2], tol: &Tolerance) -> Result<HermitianForm2> {
    let entries = [[e[0][0].value(), e[0][1].value()], [e[1][0].value(), e[1][1].value()]];
    HermitianForm2::from_entries(entries, tol.abs)
}

fn vector(space: &Space, v: &[ScalarSpec]) -> Result<Vector> {
    space.vector(v.iter().map(ScalarSpec::value).collect())
}

fn build_relation(space: &Space, spec: &RelationSpec) -> Result<Relation> {
    match spec {
        RelationSpec::ScaledIdentity { scale } => Relation::scaled_identity(space, scale.value()),
        RelationSpec::LinearMap { matrix } => {
            let n = space.dim();
            if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
                return Err(Error::SpaceMismatch {
                    expected: n,
                    got: matrix.len(),
                });
            }
            Relation::linear_map(space, DMatrix::from_fn(n, n, |i, j| matrix[i][j].value()))
        }
        RelationSpec::Pointwise { map } => Ok(Relation::pointwise(space, *map)),
        RelationSpec::SampledGraph { pairs } => {
            let pairs = pairs
                .iter()
                .map(|[a, b]| Ok((vector(space, a)?, vector(space, b)?)))
                .collect::<Result<Vec<_>>>()?;
            Relation::sampled_graph(space, pairs)
        }
    }
}

/// Exit status of a completed analysis (errors map to exit code 2 in the
/// binary).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Certified,
    Violation,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Certified => 0,
            Outcome::Violation => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub outcome: Outcome,
    pub text: String,
    pub json: Value,
    /// `(file name, contents)` artifacts.
    pub files: Vec<(String, String)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Check,
    Gain,
    Worstcase,
    Interpolate,
    Simulate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Gain => "gain",
            Command::Worstcase => "worstcase",
            Command::Interpolate => "interpolate",
            Command::Simulate => "simulate",
        }
    }
}

pub fn run(command: Command, cfg: &AnalysisConfig) -> Result<CommandOutput> {
    match command {
        Command::Check => cmd_check(cfg),
        Command::Gain => cmd_gain(cfg),
        Command::Worstcase => cmd_worstcase(cfg),
        Command::Interpolate => cmd_interpolate(cfg),
        Command::Simulate => cmd_simulate(cfg),
    }
}

struct Report {
    lines: Vec<String>,
}

impl Report {
    fn new(command: &str) -> Self {
        Self {
            lines: vec![format!("command: {command}")],
        }
    }

    fn line(&mut self, key: &str, value: impl std::fmt::Display) {
        self.lines.push(format!("{key}: {value}"));
    }

    fn finish(self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }
}

fn fmt_c(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else {
        format!("{}{:+}i", z.re, z.im)
    }
}

fn fmt_vec(v: &Vector) -> String {
    let parts: Vec<String> = v.coords().iter().map(|&z| fmt_c(z)).collect();
    format!("[{}]", parts.join(", "))
}

fn coords_json(v: &Vector) -> Value {
    json!(v.coords().iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
}

pub fn cmd_check(cfg: &AnalysisConfig) -> Result<CommandOutput> {
    let tol = cfg.tol();
    let space = cfg.space()?;
    let g = cfg.relation("g")?;
    let (m, n) = cfg.forms()?;
    let probes = cfg.probe_set(&space)?;
    let mut r = Report::new("check");
    r.line("space", &space);
    r.line("M", m);
    let (n_used, source, check) = match n {
        Some(n) => {
            let c = check_condition_i(&g, &n, &m, &probes, &tol)?;
            (Some(n), "supplied".to_string(), c)
        }
        None => match search_condition_i(&g, &m, &probes, &cfg.eps_grid, &tol)? {
            SearchOutcome::Found { eps, n } => (
                Some(n),
                format!("found at eps = {eps}"),
                ConditionCheck::Pass {
                    probes_checked: probes.len(),
                },
            ),
            SearchOutcome::NotFound { last } => (None, "none found on the eps grid".to_string(), last),
        },
    };
    let mut js = json!({ "command": "check", "m": m, "probes": probes.len(), "seed": cfg.seed });
    match n_used {
        Some(n) => {
            let s = m + n;
            r.line("N", format!("{n} ({source})"));
            r.line(
                "M+N",
                format!("{:?}, eigenvalues {:?}", s.definiteness(), s.eigenvalues()),
            );
            js["n"] = json!(n);
            js["m_plus_n"] = json!({ "definiteness": s.definiteness(), "eigenvalues": s.eigenvalues() });
        }
        None => r.line("N", &source),
    }
    js["n_source"] = json!(source);
    r.line("probes", probes.len());
    let outcome = match &check {
        ConditionCheck::Pass { .. } => {
            r.line("result", "PASS (probe-relative)");
            js["result"] = json!("pass");
            Outcome::Certified
        }
        ConditionCheck::Fail {
            probe_index,
            xi,
            image,
            value,
        } => {
            r.line("result", "FAIL");
            r.line("violating probe", probe_index);
            r.line("xi", fmt_vec(xi));
            r.line("G xi", fmt_vec(image));
            r.line("qc value", value);
            js["result"] = json!("fail");
            js["violation"] =
                json!({ "probe": probe_index, "xi": coords_json(xi), "image": coords_json(image), "value": value });
            Outcome::Violation
        }
    };
    Ok(CommandOutput {
        outcome,
        text: r.finish(),
        json: js,
        files: Vec::new(),
    })
}

pub fn cmd_gain(cfg: &AnalysisConfig) -> Result<CommandOutput> {
    let (m, n) = cfg.forms()?;
    let n = n.ok_or_else(|| Error::config("n", "the gain command needs N (raw n or a classic spec)"))?;
    let b = gain_bound(&m, &n)?;
    let mut r = Report::new("gain");
    r.line("M", m);
    r.line("N", n);
    r.line("eta", b.eta);
    r.line("r", b.r);
    r.line("q", b.q);
    r.line("gamma", b.gamma);
    r.line("gamma (error form)", b.e_form_gamma());
    Ok(CommandOutput {
        outcome: Outcome::Certified,
        text: r.finish(),
        json: json!({ "command": "gain", "bound": b, "gamma_error_form": b.e_form_gamma() }),
        files: Vec::new(),
    })
}

fn witness_files(wc: &WorstCaseResult) -> Vec<(String, String)> {
    let w = &wc.witness;
    [
        ("u1", &w.u1),
        ("u2", &w.u2),
        ("e1", &w.e1),
        ("e2", &w.e2),
        ("y1", &w.y1),
        ("y2", &w.y2),
    ]
    .into_iter()
    .map(|(name, v)| (format!("{name}.csv"), signal_to_csv(&Signal::from_vector(v))))
    .collect()
}

fn run_defeat(cfg: &AnalysisConfig) -> Result<(DefeatOutcome, usize, f64)> {
    let tol = cfg.tol();
    let space = cfg.space()?;
    let g = cfg.relation("g")?;
    let (m, _) = cfg.forms()?;
    let target = cfg
        .target_gamma
        .ok_or_else(|| Error::config("target_gamma", "missing"))?;
    let probes = cfg.probe_set(&space)?;
    Ok((
        defeat_gain(&g, &m, target, &probes, &cfg.eps_grid, &tol)?,
        probes.len(),
        target,
    ))
}

pub fn cmd_worstcase(cfg: &AnalysisConfig) -> Result<CommandOutput> {
    let (out, probes, target) = run_defeat(cfg)?;
    let mut r = Report::new("worstcase");
    r.line("target gamma", target);
    r.line("probes", probes);
    let mut js = json!({ "command": "worstcase", "target_gamma": target, "probes": probes, "seed": cfg.seed });
    match out {
        DefeatOutcome::Success(wc) => {
            let s = wc.summary();
            r.line("result", "DEFEATED");
            r.line("eps", s.eps);
            r.line("kappa", s.kappa);
            r.line("guaranteed ratio", s.guaranteed_ratio);
            r.line("achieved ratio", s.achieved_ratio);
            r.line("M value on (e2, y2)", s.m_value);
            r.line("xi", fmt_vec(&wc.xi));
            js["result"] = json!("defeated");
            js["worst_case"] = json!(s);
            js["xi"] = coords_json(&wc.xi);
            Ok(CommandOutput {
                outcome: Outcome::Violation,
                text: r.finish(),
                json: js,
                files: witness_files(&wc),
            })
        }
        DefeatOutcome::CannotDefeat { violations_seen, .. } => {
            r.line("result", "CANNOT DEFEAT (probe-relative)");
            r.line("violating probes seen", violations_seen);
            js["result"] = json!("cannot_defeat");
            js["violations_seen"] = json!(violations_seen);
            Ok(CommandOutput {
                outcome: Outcome::Certified,
                text: r.finish(),
                json: js,
                files: Vec::new(),
            })
        }
    }
}

fn case_json(case: &InterpolantCase) -> Value {
    let c = |z: Complex64| json!([z.re, z.im]);
    match *case {
        InterpolantCase::AlignedScaling { rho, scale } => {
            json!({ "case": case.tag(), "rho": c(rho), "scale": c(scale) })
        }
        InterpolantCase::GeneralRotation {
            rho,
            phi,
            eta_dir,
            conditioning,
        } => {
            json!({ "case": case.tag(), "rho": c(rho), "phi": phi, "eta_dir": c(eta_dir), "conditioning": conditioning })
        }
        _ => json!({ "case": case.tag() }),
    }
}

pub fn cmd_interpolate(cfg: &AnalysisConfig) -> Result<CommandOutput> {
    let tol = cfg.tol();
    let space = cfg.space()?;
    let (m, _) = cfg.forms()?;
    let mut r = Report::new("interpolate");
    let (e, y, source) = match &cfg.anchor {
        Some(a) => (
            vector(&space, &a.e).map_err(|err| Error::config("anchor.e", err.to_string()))?,
            vector(&space, &a.y).map_err(|err| Error::config("anchor.y", err.to_string()))?,
            "config",
        ),
        None => match run_defeat(cfg)?.0 {
            DefeatOutcome::Success(wc) => (wc.witness.e2.clone(), wc.witness.y2.clone(), "worst case"),
            DefeatOutcome::CannotDefeat { .. } => {
                return Err(Error::config(
                    "anchor",
                    "no anchor given and the worst-case search found none",
                ))
            }
        },
    };
    r.line("anchor source", source);
    r.line("e", fmt_vec(&e));
    r.line("y", fmt_vec(&y));
    let mut js =
        json!({ "command": "interpolate", "anchor_source": source, "e": coords_json(&e), "y": coords_json(&y) });
    let interp = match extend(&space, &m, &e, &y, &tol) {
        Ok(i) => i,
        Err(Error::AnchorViolatesM(v)) => {
            r.line("result", "ANCHOR VIOLATES M");
            r.line("qc value", v);
            js["result"] = json!("anchor_violates_m");
            js["qc_value"] = json!(v);
            return Ok(CommandOutput {
                outcome: Outcome::Violation,
                text: r.finish(),
                json: js,
                files: Vec::new(),
            });
        }
        Err(other) => return Err(other),
    };
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(cfg.seed.wrapping_add(2));
    let samples: Vec<Vector> = (0..cfg.samples).map(|_| space.random_vector(&mut rng)).collect();
    let rep = verify_interpolant(&interp, &m, &samples, &tol)?;
    r.line("case", interp.case.tag());
    match interp.case {
        InterpolantCase::AlignedScaling { rho, scale } => {
            r.line("rho", fmt_c(rho));
            r.line("ratio", fmt_c(scale));
        }
        InterpolantCase::GeneralRotation {
            rho,
            phi,
            eta_dir,
            conditioning,
        } => {
            r.line("rho", fmt_c(rho));
            r.line("phi", phi);
            r.line("eta_dir", fmt_c(eta_dir));
            r.line("conditioning", conditioning);
        }
        _ => {}
    }
    r.line("anchor residual", rep.anchor_residual);
    r.line("min qc over samples", rep.min_qc);
    r.line("linear", rep.linear);
    let ok = rep.qc_ok && rep.anchor_contained;
    r.line("result", if ok { "INTERPOLATED" } else { "VERIFICATION FAILED" });
    js["interpolant"] = case_json(&interp.case);
    js["verification"] = json!(rep);
    let phi_desc = json!({
        "case": case_json(&interp.case),
        "relation": interp.relation.kind_name(),
        "matrix": interp.relation.matrix().map(|a| {
            (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| [a[(i, j)].re, a[(i, j)].im]).collect::<Vec<_>>()).collect::<Vec<_>>()
        }),
    });
    Ok(CommandOutput {
        outcome: if ok { Outcome::Certified } else { Outcome::Violation },
        text: r.finish(),
        json: js,
        files: vec![(
            "phi.json".into(),
            serde_json::to_string_pretty(&phi_desc).expect("json values serialize") + "\n",
        )],
    })
}

pub fn cmd_simulate(cfg: &AnalysisConfig) -> Result<CommandOutput> {
    let tol = cfg.tol();
    let ops = cfg
        .operators
        .as_ref()
        .ok_or_else(|| Error::config("operators", "missing"))?;
    let bank = cfg.input_bank()?;
    let len = bank.iter().map(|(a, b)| a.len().max(b.len())).max().unwrap_or(0);
    let horizons = cfg.horizons.clone().unwrap_or_else(|| (1..=len).collect());
    let forms = if cfg.m.is_some() || cfg.classic.is_some() {
        let (m, n) = cfg.forms()?;
        n.map(|n| (m, n))
    } else {
        None
    };
    let rep = empirical_gain(
        &ops.g,
        &ops.phi,
        &bank,
        &horizons,
        forms.as_ref().map(|(m, n)| (m, n)),
        &tol,
    )?;
    let mut r = Report::new("simulate");
    r.line("inputs", rep.inputs);
    r.line(
        "horizons",
        format!(
            "{} (max {})",
            horizons.len(),
            horizons.iter().max().copied().unwrap_or(0)
        ),
    );
    r.line("empirical gain", rep.max_ratio);
    if let Some(gm) = rep.certified_gamma {
        r.line("certified gamma", gm);
    }
    if let Some(h) = rep.g_constraint_holds {
        r.line("G constraint on bank", h);
    }
    if let Some(h) = rep.phi_constraint_holds {
        r.line("Phi constraint on bank", h);
    }
    let outcome = match rep.within_certified {
        Some(false) => {
            r.line("result", "empirical > certified");
            Outcome::Violation
        }
        Some(true) => {
            r.line("result", "empirical <= certified");
            Outcome::Certified
        }
        None => {
            r.line("result", "no certified bound to compare");
            Outcome::Certified
        }
    };
    Ok(CommandOutput {
        outcome,
        text: r.finish(),
        json: json!({ "command": "simulate", "report": rep, "seed": cfg.seed }),
        files: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL_GAIN: &str = r#"{
        "space": {"kind": "euclidean", "field": "real", "dim": 3},
        "m": [[0.25, 0], [0, -1]],
        "n": [[-1, 0], [0, 0.25]],
        "g": {"kind": "scaled_identity", "scale": 0.5},
        "probes": {"count": 20},
        "seed": 7
    }"#;

    #[test]
    fn check_and_gain_on_small_gain() {
        let cfg = AnalysisConfig::from_json(SMALL_GAIN).unwrap();
        let out = cmd_check(&cfg).unwrap();
        assert_eq!(out.outcome, Outcome::Certified);
        assert!(out.text.contains("PASS (probe-relative)"));
        let out = cmd_gain(&cfg).unwrap();
        assert!(out.text.contains("gamma: 1\n"));
        assert_eq!(out.json["bound"]["gamma"], json!(1.0));
    }

    #[test]
    fn reports_are_deterministic() {
        let cfg = AnalysisConfig::from_json(SMALL_GAIN).unwrap();
        assert_eq!(cmd_check(&cfg).unwrap(), cmd_check(&cfg).unwrap());
    }

    #[test]
    fn validation_errors() {
        let bad = SMALL_GAIN.replace("[[0.25, 0], [0, -1]]", "[[0.25, 1], [0, -1]]");
        match AnalysisConfig::from_json(&bad) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "m"),
            other => panic!("{other:?}"),
        }
        match AnalysisConfig::from_json("{\n \"space\": 3\n}") {
            Err(Error::Config { field, .. }) => assert!(field.starts_with("line 2")),
            other => panic!("{other:?}"),
        }
        let both = SMALL_GAIN.replace(
            "\"seed\": 7",
            "\"seed\": 7, \"classic\": {\"kind\": {\"kind\": \"small_gain\", \"g_g\": 0.5, \"g_phi\": 0.5}}",
        );
        assert!(matches!(AnalysisConfig::from_json(&both), Err(Error::Config { .. })));
    }

    #[test]
    fn worstcase_and_interpolate() {
        let text = r#"{
            "space": {"kind": "euclidean", "field": "real", "dim": 2},
            "m": [[1, 0], [0, -1]],
            "g": {"kind": "scaled_identity", "scale": 2},
            "target_gamma": 50,
            "probes": {"count": 4, "vectors": [[0.6, 0.8]]}
        }"#;
        let cfg = AnalysisConfig::from_json(text).unwrap();
        let out = cmd_worstcase(&cfg).unwrap();
        assert_eq!(out.outcome, Outcome::Violation);
        assert_eq!(out.files.len(), 6);
        assert!(out.json["worst_case"]["achieved_ratio"].as_f64().unwrap() > 50.0);
        let out = cmd_interpolate(&cfg).unwrap();
        assert_eq!(out.outcome, Outcome::Certified);
        assert!(out.text.contains("case: aligned_scaling"));

        let orth = text.replace("\"target_gamma\": 50,", "\"anchor\": {\"e\": [1, 0], \"y\": [0, 1]},");
        let out = cmd_interpolate(&AnalysisConfig::from_json(&orth).unwrap()).unwrap();
        assert!(out.text.contains("case: general_rotation"));
        let bad = text.replace("\"target_gamma\": 50,", "\"anchor\": {\"e\": [1, 0], \"y\": [0, 2]},");
        assert_eq!(
            cmd_interpolate(&AnalysisConfig::from_json(&bad).unwrap())
                .unwrap()
                .outcome,
            Outcome::Violation
        );
    }

    #[test]
    fn simulate_contractive_and_algebraic() {
        let text = r#"{
            "classic": {"kind": {"kind": "small_gain", "g_g": 0.5, "g_phi": 0.5}},
            "operators": {
                "g": {"kind": "series", "stages": [{"kind": "delay", "steps": 1}, {"kind": "gain", "k": 0.5}]},
                "phi": {"kind": "gain", "k": 0.5}
            },
            "inputs": {"count": 5, "len": 16}
        }"#;
        let out = cmd_simulate(&AnalysisConfig::from_json(text).unwrap()).unwrap();
        assert_eq!(out.outcome, Outcome::Certified);
        let unity = text.replace(
            r#"{"kind": "series", "stages": [{"kind": "delay", "steps": 1}, {"kind": "gain", "k": 0.5}]}"#,
            r#"{"kind": "gain", "k": 2.0}"#,
        );
        assert!(matches!(
            cmd_simulate(&AnalysisConfig::from_json(&unity).unwrap()),
            Err(Error::AlgebraicLoop(0))
        ));
    }
}

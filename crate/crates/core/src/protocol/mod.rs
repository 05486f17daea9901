//! GHZ and W generation protocols: closed-form composition and full dynamics.

mod density;
mod full;

pub use density::{ghz_state, register_index, w_state, RegisterDensity, TwoQubitDensity};
pub use full::{
    interferometer_layout, run_protocol_full_dynamics, DynamicsDiagnostics, InterferometerLayout,
    MAX_DYNAMICS_DIM, MAX_DYNAMICS_QUBITS, READOUT_SEPARATION_TOL,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scattering::{scatter_off_dd, ScatteringGeometry, SHIFT_CONVENTION};

const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    Ghz,
    W,
}

/// Opening `(alpha, beta)` and closing `(alpha_out, beta_out)` Y splitters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitterParams {
    pub alpha: f64,
    pub beta: f64,
    pub alpha_out: f64,
    pub beta_out: f64,
}

impl SplitterParams {
    pub fn balanced() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        SplitterParams { alpha: h, beta: h, alpha_out: h, beta_out: h }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, a, b) in [("opening", self.alpha, self.beta), ("closing", self.alpha_out, self.beta_out)] {
            let norm = a * a + b * b;
            if !a.is_finite() || !b.is_finite() || (norm - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::InvalidParameter(format!(
                    "{name} splitter needs alpha^2 + beta^2 = 1, got {norm}"
                )));
            }
        }
        Ok(())
    }

    pub fn is_balanced(&self) -> bool {
        let b = Self::balanced();
        [
            self.alpha - b.alpha,
            self.beta - b.beta,
            self.alpha_out - b.alpha_out,
            self.beta_out - b.beta_out,
        ]
        .iter()
        .all(|d| d.abs() < NORMALIZATION_TOL)
    }
}

fn default_field() -> f64 {
    10.0
}

fn default_alpha() -> f64 {
    4.0 / 15.0
}

fn default_j_perp() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub kind: ProtocolKind,
    pub n: usize,
    /// GHZ splitters; balanced when absent. W networks are always balanced.
    #[serde(default)]
    pub splitters: Option<SplitterParams>,
    #[serde(default = "default_field")]
    pub h: f64,
    #[serde(default = "default_field")]
    pub jz: f64,
    /// Packet inverse width.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_j_perp")]
    pub j_perp: f64,
    /// Transmission amplitude used by the closed-form engine instead of a
    /// scattering run.
    #[serde(default)]
    pub t_override: Option<Complex64>,
}

impl ProtocolConfig {
    pub fn new(kind: ProtocolKind, n: usize) -> Self {
        ProtocolConfig {
            kind,
            n,
            splitters: None,
            h: default_field(),
            jz: default_field(),
            alpha: default_alpha(),
            j_perp: default_j_perp(),
            t_override: None,
        }
    }

    pub fn ghz(n: usize) -> Self {
        Self::new(ProtocolKind::Ghz, n)
    }

    pub fn w(n: usize) -> Self {
        Self::new(ProtocolKind::W, n)
    }

    pub fn with_t(mut self, t: Complex64) -> Self {
        self.t_override = Some(t);
        self
    }

    pub fn with_fields(mut self, h: f64, jz: f64) -> Self {
        self.h = h;
        self.jz = jz;
        self
    }

    pub fn with_splitters(mut self, s: SplitterParams) -> Self {
        self.splitters = Some(s);
        self
    }

    pub fn splitters(&self) -> SplitterParams {
        self.splitters.unwrap_or_else(SplitterParams::balanced)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ProtocolKind::Ghz if self.n < 1 => {
                return Err(Error::InvalidParameter("GHZ protocol needs n >= 1".into()))
            }
            ProtocolKind::W if self.n < 2 => {
                return Err(Error::InvalidParameter(format!(
                    "W state needs n >= 2 qubits, got {}",
                    self.n
                )))
            }
            _ => {}
        }
        if self.n > 20 {
            return Err(Error::InvalidParameter(format!("n = {} exceeds the register limit of 20", self.n)));
        }
        if let Some(s) = &self.splitters {
            s.validate()?;
            if self.kind == ProtocolKind::W && !s.is_balanced() {
                return Err(Error::InvalidParameter(
                    "W protocol supports only symmetric splitters".into(),
                ));
            }
        }
        if !(self.h.is_finite() && self.h >= 0.0 && self.jz.is_finite() && self.jz >= 0.0) {
            return Err(Error::InvalidParameter("h and jz must be finite and >= 0".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(Error::InvalidParameter(format!("packet alpha must lie in (0, 2), got {}", self.alpha)));
        }
        if self.j_perp == 0.0 || !self.j_perp.is_finite() {
            return Err(Error::InvalidParameter("j_perp must be finite and nonzero".into()));
        }
        if let Some(t) = self.t_override {
            if !(t.re.is_finite() && t.im.is_finite()) || t.norm() > 1.0 + 1e-12 {
                return Err(Error::InvalidParameter(format!("t_override must satisfy |t| <= 1, got {t}")));
            }
        }
        Ok(())
    }

    pub fn target_state(&self) -> Vec<Complex64> {
        match self.kind {
            ProtocolKind::Ghz => ghz_state(self.n),
            ProtocolKind::W => w_state(self.n),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    ClosedForm,
    Dynamics,
}

/// One non-overlapping branch of the final state and its probability.
#[derive(Clone, Debug, Serialize)]
pub struct LedgerBranch {
    pub label: String,
    pub probability: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProtocolOutcome {
    pub kind: ProtocolKind,
    pub n: usize,
    pub engine: Engine,
    pub success_probability: f64,
    pub fidelity_to_target: f64,
    /// Concurrence of the post-selected register (two-qubit registers only).
    pub concurrence: Option<f64>,
    /// Post-selected register populations in the computational basis.
    pub populations: Vec<f64>,
    #[serde(skip)]
    pub post_state: RegisterDensity,
    pub ledger: Vec<LedgerBranch>,
    pub ledger_total: f64,
    pub t: Complex64,
    /// `|t|^2` of the single-DD transmission amplitude.
    pub transmission: f64,
    pub t_convention: String,
    pub splitters: Option<SplitterParams>,
    pub dynamics: Option<DynamicsDiagnostics>,
}

impl ProtocolOutcome {
    fn finish(
        cfg: &ProtocolConfig,
        engine: Engine,
        post: RegisterDensity,
        success_probability: f64,
        ledger: Vec<LedgerBranch>,
        t: Complex64,
        t_convention: String,
    ) -> Result<Self> {
        let fidelity_to_target = post.fidelity_to_pure(&cfg.target_state())?;
        let concurrence = post.as_two_qubit().ok().map(|r| r.concurrence());
        Ok(ProtocolOutcome {
            kind: cfg.kind,
            n: cfg.n,
            engine,
            success_probability,
            fidelity_to_target,
            concurrence,
            populations: post.populations(),
            post_state: post,
            ledger_total: ledger.iter().map(|b| b.probability).sum(),
            ledger,
            t,
            transmission: t.norm_sqr(),
            t_convention,
            splitters: (cfg.kind == ProtocolKind::Ghz).then(|| cfg.splitters()),
            dynamics: None,
        })
    }
}

/// Transmission amplitude for the closed-form engine: the override when set,
/// otherwise a scattering run at the configured `(h, Jz)` and packet width.
pub fn resolve_t(cfg: &ProtocolConfig) -> Result<(Complex64, String)> {
    if let Some(t) = cfg.t_override {
        return Ok((t, "override".to_string()));
    }
    let geometry = ScatteringGeometry { j_perp: cfg.j_perp, ..ScatteringGeometry::for_alpha(cfg.alpha) };
    let net = geometry.network(cfg.jz, cfg.h)?;
    let amps = scatter_off_dd(&net, &geometry.packet(), 0, geometry.transit_time())?;
    Ok((amps.t, SHIFT_CONVENTION.to_string()))
}

fn branch(label: impl Into<String>, probability: f64) -> LedgerBranch {
    LedgerBranch { label: label.into(), probability }
}

/// Compose the opening splitter, the DD chain in arm A and the closing
/// splitter, then post-select on the output lead.
pub fn run_ghz_closed_form(cfg: &ProtocolConfig) -> Result<ProtocolOutcome> {
    if cfg.kind != ProtocolKind::Ghz {
        return Err(Error::InvalidParameter("run_ghz_closed_form needs kind = ghz".into()));
    }
    cfg.validate()?;
    let (t, convention) = resolve_t(cfg)?;
    if t.norm() == 0.0 {
        return Err(Error::ZeroProbability("t = 0 leaves no transmitted branch".into()));
    }
    let s = cfg.splitters();
    let n = cfg.n;
    let tn = t.powu(n as u32);
    let one = s.alpha_out * s.alpha * tn;
    let zero = Complex64::new(s.beta_out * s.beta, 0.0);
    let p = one.norm_sqr() + zero.norm_sqr();
    if p <= 0.0 {
        return Err(Error::ZeroProbability("output lead".into()));
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
    amps[0] = zero;
    amps[(1 << n) - 1] = one;
    let post = RegisterDensity::pure(n, &amps)?;
    let (a, b, a2, b2) = (s.alpha, s.beta, s.alpha_out, s.beta_out);
    let ledger = vec![
        branch("output lead", p),
        branch("arm A after closing node", (b2 * b2 * a * tn).norm_sqr() + (a2 * b2 * b).powi(2)),
        branch("arm B after closing node", (a2 * a2 * b).powi(2) + (a2 * b2 * a * tn).norm_sqr()),
        branch("not transmitted by DD chain", a * a * (1.0 - tn.norm_sqr())),
    ];
    ProtocolOutcome::finish(cfg, Engine::ClosedForm, post, p, ledger, t, convention)
}

/// Split equally into `n` arms, switch one DD per arm, recombine at the
/// closing 1×n node and post-select on the output lead.
pub fn run_w_closed_form(cfg: &ProtocolConfig) -> Result<ProtocolOutcome> {
    if cfg.kind != ProtocolKind::W {
        return Err(Error::InvalidParameter("run_w_closed_form needs kind = w".into()));
    }
    cfg.validate()?;
    let (t, convention) = resolve_t(cfg)?;
    if t.norm() == 0.0 {
        return Err(Error::ZeroProbability("t = 0 leaves no transmitted branch".into()));
    }
    let n = cfg.n;
    let nf = n as f64;
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
    for q in 0..n {
        amps[1 << (n - 1 - q)] = t / nf;
    }
    let p = t.norm_sqr() / nf;
    let post = RegisterDensity::pure(n, &amps)?;
    let mut ledger = vec![branch("output lead", p)];
    for j in 1..=n {
        ledger.push(branch(format!("arm{j} after closing node"), t.norm_sqr() / nf * (1.0 - 1.0 / nf)));
    }
    ledger.push(branch("not transmitted by DD", 1.0 - t.norm_sqr()));
    ProtocolOutcome::finish(cfg, Engine::ClosedForm, post, p, ledger, t, convention)
}

pub fn run_closed_form(cfg: &ProtocolConfig) -> Result<ProtocolOutcome> {
    match cfg.kind {
        ProtocolKind::Ghz => run_ghz_closed_form(cfg),
        ProtocolKind::W => run_w_closed_form(cfg),
    }
}

/// `2 / |1 + t^-n|^2`.
pub fn p_ghz_formula(t: Complex64, n: usize) -> f64 {
    2.0 / (Complex64::new(1.0, 0.0) + t.powi(-(n as i32))).norm_sqr()
}

/// `|t|^2 / n`.
pub fn p_w_formula(t: Complex64, n: usize) -> f64 {
    t.norm_sqr() / n as f64
}

/// Splitters that balance the two output amplitudes for real `t`:
/// `alpha = alpha' = sqrt(1 / (1 + t^n))`, `beta = beta' = sqrt(t^n / (1 + t^n))`.
pub fn optimal_ghz_splitters(t: f64, n: usize) -> Result<SplitterParams> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::InvalidParameter(format!("optimal splitters need real t in (0, 1], got {t}")));
    }
    let tn = t.powi(n as i32);
    let alpha = (1.0 / (1.0 + tn)).sqrt();
    let beta = (tn / (1.0 + tn)).sqrt();
    Ok(SplitterParams { alpha, beta, alpha_out: alpha, beta_out: beta })
}

/// Grid search over the opening angle among splitter pairs that produce the
/// GHZ state exactly (closing angle fixed by `alpha alpha' t^n = beta beta'`).
#[derive(Clone, Debug, Serialize)]
pub struct GhzOptimum {
    pub t: f64,
    pub n: usize,
    pub steps: usize,
    pub best: SplitterParams,
    pub best_probability: f64,
    pub predicted: SplitterParams,
    pub predicted_probability: f64,
    /// Grid spacing in `alpha`.
    pub resolution: f64,
}

pub fn ghz_optimum_grid_search(t: f64, n: usize, steps: usize) -> Result<GhzOptimum> {
    let predicted = optimal_ghz_splitters(t, n)?;
    if steps < 3 {
        return Err(Error::InvalidParameter("grid search needs at least 3 steps".into()));
    }
    let tn = t.powi(n as i32);
    let mut best = (f64::NEG_INFINITY, predicted);
    for k in 1..steps {
        let theta = std::f64::consts::FRAC_PI_2 * k as f64 / steps as f64;
        let (alpha, beta) = (theta.cos(), theta.sin());
        let theta_out = (alpha * tn).atan2(beta);
        let (alpha_out, beta_out) = (theta_out.cos(), theta_out.sin());
        let p = (alpha * alpha_out * tn).powi(2) + (beta * beta_out).powi(2);
        if p > best.0 {
            best = (p, SplitterParams { alpha, beta, alpha_out, beta_out });
        }
    }
    Ok(GhzOptimum {
        t,
        n,
        steps,
        best: best.1,
        best_probability: best.0,
        predicted,
        predicted_probability: p_ghz_formula(Complex64::new(t, 0.0), n),
        resolution: std::f64::consts::FRAC_PI_2 / steps as f64,
    })
}

/// `P_GHZ` and `P_W` at `t = sqrt(T)` for every `(T, n)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveRow {
    pub transmission: f64,
    pub n: usize,
    pub p_ghz: f64,
    pub p_w: f64,
}

impl CurveRow {
    pub fn gap(&self) -> f64 {
        self.p_ghz - self.p_w
    }
}

pub fn probability_curves(transmissions: &[f64], ns: &[usize]) -> Result<Vec<CurveRow>> {
    if let Some(t) = transmissions.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
        return Err(Error::InvalidParameter(format!("transmission must lie in (0, 1], got {t}")));
    }
    if let Some(n) = ns.iter().find(|&&n| n < 2) {
        return Err(Error::InvalidParameter(format!("curves need n >= 2, got {n}")));
    }
    Ok(transmissions
        .iter()
        .flat_map(|&big_t| {
            let t = Complex64::new(big_t.sqrt(), 0.0);
            ns.iter().map(move |&n| CurveRow {
                transmission: big_t,
                n,
                p_ghz: p_ghz_formula(t, n),
                p_w: p_w_formula(t, n),
            })
        })
        .collect())
}

/// Default figure grid: `T` in {1.0, 0.9, 0.8, 0.7}, `n` in 2..=8.
pub fn default_curves() -> Vec<CurveRow> {
    probability_curves(&[1.0, 0.9, 0.8, 0.7], &(2..=8).collect::<Vec<_>>()).expect("valid defaults")
}

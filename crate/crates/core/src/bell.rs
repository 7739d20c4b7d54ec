//! Born-rule correlations, the lifted CHSH family of Bell expressions and
//! the end-to-end certification report.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gme::{
    gme_check, margins_at, rank_alphas, AlphaSelection, MarginThresholds, DEFAULT_GRID_POINTS,
    DEFAULT_PURITY_TOL, MIN_GRID_POINTS,
};
use crate::hardy::{assemble, hardy_vectors, residual_coeffs, MeasurementAssignment};
use crate::io::state_digest;
use crate::state::{embed, Amplitude, DenseState, NearSymmetricState};

/// Outcome and setting strings of one joint probability `p(a|x)`.
///
/// Party `j` (1-based) occupies bit `n - j` of both masks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CorrelationQuery {
    n: usize,
    outcomes: u64,
    settings: u64,
}

impl CorrelationQuery {
    pub fn new(n: usize, outcomes: u64, settings: u64) -> Result<Self> {
        if n == 0 || n > 63 || outcomes >> n != 0 || settings >> n != 0 {
            return Err(Error::domain(format!(
                "query ({outcomes:b}|{settings:b}) does not fit {n} parties"
            )));
        }
        Ok(Self {
            n,
            outcomes,
            settings,
        })
    }

    /// Parses bit strings such as `("010", "110")`, party 1 first.
    pub fn parse(outcomes: &str, settings: &str) -> Result<Self> {
        if outcomes.len() != settings.len() {
            return Err(Error::domain("outcome and setting strings differ in length"));
        }
        let bits = |s: &str| {
            u64::from_str_radix(s, 2).map_err(|_| Error::domain(format!("`{s}` is not a bit string")))
        };
        Self::new(outcomes.len(), bits(outcomes)?, bits(settings)?)
    }

    /// All outcomes and settings zero.
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            outcomes: 0,
            settings: 0,
        }
    }

    /// Sets outcome `a` and setting `x` for party `j`.
    pub fn with(mut self, j: usize, a: u8, x: u8) -> Self {
        let bit = 1u64 << (self.n - j);
        self.outcomes = (self.outcomes & !bit) | if a != 0 { bit } else { 0 };
        self.settings = (self.settings & !bit) | if x != 0 { bit } else { 0 };
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn outcome(&self, j: usize) -> u8 {
        ((self.outcomes >> (self.n - j)) & 1) as u8
    }

    pub fn setting(&self, j: usize) -> u8 {
        ((self.settings >> (self.n - j)) & 1) as u8
    }

    pub fn outcome_bits(&self) -> u64 {
        self.outcomes
    }

    pub fn setting_bits(&self) -> u64 {
        self.settings
    }
}

impl fmt::Display for CorrelationQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.n;
        write!(
            f,
            "p({:0n$b}|{:0n$b})",
            self.outcomes,
            self.settings,
            n = n
        )
    }
}

/// Anything that assigns a probability to every `p(a|x)`.
pub trait Correlations {
    fn parties(&self) -> usize;
    fn probability(&self, q: &CorrelationQuery) -> f64;
}

/// `|<m_{a1|x1}| (x) ... (x) <m_{an|xn}| psi>|^2`, contracting one qubit at a
/// time from party `n` down to party 1.
pub fn joint_probability(
    psi: &DenseState,
    m: &MeasurementAssignment,
    q: &CorrelationQuery,
) -> Result<f64> {
    if psi.n() != m.n() || q.n() != m.n() {
        return Err(Error::domain(format!(
            "state has {} qubits, measurements {}, query {}",
            psi.n(),
            m.n(),
            q.n()
        )));
    }
    Ok(contract_all(psi, m, q).norm_sqr())
}

fn contract_all(psi: &DenseState, m: &MeasurementAssignment, q: &CorrelationQuery) -> Amplitude {
    let n = psi.n();
    let mut buf: Vec<Amplitude> = psi.amplitudes().to_vec();
    let mut len = buf.len();
    for j in (1..=n).rev() {
        let v = m.bra(j, q.setting(j), q.outcome(j));
        len /= 2;
        for i in 0..len {
            buf[i] = v.apply(buf[2 * i], buf[2 * i + 1]);
        }
    }
    buf[0]
}

/// Quantum correlations of a pure state under a measurement assignment.
#[derive(Debug, Clone, Copy)]
pub struct QuantumCorrelations<'a> {
    psi: &'a DenseState,
    m: &'a MeasurementAssignment,
}

impl<'a> QuantumCorrelations<'a> {
    pub fn new(psi: &'a DenseState, m: &'a MeasurementAssignment) -> Result<Self> {
        if psi.n() != m.n() {
            return Err(Error::domain(format!(
                "state has {} qubits but {} parties are measured",
                psi.n(),
                m.n()
            )));
        }
        Ok(Self { psi, m })
    }

    pub fn assignment(&self) -> &MeasurementAssignment {
        self.m
    }
}

impl Correlations for QuantumCorrelations<'_> {
    fn parties(&self) -> usize {
        self.m.n()
    }

    fn probability(&self, q: &CorrelationQuery) -> f64 {
        contract_all(self.psi, self.m, q).norm_sqr()
    }
}

/// Lifted CHSH between parties `i` and `j`, all other parties fixed to
/// setting 0 and outcome 0:
/// `p(0|0) - p(1_i|1_i) - p(1_j|1_j) - p(0|1_i 1_j)`.
pub fn lifted_chsh_pair<C: Correlations + ?Sized>(p: &C, i: usize, j: usize) -> f64 {
    let z = CorrelationQuery::zeros(p.parties());
    p.probability(&z)
        - p.probability(&z.with(i, 1, 1))
        - p.probability(&z.with(j, 1, 1))
        - p.probability(&z.with(i, 0, 1).with(j, 0, 1))
}

/// Lifted CHSH between party 1 and party `j`.
pub fn lifted_chsh<C: Correlations + ?Sized>(p: &C, j: usize) -> Result<f64> {
    let n = p.parties();
    if j < 2 || j > n {
        return Err(Error::domain(format!("party {j} outside 2..={n}")));
    }
    Ok(lifted_chsh_pair(p, 1, j))
}

/// `sum_{j=2}^n I^{1,j} - (n-2)[p(0|0) - p(10..0|10..0)]`; bilocal models
/// give a value `<= 0`.
pub fn improved_gap<C: Correlations + ?Sized>(p: &C) -> f64 {
    let n = p.parties();
    let z = CorrelationQuery::zeros(n);
    let lhs: f64 = (2..=n).map(|j| lifted_chsh_pair(p, 1, j)).sum();
    let rhs = (n as f64 - 2.0) * (p.probability(&z) - p.probability(&z.with(1, 1, 1)));
    lhs - rhs
}

/// Collapsed form of [`improved_gap`] for correlations symmetric on
/// parties `2..=n`:
/// `p(0|0) - p(10..0|10..0) - (n-1) p(010..0|010..0) - (n-1) p(0|110..0)`.
pub fn catalonia_expression<C: Correlations + ?Sized>(p: &C) -> f64 {
    let n = p.parties();
    let z = CorrelationQuery::zeros(n);
    let k = n as f64 - 1.0;
    p.probability(&z)
        - p.probability(&z.with(1, 1, 1))
        - k * p.probability(&z.with(2, 1, 1))
        - k * p.probability(&z.with(1, 0, 1).with(2, 0, 1))
}

/// [`catalonia_expression`] for an assignment known to be symmetric.
pub fn catalonia_lhs(psi: &DenseState, m: &MeasurementAssignment) -> Result<f64> {
    if !m.is_symmetric() {
        return Err(Error::Invalid {
            what: "measurement assignment",
            reason: "parties 2..n do not share measurements".into(),
        });
    }
    Ok(catalonia_expression(&QuantumCorrelations::new(psi, m)?))
}

/// Reading of the pairwise sum in the Curchod-type inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurchodVariant {
    /// Every pair `(i, j)` contributes `I^{1,j}`.
    Literal,
    /// Pair `(i, j)` contributes `I^{i,j}`.
    Generalized,
}

impl CurchodVariant {
    pub const ALL: [CurchodVariant; 2] = [CurchodVariant::Literal, CurchodVariant::Generalized];
}

impl fmt::Display for CurchodVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CurchodVariant::Literal => "literal",
            CurchodVariant::Generalized => "generalized",
        })
    }
}

impl FromStr for CurchodVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(CurchodVariant::Literal),
            "generalized" => Ok(CurchodVariant::Generalized),
            other => Err(Error::domain(format!("unknown variant `{other}`"))),
        }
    }
}

/// `sum_{i<j} I^{.,j} - (n-2) p(0|0)` for the chosen reading of the summand.
pub fn curchod_gap<C: Correlations + ?Sized>(p: &C, variant: CurchodVariant) -> f64 {
    let n = p.parties();
    let mut lhs = 0.0;
    for i in 1..n {
        for j in i + 1..=n {
            let first = match variant {
                CurchodVariant::Literal => 1,
                CurchodVariant::Generalized => i,
            };
            lhs += lifted_chsh_pair(p, first, j);
        }
    }
    lhs - (n as f64 - 2.0) * p.probability(&CorrelationQuery::zeros(n))
}

/// The three probabilities Hardy's argument needs to vanish and the one it
/// needs to stay positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardyResiduals {
    /// `p(10..0|10..0)`
    pub r15: f64,
    /// `p(010..0|010..0)`
    pub r16: f64,
    /// `p(0..0|110..0)`
    pub r17: f64,
    /// `p(0..0|0..0)`
    pub p18: f64,
}

impl HardyResiduals {
    pub fn max_residual(&self) -> f64 {
        self.r15.max(self.r16).max(self.r17)
    }
}

pub fn hardy_residuals<C: Correlations + ?Sized>(p: &C) -> HardyResiduals {
    let z = CorrelationQuery::zeros(p.parties());
    HardyResiduals {
        r15: p.probability(&z.with(1, 1, 1)),
        r16: p.probability(&z.with(2, 1, 1)),
        r17: p.probability(&z.with(1, 0, 1).with(2, 0, 1)),
        p18: p.probability(&z),
    }
}

/// Tolerances and search settings for [`certify`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    /// Upper bound on each Hardy zero-probability.
    pub tol_residual: f64,
    /// Purity slack for the entanglement test.
    pub tol_purity: f64,
    pub margins: MarginThresholds,
    pub grid_points: usize,
    /// Fixed angle instead of a grid search.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha: Option<f64>,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            tol_residual: 1e-10,
            tol_purity: DEFAULT_PURITY_TOL,
            margins: MarginThresholds::default(),
            grid_points: DEFAULT_GRID_POINTS,
            alpha: None,
        }
    }
}

impl CertifyOptions {
    pub fn validate(&self) -> Result<()> {
        let t = [
            ("tol_residual", self.tol_residual),
            ("tol_purity", self.tol_purity),
            ("eps_ent", self.margins.entanglement),
            ("eps_max", self.margins.non_maximality),
            ("eps_norm", self.margins.residual_norm),
        ];
        for (name, v) in t {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        if self.grid_points < MIN_GRID_POINTS {
            return Err(Error::domain(format!(
                "grid needs at least {MIN_GRID_POINTS} points, got {}",
                self.grid_points
            )));
        }
        if let Some(a) = self.alpha {
            if !a.is_finite() {
                return Err(Error::domain("alpha must be finite"));
            }
        }
        Ok(())
    }

    /// Smallest Bell value accepted as a violation.
    pub fn violation_threshold(&self) -> f64 {
        10.0 * self.tol_residual
    }
}

/// Both readings of the pairwise inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurchodGaps {
    pub literal: f64,
    pub generalized: f64,
}

/// Outcome bras of one measurement as `[[re, im]; 2]` pairs.
pub type MeasurementJson = [[[f64; 2]; 2]; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub n: usize,
    /// SHA-256 of the canonical state file.
    pub state_digest: String,
    pub gme: bool,
    pub failing_bipartition: Option<String>,
    pub alpha: Option<f64>,
    pub margins: Option<crate::gme::AlphaMargins>,
    /// `(b1, b2, b3, b4)`
    pub b: Option<[[f64; 2]; 4]>,
    /// Keyed `"party,setting"`.
    pub measurements: Option<BTreeMap<String, MeasurementJson>>,
    /// `[r15, r16, r17]`
    pub hardy_residuals: Option<[f64; 3]>,
    pub hardy_probability: Option<f64>,
    pub catalonia_lhs: Option<f64>,
    pub improved_gap: Option<f64>,
    pub curchod_gap: Option<CurchodGaps>,
    pub verdict: bool,
    /// Why the verdict is negative.
    pub failure: Option<String>,
    pub tolerances: CertifyOptions,
}

fn pair(z: Amplitude) -> [f64; 2] {
    [z.re, z.im]
}

pub fn measurements_json(m: &MeasurementAssignment) -> BTreeMap<String, MeasurementJson> {
    let mut out = BTreeMap::new();
    for j in 1..=m.n() {
        for x in 0..2u8 {
            let meas = m.measurement(j, x);
            let bra = |b: &crate::state::Bra| [pair(b.beta), pair(b.gamma)];
            out.insert(format!("{j},{x}"), [bra(&meas.outcome0), bra(&meas.outcome1)]);
        }
    }
    out
}

impl CertificationReport {
    fn fill(&mut self, sel: &AlphaSelection, b: [Amplitude; 4], m: &MeasurementAssignment, p: &QuantumCorrelations) {
        let res = hardy_residuals(p);
        self.alpha = Some(sel.alpha);
        self.margins = Some(sel.margins);
        self.b = Some(b.map(pair));
        self.measurements = Some(measurements_json(m));
        self.hardy_residuals = Some([res.r15, res.r16, res.r17]);
        self.hardy_probability = Some(res.p18);
        self.catalonia_lhs = Some(catalonia_expression(p));
        self.improved_gap = Some(improved_gap(p));
        self.curchod_gap = Some(CurchodGaps {
            literal: curchod_gap(p, CurchodVariant::Literal),
            generalized: curchod_gap(p, CurchodVariant::Generalized),
        });
    }

    /// Largest of the three Hardy zero-probabilities, when computed.
    pub fn max_residual(&self) -> Option<f64> {
        self.hardy_residuals
            .map(|r| r.into_iter().fold(0.0, f64::max))
    }

    fn passes(&self) -> bool {
        let tol = self.tolerances.tol_residual;
        self.gme
            && self.max_residual().is_some_and(|r| r < tol)
            && self
                .catalonia_lhs
                .is_some_and(|v| v > self.tolerances.violation_threshold())
    }
}

/// Runs the full construction on `s`.
///
/// Non-entangled inputs and inputs for which no angle yields a usable Hardy
/// construction produce a report with `verdict == false` and a `failure`
/// message rather than an error. Clearing angles are tried in ranked order
/// until one gives residuals below tolerance and a violation above
/// [`CertifyOptions::violation_threshold`].
pub fn certify(s: &NearSymmetricState, opts: &CertifyOptions) -> Result<CertificationReport> {
    opts.validate()?;
    let n = s.n();
    let gme = gme_check(s, opts.tol_purity);
    let mut report = CertificationReport {
        n,
        state_digest: state_digest(s),
        gme: gme.is_gme,
        failing_bipartition: gme.failing.map(|c| c.to_string()),
        alpha: None,
        margins: None,
        b: None,
        measurements: None,
        hardy_residuals: None,
        hardy_probability: None,
        catalonia_lhs: None,
        improved_gap: None,
        curchod_gap: None,
        verdict: false,
        failure: None,
        tolerances: *opts,
    };
    if let Some(class) = gme.failing {
        report.failure = Some(format!("product across {class}"));
        return Ok(report);
    }

    let candidates = match opts.alpha {
        Some(alpha) => {
            let margins = margins_at(s, alpha);
            if margins.clears(&opts.margins) {
                vec![AlphaSelection { alpha, margins }]
            } else {
                report.alpha = Some(alpha);
                report.margins = Some(margins);
                Vec::new()
            }
        }
        None => rank_alphas(s, opts.grid_points, &opts.margins),
    };
    if candidates.is_empty() {
        report.failure = Some("no angle clears the residual margins".into());
        return Ok(report);
    }

    let psi = embed(s);
    let mut degenerate = 0usize;
    let mut first_evaluated = false;
    for sel in &candidates {
        let r = residual_coeffs(s, sel.alpha);
        let v = match hardy_vectors(&r, opts.margins.residual_norm) {
            Ok(v) => v,
            Err(Error::DegenerateGeometry { .. }) => {
                degenerate += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let m = assemble(n, &v)?;
        let p = QuantumCorrelations::new(&psi, &m)?;
        let res = hardy_residuals(&p);
        let lhs = catalonia_expression(&p);
        let good = res.max_residual() < opts.tol_residual && lhs > opts.violation_threshold();
        if good || !first_evaluated {
            report.fill(sel, r.b, &m, &p);
            first_evaluated = true;
        }
        if good {
            report.verdict = report.passes();
            return Ok(report);
        }
    }
    report.failure = Some(format!(
        "no usable Hardy construction at {} clearing angles ({degenerate} degenerate)",
        candidates.len()
    ));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardy::Measurement;
    use crate::state::{biseparable, random_near_symmetric, Bra};
    use num_complex::Complex64;

    fn computational(n: usize) -> MeasurementAssignment {
        let z = Measurement::new(Bra::real(1.0, 0.0).unwrap(), Bra::real(0.0, 1.0).unwrap()).unwrap();
        let x = Measurement::new(
            Bra::real(1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()).unwrap(),
            Bra::real(1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt()).unwrap(),
        )
        .unwrap();
        MeasurementAssignment::new(vec![[z, x]; n]).unwrap()
    }

    /// Table-driven correlations for hand-made distributions.
    struct Table<F: Fn(&CorrelationQuery) -> f64> {
        n: usize,
        f: F,
    }

    impl<F: Fn(&CorrelationQuery) -> f64> Correlations for Table<F> {
        fn parties(&self) -> usize {
            self.n
        }
        fn probability(&self, q: &CorrelationQuery) -> f64 {
            (self.f)(q)
        }
    }

    #[test]
    fn query_bits() {
        let q = CorrelationQuery::parse("010", "110").unwrap();
        assert_eq!((q.outcome(1), q.outcome(2), q.outcome(3)), (0, 1, 0));
        assert_eq!((q.setting(1), q.setting(2), q.setting(3)), (1, 1, 0));
        assert_eq!(q, CorrelationQuery::zeros(3).with(1, 0, 1).with(2, 1, 1));
        assert_eq!(q.to_string(), "p(010|110)");
        assert!(CorrelationQuery::parse("01", "110").is_err());
        assert!(CorrelationQuery::new(2, 0b100, 0).is_err());
    }

    #[test]
    fn ghz_all_zero_outcome() {
        let psi = embed(&NearSymmetricState::ghz(3).unwrap());
        let m = computational(3);
        let p = joint_probability(&psi, &m, &CorrelationQuery::zeros(3)).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert!(joint_probability(&psi, &computational(4), &CorrelationQuery::zeros(4)).is_err());
    }

    #[test]
    fn outcomes_sum_to_one() {
        let psi = embed(&random_near_symmetric(4, 8).unwrap());
        let m = computational(4);
        for settings in 0..16u64 {
            let total: f64 = (0..16u64)
                .map(|a| joint_probability(&psi, &m, &CorrelationQuery::new(4, a, settings).unwrap()).unwrap())
                .sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn product_state_factorizes() {
        // |0> (x) |+> (x) |0> measured in Z, X, Z
        let zero = DenseState::basis(1, 0).unwrap();
        let plus = DenseState::new(1, vec![Complex64::new(1.0 / 2f64.sqrt(), 0.0); 2]).unwrap();
        let psi = zero.tensor(&plus).tensor(&zero);
        let m = computational(3);
        let m1 = computational(1);
        let single = |s: &DenseState, a: u8, x: u8| {
            joint_probability(s, &m1, &CorrelationQuery::zeros(1).with(1, a, x)).unwrap()
        };
        for bits in 0..64u64 {
            let q = CorrelationQuery::new(3, bits & 7, bits >> 3).unwrap();
            let expect = single(&zero, q.outcome(1), q.setting(1))
                * single(&plus, q.outcome(2), q.setting(2))
                * single(&zero, q.outcome(3), q.setting(3));
            assert!((joint_probability(&psi, &m, &q).unwrap() - expect).abs() < 1e-15);
        }
        let q = CorrelationQuery::parse("010", "010").unwrap();
        assert!(joint_probability(&psi, &m, &q).unwrap() < 1e-30);
    }

    #[test]
    fn two_party_lifted_chsh_is_the_seed() {
        // seed: p(00|00) - p(01|01) - p(10|10) - p(00|11)
        let f = |q: &CorrelationQuery| (q.outcome_bits() * 4 + q.setting_bits()) as f64 / 100.0;
        let t = Table { n: 2, f };
        let seed = f(&CorrelationQuery::parse("00", "00").unwrap())
            - f(&CorrelationQuery::parse("01", "01").unwrap())
            - f(&CorrelationQuery::parse("10", "10").unwrap())
            - f(&CorrelationQuery::parse("00", "11").unwrap());
        assert_eq!(lifted_chsh(&t, 2).unwrap(), seed);
        for v in CurchodVariant::ALL {
            assert_eq!(curchod_gap(&t, v), seed);
        }
        assert!(lifted_chsh(&t, 1).is_err());
        assert!(lifted_chsh(&t, 3).is_err());
    }

    #[test]
    fn all_zero_deterministic_strategy() {
        // every party answers 0 whatever its setting
        let t = Table {
            n: 3,
            f: |q: &CorrelationQuery| if q.outcome_bits() == 0 { 1.0 } else { 0.0 },
        };
        // 1 - 0 - 0 - 1
        assert_eq!(lifted_chsh(&t, 2).unwrap(), 0.0);
        assert_eq!(lifted_chsh(&t, 3).unwrap(), 0.0);
        assert!(improved_gap(&t) <= 0.0);
    }

    #[test]
    fn product_state_with_stabilizing_measurements() {
        let psi = embed(&NearSymmetricState::dicke(3, 0).unwrap());
        let m = computational(3);
        assert!(catalonia_lhs(&psi, &m).unwrap() <= 0.0);
    }

    #[test]
    fn catalonia_requires_symmetry() {
        let psi = embed(&NearSymmetricState::ghz(3).unwrap());
        let mut parties = vec![[*computational(3).measurement(1, 0); 2]; 3];
        parties[2][1] = *computational(3).measurement(1, 1);
        let m = MeasurementAssignment::new(parties).unwrap();
        assert!(!m.is_symmetric());
        assert!(catalonia_lhs(&psi, &m).is_err());
    }

    #[test]
    fn ghz3_certifies() {
        let s = NearSymmetricState::ghz(3).unwrap();
        let r = certify(&s, &CertifyOptions::default()).unwrap();
        assert!(r.verdict, "{r:?}");
        assert!(r.max_residual().unwrap() < 1e-10);
        let lhs = r.catalonia_lhs.unwrap();
        assert!(lhs > 0.0);
        assert!((lhs - r.hardy_probability.unwrap()).abs() < 1e-12);
        assert!((r.improved_gap.unwrap() - lhs).abs() < 1e-12);
        assert!(r.curchod_gap.unwrap().literal.is_finite());
    }

    #[test]
    fn biseparable_gives_negative_report() {
        let s = biseparable(4, Complex64::new(0.5, 0.5), &[Complex64::new(1.0, 0.0); 4]).unwrap();
        let r = certify(&s, &CertifyOptions::default()).unwrap();
        assert!(!r.verdict && !r.gme);
        assert_eq!(r.failing_bipartition.as_deref(), Some("{1}|{2,3,4}"));
        assert!(r.alpha.is_none());
    }

    #[test]
    fn fixed_alpha_at_polynomial_root_fails() {
        // GHZ_3's determinant vanishes at alpha = 0
        let s = NearSymmetricState::ghz(3).unwrap();
        let opts = CertifyOptions {
            alpha: Some(0.0),
            ..Default::default()
        };
        let r = certify(&s, &opts).unwrap();
        assert!(!r.verdict);
        assert!(r.margins.unwrap().entanglement < 1e-8);
    }

    #[test]
    fn fixed_alpha_at_maximal_entanglement_fails() {
        // residual cos|00> + sin|11> is maximally entangled at pi/4
        let s = NearSymmetricState::ghz(3).unwrap();
        let opts = CertifyOptions {
            alpha: Some(std::f64::consts::FRAC_PI_4),
            ..Default::default()
        };
        assert!(!certify(&s, &opts).unwrap().verdict);
    }

    #[test]
    fn options_validated() {
        let bad = CertifyOptions {
            tol_residual: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = CertifyOptions {
            grid_points: 10,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}

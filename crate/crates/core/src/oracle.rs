//! Brute-force cross-checks that share no arithmetic with the closed forms.
//!
//! * [`dense_residual`] contracts the full state vector qubit by qubit.
//! * [`schmidt_two_qubit`] diagonalizes the reduced density matrix.
//! * [`enumerate_bilocal_extremes`] lists extreme bilocal models at `n = 3`.
//! * [`verify_pipeline`] recomputes report probabilities from explicit
//!   `2^n`-dimensional product bras.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bell::{
    catalonia_expression, curchod_gap, hardy_residuals, improved_gap, CertificationReport,
    CorrelationQuery, Correlations, CurchodVariant,
};
use crate::error::{Error, Result};
use crate::io::state_digest;
use crate::state::{embed, project_party, Amplitude, Bra, DenseState, NearSymmetricState};

/// Agreement required by [`verify_pipeline`].
pub const VERIFY_TOL: f64 = 1e-10;

/// Unnormalized residual on parties 1 and 2 after projecting parties
/// `n, n-1, ..., 3` onto `cos(a)<0| + sin(a)<1|`, as `(b1, b2, b3, b4)`.
pub fn dense_residual(s: &NearSymmetricState, alpha: f64) -> [Amplitude; 4] {
    let bra = Bra {
        beta: Complex64::new(alpha.cos(), 0.0),
        gamma: Complex64::new(alpha.sin(), 0.0),
    };
    let mut psi = embed(s);
    for j in (3..=s.n()).rev() {
        psi = project_party(&psi, j, &bra).expect("party index in range");
    }
    let a = psi.amplitudes();
    [a[0], a[1], a[2], a[3]]
}

/// Schmidt coefficients of a normalized two-qubit pure state.
///
/// For the normalized residual with entanglement margin
/// `e = |b1 b4 - b2 b3| / |b|^2`, the coefficients satisfy
/// `lambda_min * lambda_max = e` and `lambda_max` lies in `[1/sqrt(2), 1]`,
/// hence `e <= lambda_min <= sqrt(2) e`. A threshold on `lambda_min`
/// therefore matches a threshold on `e` up to the constant `c = sqrt(2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchmidtData {
    pub lambda_max: f64,
    pub lambda_min: f64,
    /// `arccos(lambda_max)`, in `[0, pi/4]`.
    pub theta: f64,
}

impl SchmidtData {
    pub fn gap(&self) -> f64 {
        self.lambda_max - self.lambda_min
    }
}

/// Schmidt data from the eigenvalues of the party-1 reduced density matrix.
pub fn schmidt_two_qubit(b: &[Amplitude; 4]) -> Result<SchmidtData> {
    let norm: f64 = b.iter().map(|z| z.norm_sqr()).sum();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::domain("Schmidt decomposition of the zero vector"));
    }
    let m: Vec<Amplitude> = b.iter().map(|z| z / norm.sqrt()).collect();
    let r00 = m[0].norm_sqr() + m[1].norm_sqr();
    let r11 = m[2].norm_sqr() + m[3].norm_sqr();
    let r01 = m[0] * m[2].conj() + m[1] * m[3].conj();
    let disc = ((r00 - r11).powi(2) + 4.0 * r01.norm_sqr()).sqrt();
    let hi = (0.5 * (r00 + r11 + disc)).min(1.0);
    let lo = (0.5 * (r00 + r11 - disc)).max(0.0);
    let lambda_max = hi.sqrt();
    Ok(SchmidtData {
        lambda_max,
        lambda_min: lo.sqrt(),
        theta: lambda_max.clamp(std::f64::consts::FRAC_1_SQRT_2, 1.0).acos(),
    })
}

/// Packs the bits of `mask` out of `bits`, highest party bit first.
fn gather(mask: u64, bits: u64, n: usize) -> u64 {
    let mut out = 0;
    for shift in (0..n).rev() {
        if mask >> shift & 1 == 1 {
            out = out << 1 | (bits >> shift & 1);
        }
    }
    out
}

/// Deterministic model local across the cut `S | S-bar`. Each side answers
/// with an arbitrary function of all its own settings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterministicBilocalStrategy {
    pub n: usize,
    /// Parties of `S` (party `j` at bit `n - j`).
    pub group: u64,
    /// Packed outcomes of `S` indexed by the packed settings of `S`.
    pub response_s: Vec<u64>,
    pub response_sbar: Vec<u64>,
}

impl DeterministicBilocalStrategy {
    pub fn new(n: usize, group: u64, response_s: Vec<u64>, response_sbar: Vec<u64>) -> Result<Self> {
        let full = (1u64 << n) - 1;
        if group == 0 || group & full == full || group & !full != 0 {
            return Err(Error::domain(format!("{group:b} is not a proper nonempty subset")));
        }
        let size = group.count_ones() as usize;
        let rest = n - size;
        if response_s.len() != 1 << size
            || response_sbar.len() != 1 << rest
            || response_s.iter().any(|&o| o >> size != 0)
            || response_sbar.iter().any(|&o| o >> rest != 0)
        {
            return Err(Error::domain("response table does not match the group sizes"));
        }
        Ok(Self {
            n,
            group,
            response_s,
            response_sbar,
        })
    }

    fn complement(&self) -> u64 {
        ((1u64 << self.n) - 1) & !self.group
    }
}

impl Correlations for DeterministicBilocalStrategy {
    fn parties(&self) -> usize {
        self.n
    }

    fn probability(&self, q: &CorrelationQuery) -> f64 {
        let n = self.n;
        let side = |mask: u64, table: &[u64]| {
            table[gather(mask, q.setting_bits(), n) as usize] == gather(mask, q.outcome_bits(), n)
        };
        if side(self.group, &self.response_s) && side(self.complement(), &self.response_sbar) {
            1.0
        } else {
            0.0
        }
    }
}

/// One deterministic party against a PR box on the other two (`n = 3`).
///
/// The box outputs uniformly random bits with
/// `a_p XOR a_q = x_p x_q XOR s0 x_p XOR s1 x_q XOR s2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrBoxBilocalStrategy {
    pub single: usize,
    pub single_response: [u8; 2],
    pub pair: [usize; 2],
    pub shifts: [u8; 3],
}

impl Correlations for PrBoxBilocalStrategy {
    fn parties(&self) -> usize {
        3
    }

    fn probability(&self, q: &CorrelationQuery) -> f64 {
        if self.single_response[q.setting(self.single) as usize] != q.outcome(self.single) {
            return 0.0;
        }
        let [p, r] = self.pair;
        let (xp, xr) = (q.setting(p), q.setting(r));
        let [s0, s1, s2] = self.shifts;
        let rhs = (xp & xr) ^ (s0 & xp) ^ (s1 & xr) ^ s2;
        if q.outcome(p) ^ q.outcome(r) == rhs {
            0.5
        } else {
            0.0
        }
    }
}

/// Extreme point of a bilocal model set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BilocalExtreme {
    Deterministic(DeterministicBilocalStrategy),
    PrBox(PrBoxBilocalStrategy),
}

impl Correlations for BilocalExtreme {
    fn parties(&self) -> usize {
        match self {
            BilocalExtreme::Deterministic(s) => s.parties(),
            BilocalExtreme::PrBox(s) => s.parties(),
        }
    }

    fn probability(&self, q: &CorrelationQuery) -> f64 {
        match self {
            BilocalExtreme::Deterministic(s) => s.probability(q),
            BilocalExtreme::PrBox(s) => s.probability(q),
        }
    }
}

/// What a group of parties may do internally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupModel {
    /// Any function of the group's settings, signalling inside the group allowed.
    Unconstrained,
    /// No-signalling inside the group: local deterministic answers or a PR box.
    NoSignaling,
}

impl fmt::Display for GroupModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupModel::Unconstrained => "unconstrained",
            GroupModel::NoSignaling => "no-signaling",
        })
    }
}

impl std::str::FromStr for GroupModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unconstrained" => Ok(GroupModel::Unconstrained),
            "no-signaling" => Ok(GroupModel::NoSignaling),
            other => Err(Error::domain(format!("unknown group model `{other}`"))),
        }
    }
}

/// Every extreme bilocal model for three parties.
///
/// For each of the three cuts the singleton side has 4 deterministic
/// answers. The pair side has 256 functions under
/// [`GroupModel::Unconstrained`] (3072 strategies in total) or
/// 16 local deterministic points plus 8 PR boxes under
/// [`GroupModel::NoSignaling`] (288 in total).
pub fn enumerate_bilocal_extremes(n: usize, model: GroupModel) -> Result<Vec<BilocalExtreme>> {
    if n != 3 {
        return Err(Error::Unsupported(format!(
            "exhaustive enumeration needs n = 3, got {n}; use sampling"
        )));
    }
    let mut out = Vec::new();
    for single in 1..=3usize {
        let group = 1u64 << (3 - single);
        let pair: Vec<usize> = (1..=3).filter(|&j| j != single).collect();
        for f in 0..4u64 {
            let single_response = vec![f >> 1 & 1, f & 1];
            match model {
                GroupModel::Unconstrained => {
                    for table in 0..256u64 {
                        let response = (0..4).map(|x| table >> (2 * (3 - x)) & 3).collect();
                        out.push(BilocalExtreme::Deterministic(DeterministicBilocalStrategy::new(
                            3,
                            group,
                            single_response.clone(),
                            response,
                        )?));
                    }
                }
                GroupModel::NoSignaling => {
                    for local in 0..16u64 {
                        let (g0, g1) = (local >> 2, local & 3);
                        // pair outcome bits (first, second) from each own setting
                        let response = (0..4u64)
                            .map(|x| {
                                let a = g0 >> (1 - (x >> 1)) & 1;
                                let b = g1 >> (1 - (x & 1)) & 1;
                                a << 1 | b
                            })
                            .collect();
                        out.push(BilocalExtreme::Deterministic(DeterministicBilocalStrategy::new(
                            3,
                            group,
                            single_response.clone(),
                            response,
                        )?));
                    }
                    for shifts in 0..8u8 {
                        out.push(BilocalExtreme::PrBox(PrBoxBilocalStrategy {
                            single,
                            single_response: [(f >> 1 & 1) as u8, (f & 1) as u8],
                            pair: [pair[0], pair[1]],
                            shifts: [shifts >> 2 & 1, shifts >> 1 & 1, shifts & 1],
                        }));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Default sample size for `n > 3`.
pub const DEFAULT_BILOCAL_SAMPLES: usize = 100_000;

/// Random unconstrained deterministic bilocal strategies, for `n` where the
/// exhaustive list is out of reach. ChaCha8 seeded by `seed`.
pub fn sample_bilocal_strategies(
    n: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<DeterministicBilocalStrategy>> {
    if !(2..=16).contains(&n) {
        return Err(Error::domain(format!("sampling supports 2..=16 parties, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let full = (1u64 << n) - 1;
    (0..count)
        .map(|_| {
            let group = rng.random_range(1..full);
            let size = group.count_ones() as usize;
            let rest = n - size;
            let s = (0..1usize << size).map(|_| rng.random_range(0..1u64 << size)).collect();
            let sbar = (0..1usize << rest).map(|_| rng.random_range(0..1u64 << rest)).collect();
            DeterministicBilocalStrategy::new(n, group, s, sbar)
        })
        .collect()
}

/// One strategy that exceeds a classical bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundViolation {
    pub index: usize,
    pub inequality: String,
    pub gap: f64,
}

/// Summary of a classical-bound scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub checked: usize,
    /// Largest gap seen per inequality.
    pub max_gap: BTreeMap<String, f64>,
    pub violations: Vec<BoundViolation>,
}

impl BoundReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Gap slack allowed before a strategy counts as violating.
pub const BOUND_TOL: f64 = 1e-12;

/// Evaluates the improved inequality and the requested pairwise readings
/// on every strategy. `inverted` flips the sign of every gap, which turns
/// any strictly negative gap into a reported violation.
pub fn check_classical_bounds<C: Correlations>(
    strategies: &[C],
    variants: &[CurchodVariant],
    inverted: bool,
) -> BoundReport {
    let sign = if inverted { -1.0 } else { 1.0 };
    let mut max_gap = BTreeMap::new();
    let mut violations = Vec::new();
    for (index, st) in strategies.iter().enumerate() {
        let mut gaps = vec![("improved".to_string(), improved_gap(st))];
        for v in variants {
            gaps.push((format!("curchod-{v}"), curchod_gap(st, *v)));
        }
        for (name, gap) in gaps {
            let gap = sign * gap;
            let slot = max_gap.entry(name.clone()).or_insert(f64::NEG_INFINITY);
            *slot = f64::max(*slot, gap);
            if gap > BOUND_TOL {
                violations.push(BoundViolation {
                    index,
                    inequality: name,
                    gap,
                });
            }
        }
    }
    BoundReport {
        checked: strategies.len(),
        max_gap,
        violations,
    }
}

/// Product-bra correlations evaluated as explicit `2^n`-term inner products.
struct ExplicitCorrelations<'a> {
    psi: &'a DenseState,
    bras: &'a BTreeMap<(usize, u8, u8), Bra>,
}

impl Correlations for ExplicitCorrelations<'_> {
    fn parties(&self) -> usize {
        self.psi.n()
    }

    fn probability(&self, q: &CorrelationQuery) -> f64 {
        let n = self.psi.n();
        let picked: Vec<&Bra> = (1..=n)
            .map(|j| &self.bras[&(j, q.setting(j), q.outcome(j))])
            .collect();
        let amp: Amplitude = self
            .psi
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(idx, z)| {
                let coeff: Amplitude = picked
                    .iter()
                    .enumerate()
                    .map(|(p, bra)| {
                        if idx >> (n - 1 - p) & 1 == 0 {
                            bra.beta
                        } else {
                            bra.gamma
                        }
                    })
                    .product();
                coeff * z
            })
            .sum();
        amp.norm_sqr()
    }
}

fn report_bras(report: &CertificationReport) -> Option<BTreeMap<(usize, u8, u8), Bra>> {
    let meas = report.measurements.as_ref()?;
    let mut out = BTreeMap::new();
    for j in 1..=report.n {
        for x in 0..2u8 {
            let m = meas.get(&format!("{j},{x}"))?;
            for a in 0..2u8 {
                let [beta, gamma] = m[a as usize];
                out.insert(
                    (j, x, a),
                    Bra {
                        beta: Complex64::new(beta[0], beta[1]),
                        gamma: Complex64::new(gamma[0], gamma[1]),
                    },
                );
            }
        }
    }
    Some(out)
}

fn agrees(reported: Option<f64>, recomputed: f64) -> bool {
    reported.is_some_and(|v| (v - recomputed).abs() <= VERIFY_TOL)
}

/// Recomputes every probability-derived field of `report` from `s` and the
/// reported measurement vectors. Reports that carry no measurements only
/// need a matching state digest.
pub fn verify_pipeline(s: &NearSymmetricState, report: &CertificationReport) -> bool {
    if report.n != s.n() || report.state_digest != state_digest(s) {
        return false;
    }
    if report.measurements.is_none() {
        return report.hardy_residuals.is_none() && !report.verdict;
    }
    let Some(bras) = report_bras(report) else {
        return false;
    };
    let psi = embed(s);
    let p = ExplicitCorrelations { psi: &psi, bras: &bras };

    let res = hardy_residuals(&p);
    let Some([r15, r16, r17]) = report.hardy_residuals else {
        return false;
    };
    let Some(curchod) = report.curchod_gap else {
        return false;
    };
    let b_ok = match (report.alpha, report.b) {
        (Some(alpha), Some(b)) => dense_residual(s, alpha)
            .iter()
            .zip(b)
            .all(|(z, [re, im])| (z - Complex64::new(re, im)).norm() <= VERIFY_TOL),
        _ => false,
    };
    b_ok && agrees(Some(r15), res.r15)
        && agrees(Some(r16), res.r16)
        && agrees(Some(r17), res.r17)
        && agrees(report.hardy_probability, res.p18)
        && agrees(report.catalonia_lhs, catalonia_expression(&p))
        && agrees(report.improved_gap, improved_gap(&p))
        && agrees(Some(curchod.literal), curchod_gap(&p, CurchodVariant::Literal))
        && agrees(Some(curchod.generalized), curchod_gap(&p, CurchodVariant::Generalized))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{certify, CertifyOptions};
    use crate::state::{biseparable, random_near_symmetric};
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};

    fn c(re: f64) -> Amplitude {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn ghz3_dense_residual() {
        let b = dense_residual(&NearSymmetricState::ghz(3).unwrap(), PI / 6.0);
        let expect = [0.612372435695794, 0.0, 0.0, 0.353553390593274];
        for (z, e) in b.iter().zip(expect) {
            assert!((z - c(e)).norm() < 1e-12);
        }
    }

    #[test]
    fn dense_residual_at_zero_angle() {
        let s = random_near_symmetric(6, 2).unwrap();
        let (g, gp) = s.string_amplitudes();
        let b = dense_residual(&s, 0.0);
        for (z, e) in b.iter().zip([g[0], g[1], gp[0], gp[1]]) {
            assert!((z - e).norm() < 1e-15);
        }
    }

    #[test]
    fn schmidt_examples() {
        let s = schmidt_two_qubit(&[c(FRAC_1_SQRT_2), c(0.0), c(0.0), c(FRAC_1_SQRT_2)]).unwrap();
        assert!((s.lambda_max - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((s.lambda_min - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((s.theta - FRAC_PI_4).abs() < 1e-6);

        let s = schmidt_two_qubit(&[c(1.0), c(0.0), c(0.0), c(0.0)]).unwrap();
        assert_eq!(s.lambda_min, 0.0);
        assert_eq!(s.theta, 0.0);

        let t = 0.3f64;
        let s = schmidt_two_qubit(&[c(t.cos()), c(0.0), c(0.0), c(t.sin())]).unwrap();
        assert!((s.lambda_max - t.cos()).abs() < 1e-12);
        assert!((s.lambda_min - t.sin()).abs() < 1e-12);
        assert!((s.theta - t).abs() < 1e-12);

        assert!(schmidt_two_qubit(&[c(0.0); 4]).is_err());
    }

    #[test]
    fn extreme_counts() {
        let all = enumerate_bilocal_extremes(3, GroupModel::Unconstrained).unwrap();
        assert_eq!(all.len(), 3 * 4 * 256);
        let ns = enumerate_bilocal_extremes(3, GroupModel::NoSignaling).unwrap();
        assert_eq!(ns.len(), 3 * 4 * 24);
        assert!(matches!(
            enumerate_bilocal_extremes(4, GroupModel::Unconstrained),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn extreme_tables_are_normalized() {
        let mut ext = enumerate_bilocal_extremes(3, GroupModel::Unconstrained).unwrap();
        ext.extend(enumerate_bilocal_extremes(3, GroupModel::NoSignaling).unwrap());
        for st in &ext {
            for x in 0..8 {
                let mut total = 0.0;
                for a in 0..8 {
                    let p = st.probability(&CorrelationQuery::new(3, a, x).unwrap());
                    assert!(p == 0.0 || p == 1.0 || (matches!(st, BilocalExtreme::PrBox(_)) && p == 0.5));
                    total += p;
                }
                assert_eq!(total, 1.0);
            }
        }
    }

    #[test]
    fn no_signaling_pairs_do_not_signal() {
        for st in enumerate_bilocal_extremes(3, GroupModel::NoSignaling).unwrap() {
            for j in 1..=3 {
                for a in 0..2u8 {
                    // marginal of party j must not depend on the others' settings
                    let marginal = |x: u64| {
                        (0..8u64)
                            .map(|o| CorrelationQuery::new(3, o, x).unwrap())
                            .filter(|q| q.outcome(j) == a)
                            .map(|q| st.probability(&q))
                            .sum::<f64>()
                    };
                    let bit = 1u64 << (3 - j);
                    let xs: Vec<f64> = (0..8u64).filter(|x| x & bit == 0).map(marginal).collect();
                    assert!(xs.iter().all(|m| *m == xs[0]));
                }
            }
        }
    }

    #[test]
    fn sampling_is_seeded() {
        let a = sample_bilocal_strategies(5, 50, 9).unwrap();
        assert_eq!(a, sample_bilocal_strategies(5, 50, 9).unwrap());
        assert_eq!(a.len(), 50);
        assert!(sample_bilocal_strategies(1, 5, 0).is_err());
    }

    #[test]
    fn inverted_bound_reports_violations() {
        let ext = enumerate_bilocal_extremes(3, GroupModel::NoSignaling).unwrap();
        assert!(check_classical_bounds(&ext, &[], false).holds());
        assert!(!check_classical_bounds(&ext, &[], true).holds());
    }

    #[test]
    fn verify_examples() {
        let s = NearSymmetricState::ghz(3).unwrap();
        let report = certify(&s, &CertifyOptions::default()).unwrap();
        assert!(verify_pipeline(&s, &report));

        let mut bad = report.clone();
        bad.measurements.as_mut().unwrap().get_mut("1,0").unwrap()[0][0][0] += 1e-3;
        assert!(!verify_pipeline(&s, &bad));

        let other = NearSymmetricState::w(3).unwrap();
        assert!(!verify_pipeline(&other, &report));

        let sep = biseparable(3, c(1.0), &[c(1.0), c(0.0), c(1.0)]).unwrap();
        let neg = certify(&sep, &CertifyOptions::default()).unwrap();
        assert!(!neg.verdict);
        assert!(verify_pipeline(&sep, &neg));
    }
}

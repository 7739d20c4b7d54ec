//! Genuine multipartite entanglement tests and measurement-angle selection.
//!
//! Projecting parties `3..=n` onto `cos(a)<0| + sin(a)<1|` leaves a
//! two-qubit residual whose determinant `b1 b4 - b2 b3` equals
//! `cos^{2n-4}(a) * sum_m C_m tan^m(a)`. The coefficients `C_m` all vanish
//! exactly when `h` and `h'` are linearly dependent, i.e. when party 1 is
//! in a product with the rest.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardy::residual_coeffs;
use crate::state::{binomial, embed, Amplitude, DenseState, NearSymmetricState};

/// Purity slack below 1 required of every reduced state.
pub const DEFAULT_PURITY_TOL: f64 = 1e-9;
/// Default number of points in the angle scan.
pub const DEFAULT_GRID_POINTS: usize = 1024;
pub const MIN_GRID_POINTS: usize = 64;

/// Coefficients `C_0..C_{2n-4}` of the residual determinant polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyCoeffs {
    n: usize,
    c: Vec<Amplitude>,
}

impl PolyCoeffs {
    pub fn new(n: usize, c: Vec<Amplitude>) -> Result<Self> {
        if n < 3 || c.len() != 2 * n - 3 {
            return Err(Error::Invalid {
                what: "polynomial coefficients",
                reason: format!("{} coefficients for n = {n}", c.len()),
            });
        }
        Ok(Self { n, c })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coefficients(&self) -> &[Amplitude] {
        &self.c
    }

    /// Polynomial degree bound `2n - 4`.
    pub fn degree_bound(&self) -> usize {
        2 * self.n - 4
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Coefficients together with the largest magnitude of the products that
/// enter any single `C_m` before cancellation.
fn coefficients_with_scale(s: &NearSymmetricState) -> (Vec<Amplitude>, f64) {
    let n = s.n();
    let (g, gp) = s.string_amplitudes();
    let top = n - 2;
    let mut out = Vec::with_capacity(2 * n - 3);
    let mut scale = 0.0f64;
    for m in 0..=2 * n - 4 {
        let lo = m.saturating_sub(top);
        let hi = top.min(m);
        let mut acc = Amplitude::new(0.0, 0.0);
        let mut mag = 0.0;
        for k in lo..=hi {
            let l = m - k + 1;
            let w = binomial(top, k) * binomial(top, m - k);
            let a = g[k] * gp[l];
            let b = gp[k] * g[l];
            acc += (a - b) * w;
            mag += (a.norm() + b.norm()) * w;
        }
        out.push(acc);
        scale = scale.max(mag);
    }
    (out, scale)
}

pub fn c_coefficients(s: &NearSymmetricState) -> PolyCoeffs {
    PolyCoeffs {
        n: s.n(),
        c: coefficients_with_scale(s).0,
    }
}

fn is_singular_angle(alpha: f64) -> bool {
    let r = (alpha - FRAC_PI_2).rem_euclid(PI);
    r.min(PI - r) < 1e-12
}

/// `cos^{2n-4}(a) * sum_m C_m tan^m(a)`, evaluated as
/// `sum_m C_m sin^m(a) cos^{2n-4-m}(a)`.
pub fn poly_eval(p: &PolyCoeffs, alpha: f64) -> Result<Amplitude> {
    if is_singular_angle(alpha) {
        return Err(Error::domain(format!("alpha = {alpha} is pi/2 mod pi")));
    }
    let (s, c) = alpha.sin_cos();
    let deg = p.degree_bound() as i32;
    Ok(p
        .c
        .iter()
        .enumerate()
        .map(|(m, z)| z * (s.powi(m as i32) * c.powi(deg - m as i32)))
        .sum())
}

/// Outcome of the first-party separability test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Separability {
    pub separable: bool,
    /// Least-squares `lambda` with `h ~ lambda h'`, when separable and `h' != 0`.
    pub lambda: Option<Amplitude>,
}

/// Decides whether `h_k = lambda h'_k` for some `lambda` through the
/// vanishing of every `C_m`.
///
/// The zero test is relative: `max |C_m| < tol * scale`, where `scale` is
/// the largest sum of product magnitudes entering one coefficient.
pub fn first_party_separability(s: &NearSymmetricState, tol: f64) -> Separability {
    let (c, scale) = coefficients_with_scale(s);
    let max_c = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let separable = scale == 0.0 || max_c < tol * scale;
    let lambda = if separable {
        let den: f64 = s.h_prime().iter().map(|z| z.norm_sqr()).sum();
        (den > 0.0).then(|| {
            let num: Amplitude = s
                .h_prime()
                .iter()
                .zip(s.h())
                .map(|(hp, h)| hp.conj() * h)
                .sum();
            num / den
        })
    } else {
        None
    };
    Separability { separable, lambda }
}

/// Bipartition class under the symmetry of parties `2..=n`: party 1 together
/// with `symmetric` of the symmetric parties on one side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BipartitionClass {
    pub n: usize,
    pub symmetric: usize,
}

impl BipartitionClass {
    /// Number of parties on the side containing party 1.
    pub fn size(&self) -> usize {
        self.symmetric + 1
    }
}

impl fmt::Display for BipartitionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |r: std::ops::RangeInclusive<usize>| {
            r.map(|j| j.to_string()).collect::<Vec<_>>().join(",")
        };
        write!(
            f,
            "{{{}}}|{{{}}}",
            join(1..=self.size()),
            join(self.size() + 1..=self.n)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmeVerdict {
    pub is_gme: bool,
    pub failing: Option<BipartitionClass>,
    /// Purity of the reduced state on the leading `t + 1` parties, `t = 0..=n-2`.
    pub purities: Vec<f64>,
}

/// Purity of the reduced state of the first `k` parties.
pub fn leading_purity(psi: &DenseState, k: usize) -> f64 {
    let n = psi.n();
    let rows = 1usize << k;
    let cols = 1usize << (n - k);
    let a = psi.amplitudes();
    let norm = psi.norm_sqr();
    // Gram matrix on the smaller side; both share the nonzero spectrum.
    let by_rows = rows <= cols;
    let (dim, len) = if by_rows { (rows, cols) } else { (cols, rows) };
    let at = |i: usize, t: usize| if by_rows { a[i * cols + t] } else { a[t * cols + i] };
    let mut purity = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let rho: Amplitude = (0..len).map(|t| at(i, t) * at(j, t).conj()).sum();
            purity += rho.norm_sqr();
        }
    }
    purity / (norm * norm)
}

/// Tests every bipartition class for a mixed reduced state.
///
/// Cuts related by a permutation of parties `2..=n` have unitarily
/// equivalent reduced states, so one representative per class suffices:
/// party 1 plus parties `2..=t+1` for `t = 0..=n-2`.
pub fn gme_check(s: &NearSymmetricState, tol: f64) -> GmeVerdict {
    let psi = embed(s);
    let n = s.n();
    let purities: Vec<f64> = (1..n).map(|k| leading_purity(&psi, k)).collect();
    let failing = purities
        .iter()
        .position(|p| *p > 1.0 - tol)
        .map(|t| BipartitionClass { n, symmetric: t });
    GmeVerdict {
        is_gme: failing.is_none(),
        failing,
        purities,
    }
}

/// Lower bounds an angle must clear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginThresholds {
    pub entanglement: f64,
    pub non_maximality: f64,
    pub residual_norm: f64,
}

impl Default for MarginThresholds {
    fn default() -> Self {
        Self {
            entanglement: 1e-8,
            non_maximality: 1e-6,
            residual_norm: 1e-10,
        }
    }
}

/// Residual diagnostics at one angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaMargins {
    /// `|b1 b4 - b2 b3| / |b|^2`, the product of the Schmidt coefficients.
    pub entanglement: f64,
    /// Gap between the Schmidt coefficients of the normalized residual.
    pub non_maximality: f64,
    /// `|b|^2`, the probability of the conditioning outcomes.
    pub residual_norm: f64,
}

impl AlphaMargins {
    pub fn score(&self) -> f64 {
        self.entanglement
            .min(self.non_maximality)
            .min(self.residual_norm)
    }

    pub fn clears(&self, t: &MarginThresholds) -> bool {
        self.entanglement > t.entanglement
            && self.non_maximality > t.non_maximality
            && self.residual_norm > t.residual_norm
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaSelection {
    pub alpha: f64,
    pub margins: AlphaMargins,
}

pub fn margins_at(s: &NearSymmetricState, alpha: f64) -> AlphaMargins {
    let r = residual_coeffs(s, alpha);
    let [b1, b2, b3, b4] = r.b;
    let norm: f64 = r.b.iter().map(|z| z.norm_sqr()).sum();
    if norm == 0.0 {
        return AlphaMargins {
            entanglement: 0.0,
            non_maximality: 0.0,
            residual_norm: 0.0,
        };
    }
    let ent = (b1 * b4 - b2 * b3).norm() / norm;
    // singular values s1, s2 with s1^2 + s2^2 = 1 and s1 s2 = ent
    let gap = (1.0 - 2.0 * ent).max(0.0).sqrt();
    AlphaMargins {
        entanglement: ent,
        non_maximality: gap,
        residual_norm: norm,
    }
}

/// Uniform grid `i pi / points` on `[0, pi)` without the points within half
/// a step of `pi/2`.
pub fn alpha_grid(points: usize) -> Vec<f64> {
    (0..points)
        .filter(|&i| (2 * i).abs_diff(points) > 1)
        .map(|i| i as f64 * PI / points as f64)
        .collect()
}

/// All grid angles clearing the thresholds, best score first. Equal scores
/// keep grid order, so the smallest angle wins ties.
pub fn rank_alphas(
    s: &NearSymmetricState,
    points: usize,
    thresholds: &MarginThresholds,
) -> Vec<AlphaSelection> {
    let mut ranked: Vec<AlphaSelection> = alpha_grid(points)
        .into_iter()
        .map(|alpha| AlphaSelection {
            alpha,
            margins: margins_at(s, alpha),
        })
        .filter(|sel| sel.margins.clears(thresholds))
        .collect();
    ranked.sort_by(|a, b| b.margins.score().total_cmp(&a.margins.score()));
    ranked
}

/// Picks the grid angle maximizing the smallest residual margin.
pub fn select_alpha(
    s: &NearSymmetricState,
    points: usize,
    thresholds: &MarginThresholds,
) -> Result<AlphaSelection> {
    if points < MIN_GRID_POINTS {
        return Err(Error::domain(format!(
            "grid needs at least {MIN_GRID_POINTS} points, got {points}"
        )));
    }
    let verdict = gme_check(s, DEFAULT_PURITY_TOL);
    if let Some(class) = verdict.failing {
        return Err(Error::NotGme(class.to_string()));
    }
    match rank_alphas(s, points, thresholds).first() {
        Some(sel) => Ok(*sel),
        None => {
            let best_score = alpha_grid(points)
                .into_iter()
                .map(|a| margins_at(s, a).score())
                .fold(0.0, f64::max);
            Err(Error::SelectionFailure { best_score })
        }
    }
}

/// Counts distinct zeros of a sampled real sequence: exact zeros plus sign
/// changes between consecutive nonzero samples with no zero in between.
fn count_sampled_zeros(values: &[f64], zero_tol: f64) -> usize {
    let mut count = 0;
    let mut prev: Option<f64> = None;
    for &v in values {
        if v.abs() <= zero_tol {
            count += 1;
            prev = None;
            continue;
        }
        if let Some(p) = prev {
            if p.signum() != v.signum() {
                count += 1;
            }
        }
        prev = Some(v);
    }
    count
}

/// Sampled zero count of the determinant polynomial over `[0, pi)`.
///
/// The real and imaginary parts are each real polynomials of degree at
/// most `2n - 4` in `tan(a)`; every root of the polynomial is a root of
/// both. Each part is scanned separately on both sides of `pi/2` and the
/// larger count is returned. Parts that vanish identically are skipped.
pub fn sampled_root_count(p: &PolyCoeffs, points: usize) -> usize {
    let grid = alpha_grid(points);
    let values: Vec<Amplitude> = grid
        .iter()
        .map(|&a| poly_eval(p, a).expect("grid excludes pi/2"))
        .collect();
    let zero_tol = 1e-13 * p.c.iter().map(|z| z.norm()).sum::<f64>();
    let split = grid.partition_point(|&a| a < FRAC_PI_2);
    let part_count = |f: fn(&Amplitude) -> f64| {
        let vals: Vec<f64> = values.iter().map(f).collect();
        if vals.iter().all(|v| v.abs() <= zero_tol) {
            return 0;
        }
        count_sampled_zeros(&vals[..split], zero_tol) + count_sampled_zeros(&vals[split..], zero_tol)
    };
    part_count(|z| z.re).max(part_count(|z| z.im))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{biseparable, random_near_symmetric};
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Amplitude {
        Complex64::new(re, im)
    }

    #[test]
    fn ghz3_coefficients() {
        let p = c_coefficients(&NearSymmetricState::ghz(3).unwrap());
        let expect = [c(0.0, 0.0), c(0.5, 0.0), c(0.0, 0.0)];
        for (z, e) in p.coefficients().iter().zip(expect) {
            assert!((z - e).norm() < 1e-15);
        }
    }

    #[test]
    fn poly_eval_examples() {
        let zero = PolyCoeffs::new(4, vec![c(0.0, 0.0); 5]).unwrap();
        assert_eq!(poly_eval(&zero, 0.3).unwrap(), c(0.0, 0.0));

        let p = c_coefficients(&NearSymmetricState::ghz(3).unwrap());
        let v = poly_eval(&p, PI / 6.0).unwrap();
        assert!((v - c(3f64.sqrt() / 8.0, 0.0)).norm() < 1e-15);

        let q = PolyCoeffs::new(3, vec![c(0.25, -1.0), c(2.0, 0.0), c(3.0, 0.0)]).unwrap();
        assert_eq!(poly_eval(&q, 0.0).unwrap(), c(0.25, -1.0));

        assert!(poly_eval(&q, FRAC_PI_2).is_err());
        assert!(poly_eval(&q, 3.0 * FRAC_PI_2).is_err());
        assert!(poly_eval(&q, -FRAC_PI_2).is_err());
        assert!(PolyCoeffs::new(3, vec![c(0.0, 0.0); 2]).is_err());
    }

    #[test]
    fn separability_examples() {
        let hp: Vec<_> = (0..5).map(|k| c(0.3 * k as f64 - 0.5, 0.1 + 0.2 * k as f64)).collect();
        let s = biseparable(5, c(2.0, 1.0), &hp).unwrap();
        let sep = first_party_separability(&s, 1e-10);
        assert!(sep.separable);
        assert!((sep.lambda.unwrap() - c(2.0, 1.0)).norm() < 1e-12);

        let sep = first_party_separability(&NearSymmetricState::ghz(3).unwrap(), 1e-10);
        assert!(!sep.separable);
        assert!(sep.lambda.is_none());

        let mut hp = vec![c(0.0, 0.0); 4];
        hp[2] = c(1.0, 0.0);
        let s = NearSymmetricState::new(vec![c(0.0, 0.0); 4], hp).unwrap();
        let sep = first_party_separability(&s, 1e-10);
        assert!(sep.separable);
        assert_eq!(sep.lambda, Some(c(0.0, 0.0)));
    }

    #[test]
    fn gme_examples() {
        for n in 3..=8 {
            let v = gme_check(&NearSymmetricState::ghz(n).unwrap(), DEFAULT_PURITY_TOL);
            assert!(v.is_gme, "GHZ_{n}");
            assert!(v.purities.iter().all(|p| (p - 0.5).abs() < 1e-12));
            assert!(gme_check(&NearSymmetricState::w(n).unwrap(), DEFAULT_PURITY_TOL).is_gme);
        }

        // |0> (x) |D^{n-1}_1>
        let mut h = vec![c(0.0, 0.0); 4];
        h[1] = c(1.0, 0.0);
        let s = NearSymmetricState::new(h, vec![c(0.0, 0.0); 4]).unwrap();
        let v = gme_check(&s, DEFAULT_PURITY_TOL);
        assert!(!v.is_gme);
        assert_eq!(v.failing, Some(BipartitionClass { n: 4, symmetric: 0 }));
        assert_eq!(v.failing.unwrap().to_string(), "{1}|{2,3,4}");

        let s = biseparable(4, c(0.3, -0.2), &[c(0.1, 0.0), c(0.5, 0.5), c(0.0, 0.0), c(1.0, 0.0)])
            .unwrap();
        assert!(!gme_check(&s, DEFAULT_PURITY_TOL).is_gme);
    }

    #[test]
    fn fully_product_dicke_states_are_not_gme() {
        let s = NearSymmetricState::dicke(4, 0).unwrap();
        assert!(!gme_check(&s, DEFAULT_PURITY_TOL).is_gme);
        let s = NearSymmetricState::dicke(4, 4).unwrap();
        assert!(!gme_check(&s, DEFAULT_PURITY_TOL).is_gme);
    }

    #[test]
    fn grid_excludes_half_pi() {
        let g = alpha_grid(720);
        assert_eq!(g.len(), 719);
        assert!(g.iter().all(|a| (a - FRAC_PI_2).abs() > 1e-9));
        let g = alpha_grid(65);
        assert_eq!(g.len(), 63);
        assert_eq!(g[0], 0.0);
    }

    #[test]
    fn ghz3_selection_avoids_special_angles() {
        let s = NearSymmetricState::ghz(3).unwrap();
        let sel = select_alpha(&s, DEFAULT_GRID_POINTS, &MarginThresholds::default()).unwrap();
        for bad in [0.0, PI / 4.0, FRAC_PI_2] {
            assert!((sel.alpha - bad).abs() > 1e-3, "alpha = {}", sel.alpha);
        }
        // the score peaks where sin(2a) = 2 sqrt(2) - 2, at a or its mirror pi/2 - a
        let peak = 0.5 * (2.0 * 2f64.sqrt() - 2.0).asin();
        let off = (sel.alpha - peak).abs().min((sel.alpha - (FRAC_PI_2 - peak)).abs());
        assert!(off < PI / DEFAULT_GRID_POINTS as f64, "{sel:?}");
    }

    #[test]
    fn selection_rejects_bad_input() {
        let s = biseparable(3, c(1.0, 0.0), &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let t = MarginThresholds::default();
        assert!(matches!(select_alpha(&s, 1024, &t), Err(Error::NotGme(_))));
        let s = NearSymmetricState::ghz(3).unwrap();
        assert!(matches!(select_alpha(&s, 63, &t), Err(Error::Domain(_))));
        let impossible = MarginThresholds {
            entanglement: 0.9,
            ..t
        };
        assert!(matches!(
            select_alpha(&s, 1024, &impossible),
            Err(Error::SelectionFailure { .. })
        ));
    }

    #[test]
    fn zero_counting() {
        assert_eq!(count_sampled_zeros(&[1.0, 2.0, -1.0, -3.0, 4.0], 0.0), 2);
        assert_eq!(count_sampled_zeros(&[1.0, 0.0, -1.0], 0.0), 1);
        assert_eq!(count_sampled_zeros(&[1.0, 0.0, 1.0], 0.0), 1);
        assert_eq!(count_sampled_zeros(&[0.0, 1.0, 2.0], 0.0), 1);
    }

    #[test]
    fn ghz3_root_count() {
        let p = c_coefficients(&NearSymmetricState::ghz(3).unwrap());
        // sin(a) cos(a) / 2 vanishes at a = 0 only, once pi/2 is removed
        assert_eq!(sampled_root_count(&p, 720), 1);
    }

    #[test]
    fn random_states_not_separable() {
        for seed in 0..20 {
            let s = random_near_symmetric(3 + (seed as usize % 5), seed).unwrap();
            assert!(!first_party_separability(&s, 1e-10).separable);
        }
    }
}

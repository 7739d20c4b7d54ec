//! Measurements realizing Hardy's paradox between parties 1 and 2.
//!
//! Parties `3..=n` condition on the outcome `cos(a)<0| + sin(a)<1|`, leaving
//! the residual `b1|00> + b2|01> + b3|10> + b4|11>` on parties 1 and 2. Each
//! of the three zero-probability conditions is then met by annihilating a
//! single-qubit vector obtained from the residual, and every setting is
//! completed to a projective measurement by its orthocomplement.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::{binomial, Amplitude, Bra, NearSymmetricState, NORM_TOL};

/// Closed-form residual amplitudes at angle `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualCoeffs {
    /// `(b1, b2, b3, b4)` on `|00>, |01>, |10>, |11>`, party 1 first.
    pub b: [Amplitude; 4],
    /// `conj(b1) cos(a) + conj(b2) sin(a)`
    pub c1: Amplitude,
    /// `conj(b3) cos(a) + conj(b4) sin(a)`
    pub c2: Amplitude,
    pub alpha: f64,
}

impl ResidualCoeffs {
    pub fn norm_sqr(&self) -> f64 {
        self.b.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `b1 b4 - b2 b3`
    pub fn determinant(&self) -> Amplitude {
        self.b[0] * self.b[3] - self.b[1] * self.b[2]
    }

    fn entry(&self, q1: usize, q2: usize) -> Amplitude {
        self.b[2 * q1 + q2]
    }

    /// Contracts `v` against party 2, returning the party-1 vector.
    pub fn contract_second(&self, v: &Bra) -> [Amplitude; 2] {
        [
            v.apply(self.entry(0, 0), self.entry(0, 1)),
            v.apply(self.entry(1, 0), self.entry(1, 1)),
        ]
    }

    /// Contracts `v` against party 1, returning the party-2 vector.
    pub fn contract_first(&self, v: &Bra) -> [Amplitude; 2] {
        [
            v.apply(self.entry(0, 0), self.entry(1, 0)),
            v.apply(self.entry(0, 1), self.entry(1, 1)),
        ]
    }
}

/// `cos(a)<0| + sin(a)<1|`, shared by parties `2..=n` for setting 0, outcome 0.
pub fn symmetric_bra(alpha: f64) -> Bra {
    let (s, c) = alpha.sin_cos();
    Bra {
        beta: Complex64::new(c, 0.0),
        gamma: Complex64::new(s, 0.0),
    }
}

/// Residual amplitudes after projecting parties `3..=n` on [`symmetric_bra`].
///
/// A basis string contributes `cos` for every measured 0 and `sin` for every
/// measured 1, and the `C(n-2, .)` factors count how the ones distribute over
/// the measured positions. The sums run over per-string amplitudes
/// `h_k / sqrt(C(n-1, k))`.
pub fn residual_coeffs(s: &NearSymmetricState, alpha: f64) -> ResidualCoeffs {
    let n = s.n();
    let top = n - 2;
    let (g, gp) = s.string_amplitudes();
    let (sn, cs) = alpha.sin_cos();
    // cos^{n-2-j} sin^j for j = 0..=n-2
    let weights: Vec<f64> = (0..=top)
        .map(|j| binomial(top, j) * cs.powi((top - j) as i32) * sn.powi(j as i32))
        .collect();
    let low = |c: &[Amplitude]| -> Amplitude { (0..=top).map(|k| c[k] * weights[k]).sum() };
    let high = |c: &[Amplitude]| -> Amplitude { (1..n).map(|k| c[k] * weights[k - 1]).sum() };
    let b = [low(&g), high(&g), low(&gp), high(&gp)];
    ResidualCoeffs {
        b,
        c1: b[0].conj() * cs + b[1].conj() * sn,
        c2: b[2].conj() * cs + b[3].conj() * sn,
        alpha,
    }
}

/// Unit bra `(beta, gamma)` with `beta w0 + gamma w1 = 0`, in canonical phase.
pub fn annihilator(w0: Amplitude, w1: Amplitude) -> Result<Bra> {
    if w0.norm_sqr() + w1.norm_sqr() == 0.0 {
        return Err(Error::domain("cannot annihilate the zero vector"));
    }
    Ok(Bra::new(w1, -w0)?.canonical())
}

/// Unit bra whose ket is orthogonal to the ket of `v`, in canonical phase.
pub fn orthocomplement(v: &Bra) -> Result<Bra> {
    if v.norm() == 0.0 {
        return Err(Error::domain("orthocomplement of the zero vector"));
    }
    Ok(Bra::new(-v.gamma.conj(), v.beta.conj())?.canonical())
}

/// Rank-one projective qubit measurement given by its two outcome bras.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub outcome0: Bra,
    pub outcome1: Bra,
}

impl Measurement {
    pub fn new(outcome0: Bra, outcome1: Bra) -> Result<Self> {
        if !outcome0.is_normalized() || !outcome1.is_normalized() {
            return Err(Error::Invalid {
                what: "measurement",
                reason: "outcome vectors must be normalized".into(),
            });
        }
        let overlap = outcome0.ket_overlap(&outcome1).norm();
        if overlap > NORM_TOL {
            return Err(Error::Invalid {
                what: "measurement",
                reason: format!("outcome vectors overlap by {overlap:.3e}"),
            });
        }
        Ok(Self { outcome0, outcome1 })
    }

    /// The measurement whose outcome 0 is `v` (up to normalization and phase).
    pub fn completing(v: &Bra) -> Result<Self> {
        Self::new(v.canonical(), orthocomplement(v)?)
    }

    /// Same as [`Measurement::completing`] but with `v` fixed as outcome 1.
    pub fn completing_outcome1(v: &Bra) -> Result<Self> {
        Self::new(orthocomplement(v)?, v.canonical())
    }

    pub fn outcome(&self, a: u8) -> &Bra {
        if a == 0 {
            &self.outcome0
        } else {
            &self.outcome1
        }
    }
}

/// The four measurements of parties 1 (`a0`, `a1`) and 2 (`b0`, `b1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardyVectors {
    pub a0: Measurement,
    pub a1: Measurement,
    pub b0: Measurement,
    pub b1: Measurement,
}

fn nonvanishing(v: [Amplitude; 2], step: &'static str, eps: f64) -> Result<[Amplitude; 2]> {
    let norm = v[0].norm_sqr() + v[1].norm_sqr();
    if norm < eps {
        return Err(Error::DegenerateGeometry { step, norm });
    }
    Ok(v)
}

/// Builds the Hardy measurements by the annihilation chain.
///
/// 1. `b0` has outcome 0 equal to the symmetric bra.
/// 2. `a1` outcome 1 kills the party-1 vector left by `b0` outcome 0, so
///    `p(10..0|10..0) = 0`.
/// 3. `b1` outcome 0 kills the party-2 vector left by `a1` outcome 0, so
///    `p(0..0|110..0) = 0`.
/// 4. `a0` outcome 0 kills the party-1 vector left by `b1` outcome 1, so
///    `p(010..0|010..0) = 0`.
///
/// Any intermediate vector with squared norm below `eps_norm` is reported
/// as degenerate geometry.
pub fn hardy_vectors(r: &ResidualCoeffs, eps_norm: f64) -> Result<HardyVectors> {
    let b0 = Measurement::completing(&symmetric_bra(r.alpha))?;

    let [u0, u1] = nonvanishing(r.contract_second(&b0.outcome0), "party-1 vector after b0", eps_norm)?;
    let a1 = Measurement::completing_outcome1(&annihilator(u0, u1)?)?;

    let [v0, v1] = nonvanishing(r.contract_first(&a1.outcome0), "party-2 vector after a1", eps_norm)?;
    let b1 = Measurement::completing(&annihilator(v0, v1)?)?;

    let [w0, w1] = nonvanishing(r.contract_second(&b1.outcome1), "party-1 vector after b1", eps_norm)?;
    let a0 = Measurement::completing(&annihilator(w0, w1)?)?;

    Ok(HardyVectors { a0, a1, b0, b1 })
}

/// Measurements for every party and setting.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementAssignment {
    n: usize,
    parties: Vec<[Measurement; 2]>,
    symmetric: bool,
}

impl MeasurementAssignment {
    /// `parties[j - 1]` holds the two settings of party `j`. The symmetry
    /// flag is set when parties `2..=n` coincide.
    pub fn new(parties: Vec<[Measurement; 2]>) -> Result<Self> {
        let n = parties.len();
        if n == 0 {
            return Err(Error::Invalid {
                what: "measurement assignment",
                reason: "no parties".into(),
            });
        }
        let symmetric = parties[1..].iter().all(|p| *p == parties[1]);
        Ok(Self {
            n,
            parties,
            symmetric,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Measurement of party `j` (1-based) for setting `x`.
    pub fn measurement(&self, j: usize, x: u8) -> &Measurement {
        &self.parties[j - 1][x as usize]
    }

    pub fn bra(&self, j: usize, x: u8, a: u8) -> &Bra {
        self.measurement(j, x).outcome(a)
    }
}

/// Party 1 gets `(a0, a1)`; every other party gets `(b0, b1)`.
pub fn assemble(n: usize, v: &HardyVectors) -> Result<MeasurementAssignment> {
    let mut parties = vec![[v.a0, v.a1]];
    parties.extend(std::iter::repeat_n([v.b0, v.b1], n.saturating_sub(1)));
    MeasurementAssignment::new(parties)
}

//! Near-symmetric qubit states, the Dicke basis and dense state vectors.
//!
//! A near-symmetric state of `n` qubits is invariant under permutations of
//! parties `2..=n` and is written in the Dicke basis of those parties as
//!
//! ```text
//! |psi> = sum_k (h_k |0> + h'_k |1>) (x) |D^{n-1}_k>,   k = 0..n-1
//! ```
//!
//! Dense vectors index the computational basis with party 1 as the most
//! significant bit.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::gme::{gme_check, DEFAULT_PURITY_TOL};

/// Complex amplitude. Finite components are enforced at every parse boundary.
pub type Amplitude = Complex64;

/// Tolerance on the normalization of input states and measurement vectors.
pub const NORM_TOL: f64 = 1e-12;

const ZERO: Amplitude = Complex64::new(0.0, 0.0);

/// Binomial coefficient as a float, zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as f64
}

fn is_finite(z: &Amplitude) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Pure state of `n >= 3` qubits symmetric under permutations of parties `2..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct NearSymmetricState {
    n: usize,
    h: Vec<Amplitude>,
    h_prime: Vec<Amplitude>,
}

impl NearSymmetricState {
    /// Builds a state from coefficients that must already be normalized.
    pub fn new(h: Vec<Amplitude>, h_prime: Vec<Amplitude>) -> Result<Self> {
        let s = Self::unchecked(h, h_prime)?;
        let norm = s.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Invalid {
                what: "near-symmetric state",
                reason: format!("squared norm {norm} is not 1"),
            });
        }
        Ok(s)
    }

    /// Builds a state from arbitrary nonzero coefficients, rescaling them to unit norm.
    pub fn from_unnormalized(h: Vec<Amplitude>, h_prime: Vec<Amplitude>) -> Result<Self> {
        let mut s = Self::unchecked(h, h_prime)?;
        let norm = s.norm_sqr().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Invalid {
                what: "near-symmetric state",
                reason: "coefficients have zero or non-finite norm".into(),
            });
        }
        for z in s.h.iter_mut().chain(s.h_prime.iter_mut()) {
            *z /= norm;
        }
        Ok(s)
    }

    fn unchecked(h: Vec<Amplitude>, h_prime: Vec<Amplitude>) -> Result<Self> {
        let n = h.len();
        if n < 3 {
            return Err(Error::Invalid {
                what: "near-symmetric state",
                reason: format!("need at least 3 parties, got {n}"),
            });
        }
        if h_prime.len() != n {
            return Err(Error::Invalid {
                what: "near-symmetric state",
                reason: format!("h has {n} entries but h' has {}", h_prime.len()),
            });
        }
        if !h.iter().chain(h_prime.iter()).all(is_finite) {
            return Err(Error::Invalid {
                what: "near-symmetric state",
                reason: "non-finite coefficient".into(),
            });
        }
        Ok(Self { n, h, h_prime })
    }

    /// `(|0...0> + |1...1>)/sqrt(2)`.
    pub fn ghz(n: usize) -> Result<Self> {
        let mut h = vec![ZERO; n];
        let mut hp = vec![ZERO; n];
        let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        if n > 0 {
            h[0] = amp;
            hp[n - 1] = amp;
        }
        Self::new(h, hp)
    }

    /// The W state, i.e. the Dicke state with a single excitation.
    pub fn w(n: usize) -> Result<Self> {
        Self::dicke(n, 1)
    }

    /// The full Dicke state `|D^n_k>` split on the first qubit:
    /// `h_k = sqrt((n-k)/n)` and `h'_{k-1} = sqrt(k/n)`.
    pub fn dicke(n: usize, k: usize) -> Result<Self> {
        if k > n {
            return Err(Error::domain(format!("Dicke weight {k} exceeds {n} qubits")));
        }
        let mut h = vec![ZERO; n];
        let mut hp = vec![ZERO; n];
        let nf = n as f64;
        if k < n {
            h[k] = Complex64::new(((n - k) as f64 / nf).sqrt(), 0.0);
        }
        if k > 0 {
            hp[k - 1] = Complex64::new((k as f64 / nf).sqrt(), 0.0);
        }
        Self::new(h, hp)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> &[Amplitude] {
        &self.h
    }

    pub fn h_prime(&self) -> &[Amplitude] {
        &self.h_prime
    }

    pub fn norm_sqr(&self) -> f64 {
        self.h
            .iter()
            .chain(self.h_prime.iter())
            .map(|z| z.norm_sqr())
            .sum()
    }

    /// Per-basis-string amplitudes `(h_k, h'_k) / sqrt(C(n-1, k))`.
    ///
    /// These are the coefficients of the unnormalized Dicke sums, which is
    /// what the closed-form residual and polynomial expressions act on.
    pub fn string_amplitudes(&self) -> (Vec<Amplitude>, Vec<Amplitude>) {
        let m = self.n - 1;
        let scale = |k: usize| 1.0 / binomial(m, k).sqrt();
        let g = self.h.iter().enumerate().map(|(k, z)| z * scale(k)).collect();
        let gp = self
            .h_prime
            .iter()
            .enumerate()
            .map(|(k, z)| z * scale(k))
            .collect();
        (g, gp)
    }

    /// Multiplies every coefficient by `e^{i phi}`.
    pub fn with_global_phase(&self, phi: f64) -> Self {
        let ph = Complex64::from_polar(1.0, phi);
        Self {
            n: self.n,
            h: self.h.iter().map(|z| z * ph).collect(),
            h_prime: self.h_prime.iter().map(|z| z * ph).collect(),
        }
    }
}

/// Full `2^n` amplitude vector. Party 1 is the most significant bit.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    n: usize,
    amp: Vec<Amplitude>,
}

impl DenseState {
    pub fn new(n: usize, amp: Vec<Amplitude>) -> Result<Self> {
        if n >= usize::BITS as usize - 1 || amp.len() != 1usize << n {
            return Err(Error::Invalid {
                what: "dense state",
                reason: format!("{} amplitudes for {n} qubits", amp.len()),
            });
        }
        Ok(Self { n, amp })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            amp: vec![ZERO; 1 << n],
        }
    }

    /// Computational basis state `|index>`.
    pub fn basis(n: usize, index: usize) -> Result<Self> {
        let mut s = Self::zeros(n);
        if index >= s.amp.len() {
            return Err(Error::domain(format!("basis index {index} out of range")));
        }
        s.amp[index] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        &self.amp
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOL
    }

    pub fn scaled(&self, factor: Amplitude) -> Self {
        Self {
            n: self.n,
            amp: self.amp.iter().map(|z| z * factor).collect(),
        }
    }

    /// Kronecker product `self (x) other`, with `self` on the leading parties.
    pub fn tensor(&self, other: &DenseState) -> DenseState {
        let mut amp = Vec::with_capacity(self.amp.len() * other.amp.len());
        for a in &self.amp {
            amp.extend(other.amp.iter().map(|b| a * b));
        }
        DenseState {
            n: self.n + other.n,
            amp,
        }
    }

    /// Relabels parties `i` and `j` (1-based).
    pub fn swap_parties(&self, i: usize, j: usize) -> Result<Self> {
        let si = party_shift(self.n, i)?;
        let sj = party_shift(self.n, j)?;
        let mut out = Self::zeros(self.n);
        for (idx, z) in self.amp.iter().enumerate() {
            let bi = (idx >> si) & 1;
            let bj = (idx >> sj) & 1;
            let mut t = idx & !((1 << si) | (1 << sj));
            t |= bi << sj;
            t |= bj << si;
            out.amp[t] = *z;
        }
        Ok(out)
    }
}

/// Bit position of party `j` (1-based) in a dense index.
pub(crate) fn party_shift(n: usize, j: usize) -> Result<usize> {
    if j == 0 || j > n {
        return Err(Error::domain(format!("party {j} out of range 1..={n}")));
    }
    Ok(n - j)
}

/// Single-qubit bra `beta <0| + gamma <1|`.
///
/// Contracting against a ket `(w0, w1)` gives `beta w0 + gamma w1`; the ket
/// belonging to this bra is `(conj beta, conj gamma)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bra {
    pub beta: Amplitude,
    pub gamma: Amplitude,
}

impl Bra {
    pub fn new(beta: Amplitude, gamma: Amplitude) -> Result<Self> {
        if !is_finite(&beta) || !is_finite(&gamma) {
            return Err(Error::Invalid {
                what: "bra",
                reason: "non-finite component".into(),
            });
        }
        if beta.norm_sqr() + gamma.norm_sqr() == 0.0 {
            return Err(Error::Invalid {
                what: "bra",
                reason: "zero vector".into(),
            });
        }
        Ok(Self { beta, gamma })
    }

    pub fn real(beta: f64, gamma: f64) -> Result<Self> {
        Self::new(Complex64::new(beta, 0.0), Complex64::new(gamma, 0.0))
    }

    pub fn norm(&self) -> f64 {
        (self.beta.norm_sqr() + self.gamma.norm_sqr()).sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= NORM_TOL
    }

    /// `<self | w>` for a single-qubit ket `w = (w0, w1)`.
    pub fn apply(&self, w0: Amplitude, w1: Amplitude) -> Amplitude {
        self.beta * w0 + self.gamma * w1
    }

    /// Inner product of the two underlying kets, `<self_ket | other_ket>`.
    pub fn ket_overlap(&self, other: &Bra) -> Amplitude {
        self.beta * other.beta.conj() + self.gamma * other.gamma.conj()
    }

    /// Unit-norm copy with the first nonzero component real and positive.
    pub fn canonical(&self) -> Bra {
        let norm = self.norm();
        let beta_leads = self.beta.norm() > 1e-14 * norm;
        let lead = if beta_leads { self.beta } else { self.gamma };
        let phase = lead.conj() / lead.norm();
        let mut beta = self.beta * phase / norm;
        let mut gamma = self.gamma * phase / norm;
        // exact zero imaginary part on the leading component
        if beta_leads {
            beta.im = 0.0;
        } else {
            gamma.im = 0.0;
        }
        Bra { beta, gamma }
    }
}

/// `|D^n_k>`: equal superposition of all weight-`k` strings.
pub fn dicke(n: usize, k: usize) -> Result<DenseState> {
    if n == 0 || k > n {
        return Err(Error::domain(format!("dicke({n}, {k}) needs 0 <= k <= n, n >= 1")));
    }
    let amp = 1.0 / binomial(n, k).sqrt();
    let mut out = DenseState::zeros(n);
    for (idx, z) in out.amp.iter_mut().enumerate() {
        if idx.count_ones() as usize == k {
            *z = Complex64::new(amp, 0.0);
        }
    }
    Ok(out)
}

/// Dense vector of a near-symmetric state.
pub fn embed(s: &NearSymmetricState) -> DenseState {
    let n = s.n;
    let rest = n - 1;
    let mask = (1usize << rest) - 1;
    let norms: Vec<f64> = (0..n).map(|k| 1.0 / binomial(rest, k).sqrt()).collect();
    let mut out = DenseState::zeros(n);
    for (idx, z) in out.amp.iter_mut().enumerate() {
        let w = (idx & mask).count_ones() as usize;
        let coeff = if idx >> rest == 0 { s.h[w] } else { s.h_prime[w] };
        *z = coeff * norms[w];
    }
    out
}

/// Contracts `v` against party `j` (1-based), leaving an unnormalized
/// state on the remaining `n - 1` parties in their original order.
pub fn project_party(psi: &DenseState, j: usize, v: &Bra) -> Result<DenseState> {
    let shift = party_shift(psi.n, j)?;
    let low = (1usize << shift) - 1;
    let mut out = DenseState::zeros(psi.n - 1);
    for (o, z) in out.amp.iter_mut().enumerate() {
        let i0 = ((o & !low) << 1) | (o & low);
        let i1 = i0 | (1 << shift);
        *z = v.apply(psi.amp[i0], psi.amp[i1]);
    }
    Ok(out)
}

/// `sum_i conj(a_i) b_i`.
pub fn inner(a: &DenseState, b: &DenseState) -> Result<Amplitude> {
    if a.n != b.n {
        return Err(Error::domain(format!(
            "inner product of {}-qubit and {}-qubit states",
            a.n, b.n
        )));
    }
    Ok(a.amp.iter().zip(&b.amp).map(|(x, y)| x.conj() * y).sum())
}

/// Draws a random genuinely entangled near-symmetric state.
///
/// The generator is ChaCha8 seeded through `SeedableRng::seed_from_u64`.
/// Each of the `2n` coefficients takes two independent standard normals
/// (real then imaginary part, `h_0..h_{n-1}` before `h'_0..h'_{n-1}`); the
/// vector is normalized and redrawn until it passes [`gme_check`].
pub fn random_near_symmetric(n: usize, seed: u64) -> Result<NearSymmetricState> {
    if n < 3 {
        return Err(Error::domain(format!("need n >= 3, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut draw = |_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        };
        let h: Vec<_> = (0..n).map(&mut draw).collect();
        let hp: Vec<_> = (0..n).map(&mut draw).collect();
        let s = NearSymmetricState::from_unnormalized(h, hp)?;
        if gme_check(&s, DEFAULT_PURITY_TOL).is_gme {
            return Ok(s);
        }
    }
}

/// State with `h_k = lambda h'_k`, a product across party 1 and the rest.
pub fn biseparable(
    n: usize,
    lambda: Amplitude,
    h_prime: &[Amplitude],
) -> Result<NearSymmetricState> {
    if h_prime.len() != n {
        return Err(Error::domain(format!(
            "h' has {} entries for {n} parties",
            h_prime.len()
        )));
    }
    if h_prime.iter().all(|z| z.norm_sqr() == 0.0) {
        return Err(Error::domain("h' must be nonzero"));
    }
    let h = h_prime.iter().map(|z| lambda * z).collect();
    NearSymmetricState::from_unnormalized(h, h_prime.to_vec())
}

//! Dense operators and states on the truncated Fock space `span{|0⟩, …, |N−1⟩}`.
//!
//! Truncation breaks `[a, a†] = 1` on the top level, so identities are checked
//! on the leading `dim − guard` block (see [`kept_levels`]).

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const DEFAULT_DIM: usize = 32;
pub const DEFAULT_GUARD: usize = 6;

/// Reciprocal condition below which a solve is refused.
pub const MIN_RCOND: f64 = 1e-12;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Number of levels below the guard band.
pub fn kept_levels(dim: usize, guard: usize) -> Result<usize> {
    if guard >= dim {
        return Err(Error::InvalidGuard { guard, dim });
    }
    Ok(dim - guard)
}

/// A dense `dim × dim` complex operator, `dim ≥ 2`, finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    mat: DMatrix<C64>,
}

impl FockOperator {
    pub fn from_matrix(mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                found: mat.ncols(),
            });
        }
        if mat.nrows() < 2 {
            return Err(Error::InvalidDimension(mat.nrows()));
        }
        if !mat.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite("operator"));
        }
        Ok(Self { mat })
    }

    /// Wraps a matrix already known to be square, `≥ 2` and finite.
    pub(crate) fn from_matrix_unchecked(mat: DMatrix<C64>) -> Self {
        debug_assert!(mat.is_square() && mat.nrows() >= 2);
        Self { mat }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Result<Self> {
        check_dim(dim)?;
        Self::from_matrix(DMatrix::from_fn(dim, dim, f))
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self::from_matrix_unchecked(DMatrix::zeros(dim, dim)))
    }

    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self::from_matrix_unchecked(DMatrix::identity(dim, dim)))
    }

    pub fn diagonal(entries: &[C64]) -> Result<Self> {
        check_dim(entries.len())?;
        Self::from_matrix(DMatrix::from_diagonal(&DVector::from_column_slice(entries)))
    }

    /// The number operator `a†a`.
    pub fn number(dim: usize) -> Result<Self> {
        let n: Vec<C64> = (0..dim).map(|k| C64::new(k as f64, 0.0)).collect();
        Self::diagonal(&n)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.mat[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_matrix_unchecked(self.mat.adjoint())
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self::from_matrix_unchecked(&self.mat * factor)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self::from_matrix_unchecked(&self.mat * &other.mat - &other.mat * &self.mat)
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        StateVector {
            amp: &self.mat * &v.amp,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.mat.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm()
    }

    /// Induced 1-norm (maximum column sum).
    pub fn norm_1(&self) -> f64 {
        norm_1(&self.mat)
    }

    /// Upper bound on the spectral norm, `sqrt(‖M‖₁ ‖M‖∞)`.
    pub fn spectral_bound(&self) -> f64 {
        let inf = (0..self.dim())
            .map(|r| self.mat.row(r).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max);
        (self.norm_1() * inf).sqrt()
    }

    /// Copy of the leading `size × size` block.
    pub fn leading_block(&self, size: usize) -> DMatrix<C64> {
        let size = size.min(self.dim());
        self.mat.view((0, 0), (size, size)).into_owned()
    }

    /// `‖M − M†‖_F / ‖M‖_F` on the leading block, absolute when `‖M‖_F` vanishes.
    pub fn hermiticity_residual(&self, block: usize) -> f64 {
        let b = self.leading_block(block);
        relative(( &b - b.adjoint()).norm(), b.norm())
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        Err(Error::InvalidDimension(dim))
    } else {
        Ok(())
    }
}

pub(crate) fn norm_1(m: &DMatrix<C64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `num / den` when `den > 1e-14`, otherwise `num`.
pub fn relative(num: f64, den: f64) -> f64 {
    if den > 1e-14 {
        num / den
    } else {
        num
    }
}

impl Add for &FockOperator {
    type Output = FockOperator;
    fn add(self, rhs: Self) -> FockOperator {
        FockOperator::from_matrix_unchecked(&self.mat + &rhs.mat)
    }
}

impl Sub for &FockOperator {
    type Output = FockOperator;
    fn sub(self, rhs: Self) -> FockOperator {
        FockOperator::from_matrix_unchecked(&self.mat - &rhs.mat)
    }
}

impl Mul for &FockOperator {
    type Output = FockOperator;
    fn mul(self, rhs: Self) -> FockOperator {
        FockOperator::from_matrix_unchecked(&self.mat * &rhs.mat)
    }
}

/// Amplitudes `c_n` of `Σ c_n |n⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amp: DVector<C64>,
}

impl StateVector {
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        check_dim(amplitudes.len())?;
        if !amplitudes.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite("state"));
        }
        Ok(Self {
            amp: DVector::from_vec(amplitudes),
        })
    }

    pub(crate) fn from_vector(amp: DVector<C64>) -> Self {
        Self { amp }
    }

    /// The Fock state `|n⟩`.
    pub fn basis(dim: usize, n: usize) -> Result<Self> {
        check_dim(dim)?;
        if n >= dim {
            return Err(Error::InvalidParameter(format!(
                "basis index {n} outside dimension {dim}"
            )));
        }
        let mut amp = DVector::zeros(dim);
        amp[n] = ONE;
        Ok(Self { amp })
    }

    pub fn dim(&self) -> usize {
        self.amp.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amp
    }

    pub fn norm(&self) -> f64 {
        self.amp.norm()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.amp.dotc(&other.amp)
    }

    /// `⟨self|M|other⟩`.
    pub fn sandwich(&self, op: &FockOperator, other: &Self) -> C64 {
        self.amp.dotc(&(op.matrix() * &other.amp))
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            amp: &self.amp * factor,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.amp.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Sub for &StateVector {
    type Output = StateVector;
    fn sub(self, rhs: Self) -> StateVector {
        StateVector {
            amp: &self.amp - &rhs.amp,
        }
    }
}

/// Lowering and raising operators, `a|n⟩ = √n |n−1⟩`.
pub fn ladder_operators(dim: usize) -> Result<(FockOperator, FockOperator)> {
    check_dim(dim)?;
    let a = DMatrix::from_fn(dim, dim, |m, n| {
        if m + 1 == n {
            C64::new((n as f64).sqrt(), 0.0)
        } else {
            ZERO
        }
    });
    let a_dag = a.adjoint();
    Ok((
        FockOperator::from_matrix_unchecked(a),
        FockOperator::from_matrix_unchecked(a_dag),
    ))
}

/// `D[θ] = exp(θ a† − θ* a)`.
pub fn displacement(theta: C64, dim: usize) -> Result<FockOperator> {
    if !(theta.re.is_finite() && theta.im.is_finite()) {
        return Err(Error::NonFinite("displacement amplitude"));
    }
    let (a, a_dag) = ladder_operators(dim)?;
    let gen = &a_dag.scale(theta) - &a.scale(theta.conj());
    matrix_exponential(&gen)
}

/// `R[χ] = exp(−2iχ a†a)`.
pub fn rotation(angle: f64, dim: usize) -> Result<FockOperator> {
    if !angle.is_finite() {
        return Err(Error::NonFinite("rotation angle"));
    }
    let d: Vec<C64> = (0..dim)
        .map(|n| C64::new(0.0, -2.0 * angle * n as f64).exp())
        .collect();
    FockOperator::diagonal(&d)
}

pub fn matrix_exponential(m: &FockOperator) -> Result<FockOperator> {
    expm(m.matrix()).map(FockOperator::from_matrix_unchecked)
}

// Padé degrees and the 1-norm bounds below which each reaches unit roundoff.
const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539398330063230e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE_9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const MAX_SQUARINGS: i32 = 60;

/// Scaling and squaring with a diagonal Padé approximant (degree 3 to 13).
pub(crate) fn expm(a: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let dim = a.nrows();
    let norm = norm_1(a);
    if !norm.is_finite() {
        return Err(Error::NonFinite("matrix exponential argument"));
    }
    let id = DMatrix::<C64>::identity(dim, dim);
    if norm == 0.0 {
        return Ok(id);
    }
    for (theta, coeffs) in [
        (THETA_3, &PADE_3[..]),
        (THETA_5, &PADE_5[..]),
        (THETA_7, &PADE_7[..]),
        (THETA_9, &PADE_9[..]),
    ] {
        if norm <= theta {
            let (u, v) = pade_low(a, coeffs);
            return pade_solve(&u, &v, norm);
        }
    }
    let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
    if s > MAX_SQUARINGS {
        return Err(Error::ExponentialRange { norm });
    }
    let scaled = a * C64::new(2f64.powi(-s), 0.0);
    let (u, v) = pade_13(&scaled);
    let mut r = pade_solve(&u, &v, norm)?;
    for _ in 0..s {
        r = &r * &r;
    }
    if r.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(r)
    } else {
        Err(Error::ExponentialRange { norm })
    }
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn pade_low(a: &DMatrix<C64>, b: &[f64]) -> (DMatrix<C64>, DMatrix<C64>) {
    let dim = a.nrows();
    let id = DMatrix::<C64>::identity(dim, dim);
    let a2 = a * a;
    let mut odd = &id * real(b[1]);
    let mut even = &id * real(b[0]);
    let mut power = id.clone();
    for k in 1..b.len() / 2 {
        power = &power * &a2;
        odd += &power * real(b[2 * k + 1]);
        even += &power * real(b[2 * k]);
    }
    (a * odd, even)
}

fn pade_13(a: &DMatrix<C64>) -> (DMatrix<C64>, DMatrix<C64>) {
    let b = &PADE_13;
    let dim = a.nrows();
    let id = DMatrix::<C64>::identity(dim, dim);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * real(b[13]) + &a4 * real(b[11]) + &a2 * real(b[9]);
    let u = a * (&a6 * inner_u
        + &a6 * real(b[7])
        + &a4 * real(b[5])
        + &a2 * real(b[3])
        + &id * real(b[1]));
    let inner_v = &a6 * real(b[12]) + &a4 * real(b[10]) + &a2 * real(b[8]);
    let v = &a6 * inner_v + &a6 * real(b[6]) + &a4 * real(b[4]) + &a2 * real(b[2]) + &id * real(b[0]);
    (u, v)
}

fn pade_solve(u: &DMatrix<C64>, v: &DMatrix<C64>, norm: f64) -> Result<DMatrix<C64>> {
    let p = v + u;
    let q = v - u;
    q.lu().solve(&p).ok_or(Error::ExponentialRange { norm })
}

/// LU factorization with its reciprocal 1-norm condition number.
#[derive(Debug, Clone)]
pub struct Factorized {
    lu: nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>,
    inverse: DMatrix<C64>,
    rcond: f64,
}

impl Factorized {
    /// Fails with [`Error::IllConditioned`] when the reciprocal condition is
    /// below [`MIN_RCOND`].
    pub fn new(m: &FockOperator) -> Result<Self> {
        let dim = m.dim();
        let lu = m.matrix().clone().lu();
        let inverse = lu
            .solve(&DMatrix::identity(dim, dim))
            .ok_or(Error::IllConditioned {
                rcond: 0.0,
                time: None,
            })?;
        let rcond = 1.0 / (m.norm_1() * norm_1(&inverse));
        if !(rcond >= MIN_RCOND) {
            return Err(Error::IllConditioned { rcond, time: None });
        }
        Ok(Self { lu, inverse, rcond })
    }

    pub fn rcond(&self) -> f64 {
        self.rcond
    }

    pub fn dim(&self) -> usize {
        self.inverse.nrows()
    }

    pub fn inverse(&self) -> FockOperator {
        FockOperator::from_matrix_unchecked(self.inverse.clone())
    }

    pub fn solve<X: Operand>(&self, x: &X) -> Result<X> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.dim(),
            });
        }
        x.solved_by(self)
    }
}

/// Right-hand sides accepted by [`invert_apply`].
pub trait Operand: Sized {
    fn dim(&self) -> usize;
    fn solved_by(&self, f: &Factorized) -> Result<Self>;
}

impl Operand for FockOperator {
    fn dim(&self) -> usize {
        FockOperator::dim(self)
    }
    fn solved_by(&self, f: &Factorized) -> Result<Self> {
        let x = f
            .lu
            .solve(self.matrix())
            .ok_or(Error::IllConditioned { rcond: f.rcond, time: None })?;
        FockOperator::from_matrix(x)
    }
}

impl Operand for StateVector {
    fn dim(&self) -> usize {
        StateVector::dim(self)
    }
    fn solved_by(&self, f: &Factorized) -> Result<Self> {
        let x = f
            .lu
            .solve(&self.amp)
            .ok_or(Error::IllConditioned { rcond: f.rcond, time: None })?;
        Ok(StateVector { amp: x })
    }
}

/// Result of a solve with the condition estimate of the factored matrix.
#[derive(Debug, Clone)]
pub struct Solved<X> {
    pub value: X,
    pub rcond: f64,
}

/// `M⁻¹ X` by pivoted LU.
pub fn invert_apply<X: Operand>(m: &FockOperator, x: &X) -> Result<Solved<X>> {
    let f = Factorized::new(m)?;
    let value = f.solve(x)?;
    Ok(Solved {
        value,
        rcond: f.rcond,
    })
}

/// Fraction of `Σ|c_n|²` carried by the top `guard` levels.
pub fn tail_mass(v: &StateVector, guard: usize) -> Result<f64> {
    let dim = v.dim();
    kept_levels(dim, guard)?;
    let total: f64 = v.amp.iter().map(|z| z.norm_sqr()).sum();
    if total == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let tail: f64 = v.amp.iter().skip(dim - guard).map(|z| z.norm_sqr()).sum();
    Ok(tail / total)
}

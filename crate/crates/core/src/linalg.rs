//! LU decomposition with partial pivoting, generic over the scalar
//! arithmetic, plus matrix condition numbers and a near-singular matrix
//! generator for the linear-system benchmark.
//!
//! Under [`Shadow`](crate::shadow::Shadow) arithmetic the pivot search looks
//! only at original-lane magnitudes, so both lanes eliminate in the same
//! order and differ only through injected perturbations.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand_xoshiro::rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::arith::{Arithmetic, Binary64};
use crate::condnum::AtomicOp;
use crate::error::{Error, Result};

/// Square matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T> Matrix<T> {
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Argument("matrix must have at least one row".into()));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::Argument(format!(
                "row {bad} has {} entries, expected {n}",
                rows[bad].len()
            )));
        }
        Ok(Matrix {
            n,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_vec(n: usize, data: Vec<T>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(Error::Argument(format!(
                "{} entries do not form a nonempty {n}x{n} matrix",
                data.len()
            )));
        }
        Ok(Matrix { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
}

impl Matrix<f64> {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Matrix { n, data }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = Matrix::identity(n);
        for (i, v) in d.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    pub fn scaled(&self, c: f64) -> Self {
        Matrix {
            n: self.n,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    /// Binary64 product `A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .chunks(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn norm(&self, kind: Norm) -> f64 {
        let n = self.n;
        match kind {
            Norm::One => (0..n)
                .map(|j| (0..n).map(|i| self.data[i * n + j].abs()).sum::<f64>())
                .fold(0.0, f64::max),
            Norm::Infinity => self
                .data
                .chunks(n)
                .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Plain-text form: `n` on the first line, then `n` rows of `n`
    /// shortest round-trip decimals.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.n)?;
        for row in self.data.chunks(self.n) {
            let mut line = String::new();
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    line.push(' ');
                }
                write!(line, "{}", crate::fmt::float(*v)).unwrap();
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()));
        let header = lines
            .next()
            .ok_or_else(|| Error::Argument("empty matrix text".into()))??;
        let n: usize = header
            .trim()
            .parse()
            .map_err(|_| Error::Argument(format!("bad dimension line `{header}`")))?;
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| Error::Argument(format!("missing row {i}")))??;
            let row = parse_floats(&line)?;
            rows.push(row);
        }
        let m = Matrix::from_rows(rows)?;
        if !m.is_finite() {
            return Err(Error::Argument("matrix entries must be finite".into()));
        }
        Ok(m)
    }
}

/// Whitespace- or comma-separated floats.
pub fn parse_floats(text: &str) -> Result<Vec<f64>> {
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(crate::dsl::parse_value)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    #[default]
    One,
    Infinity,
}

/// Packed `L` (unit lower, below the diagonal) and `U` (diagonal and above)
/// of `P A = L U`.
#[derive(Debug, Clone)]
pub struct LuFactors<T> {
    n: usize,
    lu: Vec<T>,
    /// `permutation[i]` is the row of `A` that ended up in row `i`.
    permutation: Vec<usize>,
    parity: i8,
}

impl<T> LuFactors<T> {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// +1 for an even number of row swaps, -1 for odd.
    pub fn parity(&self) -> i8 {
        self.parity
    }

    pub fn packed(&self) -> &[T] {
        &self.lu
    }
}

impl LuFactors<f64> {
    pub fn l(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Greater => self.lu[i * self.n + j],
            std::cmp::Ordering::Equal => 1.0,
            std::cmp::Ordering::Less => 0.0,
        }
    }

    pub fn u(&self, i: usize, j: usize) -> f64 {
        if i <= j {
            self.lu[i * self.n + j]
        } else {
            0.0
        }
    }
}

/// Lift a binary64 matrix into `arith`'s scalar type.
pub fn lift<A: Arithmetic>(arith: &mut A, a: &Matrix<f64>) -> Result<Matrix<A::Value>> {
    let data = a.data.iter().map(|v| arith.input(*v)).collect::<Result<Vec<_>>>()?;
    Ok(Matrix { n: a.n, data })
}

pub fn lift_vec<A: Arithmetic>(arith: &mut A, v: &[f64]) -> Result<Vec<A::Value>> {
    v.iter().map(|x| arith.input(*x)).collect()
}

/// Doolittle LU with row pivoting on the largest magnitude (first one on
/// ties).
pub fn lu_decompose<A: Arithmetic>(arith: &mut A, a: &Matrix<A::Value>) -> Result<LuFactors<A::Value>> {
    let n = a.n;
    let mut lu = a.data.clone();
    let mut permutation: Vec<usize> = (0..n).collect();
    let mut parity = 1i8;

    for k in 0..n {
        let mut pivot = k;
        let mut best = arith.magnitude(&lu[k * n + k]);
        for i in k + 1..n {
            let m = arith.magnitude(&lu[i * n + k]);
            if m > best {
                best = m;
                pivot = i;
            }
        }
        if arith.is_zero(&lu[pivot * n + k]) {
            return Err(Error::Singular { column: k });
        }
        if pivot != k {
            for j in 0..n {
                lu.swap(k * n + j, pivot * n + j);
            }
            permutation.swap(k, pivot);
            parity = -parity;
        }
        for i in k + 1..n {
            let l = arith.apply(AtomicOp::Div, &lu[i * n + k], Some(&lu[k * n + k]))?;
            for j in k + 1..n {
                let prod = arith.apply(AtomicOp::Mul, &l, Some(&lu[k * n + j]))?;
                let diff = arith.apply(AtomicOp::Sub, &lu[i * n + j], Some(&prod))?;
                lu[i * n + j] = diff;
            }
            lu[i * n + k] = l;
        }
    }
    Ok(LuFactors {
        n,
        lu,
        permutation,
        parity,
    })
}

/// Forward substitution on the permuted right-hand side, then back
/// substitution.
pub fn lu_solve<A: Arithmetic>(arith: &mut A, factors: &LuFactors<A::Value>, b: &[A::Value]) -> Result<Vec<A::Value>> {
    let n = factors.n;
    if b.len() != n {
        return Err(Error::Argument(format!(
            "right-hand side has {} entries, matrix is {n}x{n}",
            b.len()
        )));
    }
    let lu = &factors.lu;
    let mut y: Vec<A::Value> = factors.permutation.iter().map(|&p| b[p].clone()).collect();
    for i in 1..n {
        for j in 0..i {
            let prod = arith.apply(AtomicOp::Mul, &lu[i * n + j], Some(&y[j]))?;
            y[i] = arith.apply(AtomicOp::Sub, &y[i], Some(&prod))?;
        }
    }
    for i in (0..n).rev() {
        for j in i + 1..n {
            let prod = arith.apply(AtomicOp::Mul, &lu[i * n + j], Some(&y[j]))?;
            y[i] = arith.apply(AtomicOp::Sub, &y[i], Some(&prod))?;
        }
        y[i] = arith.apply(AtomicOp::Div, &y[i], Some(&lu[i * n + i]))?;
    }
    Ok(y)
}

/// Decompose and solve a binary64 system in `arith`'s scalar type.
pub fn solve<A: Arithmetic>(arith: &mut A, a: &Matrix<f64>, b: &[f64]) -> Result<Vec<A::Value>> {
    let lifted = lift(arith, a)?;
    let factors = lu_decompose(arith, &lifted)?;
    let rhs = lift_vec(arith, b)?;
    lu_solve(arith, &factors, &rhs)
}

/// Binary64 inverse, one LU solve per column.
pub fn inverse(a: &Matrix<f64>) -> Result<Matrix<f64>> {
    let n = a.n;
    let mut arith = Binary64::new();
    let factors = lu_decompose(&mut arith, a)?;
    let mut inv = vec![0.0; n * n];
    let mut e = vec![0.0; n];
    for j in 0..n {
        e.fill(0.0);
        e[j] = 1.0;
        let col = lu_solve(&mut arith, &factors, &e)?;
        for (i, v) in col.into_iter().enumerate() {
            inv[i * n + j] = v;
        }
    }
    Ok(Matrix { n, data: inv })
}

/// `||A|| * ||A^-1||` in the chosen norm.
pub fn matrix_condition_number(a: &Matrix<f64>, norm: Norm) -> Result<f64> {
    let inv = inverse(a).map_err(|e| match e {
        Error::NonFinite { .. } => Error::Singular { column: a.n - 1 },
        other => other,
    })?;
    Ok(a.norm(norm) * inv.norm(norm))
}

/// Parameters of the near-singular generator.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NearSingularSpec {
    /// Scale of the noise added to the overwritten row, in units of 1e-12.
    /// Smaller values give larger condition numbers.
    pub severity: f64,
    /// Probability that a row is overwritten at all.
    pub overwrite_probability: f64,
}

pub const NOISE_SCALE: f64 = 1e-12;

/// Uniform draw in `[0, 1)` from the top 53 bits of the next output.
fn unit(rng: &mut Xoshiro256PlusPlus) -> f64 {
    (rng.next_u64() >> 11) as f64 * crate::ulp::pow2(-53)
}

fn index_below(rng: &mut Xoshiro256PlusPlus, n: usize) -> usize {
    (rng.next_u64() % n as u64) as usize
}

/// Deterministic random matrix, optionally pushed towards singularity.
///
/// The generator is xoshiro256++ seeded through SplitMix64
/// (`Xoshiro256PlusPlus::seed_from_u64`). Entries are `2u - 1` with
/// `u = (next_u64() >> 11) * 2^-53`, drawn in row-major order. A further
/// draw decides (against `overwrite_probability`) whether one row is
/// replaced; if so, the target row, two source rows, the mixing weight and
/// then one noise draw per column follow, the new row being
/// `w * a + (1 - w) * b + severity * 1e-12 * (2u - 1)`.
pub fn gen_matrix(n: usize, seed: u64, spec: NearSingularSpec) -> Result<Matrix<f64>> {
    if n < 2 {
        return Err(Error::Argument(format!("dimension must be at least 2, got {n}")));
    }
    if !(spec.severity > 0.0 && spec.severity <= 1.0) {
        return Err(Error::Argument(format!(
            "severity must lie in (0, 1], got {}",
            spec.severity
        )));
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut data: Vec<f64> = (0..n * n).map(|_| 2.0 * unit(&mut rng) - 1.0).collect();
    if unit(&mut rng) < spec.overwrite_probability {
        let target = index_below(&mut rng, n);
        let others: Vec<usize> = (0..n).filter(|&i| i != target).collect();
        let a = others[index_below(&mut rng, others.len())];
        let rest: Vec<usize> = others.iter().copied().filter(|&i| i != a).collect();
        let b = if rest.is_empty() { a } else { rest[index_below(&mut rng, rest.len())] };
        let w = unit(&mut rng);
        let noise = spec.severity * NOISE_SCALE;
        for j in 0..n {
            let mixed = w * data[a * n + j] + (1.0 - w) * data[b * n + j];
            data[target * n + j] = mixed + noise * (2.0 * unit(&mut rng) - 1.0);
        }
    }
    Ok(Matrix { n, data })
}

/// [`gen_matrix`] with a row always overwritten.
pub fn gen_near_singular(n: usize, seed: u64, severity: f64) -> Result<Matrix<f64>> {
    gen_matrix(
        n,
        seed,
        NearSingularSpec {
            severity,
            overwrite_probability: 1.0,
        },
    )
}

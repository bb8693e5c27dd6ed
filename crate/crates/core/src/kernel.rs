//! The recurrent potential kernel of simple random walk on Z².
//!
//! Every value of the kernel near the origin has the form `p + q/π` with
//! rational `p` and `q`. The table is built by the classical diagonal-seeded
//! sweep: the diagonal is known in closed form,
//! `g(n, n) = (4/π) Σ_{k=1..n} 1/(2k-1)`, and every other value in the octant
//! `0 <= y <= x` follows from `Δg = 0` one column at a time. The recursion is
//! numerically unstable, so it runs in exact integer arithmetic: `p` is always
//! an integer and `q` is held over the common denominator
//! `L = lcm(1, 3, ..., 2R₀ - 1)`. Conversion to `f64` goes through a
//! fixed-point evaluation of `1/π` wide enough to absorb the cancellation.
//!
//! Beyond the crossover radius the kernel is evaluated from its logarithmic
//! asymptote `(2/π) ln|z| + λ̂`, with `λ̂` fitted from the outer ring of the
//! exact table.

use std::f64::consts::PI;
use std::io::Write;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::lattice::{canonical, LatticePoint};

/// Default crossover radius.
pub const DEFAULT_R0: usize = 64;

/// An exact kernel value `p + q/π`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KernelValue {
    pub p: BigRational,
    pub q: BigRational,
}

impl KernelValue {
    pub fn zero() -> Self {
        KernelValue {
            p: BigRational::zero(),
            q: BigRational::zero(),
        }
    }

    pub fn from_ints(p: i64, q_num: i64, q_den: i64) -> Self {
        KernelValue {
            p: BigRational::from_integer(p.into()),
            q: BigRational::new(q_num.into(), q_den.into()),
        }
    }

    /// Double-precision value. Adequate only when `p` and `q` are of modest
    /// size; table entries use [`KernelTable::exact_f64`] instead.
    pub fn approx(&self) -> f64 {
        self.p.to_f64().unwrap_or(f64::NAN) + self.q.to_f64().unwrap_or(f64::NAN) / PI
    }
}

/// Result of fitting the additive constant of the logarithmic asymptote.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaFit {
    pub lambda: f64,
    /// Sample standard deviation of `g(z) - (2/π) ln|z|` over the fit ring.
    pub spread: f64,
    pub samples: usize,
}

/// Exact potential-kernel values on the canonical octant `0 <= y <= x <= R₀`.
///
/// Immutable once built.
#[derive(Clone, Debug)]
pub struct KernelTable {
    r0: usize,
    /// Common denominator of every `q`.
    q_den: BigInt,
    /// `(p, Q)` with value `p + Q / (L π)`, indexed by [`octant_index`].
    exact: Vec<(BigInt, BigInt)>,
    values: Vec<f64>,
    lambda_hat: f64,
    lambda_spread: f64,
}

/// Position of a canonical point `(x, y)`, `0 <= y <= x`, in octant order
/// (increasing `x`, then increasing `y`).
pub fn octant_index(x: usize, y: usize) -> usize {
    x * (x + 1) / 2 + y
}

fn octant_len(r0: usize) -> usize {
    (r0 + 1) * (r0 + 2) / 2
}

/// Continuum part of the asymptote.
pub fn log_term(z: LatticePoint) -> f64 {
    (2.0 / PI) * z.norm().ln()
}

/// Build the exact table up to sup-radius `r0`.
pub fn build_kernel_table(r0: usize) -> Result<KernelTable> {
    if r0 < 2 {
        return Err(Error::KernelRadius(r0));
    }
    let q_den = odd_lcm(2 * r0 - 1);
    let mut exact: Vec<(BigInt, BigInt)> = vec![(BigInt::zero(), BigInt::zero()); octant_len(r0)];

    // Diagonal: g(n, n) = (4/π) Σ 1/(2k-1), so Q(n, n) = 4 L Σ 1/(2k-1).
    let mut diag_q = BigInt::zero();
    for n in 1..=r0 {
        diag_q += &q_den / BigInt::from(2 * n - 1);
        exact[octant_index(n, n)] = (BigInt::zero(), &diag_q * 4);
    }
    exact[octant_index(1, 0)] = (BigInt::one(), BigInt::zero());

    let at = |tbl: &Vec<(BigInt, BigInt)>, x: i64, y: i64| -> (BigInt, BigInt) {
        let c = canonical(LatticePoint::new(x, y));
        tbl[octant_index(c.x as usize, c.y as usize)].clone()
    };

    // Column x+1 from harmonicity on column x; the entry just below the
    // diagonal comes from harmonicity at the diagonal point itself.
    for x in 1..r0 {
        let xi = x as i64;
        for y in 0..x {
            let yi = y as i64;
            let (cp, cq) = at(&exact, xi, yi);
            let (lp, lq) = at(&exact, xi - 1, yi);
            let (up, uq) = at(&exact, xi, yi + 1);
            let (dp, dq) = at(&exact, xi, yi - 1);
            let p = cp * 4 - lp - up - dp;
            let q = cq * 4 - lq - uq - dq;
            exact[octant_index(x + 1, y)] = (p, q);
        }
        let (cp, cq) = at(&exact, xi, xi);
        let (bp, bq) = at(&exact, xi, xi - 1);
        exact[octant_index(x + 1, x)] = (cp * 2 - bp, cq * 2 - bq);
    }

    let values = to_doubles(&exact, &q_den);
    let mut table = KernelTable {
        r0,
        q_den,
        exact,
        values,
        lambda_hat: 0.0,
        lambda_spread: 0.0,
    };
    let fit = fit_lambda(&table);
    table.lambda_hat = fit.lambda;
    table.lambda_spread = fit.spread;
    Ok(table)
}

/// `lcm(1, 3, 5, ..., max_odd)`.
fn odd_lcm(max_odd: usize) -> BigInt {
    let mut l = BigInt::one();
    let mut k = 1;
    while k <= max_odd {
        l = l.lcm(&BigInt::from(k));
        k += 2;
    }
    l
}

/// `atan(1/x) * 2^bits`, truncated.
fn arctan_inv_fixed(x: u32, bits: u64) -> BigInt {
    let one = BigInt::one() << bits;
    let x2 = BigInt::from(x) * x;
    let mut power = one / x;
    let mut sum = BigInt::zero();
    let mut k: u64 = 0;
    while !power.is_zero() {
        let term = &power / (2 * k + 1);
        if k.is_multiple_of(2) {
            sum += term;
        } else {
            sum -= term;
        }
        power /= &x2;
        k += 1;
    }
    sum
}

/// `π * 2^bits` via Machin's formula, with guard bits absorbed.
fn pi_fixed(bits: u64) -> BigInt {
    let guard = 32;
    let w = bits + guard;
    let pi = arctan_inv_fixed(5, w) * 16 - arctan_inv_fixed(239, w) * 4;
    pi >> guard
}

fn to_doubles(exact: &[(BigInt, BigInt)], q_den: &BigInt) -> Vec<f64> {
    let max_bits = exact
        .iter()
        .map(|(p, q)| p.bits().max(q.bits()))
        .max()
        .unwrap_or(0);
    let w = max_bits + 96;
    let scale = BigInt::one() << w;
    let denom = q_den * pi_fixed(w);
    let scale_sq = BigInt::one() << (2 * w);
    exact
        .iter()
        .map(|(p, q)| {
            // value * 2^w = p 2^w + Q 2^{2w} / (L π 2^w)
            let t = (q * &scale_sq).div_floor(&denom);
            let v = p * &scale + t;
            let shifted: BigInt = v >> (w - 64);
            shifted.to_f64().unwrap_or(f64::NAN) * 2f64.powi(-64)
        })
        .collect()
}

impl KernelTable {
    pub fn r0(&self) -> usize {
        self.r0
    }

    pub fn lambda_hat(&self) -> f64 {
        self.lambda_hat
    }

    /// Spread of the fit that produced [`Self::lambda_hat`].
    pub fn lambda_spread(&self) -> f64 {
        self.lambda_spread
    }

    /// Common denominator of the `q` parts.
    pub fn q_denominator(&self) -> &BigInt {
        &self.q_den
    }

    /// Whether `z` reduces to a tabulated canonical point.
    pub fn covers(&self, z: LatticePoint) -> bool {
        canonical(z).x as u64 <= self.r0 as u64
    }

    /// Exact value for a tabulated point.
    pub fn exact(&self, z: LatticePoint) -> Option<KernelValue> {
        let (p, q) = self.exact_raw(z)?;
        Some(KernelValue {
            p: BigRational::from_integer(p.clone()),
            q: BigRational::new(q.clone(), self.q_den.clone()),
        })
    }

    /// Exact value as the integer pair `(p, Q)` meaning `p + Q/(Lπ)`.
    pub fn exact_raw(&self, z: LatticePoint) -> Option<&(BigInt, BigInt)> {
        let c = canonical(z);
        if c.x as u64 > self.r0 as u64 {
            return None;
        }
        Some(&self.exact[octant_index(c.x as usize, c.y as usize)])
    }

    /// Correctly rounded double of a tabulated value.
    pub fn exact_f64(&self, z: LatticePoint) -> Option<f64> {
        let c = canonical(z);
        if c.x as u64 > self.r0 as u64 {
            return None;
        }
        Some(self.values[octant_index(c.x as usize, c.y as usize)])
    }

    /// Asymptotic branch `(2/π) ln|z| + λ̂`.
    pub fn asymptotic(&self, z: LatticePoint) -> f64 {
        log_term(z) + self.lambda_hat
    }

    /// `g(z)` on all of Z²: exact inside the table, asymptotic outside.
    pub fn eval(&self, z: LatticePoint) -> f64 {
        self.exact_f64(z).unwrap_or_else(|| self.asymptotic(z))
    }

    /// Canonical points with their double values, in octant order.
    pub fn iter_values(&self) -> impl Iterator<Item = (LatticePoint, f64)> + '_ {
        (0..=self.r0).flat_map(move |x| {
            (0..=x).map(move |y| {
                (
                    LatticePoint::new(x as i64, y as i64),
                    self.values[octant_index(x, y)],
                )
            })
        })
    }

    /// `4 Δg(z)` in exact arithmetic as the pair `(p, Q)`; `None` if a
    /// neighbour is outside the table.
    pub fn laplacian_exact(&self, z: LatticePoint) -> Option<(BigInt, BigInt)> {
        let (cp, cq) = self.exact_raw(z)?;
        let mut p = -(cp * BigInt::from(4));
        let mut q = -(cq * BigInt::from(4));
        for w in z.neighbors() {
            let (wp, wq) = self.exact_raw(w)?;
            p += wp;
            q += wq;
        }
        Some((p, q))
    }

    /// Largest `|z|² |g(z) - (2/π) ln|z| - λ̂|` over tabulated `lo <= |z| <= R₀`.
    pub fn asymptotic_error_constant(&self, lo: f64) -> f64 {
        self.iter_values()
            .filter(|(z, _)| {
                let r = z.norm();
                r >= lo && r <= self.r0 as f64
            })
            .map(|(z, g)| z.norm_sq() as f64 * (g - self.asymptotic(z)).abs())
            .fold(0.0, f64::max)
    }

    /// Text dump, one `x y p_num p_den q_num q_den` line per canonical point.
    pub fn write_dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for x in 0..=self.r0 {
            for y in 0..=x {
                let (p, q) = &self.exact[octant_index(x, y)];
                let q = BigRational::new(q.clone(), self.q_den.clone());
                writeln!(out, "{x} {y} {p} 1 {} {}", q.numer(), q.denom())?;
            }
        }
        Ok(())
    }
}

/// Average of `g(z) - (2/π) ln|z|` over samples with `lo <= |z| <= hi`.
pub fn fit_lambda_from<I>(samples: I, lo: f64, hi: f64) -> LambdaFit
where
    I: IntoIterator<Item = (LatticePoint, f64)>,
{
    let resid: Vec<f64> = samples
        .into_iter()
        .filter(|(z, _)| {
            let r = z.norm();
            r >= lo && r <= hi && r > 0.0
        })
        .map(|(z, g)| g - log_term(z))
        .collect();
    let n = resid.len();
    if n == 0 {
        return LambdaFit {
            lambda: f64::NAN,
            spread: f64::NAN,
            samples: 0,
        };
    }
    let mean = resid.iter().sum::<f64>() / n as f64;
    let spread = if n > 1 {
        (resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    LambdaFit {
        lambda: mean,
        spread,
        samples: n,
    }
}

/// Fit over the ring `R₀/2 <= |z| <= R₀`. Meaningful for `R₀ >= 32`.
pub fn fit_lambda(table: &KernelTable) -> LambdaFit {
    let r0 = table.r0 as f64;
    fit_lambda_from(table.iter_values(), r0 / 2.0, r0)
}

/// Convenience wrapper over [`KernelTable::eval`].
pub fn kernel_eval(table: &KernelTable, z: LatticePoint) -> f64 {
    table.eval(z)
}

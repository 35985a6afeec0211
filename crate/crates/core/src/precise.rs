//! Extended-precision real linear algebra on top of `astro-float`.
//!
//! The interval exponential families have Gram condition numbers far beyond
//! `1/ε` of f64, so their moment problems are assembled and solved here.
//! Complex Hermitian systems are handled through the real symmetric
//! embedding `[[A, −B], [B, A]]` of `A + iB`.

use astro_float::{BigFloat, Consts, RoundingMode, Sign};

use crate::error::{Result, SrlwError};

pub type Hf = BigFloat;

const RM: RoundingMode = RoundingMode::ToEven;

/// Arithmetic context at a fixed binary precision.
pub struct HpContext {
    bits: usize,
    consts: Consts,
}

impl std::fmt::Debug for HpContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HpContext").field("bits", &self.bits).finish()
    }
}

impl HpContext {
    pub fn new(bits: usize) -> Result<Self> {
        if bits < 64 {
            return Err(SrlwError::invalid("extended precision needs at least 64 bits"));
        }
        let consts = Consts::new().map_err(|e| SrlwError::invalid(format!("astro-float constants: {e:?}")))?;
        Ok(Self { bits, consts })
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn f(&self, x: f64) -> Hf {
        BigFloat::from_f64(x, self.bits)
    }

    pub fn int(&self, n: i64) -> Hf {
        BigFloat::from_i64(n, self.bits)
    }

    pub fn zero(&self) -> Hf {
        self.int(0)
    }

    pub fn pi(&mut self) -> Hf {
        self.consts.pi(self.bits, RM)
    }

    pub fn add(&self, a: &Hf, b: &Hf) -> Hf {
        a.add(b, self.bits, RM)
    }

    pub fn sub(&self, a: &Hf, b: &Hf) -> Hf {
        a.sub(b, self.bits, RM)
    }

    pub fn mul(&self, a: &Hf, b: &Hf) -> Hf {
        a.mul(b, self.bits, RM)
    }

    pub fn div(&self, a: &Hf, b: &Hf) -> Hf {
        a.div(b, self.bits, RM)
    }

    pub fn sqrt(&self, a: &Hf) -> Hf {
        a.sqrt(self.bits, RM)
    }

    pub fn sin(&mut self, a: &Hf) -> Hf {
        a.sin(self.bits, RM, &mut self.consts)
    }

    pub fn cos(&mut self, a: &Hf) -> Hf {
        a.cos(self.bits, RM, &mut self.consts)
    }

    /// `∫₀ᵀ e^{iδt} dt` as `(re, im)`.
    pub fn exp_integral(&mut self, delta: &Hf, horizon: &Hf) -> (Hf, Hf) {
        if delta.is_zero() {
            return (horizon.clone(), self.zero());
        }
        let half = self.mul(&self.mul(delta, horizon), &self.f(0.5));
        let (c, s) = (self.cos(&half), self.sin(&half));
        let amp = self.div(&self.mul(&self.f(2.0), &s), delta);
        (self.mul(&amp, &c), self.mul(&amp, &s))
    }

    pub fn dot(&self, a: &[Hf], b: &[Hf]) -> Hf {
        a.iter().zip(b).fold(self.zero(), |acc, (x, y)| self.add(&acc, &self.mul(x, y)))
    }

    pub fn norm2(&self, a: &[Hf]) -> Hf {
        self.sqrt(&self.dot(a, a))
    }
}

/// Extended-precision complex number.
#[derive(Debug, Clone)]
pub struct Hc {
    pub re: Hf,
    pub im: Hf,
}

impl HpContext {
    pub fn c(&self, re: f64, im: f64) -> Hc {
        Hc { re: self.f(re), im: self.f(im) }
    }

    pub fn czero(&self) -> Hc {
        Hc { re: self.zero(), im: self.zero() }
    }

    pub fn cadd(&self, a: &Hc, b: &Hc) -> Hc {
        Hc { re: self.add(&a.re, &b.re), im: self.add(&a.im, &b.im) }
    }

    pub fn csub(&self, a: &Hc, b: &Hc) -> Hc {
        Hc { re: self.sub(&a.re, &b.re), im: self.sub(&a.im, &b.im) }
    }

    pub fn cmul(&self, a: &Hc, b: &Hc) -> Hc {
        Hc {
            re: self.sub(&self.mul(&a.re, &b.re), &self.mul(&a.im, &b.im)),
            im: self.add(&self.mul(&a.re, &b.im), &self.mul(&a.im, &b.re)),
        }
    }

    pub fn cscale(&self, a: &Hc, r: &Hf) -> Hc {
        Hc { re: self.mul(&a.re, r), im: self.mul(&a.im, r) }
    }

    pub fn cdiv(&self, a: &Hc, b: &Hc) -> Hc {
        let d = self.add(&self.mul(&b.re, &b.re), &self.mul(&b.im, &b.im));
        let num = self.cmul(a, &Hc { re: b.re.clone(), im: b.im.neg() });
        Hc { re: self.div(&num.re, &d), im: self.div(&num.im, &d) }
    }

    /// `e^{iθ}`.
    pub fn cexpi(&mut self, theta: &Hf) -> Hc {
        Hc { re: self.cos(theta), im: self.sin(theta) }
    }

    pub fn to_c64(&self, a: &Hc) -> crate::spectral::C64 {
        crate::spectral::C64::new(to_f64(&a.re), to_f64(&a.im))
    }
}

/// Nearest f64 of an extended-precision value (saturating to ±∞ / 0).
pub fn to_f64(x: &Hf) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_inf_pos() {
        return f64::INFINITY;
    }
    if x.is_inf_neg() {
        return f64::NEG_INFINITY;
    }
    if x.is_zero() {
        return 0.0;
    }
    let Some((words, _, sign, exponent, _)) = x.as_raw_parts() else {
        return f64::NAN;
    };
    let top = words.len() - 1;
    let mut m = words[top] as f64 / 2f64.powi(64);
    if top > 0 {
        m += words[top - 1] as f64 / 2f64.powi(128);
    }
    let v = m * 2f64.powi(exponent);
    if sign == Sign::Neg {
        -v
    } else {
        v
    }
}

/// Dense row-major square or rectangular matrix.
#[derive(Debug, Clone)]
pub struct HpMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Hf>,
}

impl HpMatrix {
    pub fn zeros(ctx: &HpContext, rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ctx.zero(); rows * cols] }
    }

    pub fn get(&self, i: usize, j: usize) -> &Hf {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Hf) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Hf] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matvec(&self, ctx: &HpContext, x: &[Hf]) -> Vec<Hf> {
        (0..self.rows).map(|i| ctx.dot(self.row(i), x)).collect()
    }

    /// Real symmetric embedding of the Hermitian matrix `re + i·im`.
    pub fn hermitian_embedding(ctx: &HpContext, re: &HpMatrix, im: &HpMatrix) -> Self {
        let n = re.rows;
        let mut out = Self::zeros(ctx, 2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, re.get(i, j).clone());
                out.set(i + n, j + n, re.get(i, j).clone());
                out.set(i, j + n, im.get(i, j).neg());
                out.set(i + n, j, im.get(i, j).clone());
            }
        }
        out
    }

    /// Max absolute column sum.
    pub fn norm1(&self, ctx: &HpContext) -> Hf {
        let mut best = ctx.zero();
        for j in 0..self.cols {
            let s = (0..self.rows).fold(ctx.zero(), |acc, i| ctx.add(&acc, &self.get(i, j).abs()));
            best = best.max(&s);
        }
        best
    }
}

/// LU factorisation with partial pivoting.
#[derive(Debug, Clone)]
pub struct HpLu {
    lu: HpMatrix,
    perm: Vec<usize>,
}

impl HpLu {
    pub fn new(ctx: &HpContext, a: &HpMatrix) -> Result<Self> {
        if a.rows != a.cols {
            return Err(SrlwError::invalid("LU needs a square matrix"));
        }
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut piv = k;
            let mut best = lu.get(k, k).abs();
            for i in k + 1..n {
                let v = lu.get(i, k).abs();
                if v.cmp(&best).map_or(false, |c| c > 0) {
                    best = v;
                    piv = i;
                }
            }
            if best.is_zero() {
                return Err(SrlwError::IllConditioned { cond: f64::INFINITY });
            }
            if piv != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, piv * n + j);
                }
                perm.swap(k, piv);
            }
            let pivot = lu.get(k, k).clone();
            for i in k + 1..n {
                let f = ctx.div(lu.get(i, k), &pivot);
                if !f.is_zero() {
                    for j in k + 1..n {
                        let v = ctx.sub(lu.get(i, j), &ctx.mul(&f, lu.get(k, j)));
                        lu.set(i, j, v);
                    }
                }
                lu.set(i, k, f);
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, ctx: &HpContext, b: &[Hf]) -> Vec<Hf> {
        let n = self.lu.rows;
        let mut y: Vec<Hf> = self.perm.iter().map(|&p| b[p].clone()).collect();
        for i in 0..n {
            let mut acc = y[i].clone();
            for j in 0..i {
                acc = ctx.sub(&acc, &ctx.mul(self.lu.get(i, j), &y[j]));
            }
            y[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = y[i].clone();
            for j in i + 1..n {
                acc = ctx.sub(&acc, &ctx.mul(self.lu.get(i, j), &y[j]));
            }
            y[i] = ctx.div(&acc, self.lu.get(i, i));
        }
        y
    }

    pub fn inverse(&self, ctx: &HpContext) -> HpMatrix {
        let n = self.lu.rows;
        let mut inv = HpMatrix::zeros(ctx, n, n);
        for j in 0..n {
            let mut e = vec![ctx.zero(); n];
            e[j] = ctx.int(1);
            let col = self.solve(ctx, &e);
            for (i, v) in col.into_iter().enumerate() {
                inv.set(i, j, v);
            }
        }
        inv
    }
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration with Rayleigh quotients; stops at relative change `1e-12`.
pub fn largest_eigenvalue(ctx: &HpContext, a: &HpMatrix, max_iter: usize) -> Hf {
    let n = a.rows;
    let mut x: Vec<Hf> = (0..n).map(|i| ctx.f(1.0 + 0.01 * i as f64)).collect();
    let mut prev = 0.0f64;
    let mut rq = ctx.zero();
    for _ in 0..max_iter {
        let nx = ctx.norm2(&x);
        if nx.is_zero() {
            return ctx.zero();
        }
        for v in &mut x {
            *v = ctx.div(v, &nx);
        }
        let y = a.matvec(ctx, &x);
        rq = ctx.dot(&x, &y);
        let cur = to_f64(&rq);
        x = y;
        if (cur - prev).abs() <= 1e-12 * cur.abs() {
            break;
        }
        prev = cur;
    }
    rq
}

/// 2-norm condition number `λ_max / λ_min` of a symmetric positive definite
/// matrix, with `λ_min` taken as the reciprocal of the largest eigenvalue of
/// the exact inverse.
pub fn spd_condition(ctx: &HpContext, a: &HpMatrix) -> Result<f64> {
    let lu = HpLu::new(ctx, a)?;
    let inv = lu.inverse(ctx);
    let hi = largest_eigenvalue(ctx, a, 2000);
    let lo_inv = largest_eigenvalue(ctx, &inv, 2000);
    Ok(to_f64(&ctx.mul(&hi, &lo_inv)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_to_f64() {
        let ctx = HpContext::new(256).unwrap();
        for x in [1.0, -3.25, 1e-300, 7.0e200, 0.1, -0.0] {
            assert_eq!(to_f64(&ctx.f(x)), x);
        }
        let third = ctx.div(&ctx.int(1), &ctx.int(3));
        assert_eq!(to_f64(&third), 1.0 / 3.0);
    }

    #[test]
    fn pi_and_trig() {
        let mut ctx = HpContext::new(256).unwrap();
        let pi = ctx.pi();
        assert_eq!(to_f64(&pi), std::f64::consts::PI);
        let half = ctx.div(&pi, &ctx.int(6));
        assert!((to_f64(&ctx.sin(&half)) - 0.5).abs() < 1e-16);
    }

    #[test]
    fn hilbert_matrix_solve_beyond_double_precision() {
        // Hilbert matrix of order 20 has condition ~1e28.
        let ctx = HpContext::new(384).unwrap();
        let n = 20;
        let mut h = HpMatrix::zeros(&ctx, n, n);
        for i in 0..n {
            for j in 0..n {
                h.set(i, j, ctx.div(&ctx.int(1), &ctx.int((i + j + 1) as i64)));
            }
        }
        let ones = vec![ctx.int(1); n];
        let b = h.matvec(&ctx, &ones);
        let x = HpLu::new(&ctx, &h).unwrap().solve(&ctx, &b);
        for v in &x {
            assert!((to_f64(v) - 1.0).abs() < 1e-40_f64.max(1e-15));
        }
        let cond = spd_condition(&ctx, &h).unwrap();
        assert!(cond > 1e27 && cond < 1e29, "{cond}");
    }

    #[test]
    fn singular_matrix_is_reported() {
        let ctx = HpContext::new(128).unwrap();
        let a = HpMatrix::zeros(&ctx, 2, 2);
        assert!(HpLu::new(&ctx, &a).is_err());
    }
}

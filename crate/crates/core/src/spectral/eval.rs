//! Off-grid evaluation of band-limited fields.

use num_complex::Complex64;

use super::{side, SpectralField};

/// Evaluates a bundle of fields at arbitrary points.
///
/// Uses the reality condition to sum only over the half space `k₁ ≥ 0`, and
/// factorizes the phase `e^{ik·x}` across axes.
#[derive(Clone, Debug)]
pub struct PointEvaluator {
    dim: usize,
    cutoff: usize,
    channels: usize,
    tail: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl PointEvaluator {
    /// Packs every component of every field, in order, into output channels.
    pub fn new(fields: &[&SpectralField]) -> Self {
        let first = fields.first().expect("at least one field");
        let dim = first.dim();
        let cutoff = first.cutoff();
        let s = side(cutoff);
        let tail = s.pow(dim as u32 - 1);
        let half = (cutoff + 1) * tail;
        let channels: usize = fields.iter().map(|f| f.components()).sum();
        let mut re = Vec::with_capacity(channels * half);
        let mut im = Vec::with_capacity(channels * half);
        for f in fields {
            assert!(f.dim() == dim && f.cutoff() == cutoff, "fields must share a cube");
            for c in 0..f.components() {
                let b = &f.block(c)[cutoff * tail..];
                for (row, chunk) in b.chunks(tail).take(cutoff + 1).enumerate() {
                    let w = if row == 0 { 1.0 } else { 2.0 };
                    re.extend(chunk.iter().map(|z| w * z.re));
                    im.extend(chunk.iter().map(|z| w * z.im));
                }
            }
        }
        Self { dim, cutoff, channels, tail, re, im }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Writes all channels at point `x` into `out`.
    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        let k = self.cutoff;
        let s = side(k);
        let powers = |t: f64| -> Vec<Complex64> {
            let base = Complex64::new(t.cos(), t.sin());
            let mut p = Vec::with_capacity(k + 1);
            let mut z = Complex64::new(1.0, 0.0);
            for _ in 0..=k {
                p.push(z);
                z *= base;
            }
            p
        };
        let e1 = powers(x[0]);
        let mut tr = vec![1.0; self.tail];
        let mut ti = vec![0.0; self.tail];
        if self.dim >= 2 {
            let full = |t: f64| -> Vec<Complex64> {
                let p = powers(t);
                let mut v = Vec::with_capacity(s);
                for m in (1..=k).rev() {
                    v.push(p[m].conj());
                }
                v.extend_from_slice(&p);
                v
            };
            let e2 = full(x[1]);
            if self.dim == 2 {
                for (j, z) in e2.iter().enumerate() {
                    tr[j] = z.re;
                    ti[j] = z.im;
                }
            } else {
                let e3 = full(x[2]);
                for (a, za) in e2.iter().enumerate() {
                    for (b, zb) in e3.iter().enumerate() {
                        let z = za * zb;
                        tr[a * s + b] = z.re;
                        ti[a * s + b] = z.im;
                    }
                }
            }
        }
        let half = (k + 1) * self.tail;
        for ch in 0..self.channels {
            let cre = &self.re[ch * half..(ch + 1) * half];
            let cim = &self.im[ch * half..(ch + 1) * half];
            let mut acc = 0.0;
            for (row, e) in e1.iter().enumerate() {
                let r = &cre[row * self.tail..(row + 1) * self.tail];
                let i = &cim[row * self.tail..(row + 1) * self.tail];
                let mut sr = 0.0;
                let mut si = 0.0;
                for j in 0..self.tail {
                    sr += r[j] * tr[j] - i[j] * ti[j];
                    si += r[j] * ti[j] + i[j] * tr[j];
                }
                acc += e.re * sr - e.im * si;
            }
            out[ch] = acc;
        }
    }
}

/// Values of `f` at points given with stride `d`, point-major with `m` values each.
pub fn evaluate_at(f: &SpectralField, points: &[f64]) -> Vec<f64> {
    let d = f.dim();
    let ev = PointEvaluator::new(&[f]);
    let m = f.components();
    let mut out = vec![0.0; points.len() / d * m];
    for (p, o) in points.chunks(d).zip(out.chunks_mut(m)) {
        ev.eval(p, o);
    }
    out
}

/// Reference evaluation by direct summation over every mode.
pub fn evaluate_at_direct(f: &SpectralField, points: &[f64]) -> Vec<f64> {
    let d = f.dim();
    let m = f.components();
    let mut out = Vec::with_capacity(points.len() / d * m);
    for p in points.chunks(d) {
        for c in 0..m {
            let mut acc = 0.0;
            for (i, z) in f.block(c).iter().enumerate() {
                let k = f.mode(i);
                let phase: f64 = (0..d).map(|a| k[a] as f64 * p[a]).sum();
                let (sn, cs) = phase.sin_cos();
                acc += z.re * cs - z.im * sn;
            }
            out.push(acc);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(dim: usize, cutoff: usize) -> SpectralField {
        let mut f = SpectralField::zeros(dim, cutoff, 2);
        let mut seed = 7u64;
        for c in 0..2 {
            for idx in 0..f.modes() {
                seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let a = ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
                let k = f.mode(idx);
                f.add_pair(c, &k[..dim], Complex64::new(a, 0.5 * a * a));
            }
        }
        f
    }

    #[test]
    fn fast_matches_direct() {
        for dim in 1..=3 {
            let f = sample(dim, 3);
            let pts: Vec<f64> = (0..7 * dim).map(|i| 0.37 * i as f64 + 0.11).collect();
            let a = evaluate_at(&f, &pts);
            let b = evaluate_at_direct(&f, &pts);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12, "{dim}: {x} vs {y}");
            }
        }
    }
}

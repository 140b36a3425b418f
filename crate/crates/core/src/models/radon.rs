use std::f64::consts::{PI, SQRT_2};

use super::ObservationModel;
use crate::error::{ensure_positive, Error, Result};
use crate::kernels::ShearletAtom;

/// Observations of a Radon transform on an `n x m` grid of `(r, theta)`.
/// `y` is row-major with `y[i * m + j]` at `(r[i], theta[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadonDataset {
    r: Vec<f64>,
    theta: Vec<f64>,
    y: Vec<f64>,
    sigma2: f64,
}

impl RadonDataset {
    pub fn new(r: Vec<f64>, theta: Vec<f64>, y: Vec<f64>, sigma2: f64) -> Result<Self> {
        ensure_positive("noise variance sigma2", sigma2)?;
        if r.is_empty() || theta.is_empty() || y.len() != r.len() * theta.len() {
            return Err(Error::param(format!(
                "Radon grid {}x{} does not match {} observations",
                r.len(),
                theta.len(),
                y.len()
            )));
        }
        let tol = 1e-12;
        if let Some(v) = r.iter().find(|v| !(v.abs() <= SQRT_2 + tol)) {
            return Err(Error::param(format!("r = {v} outside [-sqrt 2, sqrt 2]")));
        }
        if let Some(v) = theta.iter().find(|v| !(**v >= -tol && **v <= PI + tol)) {
            return Err(Error::param(format!("theta = {v} outside [0, pi]")));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("Radon observations must be finite"));
        }
        Ok(Self { r, theta, y, sigma2 })
    }

    /// Noise-free data `f(r_i, theta_j)` on the grid.
    pub fn from_fn(r: Vec<f64>, theta: Vec<f64>, sigma2: f64, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let y = r
            .iter()
            .flat_map(|&ri| theta.iter().map(move |&tj| (ri, tj)))
            .map(|(ri, tj)| f(ri, tj))
            .collect();
        Self::new(r, theta, y, sigma2)
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn with_sigma2(mut self, sigma2: f64) -> Result<Self> {
        ensure_positive("noise variance sigma2", sigma2)?;
        self.sigma2 = sigma2;
        Ok(self)
    }

    pub fn y_mut(&mut self) -> &mut [f64] {
        &mut self.y
    }
}

/// `n` equally spaced radii in `[-sqrt 2, sqrt 2]` and `m` equally spaced
/// angles in `[0, pi]`, endpoints included. A single point sits at the start
/// of its interval.
pub fn radon_grid(n: usize, m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 || m == 0 {
        return Err(Error::param("Radon grid sizes must be at least 1"));
    }
    Ok((linspace(-SQRT_2, SQRT_2, n), linspace(0.0, PI, m)))
}

fn linspace(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![lo];
    }
    let h = (hi - lo) / (k - 1) as f64;
    (0..k)
        .map(|i| if i + 1 == k { hi } else { lo + h * i as f64 })
        .collect()
}

/// Line integral of `g(A^{-1}(x - mu))` (Gaussian mother) along
/// `x(t) = r (cos theta, sin theta) + t (-sin theta, cos theta)`.
pub fn radon_gaussian(atom: &ShearletAtom, r: f64, theta: f64) -> Result<f64> {
    let b = atom.shear.inverse()?;
    Ok(radon_with_inverse(&b, atom.mu, r, theta))
}

#[inline]
fn radon_with_inverse(b: &[[f64; 2]; 2], mu: [f64; 2], r: f64, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let w0 = r * c - mu[0];
    let w1 = r * s - mu[1];
    let w = [b[0][0] * w0 + b[0][1] * w1, b[1][0] * w0 + b[1][1] * w1];
    let v = [b[0][0] * -s + b[0][1] * c, b[1][0] * -s + b[1][1] * c];
    let nv = (v[0] * v[0] + v[1] * v[1]).sqrt();
    // in 2-D the component of w orthogonal to v is the cross product over |v|
    let perp = (w[0] * v[1] - w[1] * v[0]) / nv;
    (2.0 * PI).sqrt() / nv * (-0.5 * perp * perp).exp()
}

/// CT model: Radon-domain observations of a mixture of anisotropic Gaussians
/// with fixed noise variance.
#[derive(Debug, Clone)]
pub struct RadonModel {
    pub data: RadonDataset,
}

impl RadonModel {
    pub fn new(data: RadonDataset) -> Self {
        Self { data }
    }
}

impl ObservationModel<ShearletAtom> for RadonModel {
    fn observations(&self) -> &[f64] {
        self.data.y()
    }

    fn response(&self, atom: &ShearletAtom, out: &mut [f64]) {
        let Ok(b) = atom.shear.inverse() else {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        };
        let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
        let bmu = [
            b[0][0] * atom.mu[0] + b[0][1] * atom.mu[1],
            b[1][0] * atom.mu[0] + b[1][1] * atom.mu[1],
        ];
        let m = self.data.theta.len();
        // w(r) = r B e_theta - B mu, and (B e_theta) x (B u) = det B
        let per_angle: Vec<(f64, f64, f64)> = self
            .data
            .theta
            .iter()
            .map(|&t| {
                let (s, c) = t.sin_cos();
                let v = [b[0][0] * -s + b[0][1] * c, b[1][0] * -s + b[1][1] * c];
                let nv = (v[0] * v[0] + v[1] * v[1]).sqrt();
                let slope = det / nv;
                let offset = (bmu[0] * v[1] - bmu[1] * v[0]) / nv;
                ((2.0 * PI).sqrt() / nv, slope, offset)
            })
            .collect();
        for (row, &r) in out.chunks_exact_mut(m).zip(&self.data.r) {
            for (o, &(amp, slope, offset)) in row.iter_mut().zip(&per_angle) {
                let z = r * slope - offset;
                *o = amp * (-0.5 * z * z).exp();
            }
        }
    }

    fn atom_is_valid(&self, atom: &ShearletAtom) -> bool {
        atom.shear.inverse().is_ok() && atom.mu.iter().all(|v| v.is_finite())
    }

    fn fixed_sigma2(&self) -> Option<f64> {
        Some(self.data.sigma2())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{ShearletGaussian, ShearletMatrix};
    use crate::SimRng;
    use rand::Rng;

    fn atom(mu: [f64; 2], a: f64, s: f64) -> ShearletAtom {
        ShearletAtom {
            mu,
            shear: ShearletMatrix { a, s },
        }
    }

    /// Adaptive Simpson on the kernel along the line, truncated where the
    /// integrand is far below double precision.
    fn quadrature(at: &ShearletAtom, r: f64, theta: f64) -> f64 {
        let k = ShearletGaussian;
        let (s, c) = theta.sin_cos();
        let f = |t: f64| k.eval_at(at, [r * c - t * s, r * s + t * c]);
        // foot of the line closest to mu, and a generous half-length
        let t0 = -at.mu[0] * s + at.mu[1] * c;
        let half = 40.0 * (at.shear.a + at.shear.s.abs() * at.shear.a.sqrt() + 1.0);
        // panels no wider than the narrowest kernel cross-section
        let m = at.shear.matrix();
        let fro2: f64 = m.iter().flatten().map(|v| v * v).sum();
        let det = m[0][0] * m[1][1];
        let smin = ((fro2 - (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt()) / 2.0).sqrt();
        let panels = ((2.0 * half / (0.5 * smin)).ceil() as usize).max(64);
        adaptive_simpson(&f, t0 - half, t0 + half, panels, 1e-14, 50)
    }

    fn adaptive_simpson(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        panels: usize,
        tol: f64,
        depth: u32,
    ) -> f64 {
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
            let m = 0.5 * (a + b);
            let fm = f(m);
            (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
        }
        #[allow(clippy::too_many_arguments)]
        fn rec(
            f: &dyn Fn(f64) -> f64,
            a: f64,
            fa: f64,
            b: f64,
            fb: f64,
            m: f64,
            fm: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let (lm, flm, left) = simpson(f, a, fa, m, fm);
            let (rm, frm, right) = simpson(f, m, fm, b, fb);
            let delta = left + right - whole;
            if depth == 0 || delta.abs() <= 15.0 * tol {
                return left + right + delta / 15.0;
            }
            rec(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
                + rec(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
        }
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let lo = a + h * k as f64;
                let hi = lo + h;
                let (flo, fhi) = (f(lo), f(hi));
                let (m, fm, whole) = simpson(f, lo, flo, hi, fhi);
                rec(f, lo, flo, hi, fhi, m, fm, whole, tol / panels as f64, depth)
            })
            .sum()
    }

    #[test]
    fn isotropic_examples() {
        let at = atom([0.0, 0.0], 1.0, 0.0);
        let root = (2.0 * PI).sqrt();
        for th in [0.0, 0.3, 1.2, PI] {
            assert!((radon_gaussian(&at, 0.0, th).unwrap() - root).abs() < 1e-14);
            let want = root * (-0.5f64).exp();
            assert!((radon_gaussian(&at, 1.0, th).unwrap() - want).abs() < 1e-14);
        }
        assert!((quadrature(&at, 0.0, 0.7) - root).abs() < 1e-10);
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let mut rng = SimRng::seed_from(11);
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let at = atom(
                [rng.random_range(-0.8..0.8), rng.random_range(-0.8..0.8)],
                rng.random_range(0.02..1.5),
                rng.random_range(-1.0..1.0),
            );
            let r = rng.random_range(-SQRT_2..SQRT_2);
            let th = rng.random_range(0.0..PI);
            let exact = radon_gaussian(&at, r, th).unwrap();
            if exact < 1e-200 {
                continue;
            }
            let q = quadrature(&at, r, th);
            let rel = ((exact - q) / exact).abs();
            worst = worst.max(rel);
        }
        assert!(worst < 1e-8, "worst relative error {worst}");
    }

    #[test]
    fn degenerate_dilation_is_error() {
        assert!(matches!(
            radon_gaussian(&atom([0.0, 0.0], 0.0, 0.0), 0.0, 0.0),
            Err(Error::Numeric(_))
        ));
        assert!(radon_gaussian(&atom([0.0, 0.0], -1.0, 0.0), 0.0, 0.0).is_err());
    }

    #[test]
    fn grid_conventions() {
        let (r, t) = radon_grid(2, 1).unwrap();
        assert_eq!(r, vec![-SQRT_2, SQRT_2]);
        assert_eq!(t, vec![0.0]);
        let (r, t) = radon_grid(256, 128).unwrap();
        assert_eq!(r.len() * t.len(), 32768);
        assert_eq!(*t.last().unwrap(), PI);
        assert!(radon_grid(0, 3).is_err());
    }

    #[test]
    fn model_response_matches_pointwise_closed_form() {
        let (r, t) = radon_grid(9, 7).unwrap();
        let data = RadonDataset::from_fn(r.clone(), t.clone(), 0.1, |_, _| 0.0).unwrap();
        let model = RadonModel::new(data);
        let at = atom([0.2, -0.3], 0.4, 0.7);
        let mut out = vec![0.0; 63];
        model.response(&at, &mut out);
        for (i, &ri) in r.iter().enumerate() {
            for (j, &tj) in t.iter().enumerate() {
                let want = radon_gaussian(&at, ri, tj).unwrap();
                assert!((out[i * 7 + j] - want).abs() < 1e-13 * want.max(1.0));
            }
        }
    }

    #[test]
    fn linearity_and_shift() {
        let a1 = atom([0.1, 0.2], 0.3, 0.5);
        let a2 = atom([-0.4, 0.0], 0.8, -0.2);
        let (w1, w2) = (0.7, -1.3);
        let f = |at: &ShearletAtom, r: f64, t: f64| radon_gaussian(at, r, t).unwrap();
        for (r, th) in [(0.0, 0.0), (0.5, 1.0), (-1.0, 2.5)] {
            let quad_sum = w1 * quadrature(&a1, r, th) + w2 * quadrature(&a2, r, th);
            let closed = w1 * f(&a1, r, th) + w2 * f(&a2, r, th);
            assert!((quad_sum - closed).abs() < 1e-12 * closed.abs().max(1.0));
        }
        let delta = [0.15, -0.25];
        let moved = atom([a1.mu[0] + delta[0], a1.mu[1] + delta[1]], 0.3, 0.5);
        for th in [0.0f64, 0.9, 2.2] {
            let proj = delta[0] * th.cos() + delta[1] * th.sin();
            for r in [-0.5, 0.0, 0.3] {
                assert!((f(&moved, r + proj, th) - f(&a1, r, th)).abs() < 1e-12);
            }
        }
    }
}

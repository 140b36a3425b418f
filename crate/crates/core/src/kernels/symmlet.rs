//! Symmlet-8 mother wavelet (least-asymmetric Daubechies, 8 vanishing
//! moments) tabulated on a dyadic grid.
//!
//! The scaling function is first solved exactly at the integers from the
//! refinement equation `phi(x) = sqrt(2) sum_k h_k phi(2x - k)`, then refined
//! level by level down to step `2^-(LEVELS+1)`. The wavelet
//! `psi(x) = sqrt(2) sum_k g_k phi(2x - k)`, `g_k = (-1)^k h_{15-k}`, is stored
//! at step `2^-LEVELS` and evaluated by linear interpolation.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

/// Refinement depth of the lookup table (grid step `2^-10`).
pub const LEVELS: u32 = 10;

/// Low-pass reconstruction filter of Symmlet-8.
pub const SYM8_LOWPASS: [f64; 16] = [
    0.001_889_950_332_759_460_9,
    -0.000_302_920_514_721_366_8,
    -0.014_952_258_337_048_23,
    0.003_808_752_013_890_615,
    0.049_137_179_673_607_506,
    -0.027_219_029_917_056_003,
    -0.051_945_838_107_709_04,
    0.364_441_894_835_331_4,
    0.777_185_751_700_523_5,
    0.481_359_651_258_372_2,
    -0.061_273_359_067_658_524,
    -0.143_294_238_350_809_7,
    0.007_607_487_324_917_605,
    0.031_695_087_811_492_98,
    -0.000_542_132_331_791_148_1,
    -0.003_382_415_951_006_125_6,
];

const TAPS: usize = SYM8_LOWPASS.len();
/// Support length of both phi and psi in the natural `[0, 15]` frame.
const SUPPORT: f64 = (TAPS - 1) as f64;
/// psi is re-centred so that its support is `[-7.5, 7.5]`.
pub const CENTER_SHIFT: f64 = SUPPORT / 2.0;

#[derive(Debug)]
pub struct Symmlet8Table {
    step: f64,
    psi: Vec<f64>,
    sup_abs: f64,
}

impl Symmlet8Table {
    fn build() -> Self {
        let fine = LEVELS + 1;
        let phi = scaling_function(fine);
        let fine_per_unit = 1usize << fine;
        let per_unit = 1usize << LEVELS;
        let n = (TAPS - 1) * per_unit + 1;
        let sqrt2 = std::f64::consts::SQRT_2;
        let highpass: Vec<f64> = (0..TAPS)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * SYM8_LOWPASS[TAPS - 1 - k]
            })
            .collect();
        let psi: Vec<f64> = (0..n)
            .map(|m| {
                let mut acc = 0.0;
                for (k, g) in highpass.iter().enumerate() {
                    // (2x - k) * fine_per_unit = 4m - k * fine_per_unit
                    let idx = 4 * m as isize - (k * fine_per_unit) as isize;
                    if idx >= 0 && (idx as usize) < phi.len() {
                        acc += g * phi[idx as usize];
                    }
                }
                sqrt2 * acc
            })
            .collect();
        let sup_abs = psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Self {
            step: 1.0 / per_unit as f64,
            psi,
            sup_abs,
        }
    }

    pub fn get() -> &'static Symmlet8Table {
        static TABLE: OnceLock<Symmlet8Table> = OnceLock::new();
        TABLE.get_or_init(Symmlet8Table::build)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Nodes of the table in the centred frame, paired with psi values.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.psi
            .iter()
            .enumerate()
            .map(|(i, v)| (i as f64 * self.step - CENTER_SHIFT, *v))
    }

    pub fn support(&self) -> (f64, f64) {
        (-CENTER_SHIFT, CENTER_SHIFT)
    }

    pub fn sup_abs(&self) -> f64 {
        self.sup_abs
    }

    /// psi at `x` in the centred frame.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let t = (x + CENTER_SHIFT) / self.step;
        if !(t >= 0.0) || t >= (self.psi.len() - 1) as f64 {
            return 0.0;
        }
        let i = t as usize;
        let frac = t - i as f64;
        self.psi[i] + frac * (self.psi[i + 1] - self.psi[i])
    }
}

/// Scaling function at the dyadic points `m / 2^level`, `m = 0..=15*2^level`.
fn scaling_function(level: u32) -> Vec<f64> {
    let sqrt2 = std::f64::consts::SQRT_2;
    // integer values: phi(j) = sqrt2 sum_k h_{2j-k} phi(k), normalised by
    // sum_j phi(j) = 1
    let n = TAPS;
    let mut system = DMatrix::<f64>::zeros(n + 1, n);
    for j in 0..n {
        for k in 0..n {
            let idx = 2 * j as isize - k as isize;
            if (0..n as isize).contains(&idx) {
                system[(j, k)] = sqrt2 * SYM8_LOWPASS[idx as usize];
            }
        }
        system[(j, j)] -= 1.0;
    }
    for k in 0..n {
        system[(n, k)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(n + 1);
    rhs[n] = 1.0;
    let integers = system
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .expect("refinement system is solvable");

    let mut values: Vec<f64> = integers.iter().copied().collect();
    values[0] = 0.0;
    values[n - 1] = 0.0;
    for l in 1..=level {
        let per_unit = 1usize << l;
        let coarse_per_unit = per_unit / 2;
        let len = (n - 1) * per_unit + 1;
        let mut next = vec![0.0; len];
        for (m, slot) in next.iter_mut().enumerate() {
            if m % 2 == 0 {
                *slot = values[m / 2];
                continue;
            }
            // phi(m/2^l) = sqrt2 sum_k h_k phi(2m/2^l - k); on the coarse grid
            // 2m/2^l - k has index m - k*coarse_per_unit
            let mut acc = 0.0;
            for (k, h) in SYM8_LOWPASS.iter().enumerate() {
                let idx = m as isize - (k * coarse_per_unit) as isize;
                if idx >= 0 && (idx as usize) < values.len() {
                    acc += h * values[idx as usize];
                }
            }
            *slot = sqrt2 * acc;
        }
        values = next;
    }
    values
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowpass_sums_to_sqrt2() {
        let s: f64 = SYM8_LOWPASS.iter().sum();
        assert!((s - std::f64::consts::SQRT_2).abs() < 1e-12);
        let e: f64 = SYM8_LOWPASS.iter().map(|h| h * h).sum();
        assert!((e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scaling_function_partition_of_unity() {
        // sum_k phi(x - k) = 1 at dyadic x
        let phi = scaling_function(4);
        let per_unit = 16;
        for off in 0..per_unit {
            let s: f64 = (0..TAPS)
                .filter_map(|k| phi.get(off + k * per_unit))
                .sum();
            assert!((s - 1.0).abs() < 1e-10, "offset {off}: {s}");
        }
    }

    #[test]
    fn vanishing_and_normalised() {
        let t = Symmlet8Table::get();
        let h = t.step();
        let trap = |f: &dyn Fn(f64) -> f64| {
            let vals: Vec<f64> = t.nodes().map(|(x, v)| f(x) * v).collect();
            let inner: f64 = vals[1..vals.len() - 1].iter().sum();
            h * (inner + 0.5 * (vals[0] + vals[vals.len() - 1]))
        };
        assert!(trap(&|_| 1.0).abs() < 1e-3);
        let sq: f64 = {
            let vals: Vec<f64> = t.nodes().map(|(_, v)| v * v).collect();
            h * vals.iter().sum::<f64>()
        };
        assert!((sq - 1.0).abs() < 1e-3);
    }
}

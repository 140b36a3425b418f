use crate::error::{Error, Result};

/// Ellipse with centre `(x0, y0)`, semi-axes `a` (along its rotated x axis)
/// and `b`, rotation `angle_deg` counter-clockwise, additive intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub x0: f64,
    pub y0: f64,
    pub a: f64,
    pub b: f64,
    pub angle_deg: f64,
    pub intensity: f64,
}

const fn e(x0: f64, y0: f64, a: f64, b: f64, angle_deg: f64, intensity: f64) -> Ellipse {
    Ellipse {
        x0,
        y0,
        a,
        b,
        angle_deg,
        intensity,
    }
}

/// The ten ellipses of the Shepp-Logan head phantom with the original
/// intensities; the skull takes value 2 and the brain 1.02.
pub const SHEPP_LOGAN: [Ellipse; 10] = [
    e(0.0, 0.0, 0.69, 0.92, 0.0, 2.0),
    e(0.0, -0.0184, 0.6624, 0.874, 0.0, -0.98),
    e(0.22, 0.0, 0.11, 0.31, -18.0, -0.02),
    e(-0.22, 0.0, 0.16, 0.41, 18.0, -0.02),
    e(0.0, 0.35, 0.21, 0.25, 0.0, 0.01),
    e(0.0, 0.1, 0.046, 0.046, 0.0, 0.01),
    e(0.0, -0.1, 0.046, 0.046, 0.0, 0.01),
    e(-0.08, -0.605, 0.046, 0.023, 0.0, 0.01),
    e(0.0, -0.605, 0.023, 0.023, 0.0, 0.01),
    e(0.06, -0.605, 0.023, 0.046, 0.0, 0.01),
];

impl Ellipse {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (s, c) = self.angle_deg.to_radians().sin_cos();
        let dx = x - self.x0;
        let dy = y - self.y0;
        let u = (dx * c + dy * s) / self.a;
        let v = (-dx * s + dy * c) / self.b;
        u * u + v * v <= 1.0
    }

    /// Intensity times the chord length of the line `{x : <x, e_theta> = r}`.
    pub fn radon(&self, r: f64, theta: f64) -> f64 {
        let (st, ct) = theta.sin_cos();
        let rel = theta - self.angle_deg.to_radians();
        let a2 = (self.a * rel.cos()).powi(2) + (self.b * rel.sin()).powi(2);
        let s = r - (self.x0 * ct + self.y0 * st);
        if s * s >= a2 {
            0.0
        } else {
            2.0 * self.intensity * self.a * self.b * (a2 - s * s).sqrt() / a2
        }
    }
}

/// Phantom value at a point of `[-1, 1]^2`.
pub fn phantom_value(x: f64, y: f64) -> f64 {
    SHEPP_LOGAN
        .iter()
        .filter(|el| el.contains(x, y))
        .map(|el| el.intensity)
        .sum()
}

/// Exact Radon transform of the phantom.
pub fn phantom_radon(r: f64, theta: f64) -> f64 {
    SHEPP_LOGAN.iter().map(|el| el.radon(r, theta)).sum()
}

/// Square image on `[-1, 1]^2`, row-major, row 0 at the top (`y` near 1).
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    resolution: usize,
    values: Vec<f64>,
}

impl Image {
    pub fn new(resolution: usize, values: Vec<f64>) -> Result<Self> {
        if resolution == 0 || values.len() != resolution * resolution {
            return Err(Error::param(format!(
                "image of resolution {resolution} needs {} values, got {}",
                resolution * resolution,
                values.len()
            )));
        }
        Ok(Self { resolution, values })
    }

    /// Samples `f` at every pixel centre.
    pub fn from_fn(resolution: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = (0..resolution * resolution)
            .map(|k| {
                let (x, y) = pixel_center(resolution, k / resolution, k % resolution);
                f(x, y)
            })
            .collect();
        Self::new(resolution, values)
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.resolution + col]
    }

    pub fn pixel_center(&self, row: usize, col: usize) -> (f64, f64) {
        pixel_center(self.resolution, row, col)
    }

    /// Root mean squared difference to another image of the same size.
    pub fn rmse(&self, other: &Image) -> Result<f64> {
        if other.resolution != self.resolution {
            return Err(Error::param("image resolutions differ"));
        }
        let ss: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok((ss / self.values.len() as f64).sqrt())
    }
}

fn pixel_center(resolution: usize, row: usize, col: usize) -> (f64, f64) {
    let h = 2.0 / resolution as f64;
    (-1.0 + (col as f64 + 0.5) * h, 1.0 - (row as f64 + 0.5) * h)
}

/// Rasterized Shepp-Logan phantom sampled at pixel centres.
pub fn shepp_logan(resolution: usize) -> Result<Image> {
    if resolution < 8 {
        return Err(Error::param(format!(
            "phantom resolution must be at least 8, got {resolution}"
        )));
    }
    Image::from_fn(resolution, phantom_value)
}

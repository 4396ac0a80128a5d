//! Euclidean constants and reproducible random sampling on spheres and balls.
//!
//! Ball volumes go through a Lanczos Γ-function so that every downstream
//! threshold sees the same value on every platform. Sampling uses a
//! counter-based ChaCha stream keyed by `(seed, stream_id)`.

use std::f64::consts::PI;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point (or vector) of the ambient space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Domain("point must have dimension >= 1".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("point has a non-finite coordinate".into()));
        }
        Ok(Point(coords))
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn scaled(&self, s: f64) -> Point {
        Point(self.0.iter().map(|c| c * s).collect())
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Point(v.to_vec())
    }
}

impl From<[f64; 3]> for Point {
    fn from(v: [f64; 3]) -> Self {
        Point(v.to_vec())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Volume and boundary area of the unit ball in a fixed dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallConstants {
    pub dim: usize,
    pub ball_volume: f64,
    pub sphere_area: f64,
}

impl BallConstants {
    pub fn new(dim: usize) -> Result<Self> {
        let ball_volume = ball_volume(dim)?;
        Ok(BallConstants {
            dim,
            ball_volume,
            sphere_area: dim as f64 * ball_volume,
        })
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(x) for real x, Lanczos approximation (g = 7, 9 terms) with reflection
/// for x < 1/2.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut a = LANCZOS_COEF[0];
        let t = x + LANCZOS_G + 0.5;
        for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

/// |𝔹ⁿ| = π^{n/2} / Γ(n/2 + 1).
pub fn ball_volume(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("ball dimension must be >= 1".into()));
    }
    let half = n as f64 / 2.0;
    Ok(PI.powf(half) / gamma(half + 1.0))
}

/// |∂𝔹ⁿ| = |𝕊ⁿ⁻¹| = n |𝔹ⁿ|.
pub fn sphere_area(n: usize) -> Result<f64> {
    Ok(n as f64 * ball_volume(n)?)
}

/// The dimensional constant b_{n,m}: 1 for codimension m ≤ 2, otherwise
/// ((n+m)|𝔹^{n+m}| / (m |𝔹ⁿ| |𝔹ᵐ|))^{1/n}.
pub fn brendle_constant(n: usize, m: usize) -> Result<f64> {
    if n == 0 || m == 0 {
        return Err(Error::Domain(format!(
            "brendle_constant needs n, m >= 1 (got n = {n}, m = {m})"
        )));
    }
    if m <= 2 {
        return Ok(1.0);
    }
    let num = (n + m) as f64 * ball_volume(n + m)?;
    let den = m as f64 * ball_volume(n)? * ball_volume(m)?;
    Ok((num / den).powf(1.0 / n as f64))
}

/// Deterministic sample source keyed by `(seed, stream_id)`.
///
/// The counter is the number of 32-bit words consumed, so a stream can be
/// resumed or inspected exactly.
#[derive(Debug, Clone)]
pub struct SampleStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl SampleStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        SampleStream {
            seed,
            stream_id,
            rng,
        }
    }

    /// An independent sub-stream; the parent is not advanced.
    pub fn fork(&self, child: u64) -> SampleStream {
        let id = self
            .stream_id
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(child.wrapping_add(1));
        SampleStream::with_stream(self.seed, id)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn counter(&self) -> u128 {
        self.rng.get_word_pos()
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    /// Uniform on the unit sphere 𝕊^{dim-1}, as a raw vector.
    pub fn unit_vector(&mut self, dim: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..dim).map(|_| self.normal()).collect();
            let r = norm(&v);
            if r > 1e-300 {
                return v.into_iter().map(|c| c / r).collect();
            }
        }
    }

    /// Uniform in the unit ball 𝔹^{dim}, as a raw vector.
    pub fn ball_vector(&mut self, dim: usize) -> Vec<f64> {
        let r = self.uniform().powf(1.0 / dim as f64);
        self.unit_vector(dim).into_iter().map(|c| c * r).collect()
    }

    /// Uniform in the shell {inner < |ξ| < 1} of the unit ball.
    pub fn shell_vector(&mut self, dim: usize, inner: f64) -> Vec<f64> {
        let d = dim as f64;
        let lo = inner.powf(d);
        let r = (lo + self.uniform() * (1.0 - lo)).powf(1.0 / d);
        self.unit_vector(dim).into_iter().map(|c| c * r).collect()
    }
}

/// A uniform draw on the sphere of the given radius.
pub fn sample_sphere(dim: usize, radius: f64, stream: &mut SampleStream) -> Result<Point> {
    if dim == 0 {
        return Err(Error::Domain("sphere dimension must be >= 1".into()));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::Domain(format!(
            "sphere radius must be > 0, got {radius}"
        )));
    }
    Ok(Point(
        stream
            .unit_vector(dim)
            .into_iter()
            .map(|c| c * radius)
            .collect(),
    ))
}

/// A uniform draw in the ball of the given radius.
pub fn sample_ball(dim: usize, radius: f64, stream: &mut SampleStream) -> Result<Point> {
    if dim == 0 {
        return Err(Error::Domain("ball dimension must be >= 1".into()));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::Domain(format!(
            "ball radius must be > 0, got {radius}"
        )));
    }
    Ok(Point(
        stream
            .ball_vector(dim)
            .into_iter()
            .map(|c| c * radius)
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// |𝔹ⁿ| from the recursion |𝔹ⁿ| = (2π/n)|𝔹ⁿ⁻²| seeded with |𝔹⁰| = 1,
    /// |𝔹¹| = 2 (integrating the (n-2)-ball over a disk).
    fn ball_volume_recursive(n: usize) -> f64 {
        match n {
            0 => 1.0,
            1 => 2.0,
            _ => 2.0 * PI / n as f64 * ball_volume_recursive(n - 2),
        }
    }

    #[test]
    fn gamma_at_integers_and_halves() {
        let mut fact = 1.0;
        for k in 1..20 {
            assert_relative_eq!(gamma(k as f64), fact, max_relative = 1e-13);
            fact *= k as f64;
        }
        assert_relative_eq!(gamma(0.5), PI.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(gamma(1.5), PI.sqrt() / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn ball_volume_examples() {
        assert_relative_eq!(ball_volume(1).unwrap(), 2.0, max_relative = 1e-12);
        assert_relative_eq!(ball_volume(2).unwrap(), PI, max_relative = 1e-12);
        assert_relative_eq!(
            ball_volume(5).unwrap(),
            8.0 * PI * PI / 15.0,
            max_relative = 1e-12
        );
        for n in 1..=20 {
            assert_relative_eq!(
                ball_volume(n).unwrap(),
                ball_volume_recursive(n),
                max_relative = 1e-12
            );
        }
        assert!(matches!(ball_volume(0), Err(Error::Domain(_))));
    }

    #[test]
    fn sphere_area_is_dim_times_volume() {
        for n in 1..=12 {
            let c = BallConstants::new(n).unwrap();
            assert_eq!(c.sphere_area, n as f64 * c.ball_volume);
            assert_eq!(sphere_area(n).unwrap(), c.sphere_area);
        }
    }

    #[test]
    fn brendle_constant_examples() {
        assert_eq!(brendle_constant(3, 1).unwrap(), 1.0);
        assert_eq!(brendle_constant(3, 2).unwrap(), 1.0);
        assert_relative_eq!(
            brendle_constant(2, 3).unwrap(),
            (2.0f64 / 3.0).sqrt(),
            max_relative = 1e-12
        );
        assert!(brendle_constant(0, 3).is_err());
    }

    #[test]
    fn codimension_two_identity() {
        for n in 1..=10 {
            let lhs = (n + 2) as f64 * ball_volume(n + 2).unwrap();
            let rhs = 2.0 * ball_volume(n).unwrap() * ball_volume(2).unwrap();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
        }
    }

    #[test]
    fn sphere_samples_have_radius() {
        let mut s = SampleStream::new(11);
        for _ in 0..1000 {
            let p = sample_sphere(3, 1.0, &mut s).unwrap();
            assert!((p.norm() - 1.0).abs() < 1e-12);
            let q = sample_sphere(4, 2.5, &mut s).unwrap();
            assert!((q.norm() - 2.5).abs() < 1e-12);
        }
        assert!(sample_sphere(3, 0.0, &mut s).is_err());
        assert!(sample_sphere(3, -1.0, &mut s).is_err());
    }

    #[test]
    fn circle_samples_are_centered() {
        let n = 100_000;
        let mut s = SampleStream::new(5);
        let mut mean = [0.0; 2];
        for _ in 0..n {
            let p = sample_sphere(2, 1.0, &mut s).unwrap();
            mean[0] += p.coords()[0];
            mean[1] += p.coords()[1];
        }
        let bound = 3.0 / (n as f64).sqrt();
        for m in mean {
            assert!((m / n as f64).abs() < bound);
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let draw = |seed, id| {
            let mut s = SampleStream::with_stream(seed, id);
            (0..64).map(|_| s.next_u64()).collect::<Vec<_>>()
        };
        assert_eq!(draw(7, 0), draw(7, 0));
        assert_ne!(draw(7, 0), draw(7, 1));
        assert_ne!(draw(7, 0), draw(8, 0));
        let root = SampleStream::new(9);
        let a: Vec<u64> = {
            let mut f = root.fork(3);
            (0..8).map(|_| f.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut f = root.fork(3);
            (0..8).map(|_| f.next_u64()).collect()
        };
        assert_eq!(a, b);
        assert_eq!(root.counter(), 0);
    }

    #[test]
    fn ball_samples_fill_ball_uniformly() {
        let mut s = SampleStream::new(1);
        let n = 50_000;
        let inside_half =
            (0..n).filter(|_| norm(&s.ball_vector(3)) < 0.5).count() as f64 / n as f64;
        // P(|x| < 1/2) = 1/8 in three dimensions
        assert!((inside_half - 0.125).abs() < 4.0 * (0.125f64 * 0.875 / n as f64).sqrt());
        for _ in 0..1000 {
            let v = s.shell_vector(4, 0.9);
            let r = norm(&v);
            assert!(r > 0.9 - 1e-12 && r < 1.0 + 1e-12);
        }
    }
}

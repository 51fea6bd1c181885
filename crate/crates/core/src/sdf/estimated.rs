use crate::sdf::{SdfSample, SdfScene, SignedDistance, FD_GRADIENT_STEP};
use crate::{Error, Result, Vec3};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn lattice_value(seed: u64, i: i64, j: i64, k: i64) -> f64 {
    let mut h = splitmix64(seed);
    for c in [i, j, k] {
        h = splitmix64(h ^ c as u64);
    }
    // top 53 bits -> [0, 1) -> [-1, 1)
    (h >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

/// Seeded lattice value noise in `[-1, 1]` with correlation length `scale`.
///
/// Lattice values are blended trilinearly with quintic fade weights, so the field is C².
pub fn value_noise(p: &Vec3, scale: f64, seed: u64) -> f64 {
    let x = p / scale;
    let base = x.map(f64::floor);
    let f = x - base;
    let w = f.map(fade);
    let (i, j, k) = (base.x as i64, base.y as i64, base.z as i64);
    let mut acc = 0.0;
    for dz in 0..2 {
        for dy in 0..2 {
            for dx in 0..2 {
                let wx = if dx == 1 { w.x } else { 1.0 - w.x };
                let wy = if dy == 1 { w.y } else { 1.0 - w.y };
                let wz = if dz == 1 { w.z } else { 1.0 - w.z };
                acc += wx * wy * wz * lattice_value(seed, i + dx, j + dy, k + dz);
            }
        }
    }
    acc
}

/// The planner's belief about the object: `base + offset_bias + noise_amplitude * noise(p)`.
///
/// A negative `offset_bias` puts the believed surface outside the true one.
#[derive(Clone, Debug)]
pub struct EstimatedSdf {
    pub base: SdfScene,
    pub offset_bias: f64,
    pub noise_amplitude: f64,
    pub noise_seed: u64,
    pub smoothness_scale: f64,
}

impl EstimatedSdf {
    pub fn new(
        base: SdfScene,
        offset_bias: f64,
        noise_amplitude: f64,
        noise_seed: u64,
        smoothness_scale: f64,
    ) -> Result<Self> {
        if !offset_bias.is_finite() || !(noise_amplitude >= 0.0 && noise_amplitude.is_finite()) {
            return Err(Error::InvalidArgument(
                "offset_bias must be finite and noise_amplitude non-negative".into(),
            ));
        }
        if noise_amplitude > 0.0 && !(smoothness_scale > 0.0 && smoothness_scale.is_finite()) {
            return Err(Error::InvalidArgument("smoothness_scale must be positive".into()));
        }
        Ok(EstimatedSdf {
            base,
            offset_bias,
            noise_amplitude,
            noise_seed,
            smoothness_scale,
        })
    }

    /// Identity wrapper around `base`.
    pub fn exact(base: SdfScene) -> Self {
        EstimatedSdf {
            base,
            offset_bias: 0.0,
            noise_amplitude: 0.0,
            noise_seed: 0,
            smoothness_scale: 1.0,
        }
    }

    fn perturbed(&self, p: &Vec3) -> f64 {
        self.base.sdf_query(p).distance
            + self.offset_bias
            + self.noise_amplitude * value_noise(p, self.smoothness_scale, self.noise_seed)
    }

    pub fn estimated_sdf_query(&self, p: &Vec3) -> SdfSample {
        if self.noise_amplitude == 0.0 {
            let s = self.base.sdf_query(p);
            return SdfSample {
                distance: s.distance + self.offset_bias,
                gradient: s.gradient,
            };
        }
        let h = FD_GRADIENT_STEP;
        let mut gradient = Vec3::zeros();
        for i in 0..3 {
            let mut e = Vec3::zeros();
            e[i] = h;
            gradient[i] = (self.perturbed(&(p + e)) - self.perturbed(&(p - e))) / (2.0 * h);
        }
        SdfSample {
            distance: self.perturbed(p),
            gradient,
        }
    }
}

impl SignedDistance for EstimatedSdf {
    fn query(&self, p: &Vec3) -> SdfSample {
        self.estimated_sdf_query(p)
    }

    fn center(&self) -> Vec3 {
        self.base.center()
    }

    fn half_diagonal(&self) -> f64 {
        self.base.half_diagonal()
    }

    fn axes(&self) -> nalgebra::UnitQuaternion<f64> {
        self.base.axes()
    }

    fn half_extents(&self) -> Vec3 {
        self.base.half_extents()
    }
}

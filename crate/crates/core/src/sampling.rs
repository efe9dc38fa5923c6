//! Deterministic sample generators: Halton low-discrepancy points, seeded
//! uniform points, and direction sets on the unit sphere.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::point::normalized;

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

/// The `index`-th Halton point in `[0,1)^dim`. Index 0 is skipped by callers
/// that do not want the corner.
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|k| {
            let base = PRIMES.get(k).copied().unwrap_or_else(|| nth_prime(k));
            radical_inverse(index, base)
        })
        .collect()
}

fn nth_prime(n: usize) -> u64 {
    let mut count = 0;
    let mut candidate = 1u64;
    while count <= n {
        candidate += 1;
        if (2..candidate).take_while(|d| d * d <= candidate).all(|d| candidate % d != 0) {
            count += 1;
        }
    }
    candidate
}

pub fn uniform_in_box(rng: &mut ChaCha8Rng, lower: &[f64], upper: &[f64]) -> Vec<f64> {
    lower
        .iter()
        .zip(upper)
        .map(|(&l, &u)| if u > l { rng.gen_range(l..u) } else { l })
        .collect()
}

/// `count` unit directions in `R^dim`.
///
/// In the plane the directions are equally spaced angles; in higher
/// dimension Halton points are pushed through Box-Muller and normalized.
pub fn sphere_directions(dim: usize, count: usize) -> Vec<Vec<f64>> {
    match dim {
        0 => Vec::new(),
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|k| {
                let t = 2.0 * PI * (k as f64 + 0.5) / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            let pairs = dim.div_ceil(2);
            let mut out = Vec::with_capacity(count);
            let mut index = 1u64;
            while out.len() < count {
                let h = halton(index, 2 * pairs);
                index += 1;
                let mut g = Vec::with_capacity(2 * pairs);
                for p in 0..pairs {
                    let u1 = h[2 * p].max(1e-12);
                    let u2 = h[2 * p + 1];
                    let r = (-2.0 * u1.ln()).sqrt();
                    g.push(r * (2.0 * PI * u2).cos());
                    g.push(r * (2.0 * PI * u2).sin());
                }
                g.truncate(dim);
                if let Some(u) = normalized(&g) {
                    out.push(u);
                }
            }
            out
        }
    }
}

/// Uniformly random unit direction.
pub fn random_direction(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..dim)
            .map(|_| {
                let u1: f64 = rng.gen_range(1e-12..1.0);
                let u2: f64 = rng.gen();
                (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
            })
            .collect();
        if let Some(u) = normalized(&g) {
            return u;
        }
    }
}

/// Great-circle interpolation between two unit vectors, `steps` segments,
/// endpoints included. Antipodal pairs yield just the endpoints.
pub fn slerp_arc(a: &[f64], b: &[f64], steps: usize) -> Vec<Vec<f64>> {
    let cos = crate::point::dot(a, b).clamp(-1.0, 1.0);
    let angle = cos.acos();
    if angle < 1e-12 {
        return vec![a.to_vec()];
    }
    if (PI - angle).abs() < 1e-9 {
        return vec![a.to_vec(), b.to_vec()];
    }
    let s = angle.sin();
    (0..=steps)
        .map(|k| {
            let t = k as f64 / steps as f64;
            let wa = ((1.0 - t) * angle).sin() / s;
            let wb = (t * angle).sin() / s;
            a.iter().zip(b).map(|(x, y)| wa * x + wb * y).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::norm;

    #[test]
    fn halton_first_values() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(1, 3) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(nth_prime(16), 59);
    }

    #[test]
    fn directions_are_unit() {
        for dim in 1..6 {
            for u in sphere_directions(dim, 40) {
                assert!((norm(&u) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn arc_has_even_spacing() {
        let arc = slerp_arc(&[1.0, 0.0], &[0.0, 1.0], 4);
        assert_eq!(arc.len(), 5);
        let mid = &arc[2];
        assert!((mid[0] - mid[1]).abs() < 1e-12);
        assert!((norm(mid) - 1.0).abs() < 1e-12);
    }
}

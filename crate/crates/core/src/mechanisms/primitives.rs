//! Randomized primitives shared by all mechanisms.

use rand::Rng;

use crate::error::{Error, Result};

use super::params;

#[inline]
pub(crate) fn coin<R: Rng + ?Sized>(p: f64, rng: &mut R) -> bool {
    rng.random::<f64>() < p
}

#[inline]
pub(crate) fn fair_sign<R: Rng + ?Sized>(rng: &mut R) -> i8 {
    if rng.random::<bool>() {
        1
    } else {
        -1
    }
}

/// Uniform index in `0..d` other than `x`.
#[inline]
pub(crate) fn other_index<R: Rng + ?Sized>(x: usize, d: usize, rng: &mut R) -> usize {
    let r = rng.random_range(0..d - 1);
    if r >= x {
        r + 1
    } else {
        r
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && !eps.is_nan() {
        Ok(())
    } else {
        Err(Error::config(format!("privacy budget must be positive, got {eps}")))
    }
}

/// Discretizes `v ∈ [-1, 1]` to `+1` with probability `(1 + v) / 2`, else `-1`.
pub fn discretize_value<R: Rng + ?Sized>(v: f64, rng: &mut R) -> Result<i8> {
    if !(-1.0..=1.0).contains(&v) {
        return Err(Error::domain(format!("value {v} outside [-1, 1]")));
    }
    Ok(if coin((1.0 + v) / 2.0, rng) { 1 } else { -1 })
}

pub fn rr_perturb<R: Rng + ?Sized>(bit: bool, eps: f64, rng: &mut R) -> Result<bool> {
    check_eps(eps)?;
    Ok(if coin(params::rr_keep(eps), rng) { bit } else { !bit })
}

pub fn grr_perturb<R: Rng + ?Sized>(x: usize, d: usize, eps: f64, rng: &mut R) -> Result<usize> {
    check_eps(eps)?;
    if d < 2 {
        return Err(Error::config(format!("GRR needs at least 2 categories, got {d}")));
    }
    if x >= d {
        return Err(Error::domain(format!("category {x} outside 0..{d}")));
    }
    Ok(grr_index(x, d, params::grr_keep(eps, d), rng))
}

#[inline]
pub(crate) fn grr_index<R: Rng + ?Sized>(x: usize, d: usize, keep: f64, rng: &mut R) -> usize {
    if coin(keep, rng) {
        x
    } else {
        other_index(x, d, rng)
    }
}

pub fn oue_perturb<R: Rng + ?Sized>(bits: &[bool], eps: f64, rng: &mut R) -> Result<Vec<bool>> {
    check_eps(eps)?;
    let raise = params::oue_raise(eps);
    Ok(bits.iter().map(|&b| coin(if b { 0.5 } else { raise }, rng)).collect())
}

/// One-hot encodes `x`, adds Laplace noise of scale `2/ε` per position and
/// reports the positions whose noisy value exceeds `theta`.
pub fn the_perturb<R: Rng + ?Sized>(x: usize, d: usize, eps: f64, theta: f64, rng: &mut R) -> Result<Vec<bool>> {
    check_eps(eps)?;
    if !(theta > 0.5 && theta < 1.0) {
        return Err(Error::config(format!("THE threshold {theta} outside (0.5, 1)")));
    }
    if x >= d {
        return Err(Error::domain(format!("item {x} outside 0..{d}")));
    }
    let scale = params::the_scale(eps);
    Ok((0..d)
        .map(|i| {
            let centre = if i == x { 1.0 } else { 0.0 };
            centre + laplace_noise(scale, rng) > theta
        })
        .collect())
}

/// Laplace(0, scale) by inversion.
pub fn laplace_noise<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    loop {
        let u = rng.random::<f64>() - 0.5;
        let tail = 1.0 - 2.0 * u.abs();
        if tail > 0.0 {
            return -scale * u.signum() * tail.ln();
        }
    }
}

pub fn boundary_point(points: usize, j: usize) -> f64 {
    params::boundary_point(points, j)
}

pub fn level_weights(v: f64, points: usize) -> (usize, f64) {
    params::level_weights(v, points)
}

/// Snaps `v` to one of the two adjacent boundary points (index returned) with
/// probability proportional to proximity. With two points this is `discretize_value`.
pub fn gvpp_discretize<R: Rng + ?Sized>(v: f64, points: usize, rng: &mut R) -> usize {
    let (lo, up) = level_weights(v, points);
    if coin(up, rng) {
        lo + 1
    } else {
        lo
    }
}

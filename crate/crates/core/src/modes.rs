//! Figures of merit for computed resonances.
//!
//! Volumes are two-dimensional sums over the node lattice multiplied by an
//! effective out-of-plane depth (default `lambda / eta`). Nodes on the outer
//! edge of the lattice carry half weight (quarter at corners), so sums are
//! trapezoidal quadratures of the underlying integrals.

use num_complex::Complex64;
use thiserror::Error;

use crate::consts::SPEED_OF_LIGHT;
use crate::fdfd::{pml_energy_fraction, EigenMode};
use crate::geometry::{CavityParams, MaterialMap};

#[derive(Debug, Error, PartialEq)]
pub enum ModeError {
    #[error("mode is undamped (Im omega = {im:.3e} rad/s); Q exceeds {bound:.3e}")]
    Undamped { im: f64, bound: f64 },
    #[error("field maximum {0:.3e} is below the noise floor")]
    EmptyField(f64),
    #[error("ambiguous nodal count: {0}")]
    Classification(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("mode lattice {got:?} does not match material map {expected:?}")]
    Dimension {
        got: (usize, usize),
        expected: (usize, usize),
    },
}

const EMPTY_FLOOR: f64 = 1e-12;
const NODAL_FLOOR: f64 = 1e-6;

/// Figures of merit of one resonance.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeReport {
    pub freq_hz: f64,
    pub q: f64,
    /// Energy-density mode volume (m^3).
    pub v: f64,
    /// Quasinormal-mode volume `1 / Re(1 / nu_Q)` (m^3).
    pub v_rigorous: f64,
    pub q_over_v: f64,
    pub m_order: usize,
    pub k_order: usize,
    /// Field-maximum location (m).
    pub r_c: (f64, f64),
    pub subwavelength: bool,
    pub lambda_m: f64,
    pub residual: f64,
    pub pml_fraction: f64,
}

/// `Re(omega) / (2 |Im(omega)|)`.
pub fn quality_factor(mode: &EigenMode) -> Result<f64, ModeError> {
    let w = mode.omega;
    if !(w.re > 0.0) {
        return Err(ModeError::InvalidArgument(format!(
            "Re(omega) = {:.3e} must be positive",
            w.re
        )));
    }
    let floor = 1e-14 * w.re;
    if w.im.abs() < floor {
        return Err(ModeError::Undamped {
            im: w.im,
            bound: w.re / (2.0 * floor),
        });
    }
    if w.im > 0.0 {
        return Err(ModeError::InvalidArgument(format!(
            "Im(omega) = {:.3e} describes a growing mode",
            w.im
        )));
    }
    Ok(w.re / (2.0 * w.im.abs()))
}

fn check_layout(mode: &EigenMode, map: &MaterialMap) -> Result<(), ModeError> {
    if (mode.nx, mode.ny) != (map.nx, map.ny) || mode.field.len() != map.len() {
        return Err(ModeError::Dimension {
            got: (mode.nx, mode.ny),
            expected: (map.nx, map.ny),
        });
    }
    Ok(())
}

fn edge_weight(map: &MaterialMap, k: usize) -> f64 {
    let (i, j) = (k % map.nx, k / map.nx);
    let mut w = 1.0;
    if i == 0 || i == map.nx - 1 {
        w *= 0.5;
    }
    if j == 0 || j == map.ny - 1 {
        w *= 0.5;
    }
    w
}

fn default_depth(mode: &EigenMode, map: &MaterialMap, depth: Option<f64>) -> Result<f64, ModeError> {
    let d = match depth {
        Some(d) => d,
        None => {
            // background index taken from the field maximum's neighbourhood is
            // unreliable inside mirrors; use the cavity center instead
            let eta = map.eps[map.idx(map.nx / 2, map.ny / 2)].re.max(1.0).sqrt();
            SPEED_OF_LIGHT / (crate::consts::ordinary(mode.omega.re) * eta)
        }
    };
    if !(d > 0.0 && d.is_finite()) {
        return Err(ModeError::InvalidArgument("depth must be positive".into()));
    }
    Ok(d)
}

/// `depth * sum(eps |E|^2 dx^2) / max(eps |E|^2)` over non-PML nodes.
/// `depth = None` uses `lambda / eta`.
pub fn mode_volume(mode: &EigenMode, map: &MaterialMap, depth: Option<f64>) -> Result<f64, ModeError> {
    check_layout(mode, map)?;
    let depth = default_depth(mode, map, depth)?;
    let (mut sum, mut peak) = (0.0f64, 0.0f64);
    for (k, f) in mode.field.iter().enumerate() {
        if map.is_pml(k) {
            continue;
        }
        let u = map.eps[k].re * f.norm_sqr();
        sum += edge_weight(map, k) * u;
        peak = peak.max(u);
    }
    if peak.sqrt() < EMPTY_FLOOR {
        return Err(ModeError::EmptyField(peak.sqrt()));
    }
    Ok(depth * sum * map.dx * map.dx / peak)
}

/// `1 / Re(1 / nu_Q)` with `nu_Q = <<f|f>> / (eps(r_c) f(r_c)^2)` and the
/// unconjugated product `<<f|f>> = depth sum(eps f^2 dx^2)` over non-PML
/// nodes. `r_c` is snapped to the nearest node.
pub fn mode_volume_rigorous(
    mode: &EigenMode,
    map: &MaterialMap,
    r_c: (f64, f64),
    depth: Option<f64>,
) -> Result<f64, ModeError> {
    check_layout(mode, map)?;
    let depth = default_depth(mode, map, depth)?;
    let i = ((r_c.0 - map.origin.0) / map.dx).round();
    let j = ((r_c.1 - map.origin.1) / map.dx).round();
    if i < 0.0 || j < 0.0 || i as usize >= map.nx || j as usize >= map.ny {
        return Err(ModeError::InvalidArgument("r_c lies outside the lattice".into()));
    }
    let c = map.idx(i as usize, j as usize);
    let fc = mode.field[c];
    if fc.norm() < EMPTY_FLOOR {
        return Err(ModeError::EmptyField(fc.norm()));
    }
    let mut inner = Complex64::new(0.0, 0.0);
    for (k, f) in mode.field.iter().enumerate() {
        if !map.is_pml(k) {
            inner += edge_weight(map, k) * map.eps[k] * f * f;
        }
    }
    let inner = inner * depth * map.dx * map.dx;
    let nu_q = inner / (map.eps[c] * fc * fc);
    Ok(1.0 / nu_q.inv().re)
}

/// Node of largest `|field|`, optionally skipping PML nodes. Ties resolve to
/// the smallest `(row, column)`, i.e. the first node in storage order.
pub fn field_maximum(mode: &EigenMode, map: Option<&MaterialMap>) -> Result<(usize, usize), ModeError> {
    if let Some(map) = map {
        check_layout(mode, map)?;
    }
    let (mut best, mut arg) = (-1.0, None);
    for (k, f) in mode.field.iter().enumerate() {
        if map.is_some_and(|m| m.is_pml(k)) {
            continue;
        }
        let a = f.norm();
        if a > best {
            best = a;
            arg = Some(k);
        }
    }
    match arg {
        Some(k) if best >= EMPTY_FLOOR => Ok((k % mode.nx, k / mode.nx)),
        _ => Err(ModeError::EmptyField(best.max(0.0))),
    }
}

/// Coordinates (m) of lattice node `(i, j)` of `mode`.
pub fn node_position(mode: &EigenMode, (i, j): (usize, usize)) -> (f64, f64) {
    (
        mode.origin.0 + i as f64 * mode.dx,
        mode.origin.1 + j as f64 * mode.dx,
    )
}

fn sign_changes(samples: &[f64]) -> Result<usize, ModeError> {
    let peak = samples.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if peak < NODAL_FLOOR {
        return Err(ModeError::Classification(format!(
            "cut amplitude {peak:.3e} below noise floor"
        )));
    }
    // samples near a node are skipped so round-off cannot add crossings
    let floor = 1e-3 * peak;
    let mut last = 0.0;
    let mut count = 0;
    for &v in samples {
        if v.abs() < floor {
            continue;
        }
        if last != 0.0 && v.signum() != last {
            count += 1;
        }
        last = v.signum();
    }
    Ok(count)
}

/// Mode orders `(m, k)`. `k` is one more than the number of sign changes of
/// `Re(field)` along the axial cut between the mirrors; `m` counts sign
/// changes along the transverse cut within the aperture. Both cuts pass
/// through the field maximum, since odd transverse orders vanish on the axis.
pub fn classify_mode(mode: &EigenMode, params: &CavityParams) -> Result<(usize, usize), ModeError> {
    params
        .validate()
        .map_err(|e| ModeError::InvalidArgument(e.to_string()))?;
    let (bi, bj) = field_maximum(mode, None)?;
    let aperture = params.aperture();
    let (xc, _) = node_position(mode, (bi, 0));
    let half_gap = 0.5 * params.mirror_gap(xc.abs().min(aperture)).unwrap_or(params.min_gap);

    let axial: Vec<f64> = (0..mode.ny)
        .filter(|&j| node_position(mode, (bi, j)).1.abs() < half_gap)
        .map(|j| mode.at(bi, j).re)
        .collect();
    let transverse: Vec<f64> = (0..mode.nx)
        .filter(|&i| node_position(mode, (i, bj)).0.abs() <= aperture)
        .map(|i| mode.at(i, bj).re)
        .collect();
    let k = sign_changes(&axial)? + 1;
    let m = sign_changes(&transverse)?;
    Ok((m, k))
}

/// Ordinary frequency `c [k + (m + 1)/2] / (2 eta L)` (Hz).
pub fn analytic_frequency(k: usize, m: usize, length: f64, eta: f64) -> Result<f64, ModeError> {
    if k < 1 {
        return Err(ModeError::InvalidArgument("k must be at least 1".into()));
    }
    if !(length > 0.0) || !(eta >= 1.0) {
        return Err(ModeError::InvalidArgument("need L > 0 and eta >= 1".into()));
    }
    Ok(SPEED_OF_LIGHT * (k as f64 + 0.5 * (m as f64 + 1.0)) / (2.0 * eta * length))
}

/// Normalized overlap `|<a|b>| / (|a| |b|)` over the lattice nodes the two
/// modes share. Both lattices must be anchored on the same node grid.
pub fn overlap(a: &EigenMode, b: &EigenMode) -> f64 {
    if (a.dx - b.dx).abs() > 1e-12 * a.dx {
        return 0.0;
    }
    let off = |m: &EigenMode| {
        (
            (m.origin.0 / m.dx).round() as i64,
            (m.origin.1 / m.dx).round() as i64,
        )
    };
    let (oa, ob) = (off(a), off(b));
    let x0 = oa.0.max(ob.0);
    let x1 = (oa.0 + a.nx as i64).min(ob.0 + b.nx as i64);
    let y0 = oa.1.max(ob.1);
    let y1 = (oa.1 + a.ny as i64).min(ob.1 + b.ny as i64);
    let (mut num, mut na, mut nb) = (Complex64::new(0.0, 0.0), 0.0, 0.0);
    for y in y0..y1 {
        for x in x0..x1 {
            let fa = a.at((x - oa.0) as usize, (y - oa.1) as usize);
            let fb = b.at((x - ob.0) as usize, (y - ob.1) as usize);
            num += fa.conj() * fb;
            na += fa.norm_sqr();
            nb += fb.norm_sqr();
        }
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    num.norm() / (na * nb).sqrt()
}

/// Candidate with the largest overlap with `previous`, and that overlap.
/// Ties keep the earlier candidate.
pub fn track_mode(previous: &EigenMode, candidates: &[EigenMode]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (idx, c) in candidates.iter().enumerate() {
        let o = overlap(previous, c);
        if best.is_none_or(|(_, b)| o > b) {
            best = Some((idx, o));
        }
    }
    best
}

/// Full report for `mode`. `depth = None` uses `lambda / eta`.
pub fn analyze_mode(
    mode: &EigenMode,
    map: &MaterialMap,
    params: &CavityParams,
    depth: Option<f64>,
) -> Result<ModeReport, ModeError> {
    let q = quality_factor(mode)?;
    let v = mode_volume(mode, map, depth)?;
    let node = field_maximum(mode, Some(map))?;
    let r_c = node_position(mode, node);
    let v_rigorous = mode_volume_rigorous(mode, map, r_c, depth)?;
    let (m_order, k_order) = classify_mode(mode, params)?;
    let freq_hz = mode.freq_hz();
    let lambda_m = SPEED_OF_LIGHT / freq_hz;
    Ok(ModeReport {
        freq_hz,
        q,
        v,
        v_rigorous,
        q_over_v: q / v,
        m_order,
        k_order,
        r_c,
        subwavelength: v <= lambda_m.powi(3),
        lambda_m,
        residual: mode.residual,
        pml_fraction: pml_energy_fraction(map, mode),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn mode_on(map: &MaterialMap, omega: Complex64, f: impl Fn(f64, f64) -> Complex64) -> EigenMode {
        let mut field = vec![Complex64::new(0.0, 0.0); map.len()];
        for j in 0..map.ny {
            for i in 0..map.nx {
                field[map.idx(i, j)] = f(map.x(i), map.y(j));
            }
        }
        EigenMode {
            omega,
            field,
            residual: 0.0,
            nx: map.nx,
            ny: map.ny,
            dx: map.dx,
            origin: map.origin,
        }
    }

    #[test]
    fn q_from_complex_frequency() {
        let map = MaterialMap::pec_box(0.01, 0.01, 0.001, 1.0).unwrap();
        let m = mode_on(&map, Complex64::new(2.0 * PI * 45e9, -2.0 * PI * 2.25e5), |_, _| 1.0.into());
        let q = quality_factor(&m).unwrap();
        assert!((q - 1e5).abs() < 1e-6);
        // kappa = omega / Q
        let kappa = m.omega.re / q / (2.0 * PI);
        assert!((kappa - 4.5e5).abs() < 1e-6);

        let undamped = EigenMode { omega: Complex64::new(1e11, 0.0), ..m };
        assert!(matches!(quality_factor(&undamped), Err(ModeError::Undamped { .. })));
    }

    #[test]
    fn uniform_and_half_sine_volumes() {
        let (a, b, depth) = (0.01, 0.006, 0.002);
        let map = MaterialMap::pec_box(a, b, 0.0005, 1.0).unwrap();
        let w = Complex64::new(1e11, -1.0);
        let uniform = mode_on(&map, w, |_, _| Complex64::new(1.0, 0.0));
        let v = mode_volume(&uniform, &map, Some(depth)).unwrap();
        assert!((v - a * b * depth).abs() < 1e-12 * v);

        let sine = mode_on(&map, w, |x, _| Complex64::new((PI * (x + 0.5 * a) / a).sin(), 0.0));
        let v = mode_volume(&sine, &map, Some(depth)).unwrap();
        assert!((v - 0.5 * a * b * depth).abs() < 1e-9 * v);

        // real fields make both definitions coincide
        let rc = node_position(&sine, field_maximum(&sine, Some(&map)).unwrap());
        let vr = mode_volume_rigorous(&sine, &map, rc, Some(depth)).unwrap();
        assert!((vr - v).abs() < 1e-10 * v);
    }

    #[test]
    fn empty_field_is_rejected() {
        let map = MaterialMap::pec_box(0.01, 0.01, 0.001, 1.0).unwrap();
        let m = mode_on(&map, Complex64::new(1e11, -1.0), |_, _| 0.0.into());
        assert!(matches!(mode_volume(&m, &map, Some(1.0)), Err(ModeError::EmptyField(_))));
        assert!(matches!(field_maximum(&m, None), Err(ModeError::EmptyField(_))));
    }

    #[test]
    fn maximum_tie_break_and_symmetry() {
        let map = MaterialMap::pec_box(0.01, 0.01, 0.001, 1.0).unwrap();
        let flat = mode_on(&map, Complex64::new(1e11, -1.0), |_, _| 1.0.into());
        assert_eq!(field_maximum(&flat, None).unwrap(), (0, 0));

        let fund = mode_on(&map, Complex64::new(1e11, -1.0), |x, y| {
            Complex64::new((PI * (x + 0.005) / 0.01).sin() * (PI * (y + 0.005) / 0.01).sin(), 0.0)
        });
        let p = node_position(&fund, field_maximum(&fund, None).unwrap());
        assert!(p.0.abs() <= map.dx && p.1.abs() <= map.dx);
    }

    #[test]
    fn classifies_box_like_fields() {
        let params = CavityParams::confocal(0.01, 0.0);
        let map = MaterialMap::pec_box(0.014, 0.01, 0.0002, 1.0).unwrap();
        let w = Complex64::new(1e11, -1.0);
        // fundamental: no interior nodes
        let fund = mode_on(&map, w, |x, y| {
            Complex64::new((PI * x / 0.014).cos() * (PI * y / 0.01).cos(), 0.0)
        });
        assert_eq!(classify_mode(&fund, &params).unwrap(), (0, 1));
        // one transverse node and one axial node
        let m1k2 = mode_on(&map, w, |x, y| {
            Complex64::new((2.0 * PI * x / 0.014).sin() * (2.0 * PI * y / 0.01).sin(), 0.0)
        });
        assert_eq!(classify_mode(&m1k2, &params).unwrap(), (1, 2));
    }

    #[test]
    fn analytic_frequencies() {
        let f = analytic_frequency(2, 1, 0.01, 1.0).unwrap();
        assert!((f - 44.968_868_5e9).abs() < 1e5, "{f}");
        let f1 = analytic_frequency(1, 0, 0.01, 1.0).unwrap();
        assert!((f1 - 22.484e9).abs() < 1e7);
        let f2 = analytic_frequency(2, 1, 0.01, 2.0).unwrap();
        assert!((f2 - 0.5 * f).abs() < 1e-6 * f);
        assert!(analytic_frequency(0, 0, 0.01, 1.0).is_err());
    }

    #[test]
    fn overlap_on_shifted_lattices() {
        let small = MaterialMap::pec_box(0.01, 0.01, 0.001, 1.0).unwrap();
        let big = MaterialMap::pec_box(0.014, 0.01, 0.001, 1.0).unwrap();
        let w = Complex64::new(1e11, -1.0);
        let shape = |x: f64, y: f64| Complex64::new((-(x * x + y * y) / 4e-6).exp(), 0.0);
        let a = mode_on(&small, w, shape);
        let b = mode_on(&big, w, |x, y| shape(x, y) * Complex64::new(0.0, 2.0));
        assert!((overlap(&a, &b) - 1.0).abs() < 1e-3);
        let odd = mode_on(&big, w, |x, y| shape(x, y) * x.signum());
        let (idx, o) = track_mode(&a, &[odd, b]).unwrap();
        assert_eq!(idx, 1);
        assert!(o > 0.99);
    }
}

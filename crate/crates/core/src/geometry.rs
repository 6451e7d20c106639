//! Winged Fabry-Perot cavity geometry and its rasterization onto a node
//! lattice.
//!
//! Coordinates: `x` is transverse (across the mirrors), `y` runs along the
//! cavity axis. The cavity is centered at the origin; the two mirrors face
//! each other across `y = 0`. Lattice nodes sit at integer multiples of `dx`
//! from the origin, so geometries that differ only in wing width share every
//! node inside the cavity.

use num_complex::Complex64;
use thiserror::Error;

use crate::mirror::StackSpec;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("invalid cavity parameter: {0}")]
    InvalidParams(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("aperture {aperture:.6e} m does not fit: extent_x {extent_x:.6e} m minus wing and PML widths leaves {available:.6e} m")]
    DoesNotFit {
        aperture: f64,
        extent_x: f64,
        available: f64,
    },
    #[error("layer of thickness {thickness:.6e} m resolved by {cells:.2} cells (need at least {required})")]
    Resolution {
        thickness: f64,
        cells: f64,
        required: usize,
    },
    #[error("transverse position {x:.6e} m lies outside the mirror aperture {aperture:.6e} m")]
    Domain { x: f64, aperture: f64 },
}

/// Mirror surface shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MirrorProfile {
    /// Parabolic arcs with radius of curvature equal to the on-axis separation.
    ConfocalArc,
    /// Flat mirrors at constant separation.
    Plane,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MirrorModel {
    IdealPec,
    /// Layered dielectric mirror painted behind each arc surface.
    DielectricStack(StackSpec),
}

/// Winged cavity description. Lengths in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct CavityParams {
    /// On-axis mirror separation `L`.
    pub length: f64,
    /// Minimum mirror separation `h`, reached at the aperture edge.
    pub min_gap: f64,
    /// Wing width `d`.
    pub wing_width: f64,
    /// Width of the absorbing layer terminating each wing.
    pub pml_width: f64,
    /// Background refractive index.
    pub eta: f64,
    pub mirror: MirrorModel,
    pub profile: MirrorProfile,
}

impl CavityParams {
    /// Symmetric confocal cavity with PEC mirrors, using the aspect ratios
    /// `h = 0.5 L` and PML width `0.4 L`.
    pub fn confocal(length: f64, wing_width: f64) -> Self {
        Self {
            length,
            min_gap: 0.5 * length,
            wing_width,
            pml_width: 0.4 * length,
            eta: 1.0,
            mirror: MirrorModel::IdealPec,
            profile: MirrorProfile::ConfocalArc,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |msg: &str| Err(GeometryError::InvalidParams(msg.to_string()));
        if !(self.length.is_finite() && self.length > 0.0) {
            return bad("L must be positive");
        }
        if !(self.min_gap > 0.0 && self.min_gap < self.length) {
            return bad("h must satisfy 0 < h < L");
        }
        if !(self.wing_width >= 0.0 && self.wing_width.is_finite()) {
            return bad("d must be non-negative");
        }
        if !(self.pml_width > 0.0 && self.pml_width.is_finite()) {
            return bad("PML width must be positive");
        }
        if !(self.eta >= 1.0 && self.eta.is_finite()) {
            return bad("eta must be at least 1");
        }
        if let MirrorModel::DielectricStack(stack) = &self.mirror {
            stack
                .validate()
                .map_err(|e| GeometryError::InvalidParams(e.to_string()))?;
        }
        Ok(())
    }

    /// Radius of curvature of each mirror.
    pub fn radius_of_curvature(&self) -> f64 {
        self.length
    }

    /// Transverse half-width of the mirrors, `sqrt(L (L - h))`.
    pub fn aperture(&self) -> f64 {
        (self.length * (self.length - self.min_gap)).sqrt()
    }

    /// Outer edge of the wing channels.
    pub fn wing_edge(&self) -> f64 {
        self.aperture() + self.wing_width
    }

    /// Mirror separation at transverse position `x`.
    pub fn mirror_gap(&self, x: f64) -> Result<f64, GeometryError> {
        let aperture = self.aperture();
        if !(x.abs() <= aperture * (1.0 + 1e-12)) {
            return Err(GeometryError::Domain { x, aperture });
        }
        Ok(self.gap_unchecked(x.abs().min(aperture)))
    }

    fn gap_unchecked(&self, ax: f64) -> f64 {
        match self.profile {
            MirrorProfile::ConfocalArc => self.length - ax * ax / self.radius_of_curvature(),
            MirrorProfile::Plane => self.length,
        }
    }

    fn stack_thickness(&self) -> f64 {
        match &self.mirror {
            MirrorModel::IdealPec => 0.0,
            MirrorModel::DielectricStack(s) => s.layers.iter().map(|l| l.thickness).sum(),
        }
    }
}

/// Uniform lattice description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub dx: f64,
    /// Half-width of the simulated box along x.
    pub extent_x: f64,
    /// Half-height of the simulated box along y.
    pub extent_y: f64,
    pub ppw_target: f64,
}

impl GridSpec {
    /// Lattice resolving `design_freq_hz` with `ppw` points per wavelength in
    /// the background medium, sized to hold the cavity, wings, PML and one
    /// terminating PEC node ring.
    pub fn for_cavity(params: &CavityParams, design_freq_hz: f64, ppw: f64) -> Self {
        let lambda = crate::consts::SPEED_OF_LIGHT / (design_freq_hz * params.eta);
        let dx = lambda / ppw;
        let extent_x = params.wing_edge() + params.pml_width + dx;
        let extent_y = match params.mirror {
            MirrorModel::IdealPec => 0.5 * params.length + 2.0 * dx,
            MirrorModel::DielectricStack(_) => {
                0.5 * params.length + params.stack_thickness() + params.pml_width + 2.0 * dx
            }
        };
        Self {
            dx,
            extent_x,
            extent_y,
            ppw_target: ppw,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return Err(GeometryError::InvalidGrid("dx must be positive".into()));
        }
        if !(self.ppw_target >= 15.0) {
            return Err(GeometryError::InvalidGrid(
                "ppw_target must be at least 15".into(),
            ));
        }
        if !(self.extent_x > 0.0 && self.extent_y > 0.0) {
            return Err(GeometryError::InvalidGrid("extents must be positive".into()));
        }
        Ok(())
    }
}

/// Role of a lattice node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    /// Between the mirrors.
    Cavity,
    /// Inside a wing channel.
    Wing,
    /// Dielectric mirror layer or substrate.
    Mirror,
    /// Absorbing layer.
    Pml,
    /// Perfect conductor; field pinned to zero.
    Pec,
}

/// Rasterized material description on a node lattice.
///
/// Arrays are row-major: node `(i, j)` lives at `j * nx + i`, with `i` along
/// x and `j` along y.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialMap {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    /// Coordinates of node `(0, 0)`.
    pub origin: (f64, f64),
    pub eps: Vec<Complex64>,
    pub pec_mask: Vec<bool>,
    /// Normalized PML depth along x, in `[0, 1]`; zero outside the band.
    pub pml_sigma_x: Vec<f64>,
    /// Normalized PML depth along y, in `[0, 1]`; zero outside the band.
    pub pml_sigma_y: Vec<f64>,
    pub region: Vec<Region>,
    pub ppw_target: f64,
}

impl MaterialMap {
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.origin.0 + i as f64 * self.dx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.origin.1 + j as f64 * self.dx
    }

    /// Integer lattice coordinates of node `(i, j)` relative to the origin
    /// node at `(0, 0)` m. Only meaningful for origin-anchored lattices.
    pub fn lattice_coords(&self, i: usize, j: usize) -> (i64, i64) {
        let ox = (self.origin.0 / self.dx).round() as i64;
        let oy = (self.origin.1 / self.dx).round() as i64;
        (ox + i as i64, oy + j as i64)
    }

    pub fn is_pml(&self, k: usize) -> bool {
        self.pml_sigma_x[k] > 0.0 || self.pml_sigma_y[k] > 0.0
    }

    /// Closed rectangular PEC box of size `width x height` centered at the
    /// origin, filled with relative permittivity `eps`. The walls sit exactly
    /// on lattice nodes, so `width` and `height` must be integer multiples of
    /// `dx`.
    pub fn pec_box(width: f64, height: f64, dx: f64, eps: f64) -> Result<Self, GeometryError> {
        let cells = |len: f64| -> Result<usize, GeometryError> {
            let n = len / dx;
            let r = n.round();
            if r < 2.0 || (n - r).abs() > 1e-9 * n.max(1.0) {
                return Err(GeometryError::InvalidGrid(format!(
                    "box side {len:.6e} m is not an integer multiple (>= 2) of dx {dx:.6e} m"
                )));
            }
            Ok(r as usize)
        };
        let (cx, cy) = (cells(width)?, cells(height)?);
        let (nx, ny) = (cx + 1, cy + 1);
        let n = nx * ny;
        let mut pec_mask = vec![false; n];
        let mut region = vec![Region::Cavity; n];
        for j in 0..ny {
            for i in 0..nx {
                if i == 0 || j == 0 || i == nx - 1 || j == ny - 1 {
                    pec_mask[j * nx + i] = true;
                    region[j * nx + i] = Region::Pec;
                }
            }
        }
        Ok(Self {
            nx,
            ny,
            dx,
            origin: (-0.5 * width, -0.5 * height),
            eps: vec![Complex64::new(eps, 0.0); n],
            pec_mask,
            pml_sigma_x: vec![0.0; n],
            pml_sigma_y: vec![0.0; n],
            region,
            ppw_target: 15.0,
        })
    }
}

fn half_nodes(extent: f64, dx: f64) -> usize {
    (extent / dx - 1e-9).ceil().max(1.0) as usize
}

/// Rasterizes the winged cavity.
///
/// Mirrors are parabolic arcs `y = ±gap(x)/2` truncated at the aperture,
/// where the gap equals `h`. Wing channels of gap `h` with PEC walls extend
/// from the aperture to `aperture + d`. Beyond the wings a PML band of the
/// configured width spans the full box height; the outermost node ring is PEC.
/// Dielectric mirrors are painted as shells displaced along the axis behind
/// each arc, followed by substrate and an axial PML band.
pub fn build_geometry(params: &CavityParams, grid: &GridSpec) -> Result<MaterialMap, GeometryError> {
    params.validate()?;
    grid.validate()?;

    let dx = grid.dx;
    let aperture = params.aperture();
    let available = grid.extent_x - params.wing_width - params.pml_width;
    if aperture > available + 1e-12 * grid.extent_x {
        return Err(GeometryError::DoesNotFit {
            aperture,
            extent_x: grid.extent_x,
            available,
        });
    }

    let layers: Vec<(f64, Complex64)> = match &params.mirror {
        MirrorModel::IdealPec => Vec::new(),
        MirrorModel::DielectricStack(stack) => {
            const MIN_CELLS: usize = 4;
            for layer in &stack.layers {
                let cells = layer.thickness / dx;
                if cells < MIN_CELLS as f64 - 1e-9 {
                    return Err(GeometryError::Resolution {
                        thickness: layer.thickness,
                        cells,
                        required: MIN_CELLS,
                    });
                }
            }
            let mut acc = 0.0;
            stack
                .layers
                .iter()
                .map(|l| {
                    acc += l.thickness;
                    (acc, Complex64::new(l.n, l.k_abs).powi(2))
                })
                .collect()
        }
    };
    let stack_depth = layers.last().map_or(0.0, |l| l.0);
    let substrate_eps = match &params.mirror {
        MirrorModel::IdealPec => Complex64::new(0.0, 0.0),
        MirrorModel::DielectricStack(s) => Complex64::new(s.n_sub * s.n_sub, 0.0),
    };

    let hx = half_nodes(grid.extent_x, dx);
    let hy = half_nodes(grid.extent_y, dx);
    let (nx, ny) = (2 * hx + 1, 2 * hy + 1);
    let n = nx * ny;
    let background = Complex64::new(params.eta * params.eta, 0.0);
    let wing_edge = params.wing_edge();
    let half_h = 0.5 * params.min_gap;
    let outer_x = hx as f64 * dx;
    let outer_y = hy as f64 * dx;
    // axial PML band for dielectric mirrors: last pml_width before the outer ring
    let y_pml_start = outer_y - dx - params.pml_width;

    let mut eps = vec![background; n];
    let mut pec_mask = vec![false; n];
    let mut sx = vec![0.0; n];
    let mut sy = vec![0.0; n];
    let mut region = vec![Region::Cavity; n];

    for j in 0..ny {
        let y = (j as f64 - hy as f64) * dx;
        let ay = y.abs();
        for i in 0..nx {
            let x = (i as f64 - hx as f64) * dx;
            let ax = x.abs();
            let k = j * nx + i;
            let boundary = i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
            if boundary {
                pec_mask[k] = true;
                region[k] = Region::Pec;
                continue;
            }
            if ax <= aperture {
                let half_gap = 0.5 * params.gap_unchecked(ax);
                if ay < half_gap {
                    region[k] = Region::Cavity;
                    continue;
                }
                match &params.mirror {
                    MirrorModel::IdealPec => {
                        pec_mask[k] = true;
                        region[k] = Region::Pec;
                    }
                    MirrorModel::DielectricStack(_) => {
                        let depth = ay - half_gap;
                        region[k] = Region::Mirror;
                        eps[k] = if depth < stack_depth {
                            layers
                                .iter()
                                .find(|(end, _)| depth < *end)
                                .map(|l| l.1)
                                .unwrap_or(substrate_eps)
                        } else {
                            substrate_eps
                        };
                        if ay > y_pml_start {
                            sy[k] = ((ay - y_pml_start) / params.pml_width).min(1.0);
                            region[k] = Region::Pml;
                        }
                    }
                }
            } else if ax <= wing_edge {
                if ay < half_h {
                    region[k] = Region::Wing;
                } else {
                    pec_mask[k] = true;
                    region[k] = Region::Pec;
                }
            } else {
                sx[k] = ((ax - wing_edge) / params.pml_width).min(1.0);
                region[k] = Region::Pml;
                if matches!(params.mirror, MirrorModel::DielectricStack(_)) && ay > y_pml_start {
                    sy[k] = ((ay - y_pml_start) / params.pml_width).min(1.0);
                }
            }
        }
    }

    // nodes strictly outside the PML bands but beyond them toward the outer ring
    debug_assert!(outer_x >= wing_edge);

    Ok(MaterialMap {
        nx,
        ny,
        dx,
        origin: (-outer_x, -outer_y),
        eps,
        pec_mask,
        pml_sigma_x: sx,
        pml_sigma_y: sy,
        region,
        ppw_target: grid.ppw_target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mirror::quarter_wave_stack;

    fn grid_for(p: &CavityParams) -> GridSpec {
        GridSpec::for_cavity(p, 45e9, 20.0)
    }

    #[test]
    fn gap_is_l_on_axis_and_h_at_aperture() {
        let p = CavityParams::confocal(0.01, 0.0);
        assert_eq!(p.mirror_gap(0.0).unwrap(), 0.01);
        let xa = (0.01f64 * (0.01 - 0.005)).sqrt();
        assert!((p.mirror_gap(xa).unwrap() - 0.005).abs() < 1e-15);
        assert!(matches!(
            p.mirror_gap(1.01 * xa),
            Err(GeometryError::Domain { .. })
        ));
    }

    #[test]
    fn plane_profile_has_constant_gap() {
        let mut p = CavityParams::confocal(0.01, 0.0);
        p.profile = MirrorProfile::Plane;
        for x in [0.0, 0.001, -0.003, p.aperture()] {
            assert_eq!(p.mirror_gap(x).unwrap(), 0.01);
        }
    }

    #[test]
    fn d_zero_map_is_mirror_symmetric() {
        let p = CavityParams::confocal(0.01, 0.0);
        let m = build_geometry(&p, &grid_for(&p)).unwrap();
        assert!(m.region.iter().all(|r| *r != Region::Wing));
        for j in 0..m.ny {
            for i in 0..m.nx {
                let k = m.idx(i, j);
                let kx = m.idx(m.nx - 1 - i, j);
                let ky = m.idx(i, m.ny - 1 - j);
                for other in [kx, ky] {
                    assert_eq!(m.pec_mask[k], m.pec_mask[other]);
                    assert_eq!(m.eps[k], m.eps[other]);
                    assert_eq!(m.pml_sigma_x[k], m.pml_sigma_x[other]);
                    assert_eq!(m.pml_sigma_y[k], m.pml_sigma_y[other]);
                }
            }
        }
    }

    #[test]
    fn wing_channel_has_width_d_and_gap_h() {
        let p = CavityParams::confocal(0.01, 0.002);
        let g = grid_for(&p);
        let m = build_geometry(&p, &g).unwrap();
        let xa = p.aperture();
        let dx = m.dx;
        for i in 0..m.nx {
            let x = m.x(i);
            let wing_nodes: Vec<f64> = (0..m.ny)
                .filter(|&j| m.region[m.idx(i, j)] == Region::Wing)
                .map(|j| m.y(j))
                .collect();
            if x.abs() > xa + 1e-12 && x.abs() <= xa + 0.002 {
                // open nodes are exactly those with |y| < h/2
                assert!(!wing_nodes.is_empty());
                assert!(wing_nodes.iter().all(|y| y.abs() < 0.0025));
                let span = wing_nodes.last().unwrap() - wing_nodes[0];
                assert!(span <= 0.005 && span > 0.005 - 2.0 * dx - 1e-12);
            } else {
                assert!(wing_nodes.is_empty());
            }
        }
        // transverse extent of the wing band
        let wing_x: Vec<f64> = (0..m.nx)
            .filter(|&i| m.region[m.idx(i, m.ny / 2)] == Region::Wing && m.x(i) > 0.0)
            .map(|i| m.x(i))
            .collect();
        let width = wing_x.last().unwrap() - wing_x[0] + dx;
        assert!((width - 0.002).abs() <= dx + 1e-12, "width {width}");
    }

    #[test]
    fn pml_profile_is_monotone_and_disjoint_from_pec() {
        let p = CavityParams::confocal(0.01, 0.001);
        let m = build_geometry(&p, &grid_for(&p)).unwrap();
        for k in 0..m.len() {
            assert!(!(m.pec_mask[k] && m.is_pml(k)));
            assert!(m.eps[k].im >= 0.0);
        }
        let j = m.ny / 2;
        let row: Vec<f64> = (m.nx / 2..m.nx - 1).map(|i| m.pml_sigma_x[m.idx(i, j)]).collect();
        assert!(row.windows(2).all(|w| w[1] >= w[0]));
        assert!(row.iter().any(|&s| s > 0.0));
        let edge = p.wing_edge();
        for i in 0..m.nx {
            if m.x(i).abs() <= edge {
                assert_eq!(m.pml_sigma_x[m.idx(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn pec_map_is_real_outside_pml() {
        let p = CavityParams::confocal(0.01, 0.002);
        let m = build_geometry(&p, &grid_for(&p)).unwrap();
        assert!(m.eps.iter().all(|e| e.im == 0.0));
    }

    #[test]
    fn larger_d_keeps_cavity_nodes() {
        let p0 = CavityParams::confocal(0.01, 0.0);
        let p1 = CavityParams::confocal(0.01, 0.002);
        let g0 = grid_for(&p0);
        let mut g1 = grid_for(&p1);
        g1.dx = g0.dx;
        let m0 = build_geometry(&p0, &g0).unwrap();
        let m1 = build_geometry(&p1, &g1).unwrap();
        let open = |m: &MaterialMap| {
            (0..m.len())
                .filter(|&k| !m.pec_mask[k] && !m.is_pml(k))
                .count()
        };
        assert!(open(&m1) > open(&m0));
        for j in 0..m0.ny {
            for i in 0..m0.nx {
                let k0 = m0.idx(i, j);
                if m0.region[k0] != Region::Cavity {
                    continue;
                }
                let (lx, ly) = m0.lattice_coords(i, j);
                let (ox, oy) = m1.lattice_coords(0, 0);
                let k1 = m1.idx((lx - ox) as usize, (ly - oy) as usize);
                assert_eq!(m1.region[k1], Region::Cavity);
                assert_eq!(m1.eps[k1], m0.eps[k0]);
            }
        }
    }

    #[test]
    fn aperture_must_fit_extent() {
        let p = CavityParams::confocal(0.01, 0.002);
        let mut g = grid_for(&p);
        g.extent_x = p.aperture();
        assert!(matches!(
            build_geometry(&p, &g),
            Err(GeometryError::DoesNotFit { .. })
        ));
    }

    #[test]
    fn dielectric_stack_paints_quarter_wave_shells() {
        let lambda0 = crate::consts::SPEED_OF_LIGHT / 45e9;
        let stack = quarter_wave_stack(6.0, 0.0, 1.2, 0.0, lambda0, 2, 1.0).unwrap();
        let mut p = CavityParams::confocal(0.01, 0.002);
        p.mirror = MirrorModel::DielectricStack(stack.clone());
        let t_h = lambda0 / (4.0 * 6.0);
        let t_l = lambda0 / (4.0 * 1.2);
        let mut g = GridSpec::for_cavity(&p, 45e9, 20.0);
        // under-resolved: 20 ppw gives dx > t_h / 4
        assert!(matches!(
            build_geometry(&p, &g),
            Err(GeometryError::Resolution { .. })
        ));
        g = GridSpec::for_cavity(&p, 45e9, 200.0);
        let m = build_geometry(&p, &g).unwrap();
        // walk up the axis from the mirror vertex
        let i0 = m.nx / 2;
        let mut runs: Vec<(f64, usize)> = Vec::new();
        for j in m.ny / 2..m.ny {
            if m.y(j) < 0.005 {
                continue;
            }
            let e = m.eps[m.idx(i0, j)].re;
            match runs.last_mut() {
                Some((v, c)) if *v == e => *c += 1,
                _ => runs.push((e, 1)),
            }
        }
        let shells: Vec<f64> = runs.iter().take(4).map(|r| r.0).collect();
        assert_eq!(shells, vec![36.0, 1.44, 36.0, 1.44]);
        for (v, c) in runs.iter().take(4) {
            let t = if *v == 36.0 { t_h } else { t_l };
            let expected = t / m.dx;
            assert!((*c as f64 - expected).abs() <= 1.0, "{c} vs {expected}");
        }
        assert!((m.eps[m.idx(i0, m.ny / 2)].re - 1.0).abs() < 1e-15);
    }
}

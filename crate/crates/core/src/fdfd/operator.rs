use num_complex::Complex64;

use super::{EigenMode, FdfdError, PmlParams};
use crate::consts::SPEED_OF_LIGHT;
use crate::geometry::MaterialMap;
use crate::sparse::{norm2, CsrMatrix};

/// Discrete Helmholtz pencil over the non-PEC nodes of a material map.
#[derive(Debug, Clone)]
pub struct HelmholtzOperator {
    /// Stiffness matrix (1/m^2).
    pub a: CsrMatrix,
    /// Diagonal of the mass matrix `eps s_x s_y`.
    pub b: Vec<Complex64>,
    pub n_dof: usize,
    pub dof_to_node: Vec<usize>,
    pub node_to_dof: Vec<Option<usize>>,
    /// Degrees of freedom lying in a PML band.
    pub pml_dof: Vec<bool>,
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub origin: (f64, f64),
    /// Frequency at which the stretch factors were evaluated (rad/s).
    pub omega_ref: f64,
    pub ppw_target: f64,
}

impl HelmholtzOperator {
    /// Scatters a dof vector onto the full lattice (zero on PEC nodes).
    pub fn to_field(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut f = vec![Complex64::new(0.0, 0.0); self.nx * self.ny];
        for (d, &node) in self.dof_to_node.iter().enumerate() {
            f[node] = x[d];
        }
        f
    }

    pub fn from_field(&self, f: &[Complex64]) -> Vec<Complex64> {
        self.dof_to_node.iter().map(|&n| f[n]).collect()
    }

    /// `||A x - lambda B x|| / ||lambda B x||`.
    pub fn residual(&self, lambda: Complex64, x: &[Complex64]) -> f64 {
        let ax = self.a.mul_vec(x);
        let mut num = 0.0;
        let mut den = 0.0;
        for ((axi, bi), xi) in ax.iter().zip(&self.b).zip(x) {
            let lbx = lambda * bi * xi;
            num += (axi - lbx).norm_sqr();
            den += lbx.norm_sqr();
        }
        (num / den).sqrt()
    }
}

/// Builds the pencil for `map`, with stretch factors evaluated at
/// `omega_ref`. `pml` may be `None` only when the map has no PML nodes.
pub fn assemble(
    map: &MaterialMap,
    pml: Option<&PmlParams>,
    omega_ref: f64,
) -> Result<HelmholtzOperator, FdfdError> {
    let n = map.nx * map.ny;
    for (name, len) in [
        ("eps", map.eps.len()),
        ("pec_mask", map.pec_mask.len()),
        ("pml_sigma_x", map.pml_sigma_x.len()),
        ("pml_sigma_y", map.pml_sigma_y.len()),
        ("region", map.region.len()),
    ] {
        if len != n {
            return Err(FdfdError::Assembly(format!(
                "{name} has {len} entries for a {} x {} lattice",
                map.nx, map.ny
            )));
        }
    }
    if map.nx < 3 || map.ny < 3 {
        return Err(FdfdError::Assembly("lattice smaller than 3 x 3".into()));
    }
    let has_pml = (0..n).any(|k| map.is_pml(k));
    if has_pml && pml.is_none() {
        return Err(FdfdError::Assembly(
            "map has PML nodes but no PML parameters were given".into(),
        ));
    }
    if let Some(p) = pml {
        p.validate()?;
    }
    if !(omega_ref > 0.0) {
        return Err(FdfdError::Assembly("reference frequency must be positive".into()));
    }

    let stretch = |xi: f64| match pml {
        Some(p) => p.stretch(xi, omega_ref),
        None => Complex64::new(1.0, 0.0),
    };
    let sx: Vec<Complex64> = map.pml_sigma_x.iter().map(|&v| stretch(v)).collect();
    let sy: Vec<Complex64> = map.pml_sigma_y.iter().map(|&v| stretch(v)).collect();

    // number along the shorter axis first to keep the bandwidth small
    let order: Vec<usize> = if map.ny <= map.nx {
        (0..map.nx)
            .flat_map(|i| (0..map.ny).map(move |j| (i, j)))
            .map(|(i, j)| map.idx(i, j))
            .collect()
    } else {
        (0..map.ny)
            .flat_map(|j| (0..map.nx).map(move |i| (i, j)))
            .map(|(i, j)| map.idx(i, j))
            .collect()
    };
    let mut node_to_dof = vec![None; n];
    let mut dof_to_node = Vec::new();
    for node in order {
        if !map.pec_mask[node] {
            node_to_dof[node] = Some(dof_to_node.len());
            dof_to_node.push(node);
        }
    }
    let n_dof = dof_to_node.len();
    if n_dof == 0 {
        return Err(FdfdError::Assembly("no open nodes".into()));
    }

    let inv_dx2 = 1.0 / (map.dx * map.dx);
    let mut trips: Vec<(usize, usize, Complex64)> = Vec::with_capacity(5 * n_dof);
    let add_link = |k1: usize, k2: usize, coeff: Complex64, trips: &mut Vec<_>| {
        let (d1, d2) = (node_to_dof[k1], node_to_dof[k2]);
        if let Some(d1) = d1 {
            trips.push((d1, d1, coeff));
        }
        if let Some(d2) = d2 {
            trips.push((d2, d2, coeff));
        }
        if let (Some(d1), Some(d2)) = (d1, d2) {
            trips.push((d1, d2, -coeff));
            trips.push((d2, d1, -coeff));
        }
    };
    for j in 0..map.ny {
        for i in 0..map.nx {
            let k = map.idx(i, j);
            if i + 1 < map.nx {
                let k2 = map.idx(i + 1, j);
                let sxh = (sx[k] + sx[k2]) * 0.5;
                let syh = (sy[k] + sy[k2]) * 0.5;
                add_link(k, k2, syh / sxh * inv_dx2, &mut trips);
            }
            if j + 1 < map.ny {
                let k2 = map.idx(i, j + 1);
                let sxh = (sx[k] + sx[k2]) * 0.5;
                let syh = (sy[k] + sy[k2]) * 0.5;
                add_link(k, k2, sxh / syh * inv_dx2, &mut trips);
            }
        }
    }
    let a = CsrMatrix::from_triplets(n_dof, n_dof, &trips);
    let mut b = Vec::with_capacity(n_dof);
    for (d, &node) in dof_to_node.iter().enumerate() {
        let v = map.eps[node] * sx[node] * sy[node];
        if v.norm() == 0.0 {
            return Err(FdfdError::Singularity(d));
        }
        b.push(v);
    }
    let pml_dof = dof_to_node.iter().map(|&node| map.is_pml(node)).collect();

    Ok(HelmholtzOperator {
        a,
        b,
        n_dof,
        dof_to_node,
        node_to_dof,
        pml_dof,
        nx: map.nx,
        ny: map.ny,
        dx: map.dx,
        origin: map.origin,
        omega_ref,
        ppw_target: map.ppw_target,
    })
}

/// Relative residual of `mode` with respect to `op`.
pub fn eigen_residual(op: &HelmholtzOperator, mode: &EigenMode) -> Result<f64, FdfdError> {
    if (mode.nx, mode.ny) != (op.nx, op.ny) || mode.field.len() != op.nx * op.ny {
        return Err(FdfdError::Dimension {
            got: (mode.nx, mode.ny),
            expected: (op.nx, op.ny),
        });
    }
    let x = op.from_field(&mode.field);
    if norm2(&x) == 0.0 {
        return Err(FdfdError::Dimension {
            got: (mode.nx, mode.ny),
            expected: (op.nx, op.ny),
        });
    }
    let k = mode.omega / SPEED_OF_LIGHT;
    Ok(op.residual(k * k, &x))
}

//! Portable plain-text grid dumps.
//!
//! ```text
//! grid <name> <nx> <ny> <dx> <x0> <y0>
//! [omega <re> <im> residual <r>]
//! <re> <im>        one line per node, row-major (x fastest)
//! ```

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use num_complex::Complex64;

use crate::fdfd::EigenMode;
use crate::geometry::MaterialMap;

#[derive(Debug, Clone, PartialEq)]
pub struct GridDump {
    pub name: String,
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub origin: (f64, f64),
    /// `(Re omega, Im omega, residual)` for mode dumps.
    pub mode_header: Option<(f64, f64, f64)>,
    pub values: Vec<Complex64>,
}

impl GridDump {
    pub fn permittivity(map: &MaterialMap) -> Self {
        Self::from_map(map, "eps", map.eps.clone())
    }

    pub fn pec_mask(map: &MaterialMap) -> Self {
        let values = map
            .pec_mask
            .iter()
            .map(|&p| Complex64::new(if p { 1.0 } else { 0.0 }, 0.0))
            .collect();
        Self::from_map(map, "pec_mask", values)
    }

    fn from_map(map: &MaterialMap, name: &str, values: Vec<Complex64>) -> Self {
        Self {
            name: name.to_string(),
            nx: map.nx,
            ny: map.ny,
            dx: map.dx,
            origin: map.origin,
            mode_header: None,
            values,
        }
    }

    pub fn mode(mode: &EigenMode) -> Self {
        Self {
            name: "mode".to_string(),
            nx: mode.nx,
            ny: mode.ny,
            dx: mode.dx,
            origin: mode.origin,
            mode_header: Some((mode.omega.re, mode.omega.im, mode.residual)),
            values: mode.field.clone(),
        }
    }

    pub fn write<W: Write>(&self, mut out: W) -> io::Result<()> {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "grid {} {} {} {:.16e} {:.16e} {:.16e}",
            self.name, self.nx, self.ny, self.dx, self.origin.0, self.origin.1
        );
        if let Some((re, im, res)) = self.mode_header {
            let _ = writeln!(s, "omega {re:.16e} {im:.16e} residual {res:.16e}");
        }
        out.write_all(s.as_bytes())?;
        for v in &self.values {
            writeln!(out, "{:.16e} {:.16e}", v.re, v.im)?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(input: R) -> io::Result<Self> {
        let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| bad("empty grid file"))??;
        let f: Vec<&str> = header.split_whitespace().collect();
        if f.len() != 7 || f[0] != "grid" {
            return Err(bad("malformed grid header"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad("bad number"));
        let int = |s: &str| s.parse::<usize>().map_err(|_| bad("bad integer"));
        let (nx, ny) = (int(f[2])?, int(f[3])?);
        let mut dump = Self {
            name: f[1].to_string(),
            nx,
            ny,
            dx: num(f[4])?,
            origin: (num(f[5])?, num(f[6])?),
            mode_header: None,
            values: Vec::with_capacity(nx * ny),
        };
        for line in lines {
            let line = line?;
            let p: Vec<&str> = line.split_whitespace().collect();
            match p.as_slice() {
                ["omega", re, im, "residual", r] => {
                    dump.mode_header = Some((num(re)?, num(im)?, num(r)?))
                }
                [re, im] => dump.values.push(Complex64::new(num(re)?, num(im)?)),
                [] => {}
                _ => return Err(bad("malformed grid line")),
            }
        }
        if dump.values.len() != nx * ny {
            return Err(bad("value count does not match dims"));
        }
        Ok(dump)
    }
}

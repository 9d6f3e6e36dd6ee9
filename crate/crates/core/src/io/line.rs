//! Plot-over-line sampling and its CSV form.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::geometry::Vec2;
use crate::mesh::{CellLocator, MovingMesh};
use crate::scalar::Scalar;
use crate::solver::SystemState;

/// First line of every line CSV.
pub const LINE_CSV_HEADER: &str = "# fvmm plot-over-line v1";
pub const LINE_CSV_COLUMNS: &str = "arclength,x,y,saturation,pressure,saturation_gamma,pressure_gamma,aperture";

/// Interface values at a sample on `Γ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterfaceSample {
    pub saturation: f64,
    pub pressure: f64,
    pub aperture: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineSample {
    pub arclength: f64,
    pub x: f64,
    pub y: f64,
    pub saturation: f64,
    pub pressure: f64,
    pub interface: Option<InterfaceSample>,
}

fn on_segment<T: Scalar>(p: Vec2<T>, a: Vec2<T>, b: Vec2<T>) -> bool {
    let ab = b - a;
    let l = ab.norm();
    if l == T::zero() {
        return false;
    }
    let t = (p - a).dot(ab) / (l * l);
    let off = (p - a).cross(ab).abs() / l;
    off <= T::lit(1e-10) * l.max(T::one()) && t >= T::zero() && t <= T::one()
}

/// `n` equidistant samples from `a` to `b`. A sample on an edge shared by two
/// cells reads the cell with the lower index.
pub fn sample_line<T: Scalar>(
    mesh: &MovingMesh<T>,
    state: &SystemState<T>,
    a: Vec2<T>,
    b: Vec2<T>,
    n: usize,
) -> Vec<LineSample> {
    let locator = CellLocator::new(mesh, &mesh.points);
    let n = n.max(2);
    let len = (b - a).norm();
    (0..n)
        .map(|i| {
            let t = T::lit(i as f64) / T::lit((n - 1) as f64);
            let p = a + (b - a) * t;
            let (s, pr) = match locator.locate(mesh, &mesh.points, p) {
                Some(c) => (state.bulk.saturation[c].to_f64_lossy(), state.bulk.pressure[c].to_f64_lossy()),
                None => (f64::NAN, f64::NAN),
            };
            let interface = mesh
                .interface
                .iter()
                .position(|&[u, v]| on_segment(p, mesh.points[u], mesh.points[v]))
                .map(|e| InterfaceSample {
                    saturation: state.interface.saturation[e].to_f64_lossy(),
                    pressure: state.interface.pressure[e].to_f64_lossy(),
                    aperture: state.interface.aperture[e].to_f64_lossy(),
                });
            LineSample {
                arclength: (len * t).to_f64_lossy(),
                x: p.x.to_f64_lossy(),
                y: p.y.to_f64_lossy(),
                saturation: s,
                pressure: pr,
                interface,
            }
        })
        .collect()
}

/// Writes the versioned header, column names and one row per sample; empty
/// fields off the interface.
pub fn write_line_csv<W: Write>(mut w: W, samples: &[LineSample]) -> Result<(), Error> {
    writeln!(w, "{LINE_CSV_HEADER}")?;
    writeln!(w, "{LINE_CSV_COLUMNS}")?;
    for s in samples {
        write!(w, "{:e},{:e},{:e},{:e},{:e}", s.arclength, s.x, s.y, s.saturation, s.pressure)?;
        match s.interface {
            Some(i) => writeln!(w, ",{:e},{:e},{:e}", i.saturation, i.pressure, i.aperture)?,
            None => writeln!(w, ",,,")?,
        }
    }
    Ok(())
}

/// Inverse of [`write_line_csv`].
pub fn read_line_csv(text: &str) -> Result<Vec<LineSample>, Error> {
    let mut lines = text.lines();
    if lines.next() != Some(LINE_CSV_HEADER) {
        return Err(Error::Format("line csv: unknown version header".into()));
    }
    if lines.next() != Some(LINE_CSV_COLUMNS) {
        return Err(Error::Format("line csv: unexpected columns".into()));
    }
    let mut out = Vec::new();
    for (k, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(Error::Format(format!("line csv row {}: expected 8 fields", k + 1)));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Format(format!("line csv row {}: bad `{s}`", k + 1)));
        let interface = if f[5].is_empty() {
            None
        } else {
            Some(InterfaceSample { saturation: num(f[5])?, pressure: num(f[6])?, aperture: num(f[7])? })
        };
        out.push(LineSample {
            arclength: num(f[0])?,
            x: num(f[1])?,
            y: num(f[2])?,
            saturation: num(f[3])?,
            pressure: num(f[4])?,
            interface,
        });
    }
    Ok(out)
}

//! Legacy ASCII VTK unstructured grids.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::mesh::MovingMesh;
use crate::scalar::Scalar;
use crate::solver::SystemState;

pub const VTK_TRIANGLE: u8 = 5;
pub const VTK_LINE: u8 = 3;

/// Parsed contents of a legacy unstructured grid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VtkGrid {
    pub title: String,
    pub points: Vec<[f64; 3]>,
    pub cells: Vec<Vec<usize>>,
    pub cell_types: Vec<u8>,
    pub cell_data: BTreeMap<String, Vec<f64>>,
}

impl VtkGrid {
    pub fn to_legacy_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# vtk DataFile Version 3.0");
        let _ = writeln!(s, "{}", self.title.replace('\n', " "));
        let _ = writeln!(s, "ASCII\nDATASET UNSTRUCTURED_GRID");
        let _ = writeln!(s, "POINTS {} double", self.points.len());
        for p in &self.points {
            let _ = writeln!(s, "{:e} {:e} {:e}", p[0], p[1], p[2]);
        }
        let size: usize = self.cells.iter().map(|c| c.len() + 1).sum();
        let _ = writeln!(s, "CELLS {} {}", self.cells.len(), size);
        for c in &self.cells {
            let _ = write!(s, "{}", c.len());
            for v in c {
                let _ = write!(s, " {v}");
            }
            s.push('\n');
        }
        let _ = writeln!(s, "CELL_TYPES {}", self.cell_types.len());
        for t in &self.cell_types {
            let _ = writeln!(s, "{t}");
        }
        if !self.cell_data.is_empty() {
            let _ = writeln!(s, "CELL_DATA {}", self.cells.len());
            for (name, values) in &self.cell_data {
                let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
                for v in values {
                    // `{:e}` round-trips f64 exactly
                    let _ = writeln!(s, "{v:e}");
                }
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, Error> {
        let bad = |m: &str| Error::Format(format!("vtk: {m}"));
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty file"))?;
        if !header.starts_with("# vtk DataFile") {
            return Err(bad("missing header"));
        }
        let title = lines.next().unwrap_or_default().to_string();
        let mut tokens = lines.flat_map(str::split_whitespace);
        let mut next = || tokens.next().ok_or_else(|| bad("unexpected end of file"));
        let mut grid = VtkGrid { title, ..Default::default() };
        if next()? != "ASCII" {
            return Err(bad("only ASCII files are supported"));
        }
        if (next()?, next()?) != ("DATASET", "UNSTRUCTURED_GRID") {
            return Err(bad("expected DATASET UNSTRUCTURED_GRID"));
        }
        let num = |t: &str| t.parse::<usize>().map_err(|_| bad(&format!("bad integer `{t}`")));
        let real = |t: &str| t.parse::<f64>().map_err(|_| bad(&format!("bad number `{t}`")));
        let mut n_cells = 0;
        while let Ok(kw) = next() {
            match kw {
                "POINTS" => {
                    let n = num(next()?)?;
                    next()?;
                    for _ in 0..n {
                        grid.points.push([real(next()?)?, real(next()?)?, real(next()?)?]);
                    }
                }
                "CELLS" => {
                    n_cells = num(next()?)?;
                    next()?;
                    for _ in 0..n_cells {
                        let k = num(next()?)?;
                        let mut c = Vec::with_capacity(k);
                        for _ in 0..k {
                            c.push(num(next()?)?);
                        }
                        grid.cells.push(c);
                    }
                }
                "CELL_TYPES" => {
                    let n = num(next()?)?;
                    for _ in 0..n {
                        grid.cell_types.push(num(next()?)? as u8);
                    }
                }
                "CELL_DATA" => {
                    num(next()?)?;
                }
                "SCALARS" => {
                    let name = next()?.to_string();
                    next()?;
                    next()?;
                    if (next()?, next()?) != ("LOOKUP_TABLE", "default") {
                        return Err(bad("expected LOOKUP_TABLE default"));
                    }
                    let mut values = Vec::with_capacity(n_cells);
                    for _ in 0..n_cells {
                        values.push(real(next()?)?);
                    }
                    grid.cell_data.insert(name, values);
                }
                other => return Err(bad(&format!("unsupported section `{other}`"))),
            }
        }
        Ok(grid)
    }

    pub fn write(&self, path: &Path) -> Result<(), Error> {
        std::fs::write(path, self.to_legacy_string())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, Error> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

fn lossy<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64_lossy()).collect()
}

fn points<T: Scalar>(mesh: &MovingMesh<T>) -> Vec<[f64; 3]> {
    mesh.points.iter().map(|p| [p.x.to_f64_lossy(), p.y.to_f64_lossy(), 0.0]).collect()
}

/// Bulk triangles with cell data `saturation` and `pressure`.
pub fn bulk_grid<T: Scalar>(mesh: &MovingMesh<T>, state: &SystemState<T>) -> VtkGrid {
    let mut cell_data = BTreeMap::new();
    cell_data.insert("saturation".to_string(), lossy(&state.bulk.saturation));
    cell_data.insert("pressure".to_string(), lossy(&state.bulk.pressure));
    VtkGrid {
        title: format!("bulk t={:e}", state.time.to_f64_lossy()),
        points: points(mesh),
        cells: mesh.triangles.iter().map(|t| t.to_vec()).collect(),
        cell_types: vec![VTK_TRIANGLE; mesh.num_cells()],
        cell_data,
    }
}

/// Interface polyline with `saturation_gamma`, `pressure_gamma` and `aperture`.
pub fn interface_grid<T: Scalar>(mesh: &MovingMesh<T>, state: &SystemState<T>) -> VtkGrid {
    let mut cell_data = BTreeMap::new();
    cell_data.insert("saturation_gamma".to_string(), lossy(&state.interface.saturation));
    cell_data.insert("pressure_gamma".to_string(), lossy(&state.interface.pressure));
    cell_data.insert("aperture".to_string(), lossy(&state.interface.aperture));
    VtkGrid {
        title: format!("interface t={:e}", state.time.to_f64_lossy()),
        points: points(mesh),
        cells: mesh.interface.iter().map(|e| e.to_vec()).collect(),
        cell_types: vec![VTK_LINE; mesh.num_interface()],
        cell_data,
    }
}

/// Writes `<stem>_bulk.vtk` and `<stem>_interface.vtk` into `dir`, returning
/// the two file names.
pub fn write_vtk<T: Scalar>(
    mesh: &MovingMesh<T>,
    state: &SystemState<T>,
    dir: &Path,
    stem: &str,
) -> Result<[String; 2], Error> {
    let names = [format!("{stem}_bulk.vtk"), format!("{stem}_interface.vtk")];
    bulk_grid(mesh, state).write(&dir.join(&names[0]))?;
    interface_grid(mesh, state).write(&dir.join(&names[1]))?;
    Ok(names)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesEntry {
    pub name: String,
    pub time: f64,
}

/// ParaView `.vtk.series` index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    #[serde(rename = "file-series-version")]
    pub version: String,
    pub files: Vec<SeriesEntry>,
}

impl Default for Series {
    fn default() -> Self {
        Self { version: "1.0".into(), files: Vec::new() }
    }
}

impl Series {
    pub fn push(&mut self, name: impl Into<String>, time: f64) {
        self.files.push(SeriesEntry { name: name.into(), time });
    }

    pub fn write(&self, path: &Path) -> Result<(), Error> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

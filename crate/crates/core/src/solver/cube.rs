use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::costs::{terminal_cost, TerminalSpec};
use crate::error::{Error, Result};
use crate::grid::Grid3;
use crate::model::ModelConfig;

use super::slice::{solve_time_slice_into, SliceContext, SliceWorkspace};

/// Value function on the full mesh, stored `[n][ℓ][j]` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueCube {
    pub n_t: usize,
    pub n_z: usize,
    pub n_q: usize,
    pub data: Vec<f64>,
}

/// Optimal controls for steps `0..N_t`, stored `[n][ℓ][j]` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyCube {
    pub n_t: usize,
    pub n_z: usize,
    pub n_q: usize,
    pub data: Vec<f64>,
}

macro_rules! cube_access {
    ($t:ty) => {
        impl $t {
            #[inline]
            pub fn plane_len(&self) -> usize {
                (self.n_z + 1) * (self.n_q + 1)
            }

            #[inline]
            pub fn index(&self, n: usize, l: usize, j: usize) -> usize {
                (n * (self.n_z + 1) + l) * (self.n_q + 1) + j
            }

            #[inline]
            pub fn get(&self, n: usize, l: usize, j: usize) -> f64 {
                self.data[self.index(n, l, j)]
            }

            pub fn slice(&self, n: usize) -> &[f64] {
                let p = self.plane_len();
                &self.data[n * p..(n + 1) * p]
            }

            pub fn slice_count(&self) -> usize {
                self.data.len() / self.plane_len()
            }
        }
    };
}

cube_access!(ValueCube);
cube_access!(PolicyCube);

/// Receives slices as the recursion produces them, from `N_t` down to 0.
pub trait SliceSink {
    fn terminal(&mut self, values: &[f64]) -> Result<()>;
    fn slice(&mut self, n: usize, values: &[f64], policy: &[f64]) -> Result<()>;
}

/// Largest value over all slices and where it occurs.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CubeMax {
    pub value: f64,
    pub n: usize,
    pub l: usize,
    pub j: usize,
}

impl Default for CubeMax {
    fn default() -> Self {
        Self {
            value: f64::NEG_INFINITY,
            n: 0,
            l: 0,
            j: 0,
        }
    }
}

impl CubeMax {
    /// Ties keep the earliest node in `[n][ℓ][j]` order.
    pub fn update(&mut self, n: usize, plane: &[f64], n_q: usize) {
        for (i, &v) in plane.iter().enumerate() {
            let (l, j) = (i / (n_q + 1), i % (n_q + 1));
            if v > self.value || (v == self.value && (n, l, j) < (self.n, self.l, self.j)) {
                *self = Self { value: v, n, l, j };
            }
        }
    }

    pub fn of_cube(cube: &ValueCube) -> Self {
        let mut m = Self::default();
        for n in 0..cube.slice_count() {
            m.update(n, cube.slice(n), cube.n_q);
        }
        m
    }
}

/// Collects both cubes in memory.
#[derive(Debug)]
pub struct CubeCollector {
    pub values: ValueCube,
    pub policy: PolicyCube,
}

impl CubeCollector {
    pub fn new(grid: &Grid3) -> Self {
        let plane = grid.plane_len();
        Self {
            values: ValueCube {
                n_t: grid.n_t,
                n_z: grid.n_z,
                n_q: grid.n_q,
                data: vec![0.0; (grid.n_t + 1) * plane],
            },
            policy: PolicyCube {
                n_t: grid.n_t,
                n_z: grid.n_z,
                n_q: grid.n_q,
                data: vec![0.0; grid.n_t * plane],
            },
        }
    }
}

impl SliceSink for CubeCollector {
    fn terminal(&mut self, values: &[f64]) -> Result<()> {
        let p = values.len();
        let n = self.values.n_t;
        self.values.data[n * p..(n + 1) * p].copy_from_slice(values);
        Ok(())
    }

    fn slice(&mut self, n: usize, values: &[f64], policy: &[f64]) -> Result<()> {
        let p = values.len();
        self.values.data[n * p..(n + 1) * p].copy_from_slice(values);
        self.policy.data[n * p..(n + 1) * p].copy_from_slice(policy);
        Ok(())
    }
}

/// Tracks the cube maximum without storing slices.
#[derive(Debug, Clone)]
pub struct StreamingMax {
    n_t: usize,
    n_q: usize,
    pub max: CubeMax,
}

impl StreamingMax {
    pub fn new(grid: &Grid3) -> Self {
        Self {
            n_t: grid.n_t,
            n_q: grid.n_q,
            max: CubeMax::default(),
        }
    }
}

impl SliceSink for StreamingMax {
    fn terminal(&mut self, values: &[f64]) -> Result<()> {
        self.max.update(self.n_t, values, self.n_q);
        Ok(())
    }

    fn slice(&mut self, n: usize, values: &[f64], _policy: &[f64]) -> Result<()> {
        self.max.update(n, values, self.n_q);
        Ok(())
    }
}

/// Forwards every slice to several sinks in order.
pub struct Tee<'a>(pub Vec<&'a mut dyn SliceSink>);

impl SliceSink for Tee<'_> {
    fn terminal(&mut self, values: &[f64]) -> Result<()> {
        self.0.iter_mut().try_for_each(|s| s.terminal(values))
    }

    fn slice(&mut self, n: usize, values: &[f64], policy: &[f64]) -> Result<()> {
        self.0.iter_mut().try_for_each(|s| s.slice(n, values, policy))
    }
}

/// Terminal slice `Φ(q_j)` repeated over every demand node.
pub fn terminal_slice(grid: &Grid3, spec: &TerminalSpec) -> Vec<f64> {
    let row: Vec<f64> = (0..=grid.n_q).map(|j| terminal_cost(grid.q(j), spec)).collect();
    let mut out = Vec::with_capacity(grid.plane_len());
    for _ in 0..=grid.n_z {
        out.extend_from_slice(&row);
    }
    out
}

/// Backward recursion streaming each slice into `sink`.
pub fn backward_recursion_with<S: SliceSink + ?Sized>(
    model: &ModelConfig,
    grid: &Grid3,
    terminal: &TerminalSpec,
    sink: &mut S,
) -> Result<()> {
    let ctx = SliceContext::new(grid, model)?;
    let mut ws = SliceWorkspace::default();
    let mut next = terminal_slice(grid, terminal);
    sink.terminal(&next)?;
    let mut cur = vec![0.0; grid.plane_len()];
    let mut pol = vec![0.0; grid.plane_len()];
    for n in (0..grid.n_t).rev() {
        solve_time_slice_into(n, &next, &mut cur, &mut pol, &ctx, &mut ws, grid, model)?;
        if let Some(bad) = cur.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite value at step {n}, node {bad}"
            )));
        }
        sink.slice(n, &cur, &pol)?;
        std::mem::swap(&mut next, &mut cur);
    }
    Ok(())
}

/// Full backward recursion returning both cubes.
pub fn backward_recursion(
    model: &ModelConfig,
    grid: &Grid3,
    terminal: &TerminalSpec,
) -> Result<(ValueCube, PolicyCube)> {
    let mut c = CubeCollector::new(grid);
    backward_recursion_with(model, grid, terminal, &mut c)?;
    Ok((c.values, c.policy))
}

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"TESCUBE1";

/// Binary snapshot: magic, three little-endian `u64` dimensions
/// (`N_t + 1`, `N_z + 1`, `N_q + 1`), the 32-byte config hash, then the
/// value cube and the policy cube (`N_t` slices) as little-endian `f64`
/// in `[n][ℓ][j]` order.
pub fn write_snapshot(
    path: impl AsRef<Path>,
    values: &ValueCube,
    policy: &PolicyCube,
    config_hash: &[u8; 32],
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(SNAPSHOT_MAGIC)?;
    for d in [values.n_t + 1, values.n_z + 1, values.n_q + 1] {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    w.write_all(config_hash)?;
    for x in values.data.iter().chain(&policy.data) {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug)]
pub struct Snapshot {
    pub config_hash: [u8; 32],
    pub values: ValueCube,
    pub policy: PolicyCube,
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<Snapshot> {
    let file = File::open(path)?;
    let len = file.metadata()?.len();
    let mut r = BufReader::new(file);
    let header_len = 8 + 24 + 32;
    if len < header_len {
        return Err(Error::Snapshot(format!("file too short ({len} bytes)")));
    }
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let mut dims = [0usize; 3];
    for d in &mut dims {
        let mut b = [0u8; 8];
        r.read_exact(&mut b)?;
        *d = u64::from_le_bytes(b) as usize;
    }
    let [nt1, nz1, nq1] = dims;
    if nt1 < 2 || nz1 < 4 || nq1 < 4 {
        return Err(Error::Snapshot(format!("invalid dimensions {dims:?}")));
    }
    let mut config_hash = [0u8; 32];
    r.read_exact(&mut config_hash)?;
    let plane = nz1 * nq1;
    let n_values = nt1 * plane;
    let n_policy = (nt1 - 1) * plane;
    let expected = header_len + 8 * (n_values + n_policy) as u64;
    if len != expected {
        return Err(Error::Snapshot(format!(
            "size {len} does not match dimensions {dims:?} (expected {expected})"
        )));
    }
    let mut read_vec = |count: usize| -> Result<Vec<f64>> {
        let mut bytes = vec![0u8; count * 8];
        r.read_exact(&mut bytes)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    };
    let values = read_vec(n_values)?;
    let policy = read_vec(n_policy)?;
    let (n_t, n_z, n_q) = (nt1 - 1, nz1 - 1, nq1 - 1);
    Ok(Snapshot {
        config_hash,
        values: ValueCube {
            n_t,
            n_z,
            n_q,
            data: values,
        },
        policy: PolicyCube {
            n_t,
            n_z,
            n_q,
            data: policy,
        },
    })
}

/// CSV of one time slice with columns `l,j,z,q,value,control`. The control
/// column is empty at `n = N_t`.
pub fn write_slice_csv(
    w: &mut impl Write,
    n: usize,
    grid: &Grid3,
    values: &ValueCube,
    policy: &PolicyCube,
) -> Result<()> {
    writeln!(w, "l,j,z,q,value,control")?;
    for l in 0..=grid.n_z {
        for j in 0..=grid.n_q {
            let v = values.get(n, l, j);
            if n < policy.n_t {
                writeln!(
                    w,
                    "{l},{j},{:.16e},{:.16e},{v:.16e},{:.16e}",
                    grid.z(l),
                    grid.q(j),
                    policy.get(n, l, j)
                )?;
            } else {
                writeln!(w, "{l},{j},{:.16e},{:.16e},{v:.16e},", grid.z(l), grid.q(j))?;
            }
        }
    }
    Ok(())
}

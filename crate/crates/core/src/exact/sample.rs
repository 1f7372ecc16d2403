use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use super::lattice::MagLattice;
use super::{euclidean, magnetization_law_on};
use crate::error::{Error, Result};
use crate::model::{Configuration, ValidatedModel};

const MAGIC: &str = "# meanfield-lab samples v1";
/// Draws per RNG stream.
const BLOCK: usize = 1024;

/// I.i.d. draws of the per-species spin sums `S_l = N_l m_l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSet {
    sizes: Vec<usize>,
    seed: u64,
    rows: Vec<Vec<i64>>,
}

impl SampleSet {
    pub fn new(sizes: Vec<usize>, seed: u64, rows: Vec<Vec<i64>>) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::InconsistentRows(format!("invalid block sizes {sizes:?}")));
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != sizes.len() {
                return Err(Error::InconsistentRows(format!(
                    "row {r} has {} entries, expected {}",
                    row.len(),
                    sizes.len()
                )));
            }
            for (&s, &size) in row.iter().zip(&sizes) {
                let size = size as i64;
                if s.abs() > size || (s + size) % 2 != 0 {
                    return Err(Error::InconsistentRows(format!(
                        "row {r}: sum {s} impossible for a block of {size} spins"
                    )));
                }
            }
        }
        Ok(Self { sizes, seed, rows })
    }

    pub fn n(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rows(&self) -> &[Vec<i64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn magnetization(&self, row: usize) -> Vec<f64> {
        self.rows[row]
            .iter()
            .zip(&self.sizes)
            .map(|(&s, &n)| s as f64 / n as f64)
            .collect()
    }

    /// Rows whose magnetization lies in the closed Euclidean ball.
    pub fn restricted_to_ball(&self, center: &[f64], radius: f64) -> Result<SampleSet> {
        if center.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: center.len() });
        }
        let rows = (0..self.len())
            .filter(|&r| euclidean(&self.magnetization(r), center) <= radius)
            .map(|r| self.rows[r].clone())
            .collect();
        Ok(SampleSet { sizes: self.sizes.clone(), seed: self.seed, rows })
    }

    /// Relabels species: new species `i` is old species `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<SampleSet> {
        if perm.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: perm.len() });
        }
        SampleSet::new(
            perm.iter().map(|&p| self.sizes[p]).collect(),
            self.seed,
            self.rows.iter().map(|row| perm.iter().map(|&p| row[p]).collect()).collect(),
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let sizes: Vec<String> = self.sizes.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "# n={}", self.n());
        let _ = writeln!(out, "# N=[{}]", sizes.join(","));
        let _ = writeln!(out, "# seed={}", self.seed);
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim_end) != Some(MAGIC) {
            return Err(Error::Parse(format!("sample file must start with '{MAGIC}'")));
        }
        let (mut n, mut sizes, mut seed) = (None, None, None);
        let mut rows = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let (key, value) = meta
                    .trim()
                    .split_once('=')
                    .ok_or_else(|| Error::Parse(format!("malformed metadata line '{line}'")))?;
                let value = value.trim();
                match key.trim() {
                    "n" => n = Some(parse_num::<usize>(value)?),
                    "N" => {
                        let inner = value
                            .strip_prefix('[')
                            .and_then(|v| v.strip_suffix(']'))
                            .ok_or_else(|| Error::Parse(format!("malformed sizes '{value}'")))?;
                        sizes = Some(
                            inner
                                .split(',')
                                .map(|s| parse_num::<usize>(s.trim()))
                                .collect::<Result<Vec<_>>>()?,
                        );
                    }
                    "seed" => seed = Some(parse_num::<u64>(value)?),
                    _ => {}
                }
                continue;
            }
            let row = line
                .split(',')
                .map(|c| {
                    c.trim()
                        .parse::<i64>()
                        .map_err(|_| Error::InconsistentRows(format!("line {}: bad integer '{c}'", lineno + 2)))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let n = n.ok_or_else(|| Error::Parse("missing '# n=' line".into()))?;
        let sizes = sizes.ok_or_else(|| Error::Parse("missing '# N=' line".into()))?;
        let seed = seed.ok_or_else(|| Error::Parse("missing '# seed=' line".into()))?;
        if sizes.len() != n {
            return Err(Error::InconsistentRows(format!("n={n} but {} block sizes", sizes.len())));
        }
        SampleSet::new(sizes, seed, rows)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse(format!("bad number '{s}'")))
}

/// `m` exact draws from the Boltzmann-Gibbs law of the magnetization.
///
/// Uses ChaCha20 seeded from `seed`, one stream per block of 1024 draws,
/// with inverse-CDF lookup on the lattice. Output is bit-reproducible and
/// independent of the thread count.
pub fn exact_sample(model: &ValidatedModel, sizes: &[usize], m: usize, seed: u64) -> Result<SampleSet> {
    let lattice = MagLattice::new(model, sizes)?;
    exact_sample_with_lattice(model, &lattice, m, seed)
}

pub fn exact_sample_with_lattice(
    model: &ValidatedModel,
    lattice: &MagLattice,
    m: usize,
    seed: u64,
) -> Result<SampleSet> {
    let law = magnetization_law_on(model, lattice)?;
    let mut cdf = Vec::with_capacity(law.log_weights.len());
    let mut acc = 0.0;
    for &w in &law.log_weights {
        acc += w.exp();
        cdf.push(acc);
    }
    let total = acc;
    let last = cdf.len() - 1;
    let blocks = m.div_ceil(BLOCK);
    let rows: Vec<Vec<i64>> = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = BLOCK.min(m - b * BLOCK);
            (0..count)
                .map(|_| {
                    let u: f64 = rng.random::<f64>() * total;
                    let idx = cdf.partition_point(|&c| c <= u).min(last);
                    lattice.sums(idx)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    SampleSet::new(lattice.sizes().to_vec(), seed, rows)
}

/// Spin configuration with the given per-species sums: in each block the up
/// spins come first.
pub fn materialize_configuration(model: &ValidatedModel, sizes: &[usize], sums: &[i64]) -> Result<Configuration> {
    if sums.len() != sizes.len() {
        return Err(Error::DimensionMismatch { expected: sizes.len(), got: sums.len() });
    }
    let mut spins = Vec::with_capacity(sizes.iter().sum());
    for (&size, &s) in sizes.iter().zip(sums) {
        let size_i = size as i64;
        if s.abs() > size_i || (s + size_i) % 2 != 0 {
            return Err(Error::InvalidConfiguration(format!("sum {s} impossible for {size} spins")));
        }
        let up = ((s + size_i) / 2) as usize;
        spins.extend(std::iter::repeat_n(1.0, up));
        spins.extend(std::iter::repeat_n(-1.0, size - up));
    }
    Configuration::new(model, spins, sizes.to_vec())
}

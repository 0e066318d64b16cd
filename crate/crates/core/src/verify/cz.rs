//! Calderón–Zygmund decomposition of |f|^q at height h^q on a dyadic
//! Cartesian grid of the unit cube, and the smoothed split of its bad parts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{ensure, Error, Result};
use crate::grids::RadialFunction;
use crate::spectral::{apply_multiplier, HankelPlan, Multiplier};

use super::{Verdict, VerificationReport};

/// Samples of f on the 2^levels-per-side grid of [0, 1)^dim, one value per
/// cell, in row-major order (last coordinate fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct CartesianSamples {
    pub dim: usize,
    pub levels: u32,
    pub values: Vec<f64>,
}

impl CartesianSamples {
    pub fn new(dim: usize, levels: u32, values: Vec<f64>) -> Result<Self> {
        ensure((1..=3).contains(&dim), || format!("dimension must be 1, 2 or 3, got {dim}"))?;
        let side = 1usize << levels;
        ensure(values.len() == side.pow(dim as u32), || {
            format!("expected {} samples, got {}", side.pow(dim as u32), values.len())
        })?;
        Ok(Self { dim, levels, values })
    }

    /// Cells per side.
    pub fn side(&self) -> usize {
        1 << self.levels
    }

    /// Measure of one cell.
    pub fn cell_volume(&self) -> f64 {
        (self.side() as f64).powi(-(self.dim as i32))
    }

    /// Cell coordinates of a flat sample index.
    pub fn coords(&self, flat: usize) -> Vec<usize> {
        let side = self.side();
        let mut c = vec![0; self.dim];
        let mut rest = flat;
        for k in (0..self.dim).rev() {
            c[k] = rest % side;
            rest /= side;
        }
        c
    }

    /// Flat index of cell coordinates.
    pub fn flat(&self, coords: &[usize]) -> usize {
        coords.iter().fold(0, |acc, &c| acc * self.side() + c)
    }
}

/// A dyadic subcube of [0, 1)^dim.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct DyadicCube {
    pub level: u32,
    /// Position in units of the side length 2^{−level}.
    pub index: Vec<usize>,
}

impl DyadicCube {
    pub fn side(&self) -> f64 {
        0.5f64.powi(self.level as i32)
    }

    pub fn volume(&self, dim: usize) -> f64 {
        self.side().powi(dim as i32)
    }

    /// Half the diagonal, the radius r_k of the cube.
    pub fn radius(&self, dim: usize) -> f64 {
        0.5 * self.side() * (dim as f64).sqrt()
    }

    /// Whether the sample cell at `coords` (finest level `levels`) lies in the cube.
    pub fn contains(&self, coords: &[usize], levels: u32) -> bool {
        let shift = levels - self.level;
        coords.iter().zip(&self.index).all(|(&c, &i)| c >> shift == i)
    }

    fn children(&self, dim: usize) -> Vec<DyadicCube> {
        (0..1usize << dim)
            .map(|mask| DyadicCube {
                level: self.level + 1,
                index: (0..dim).map(|k| 2 * self.index[k] + ((mask >> (dim - 1 - k)) & 1)).collect(),
            })
            .collect()
    }
}

/// Output of [`cz_decompose`].
#[derive(Debug, Clone, PartialEq)]
pub struct CZDecomposition {
    pub height: f64,
    pub q: f64,
    /// Selected cubes, sorted.
    pub cubes: Vec<DyadicCube>,
    /// g = f off the union of the cubes, 0 on it.
    pub good: Vec<f64>,
    /// b_k = χ_{Q_k}f as (sample index, value) pairs, aligned with `cubes`.
    pub bad: Vec<Vec<(usize, f64)>>,
    /// Smoothing order ⌊dim/4⌋ + 1.
    pub mu: usize,
}

/// Sums of |f|^q over every dyadic cube, finest level last.
fn pyramid(samples: &CartesianSamples, q: f64) -> Vec<Vec<f64>> {
    let dim = samples.dim;
    let mut levels = vec![samples.values.iter().map(|v| v.abs().powf(q)).collect::<Vec<f64>>()];
    for lev in (0..samples.levels).rev() {
        let side = 1usize << lev;
        let finer = levels.last().expect("at least one level");
        let fside = side * 2;
        let mut coarse = vec![0.0; side.pow(dim as u32)];
        for (flat, v) in finer.iter().enumerate() {
            let mut rest = flat;
            let mut idx = 0;
            let mut mul = 1;
            for _ in 0..dim {
                idx += (rest % fside / 2) * mul;
                rest /= fside;
                mul *= side;
            }
            coarse[idx] += v;
        }
        levels.push(coarse);
    }
    levels.reverse();
    levels
}

fn cube_flat(cube: &DyadicCube) -> usize {
    let side = 1usize << cube.level;
    cube.index.iter().fold(0, |acc, &c| acc * side + c)
}

fn cube_average(sums: &[Vec<f64>], cube: &DyadicCube, samples: &CartesianSamples) -> f64 {
    let cells = 1usize << ((samples.levels - cube.level) as usize * samples.dim);
    sums[cube.level as usize][cube_flat(cube)] / cells as f64
}

/// Stopping-time decomposition of |f|^q at height h^q: descending from the
/// unit cube, the maximal dyadic cubes whose |f|^q-average exceeds h^q.
pub fn cz_decompose(samples: &CartesianSamples, h: f64, q: f64) -> Result<CZDecomposition> {
    ensure(h > 0.0 && q >= 1.0, || format!("need h > 0 and q ≥ 1, got h = {h}, q = {q}"))?;
    let sums = pyramid(samples, q);
    let threshold = h.powf(q);
    let root = DyadicCube { level: 0, index: vec![0; samples.dim] };
    let root_avg = cube_average(&sums, &root, samples);
    if root_avg > threshold {
        return Err(Error::Parameter(format!(
            "height {h} is below the root average of |f|^q to the power 1/q ({})",
            root_avg.powf(1.0 / q)
        )));
    }
    let mut cubes = Vec::new();
    let mut stack = vec![root];
    while let Some(cube) = stack.pop() {
        if cube.level == samples.levels {
            continue;
        }
        for child in cube.children(samples.dim) {
            if cube_average(&sums, &child, samples) > threshold {
                cubes.push(child);
            } else {
                stack.push(child);
            }
        }
    }
    cubes.sort();
    let mut good = samples.values.clone();
    let mut bad = Vec::with_capacity(cubes.len());
    for cube in &cubes {
        let mut part = Vec::new();
        for (flat, g) in good.iter_mut().enumerate() {
            if cube.contains(&samples.coords(flat), samples.levels) {
                part.push((flat, *g));
                *g = 0.0;
            }
        }
        bad.push(part);
    }
    Ok(CZDecomposition {
        height: h,
        q,
        cubes,
        good,
        bad,
        mu: samples.dim / 4 + 1,
    })
}

/// Selected cubes found by enumerating every dyadic cube and averaging its
/// samples directly: a cube is selected when its average exceeds h^q and no
/// strict ancestor's does.
pub fn brute_force_cubes(samples: &CartesianSamples, h: f64, q: f64) -> Vec<DyadicCube> {
    let threshold = h.powf(q);
    let dim = samples.dim;
    let average = |cube: &DyadicCube| -> f64 {
        let (sum, count) = samples
            .values
            .iter()
            .enumerate()
            .filter(|(flat, _)| cube.contains(&samples.coords(*flat), samples.levels))
            .fold((0.0, 0usize), |(s, c), (_, v)| (s + v.abs().powf(q), c + 1));
        sum / count as f64
    };
    let mut out = Vec::new();
    for level in 1..=samples.levels {
        let side = 1usize << level;
        for flat in 0..side.pow(dim as u32) {
            let mut index = vec![0; dim];
            let mut rest = flat;
            for k in (0..dim).rev() {
                index[k] = rest % side;
                rest /= side;
            }
            let cube = DyadicCube { level, index };
            if average(&cube) <= threshold {
                continue;
            }
            let ancestors_below = (0..level).all(|l| {
                let anc = DyadicCube {
                    level: l,
                    index: cube.index.iter().map(|&i| i >> (level - l)).collect(),
                };
                average(&anc) <= threshold
            });
            if ancestors_below {
                out.push(cube);
            }
        }
    }
    out.sort();
    out
}

/// Which decomposition invariants hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CzInvariants {
    /// |g| ≤ h at every sample.
    pub good_bounded: bool,
    /// |Q| < h^{−q}∫_Q|f|^q ≤ 2^dim|Q| for every cube.
    pub averages_bracketed: bool,
    pub disjoint: bool,
    /// f = g + Σb_k at every sample.
    pub exact_split: bool,
}

impl CzInvariants {
    pub fn all(&self) -> bool {
        self.good_bounded && self.averages_bracketed && self.disjoint && self.exact_split
    }
}

/// Checks the invariants of a decomposition against its samples.
pub fn check_invariants(samples: &CartesianSamples, cz: &CZDecomposition) -> CzInvariants {
    let dim = samples.dim;
    let tol = 1e-12;
    let threshold = cz.height.powf(cz.q);
    let good_bounded = cz.good.iter().all(|g| g.abs() <= cz.height * (1.0 + tol));
    let cell = samples.cell_volume();
    let averages_bracketed = cz.cubes.iter().zip(&cz.bad).all(|(cube, part)| {
        let integral: f64 = part.iter().map(|(_, v)| v.abs().powf(cz.q) * cell).sum();
        let vol = cube.volume(dim);
        let scaled = integral / threshold;
        scaled > vol * (1.0 - tol) && scaled <= (1u32 << dim) as f64 * vol * (1.0 + tol)
    });
    let disjoint = cz.cubes.iter().enumerate().all(|(i, a)| {
        cz.cubes[i + 1..].iter().all(|b| {
            let (outer, inner) = if a.level <= b.level { (a, b) } else { (b, a) };
            let shift = inner.level - outer.level;
            !inner.index.iter().zip(&outer.index).all(|(&x, &y)| x >> shift == y)
        })
    });
    let mut rebuilt = cz.good.clone();
    for part in &cz.bad {
        for &(flat, v) in part {
            rebuilt[flat] += v;
        }
    }
    let exact_split = rebuilt == samples.values;
    CzInvariants {
        good_bounded,
        averages_bracketed,
        disjoint,
        exact_split,
    }
}

/// Coefficients c_ν, ν = 1..=μ, of 1 − (1 − x)^μ = Σ c_ν x^ν.
pub fn smoothed_split_coefficients(mu: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(mu);
    let mut binom = 1.0;
    for nu in 1..=mu {
        binom = binom * (mu + 1 - nu) as f64 / nu as f64;
        out.push(if nu % 2 == 1 { binom } else { -binom });
    }
    out
}

/// [1 − (1 − e^{−r²L_a})^μ]b = Σ_ν c_ν e^{−νr²L_a}b for a radial b.
pub fn smoothed_good_part(plan: &HankelPlan, b: &RadialFunction, r: f64, mu: usize) -> Result<RadialFunction> {
    let mut acc = RadialFunction::zeros(b.grid().clone(), b.sector());
    for (k, c) in smoothed_split_coefficients(mu).into_iter().enumerate() {
        let t = (k + 1) as f64 * r * r;
        let term = apply_multiplier(plan, &Multiplier::heat(t), b)?;
        acc = acc.combine(1.0, &term, c);
    }
    Ok(acc)
}

/// A randomized instance: samples, height and exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct CzInstance {
    pub samples: CartesianSamples,
    pub height: f64,
    pub q: f64,
}

/// Nonnegative samples with a few sharp spikes on a random dyadic grid in
/// dimension 1 or 2, with a height between 1.05 and 4 times the smallest
/// admissible one.
pub fn random_instance(seed: u64, dim: usize) -> Result<CzInstance> {
    ensure(dim == 1 || dim == 2, || format!("random instances are 1-D or 2-D, got {dim}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let levels = if dim == 1 { rng.gen_range(3..=9) } else { rng.gen_range(2..=5) };
    let count = (1usize << levels).pow(dim as u32);
    let mut values: Vec<f64> = (0..count).map(|_| rng.gen_range(0.0..1.0)).collect();
    for _ in 0..rng.gen_range(1..=4) {
        let at = rng.gen_range(0..count);
        values[at] += rng.gen_range(5.0..200.0);
    }
    let q = rng.gen_range(1.0..3.0);
    let root = values.iter().map(|v: &f64| v.powf(q)).sum::<f64>() / count as f64;
    let height = root.powf(1.0 / q) * rng.gen_range(1.05..4.0);
    Ok(CzInstance {
        samples: CartesianSamples::new(dim, levels, values)?,
        height,
        q,
    })
}

/// Decomposes one randomized instance per seed, alternating 1-D and 2-D, and
/// compares each against the brute-force cube selection and the invariants.
pub fn cz_check(seeds: &[u64]) -> Result<VerificationReport> {
    let mut report = VerificationReport::new("cz").param("instances", seeds.len() as f64);
    let mut failures = 0usize;
    let mut cube_counts = Vec::new();
    for &seed in seeds {
        let dim = 1 + (seed % 2) as usize;
        let inst = random_instance(seed, dim)?;
        let cz = cz_decompose(&inst.samples, inst.height, inst.q)?;
        let oracle = brute_force_cubes(&inst.samples, inst.height, inst.q);
        let inv = check_invariants(&inst.samples, &cz);
        if cz.cubes != oracle || !inv.all() {
            failures += 1;
            report.note(format!("seed {seed}: oracle match {}, invariants {inv:?}", cz.cubes == oracle));
        }
        cube_counts.push(cz.cubes.len() as f64);
    }
    report.observe(cube_counts);
    report.constant("failures", failures as f64);
    Ok(report.with_verdict(if failures == 0 { Verdict::Pass } else { Verdict::Fail }))
}

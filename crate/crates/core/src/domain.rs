//! Coordinate charts, axis-aligned domain boxes and deterministic sampling.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::expr::{Binding, TIME};

/// Seeded generator used for every sampled check.
pub type SampleRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Ordered coordinate names of a chart.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Chart(Arc<[String]>);

impl Chart {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Self {
        let names: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
        for (i, n) in names.iter().enumerate() {
            assert!(!names[..i].contains(n), "duplicate coordinate `{n}`");
        }
        Chart(names.into())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }

    pub fn name(&self, i: usize) -> &str {
        &self.0[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.0.iter().position(|n| n == name)
    }

    pub fn name_refs(&self) -> Vec<&str> {
        self.0.iter().map(String::as_str).collect()
    }

    /// The chart of `[0,1] × U`, with the time coordinate first.
    pub fn with_time(&self) -> Chart {
        assert!(self.index_of(TIME).is_none(), "chart already has a time coordinate");
        let mut names = vec![TIME.to_string()];
        names.extend(self.0.iter().cloned());
        Chart(names.into())
    }

    /// Drops a leading time coordinate, if present.
    pub fn without_time(&self) -> Chart {
        if self.0.first().map(String::as_str) == Some(TIME) {
            Chart(self.0[1..].to_vec().into())
        } else {
            self.clone()
        }
    }

    pub fn binding(&self, point: &[f64]) -> Binding {
        Binding::from_slices(&self.0, point)
    }

    /// Binding of the chart coordinates plus the time variable.
    pub fn binding_at(&self, t: f64, point: &[f64]) -> Binding {
        self.binding(point).with(TIME, t)
    }
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Chart({})", self.0.join(","))
    }
}

/// Axis-aligned box `[lo_i, hi_i]` in chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl DomainBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len(), "box bounds of different dimension");
        assert!(lo.iter().zip(&hi).all(|(a, b)| a <= b), "box lower bound exceeds upper bound");
        DomainBox { lo, hi }
    }

    pub fn cube(dim: usize, half_width: f64) -> Self {
        DomainBox::new(vec![-half_width; dim], vec![half_width; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(&x, (&a, &b))| x >= a && x <= b && x.is_finite())
    }

    /// `m` equally spaced points per axis, endpoints included. Degenerate
    /// axes contribute a single value.
    pub fn grid(&self, m: usize) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(&a, &b)| {
                if m <= 1 || a == b {
                    vec![0.5 * (a + b)]
                } else {
                    (0..m).map(|i| a + (b - a) * i as f64 / (m - 1) as f64).collect()
                }
            })
            .collect();
        let mut out = vec![Vec::new()];
        for axis in &axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        out
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(&a, &b)| if a == b { a } else { rng.gen_range(a..=b) }).collect()
    }

    pub fn samples(&self, rng: &mut impl Rng, count: usize) -> Vec<Vec<f64>> {
        (0..count).map(|_| self.sample(rng)).collect()
    }

    /// The same box with the listed coordinates pinned to zero.
    pub fn flatten(&self, coords: &[usize]) -> DomainBox {
        let mut b = self.clone();
        for &i in coords {
            b.lo[i] = 0.0;
            b.hi[i] = 0.0;
        }
        b
    }
}

/// Uniform random unit vector in `R^n`.
pub fn random_unit(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let r = crate::linalg::norm(&v);
        if r > 1e-3 && r <= 1.0 {
            return v.into_iter().map(|x| x / r).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_covers_corners() {
        let b = DomainBox::new(vec![-1.0, 0.0], vec![1.0, 2.0]);
        let g = b.grid(3);
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], vec![-1.0, 0.0]);
        assert_eq!(g[8], vec![1.0, 2.0]);
    }

    #[test]
    fn sampling_is_deterministic() {
        let b = DomainBox::cube(3, 1.0);
        let a = b.samples(&mut seeded_rng(42), 5);
        let c = b.samples(&mut seeded_rng(42), 5);
        assert_eq!(a, c);
        assert!(a.iter().all(|p| b.contains(p)));
    }

    #[test]
    fn time_chart() {
        let c = Chart::new(&["x", "y"]);
        let ct = c.with_time();
        assert_eq!(ct.names(), &["t".to_string(), "x".into(), "y".into()]);
        assert_eq!(ct.without_time(), c);
    }
}

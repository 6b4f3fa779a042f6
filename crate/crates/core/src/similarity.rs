//! Binned return distributions and the √JS similarity distance.
//!
//! All logarithms are natural, so the Jensen–Shannon divergence lies in
//! `[0, ln 2]` and the distance `D = √JS` in `[0, √ln 2]`.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    edges: Vec<f64>,
    mass: Vec<f64>,
}

impl Histogram {
    pub fn new(edges: Vec<f64>, mass: Vec<f64>) -> Result<Self> {
        if mass.is_empty() || edges.len() != mass.len() + 1 {
            return Err(Error::IncompatibleHistogram(format!(
                "{} edges for {} bins",
                edges.len(),
                mass.len()
            )));
        }
        if edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Validation("histogram edges must increase strictly".into()));
        }
        if mass.iter().any(|m| !(*m >= 0.0)) {
            return Err(Error::Validation("histogram mass must be non-negative".into()));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!("histogram mass sums to {total}, not 1")));
        }
        Ok(Histogram { edges, mass })
    }

    /// Histogram over unit-width bins `[0, 1), [1, 2), …`.
    pub fn from_mass(mass: Vec<f64>) -> Result<Self> {
        let edges = (0..=mass.len()).map(|i| i as f64).collect();
        Self::new(edges, mass)
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn bins(&self) -> usize {
        self.mass.len()
    }
}

/// `bins` equal-width edges from `lo` to `hi` (last edge exactly `hi`).
fn equal_edges(lo: f64, hi: f64, bins: usize) -> Result<Vec<f64>> {
    if !(hi > lo) {
        return Err(Error::DegenerateRange);
    }
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| lo + i as f64 * width).collect();
    edges.push(hi);
    if edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::DegenerateRange);
    }
    Ok(edges)
}

fn bin_sample(sample: &[f64], edges: &[f64]) -> Vec<f64> {
    let bins = edges.len() - 1;
    let lo = edges[0];
    let width = (edges[bins] - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in sample {
        let mut b = ((x - lo) / width) as usize;
        if b >= bins {
            b = bins - 1;
        }
        // Guard against rounding across an edge.
        while b > 0 && x < edges[b] {
            b -= 1;
        }
        while b + 1 < bins && x >= edges[b + 1] {
            b += 1;
        }
        counts[b] += 1;
    }
    let n = sample.len() as f64;
    counts.into_iter().map(|c| c as f64 / n).collect()
}

fn range_of(samples: &[&[f64]]) -> (f64, f64) {
    samples
        .iter()
        .flat_map(|s| s.iter())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

/// Histograms of two samples on common equal-width bins spanning their
/// pooled range.
pub fn shared_histograms(r1: &[f64], r2: &[f64], bins: usize) -> Result<(Histogram, Histogram)> {
    if r1.is_empty() || r2.is_empty() {
        return Err(Error::Length { needed: 1, got: 0 });
    }
    if bins < 2 {
        return Err(Error::Config(format!("need at least 2 bins, got {bins}")));
    }
    if r1.iter().chain(r2).any(|x| !x.is_finite()) {
        return Err(Error::Domain("non-finite sample value".into()));
    }
    let (lo, hi) = range_of(&[r1, r2]);
    let edges = equal_edges(lo, hi, bins)?;
    let p = bin_sample(r1, &edges);
    let q = bin_sample(r2, &edges);
    Ok((
        Histogram {
            edges: edges.clone(),
            mass: p,
        },
        Histogram { edges, mass: q },
    ))
}

fn check_compatible(p: &Histogram, q: &Histogram) -> Result<()> {
    if p.edges != q.edges {
        return Err(Error::IncompatibleHistogram("bin edges differ".into()));
    }
    Ok(())
}

/// `Σ p ln(p/q)` with `0 · ln(0/q) = 0`.
pub fn kl_divergence(p: &Histogram, q: &Histogram) -> Result<f64> {
    check_compatible(p, q)?;
    let mut total = 0.0;
    for (i, (&pi, &qi)) in p.mass.iter().zip(&q.mass).enumerate() {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(Error::UndefinedDivergence(i));
            }
            total += pi * (pi / qi).ln();
        }
    }
    Ok(total.max(0.0))
}

/// Jensen–Shannon divergence against the mixture `(p + q) / 2`.
pub fn js_divergence(p: &Histogram, q: &Histogram) -> Result<f64> {
    check_compatible(p, q)?;
    Ok(js_of_masses(&p.mass, &q.mass))
}

fn js_of_masses(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        let m = (pi + qi) / 2.0;
        let a = if pi > 0.0 { pi * (pi / m).ln() } else { 0.0 };
        let b = if qi > 0.0 { qi * (qi / m).ln() } else { 0.0 };
        total += (a + b) / 2.0;
    }
    total.clamp(0.0, std::f64::consts::LN_2)
}

pub fn similarity_distance(r1: &[f64], r2: &[f64], bins: usize) -> Result<f64> {
    let (p, q) = shared_histograms(r1, r2, bins)?;
    Ok(js_divergence(&p, &q)?.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinningMode {
    /// Bins span the pooled range of each pair.
    #[default]
    PerPair,
    /// One set of bins spans the pooled range of all currencies.
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    pub codes: Vec<String>,
    pub d: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    /// Checks squareness, symmetry, zero diagonal and non-negativity.
    pub fn validate(&self) -> Result<()> {
        let n = self.codes.len();
        if self.d.len() != n || self.d.iter().any(|row| row.len() != n) {
            return Err(Error::Validation("distance matrix is not square".into()));
        }
        for i in 0..n {
            if self.d[i][i] != 0.0 {
                return Err(Error::Validation(format!("non-zero diagonal at {}", self.codes[i])));
            }
            for j in 0..n {
                let v = self.d[i][j];
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::Validation(format!(
                        "invalid distance {v} between {} and {}",
                        self.codes[i], self.codes[j]
                    )));
                }
                if v != self.d[j][i] {
                    return Err(Error::Validation(format!(
                        "asymmetric distance between {} and {}",
                        self.codes[i], self.codes[j]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// CSV with a header row and first column of currency codes.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("code");
        for c in &self.codes {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
        for (c, row) in self.codes.iter().zip(&self.d) {
            out.push_str(c);
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(crate::ingest::csv_err)?.clone();
        let codes: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut d = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record.map_err(crate::ingest::csv_err)?;
            let line = record.position().map_or(0, |p| p.line());
            if record.get(0) != codes.get(i).map(String::as_str) {
                return Err(Error::Parse {
                    line,
                    message: "row code does not match header order".into(),
                });
            }
            let row = record
                .iter()
                .skip(1)
                .map(|c| {
                    c.parse::<f64>().map_err(|_| Error::Parse {
                        line,
                        message: format!("not a number: {c:?}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            d.push(row);
        }
        let m = DistanceMatrix { codes, d };
        m.validate()?;
        Ok(m)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceOutcome {
    pub matrix: DistanceMatrix,
    /// Currencies left out, with the reason.
    pub excluded: Vec<(String, String)>,
}

/// Pairwise √JS distances between currencies' return samples. Empty or
/// constant samples are excluded with a warning rather than failing the run.
pub fn distance_matrix(samples: &[(String, Vec<f64>)], bins: usize, mode: BinningMode) -> Result<DistanceOutcome> {
    let mut excluded = Vec::new();
    let mut kept: Vec<&(String, Vec<f64>)> = Vec::new();
    for s in samples {
        let reason = if s.1.is_empty() {
            Some("no returns")
        } else if s.1.iter().any(|x| !x.is_finite()) {
            Some("non-finite returns")
        } else if s.1.iter().all(|x| *x == s.1[0]) {
            Some("constant returns")
        } else {
            None
        };
        match reason {
            Some(r) => {
                log::warn!("excluding {} from the distance matrix: {r}", s.0);
                excluded.push((s.0.clone(), r.to_string()));
            }
            None => kept.push(s),
        }
    }
    let n = kept.len();
    if n < 2 {
        return Err(Error::Length { needed: 2, got: n });
    }
    if bins < 2 {
        return Err(Error::Config(format!("need at least 2 bins, got {bins}")));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let values: Vec<f64> = match mode {
        BinningMode::PerPair => pairs
            .par_iter()
            .map(|&(i, j)| similarity_distance(&kept[i].1, &kept[j].1, bins))
            .collect::<Result<_>>()?,
        BinningMode::Global => {
            let all: Vec<&[f64]> = kept.iter().map(|s| s.1.as_slice()).collect();
            let (lo, hi) = range_of(&all);
            let edges = equal_edges(lo, hi, bins)?;
            let masses: Vec<Vec<f64>> = kept.par_iter().map(|s| bin_sample(&s.1, &edges)).collect();
            pairs
                .par_iter()
                .map(|&(i, j)| js_of_masses(&masses[i], &masses[j]).sqrt())
                .collect()
        }
    };
    let mut d = vec![vec![0.0; n]; n];
    for (&(i, j), v) in pairs.iter().zip(values) {
        d[i][j] = v;
        d[j][i] = v;
    }
    Ok(DistanceOutcome {
        matrix: DistanceMatrix {
            codes: kept.iter().map(|s| s.0.clone()).collect(),
            d,
        },
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::synthetic::{normal_sample, student_t_sample};
    use crate::rng::SeededStream;
    use std::f64::consts::LN_2;

    fn h(mass: &[f64]) -> Histogram {
        Histogram::from_mass(mass.to_vec()).unwrap()
    }

    #[test]
    fn identical_samples() {
        let r = normal_sample(500, 1);
        let (p, q) = shared_histograms(&r, &r, 50).unwrap();
        assert_eq!(p, q);
        assert_eq!(similarity_distance(&r, &r, 50).unwrap(), 0.0);
    }

    #[test]
    fn disjoint_support() {
        let (p, q) = shared_histograms(&[0.0, 0.5, 1.0], &[2.0, 2.5, 3.0], 4).unwrap();
        for (a, b) in p.mass().iter().zip(q.mass()) {
            assert!(*a == 0.0 || *b == 0.0);
        }
        assert!(p.mass().iter().any(|m| *m > 0.0) && q.mass().iter().any(|m| *m > 0.0));
        assert_eq!(js_divergence(&p, &q).unwrap(), LN_2);
        let d = similarity_distance(&[0.0, 1.0], &[2.0, 3.0], 4).unwrap();
        assert!((d - LN_2.sqrt()).abs() < 1e-15);
        assert!((d - 0.8326).abs() < 1e-4);
    }

    #[test]
    fn degenerate_range_and_bad_bins() {
        assert!(matches!(
            shared_histograms(&[1.0, 1.0], &[1.0], 10),
            Err(Error::DegenerateRange)
        ));
        assert!(shared_histograms(&[0.0, 1.0], &[2.0], 1).is_err());
        assert!(shared_histograms(&[], &[2.0], 10).is_err());
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&h(&[0.3, 0.7]), &h(&[0.3, 0.7])).unwrap(), 0.0);
        assert!((kl_divergence(&h(&[1.0, 0.0]), &h(&[0.5, 0.5])).unwrap() - LN_2).abs() < 1e-15);
        assert!(matches!(
            kl_divergence(&h(&[0.5, 0.5]), &h(&[1.0, 0.0])),
            Err(Error::UndefinedDivergence(1))
        ));
    }

    #[test]
    fn js_examples() {
        assert_eq!(js_divergence(&h(&[0.25, 0.75]), &h(&[0.25, 0.75])).unwrap(), 0.0);
        assert_eq!(
            js_divergence(&h(&[0.5, 0.5, 0.0, 0.0]), &h(&[0.0, 0.0, 0.5, 0.5])).unwrap(),
            LN_2
        );
        // ½ ln(4/3) + ½(½ ln(2/3) + ½ ln 2), evaluated at 30 digits.
        let v = js_divergence(&h(&[1.0, 0.0]), &h(&[0.5, 0.5])).unwrap();
        assert!((v - 0.215_761_554_338_835_7).abs() < 1e-15);
        let other = Histogram::new(vec![0.0, 0.5, 1.0], vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            js_divergence(&h(&[0.5, 0.5]), &other),
            Err(Error::IncompatibleHistogram(_))
        ));
    }

    #[test]
    fn histogram_validation() {
        assert!(Histogram::new(vec![0.0, 1.0], vec![0.5]).is_err());
        assert!(Histogram::new(vec![0.0, 0.0, 1.0], vec![0.5, 0.5]).is_err());
        assert!(Histogram::new(vec![0.0, 1.0, 2.0], vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn same_distribution_has_small_js() {
        let a = normal_sample(100_000, 10);
        let b = normal_sample(100_000, 11);
        let (p, q) = shared_histograms(&a, &b, 1000).unwrap();
        let total: f64 = p.mass().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(js_divergence(&p, &q).unwrap() < 0.01);
    }

    fn random_mass(s: &mut SeededStream, bins: usize) -> Vec<f64> {
        // Sparse supports exercise the zero-mass branches.
        let raw: Vec<f64> = (0..bins)
            .map(|_| if s.uniform() < 0.3 { 0.0 } else { s.uniform() })
            .collect();
        let total: f64 = raw.iter().sum::<f64>().max(f64::MIN_POSITIVE);
        let mut m: Vec<f64> = raw.iter().map(|x| x / total).collect();
        if m.iter().all(|x| *x == 0.0) {
            m[0] = 1.0;
        }
        m
    }

    #[test]
    fn js_symmetric_bounded_and_metric() {
        let mut s = SeededStream::new(99);
        for _ in 0..1000 {
            let bins = 2 + s.below(12);
            let (a, b, c) = (
                random_mass(&mut s, bins),
                random_mass(&mut s, bins),
                random_mass(&mut s, bins),
            );
            let (dab, dba) = (js_of_masses(&a, &b), js_of_masses(&b, &a));
            assert_eq!(dab, dba);
            assert!((0.0..=LN_2).contains(&dab));
            let (ab, bc, ac) = (dab.sqrt(), js_of_masses(&b, &c).sqrt(), js_of_masses(&a, &c).sqrt());
            assert!(ac <= ab + bc + 1e-12);
        }
    }

    #[test]
    fn js_invariant_under_common_bin_permutation() {
        let mut s = SeededStream::new(5);
        let a = random_mass(&mut s, 9);
        let b = random_mass(&mut s, 9);
        let mut order: Vec<usize> = (0..9).collect();
        s.shuffle(&mut order);
        let pa: Vec<f64> = order.iter().map(|&i| a[i]).collect();
        let pb: Vec<f64> = order.iter().map(|&i| b[i]).collect();
        assert!((js_of_masses(&a, &b) - js_of_masses(&pa, &pb)).abs() < 1e-15);
    }

    fn labeled(code: &str, v: Vec<f64>) -> (String, Vec<f64>) {
        (code.to_string(), v)
    }

    #[test]
    fn matrix_shape_duplicates_and_exclusions() {
        let a = normal_sample(2000, 1);
        let set = vec![
            labeled("A", a.clone()),
            labeled("B", a.clone()),
            labeled("C", vec![0.1; 50]),
            labeled("D", student_t_sample(3.0, 2000, 2)),
        ];
        let out = distance_matrix(&set, 200, BinningMode::PerPair).unwrap();
        assert_eq!(out.matrix.codes, vec!["A", "B", "D"]);
        assert_eq!(out.excluded, vec![("C".to_string(), "constant returns".to_string())]);
        assert_eq!(out.matrix.d[0][1], 0.0);
        out.matrix.validate().unwrap();
        let two = distance_matrix(&set[..2], 200, BinningMode::PerPair).unwrap();
        assert_eq!(two.matrix.d.len(), 2);
        assert!(distance_matrix(&set[2..3], 200, BinningMode::PerPair).is_err());
    }

    #[test]
    fn matrix_reorder_equivariant() {
        let set: Vec<(String, Vec<f64>)> = (0..5)
            .map(|i| labeled(&format!("C{i}"), student_t_sample(2.0 + i as f64, 1500, i)))
            .collect();
        let base = distance_matrix(&set, 300, BinningMode::PerPair).unwrap().matrix;
        let perm = [3usize, 0, 4, 2, 1];
        let shuffled: Vec<_> = perm.iter().map(|&i| set[i].clone()).collect();
        let other = distance_matrix(&shuffled, 300, BinningMode::PerPair).unwrap().matrix;
        for (a, &i) in perm.iter().enumerate() {
            for (b, &j) in perm.iter().enumerate() {
                assert_eq!(other.d[a][b], base.d[i][j]);
            }
        }
    }

    #[test]
    fn global_binning_is_a_metric() {
        let set: Vec<(String, Vec<f64>)> = (0..8)
            .map(|i| labeled(&format!("C{i}"), student_t_sample(1.5 + i as f64 * 0.5, 1000, 40 + i)))
            .collect();
        let m = distance_matrix(&set, 400, BinningMode::Global).unwrap().matrix;
        m.validate().unwrap();
        let n = m.len();
        for i in 0..n {
            for j in 0..n {
                assert!(m.d[i][j] <= LN_2.sqrt() + 1e-15);
                for k in 0..n {
                    assert!(m.d[i][k] <= m.d[i][j] + m.d[j][k] + 1e-12);
                }
            }
        }
    }

    #[test]
    fn three_classes_separate() {
        let mut set = Vec::new();
        type Gen = Box<dyn Fn(u64) -> Vec<f64>>;
        let classes: [(&str, Gen); 3] = [
            ("G", Box::new(|s| normal_sample(4000, s))),
            ("T", Box::new(|s| student_t_sample(3.0, 4000, s))),
            ("H", Box::new(|s| student_t_sample(1.5, 4000, s))),
        ];
        for (c, (name, gen)) in classes.iter().enumerate() {
            for k in 0..4u64 {
                let raw = gen(100 * c as u64 + k);
                let n = crate::returns::normalize_returns(&crate::returns::ReturnSeries {
                    values: raw,
                    horizon: 1,
                })
                .unwrap();
                set.push((format!("{name}{k}"), n.values));
            }
        }
        let m = distance_matrix(&set, DEFAULT_BINS, BinningMode::PerPair)
            .unwrap()
            .matrix;
        let (mut within, mut nw, mut between, mut nb) = (0.0, 0, 0.0, 0);
        for i in 0..12 {
            for j in (i + 1)..12 {
                if i / 4 == j / 4 {
                    within += m.d[i][j];
                    nw += 1;
                } else {
                    between += m.d[i][j];
                    nb += 1;
                }
            }
        }
        assert!(within / (nw as f64) < between / (nb as f64));
    }

    #[test]
    fn csv_round_trip() {
        let set: Vec<(String, Vec<f64>)> = (0..3)
            .map(|i| labeled(&format!("C{i}"), normal_sample(300, i)))
            .collect();
        let m = distance_matrix(&set, 50, BinningMode::PerPair).unwrap().matrix;
        assert_eq!(DistanceMatrix::parse_csv(&m.to_csv()).unwrap(), m);
    }
}

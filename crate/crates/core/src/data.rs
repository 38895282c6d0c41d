//! Synthetic binary classification data.
//!
//! Two isotropic Gaussian blobs mirrored through the origin, centred at
//! `±center_distance·(1, …, 1)`, so a bias-free linear model can separate
//! them. Datasets persist as CSV with header `x1,...,xn,y`.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded;

/// Feature matrix (row-major, `m × n`) with `±1` labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    features: Vec<f64>,
    labels: Vec<i8>,
}

impl Dataset {
    pub fn new(n: usize, features: Vec<f64>, labels: Vec<i8>) -> Result<Self> {
        if n == 0 {
            return Err(Error::validation("feature dimension must be >= 1"));
        }
        if features.len() != labels.len() * n {
            return Err(Error::Dimension {
                expected: labels.len() * n,
                got: features.len(),
            });
        }
        if let Some(x) = features.iter().find(|x| !x.is_finite()) {
            return Err(Error::validation(format!("non-finite feature {x}")));
        }
        if let Some(y) = labels.iter().find(|&&y| y != 1 && y != -1) {
            return Err(Error::validation(format!("label {y} is not in {{-1, +1}}")));
        }
        Ok(Dataset {
            n,
            features,
            labels,
        })
    }

    pub fn empty(n: usize) -> Self {
        Dataset {
            n: n.max(1),
            features: Vec::new(),
            labels: Vec::new(),
        }
    }

    /// Number of samples `m`.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Feature dimension `n`.
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n..(i + 1) * self.n]
    }

    pub fn label(&self, i: usize) -> i8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], i8)> + '_ {
        self.features
            .chunks_exact(self.n)
            .zip(self.labels.iter().copied())
    }

    /// New dataset holding the given rows in the given order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.n);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            n: self.n,
            features,
            labels,
        }
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&y| y == 1).count();
        (pos, self.len() - pos)
    }

    pub fn max_row_norm(&self) -> f64 {
        self.iter()
            .map(|(x, _)| x.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=self.n).map(|j| format!("x{j}")).collect();
        header.push("y".into());
        w.write_record(&header).map_err(csv_write_error)?;
        let mut rec = Vec::with_capacity(self.n + 1);
        for (x, y) in self.iter() {
            rec.clear();
            rec.extend(x.iter().map(|v| format_f64(*v)));
            rec.push(y.to_string());
            w.write_record(&rec).map_err(csv_write_error)?;
        }
        w.flush().map_err(|e| Error::io("<dataset csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(input);
        let header = reader.headers().map_err(|e| Error::Format {
            line: 1,
            message: e.to_string(),
        })?;
        let cols = header.len();
        if cols < 2 || header.iter().all(str::is_empty) {
            return Err(Error::Format {
                line: 1,
                message: "header must be x1,...,xn,y".into(),
            });
        }
        for (j, name) in header.iter().enumerate() {
            let expected = if j + 1 == cols {
                "y".to_string()
            } else {
                format!("x{}", j + 1)
            };
            if name != expected {
                return Err(Error::Format {
                    line: 1,
                    message: format!("column {} is `{name}`, expected `{expected}`", j + 1),
                });
            }
        }
        let n = cols - 1;
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Format {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                message: e.to_string(),
            })?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let bad = |message: String| Error::Format { line, message };
            for j in 0..n {
                let v: f64 = record[j]
                    .parse()
                    .map_err(|_| bad(format!("`{}` is not a number", &record[j])))?;
                if !v.is_finite() {
                    return Err(bad(format!("non-finite feature `{}`", &record[j])));
                }
                features.push(v);
            }
            let y = match &record[n] {
                "1" | "+1" => 1,
                "-1" => -1,
                other => return Err(bad(format!("label `{other}` is not -1 or +1"))),
            };
            labels.push(y);
        }
        Dataset::new(n, features, labels)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Dataset::read_csv(std::io::BufReader::new(file))
    }
}

/// 17 significant digits in scientific notation, e.g. `1.5000000000000000e0`.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_write_error(e: csv::Error) -> Error {
    Error::Format {
        line: 0,
        message: e.to_string(),
    }
}

/// Recipe for a mirrored-blob dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub m: usize,
    pub n: usize,
    /// Per-coordinate offset of the positive centre.
    pub center_distance: f64,
    pub noise_sigma: f64,
    pub split_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            m: 1000,
            n: 2,
            center_distance: 1.5,
            noise_sigma: 1.0,
            split_fraction: 0.8,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::validation("m must be >= 1"));
        }
        if self.n == 0 {
            return Err(Error::validation("n must be >= 1"));
        }
        if !(self.center_distance > 0.0 && self.center_distance.is_finite()) {
            return Err(Error::validation("center_distance must be > 0"));
        }
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::validation("noise_sigma must be > 0"));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::validation("split_fraction must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        SyntheticSpec {
            seed,
            ..self.clone()
        }
    }
}

/// Draws `⌈m/2⌉` positives then `⌊m/2⌋` negatives from the seeded stream,
/// then shuffles the rows with the same stream.
pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = seeded(spec.seed);
    let positives = spec.m.div_ceil(2);
    let mut rows: Vec<(Vec<f64>, i8)> = Vec::with_capacity(spec.m);
    for i in 0..spec.m {
        let (label, centre) = if i < positives {
            (1i8, spec.center_distance)
        } else {
            (-1i8, -spec.center_distance)
        };
        let x: Vec<f64> = (0..spec.n)
            .map(|_| centre + spec.noise_sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        rows.push((x, label));
    }
    rows.shuffle(&mut rng);
    let mut features = Vec::with_capacity(spec.m * spec.n);
    let mut labels = Vec::with_capacity(spec.m);
    for (x, y) in rows {
        features.extend(x);
        labels.push(y);
    }
    Dataset::new(spec.n, features, labels)
}

/// `⌈fraction·m⌉`, guarded against products like `0.8·10 = 8.000000000000002`.
pub(crate) fn ceil_fraction(fraction: f64, m: usize) -> usize {
    let exact = fraction * m as f64;
    let rounded = exact.round();
    if (exact - rounded).abs() <= 1e-9 * exact.abs().max(1.0) {
        rounded as usize
    } else {
        exact.ceil() as usize
    }
}

/// Seeded partition into `⌈fraction·m⌉` training rows and the remainder.
pub fn split(data: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::validation(format!(
            "split fraction must lie in (0, 1), got {fraction}"
        )));
    }
    if data.len() < 2 {
        return Err(Error::validation("split needs at least 2 samples"));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut seeded(seed));
    let k = ceil_fraction(fraction, data.len());
    let (train, test) = order.split_at(k);
    Ok((data.select(train), data.select(test)))
}

/// Generates and splits in one go. The split reuses `spec.seed`, offset so
/// the permutation stream differs from the sampling stream.
pub fn generate_split(spec: &SyntheticSpec) -> Result<(Dataset, Dataset)> {
    let data = generate(spec)?;
    split(&data, spec.split_fraction, crate::rng::derive_seed(spec.seed, &[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn degenerate_noise_puts_points_on_centres() {
        let spec = SyntheticSpec {
            m: 4,
            noise_sigma: 1e-12,
            ..Default::default()
        };
        let data = generate(&spec).unwrap();
        assert_eq!(data.class_counts(), (2, 2));
        for (x, y) in data.iter() {
            for v in x {
                assert!((v - 1.5 * y as f64).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SyntheticSpec::default();
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a, b);
        let mut ba = Vec::new();
        let mut bb = Vec::new();
        a.write_csv(&mut ba).unwrap();
        b.write_csv(&mut bb).unwrap();
        assert_eq!(ba, bb);
        assert_ne!(a, generate(&spec.with_seed(1)).unwrap());
    }

    #[test]
    fn default_class_balance() {
        let data = generate(&SyntheticSpec::default()).unwrap();
        assert_eq!(data.len(), 1000);
        assert_eq!(data.dim(), 2);
        assert_eq!(data.class_counts(), (500, 500));
        let odd = generate(&SyntheticSpec {
            m: 7,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(odd.class_counts(), (4, 3));
    }

    #[test]
    fn diagonal_direction_separates_default_blobs() {
        for seed in 0..5 {
            let data = generate(&SyntheticSpec::default().with_seed(seed)).unwrap();
            let correct = data
                .iter()
                .filter(|(x, y)| {
                    let s: f64 = x.iter().sum();
                    (if s >= 0.0 { 1 } else { -1 }) == *y
                })
                .count();
            assert!(correct as f64 / data.len() as f64 >= 0.9);
        }
    }

    #[test]
    fn split_sizes() {
        let data = generate(&SyntheticSpec {
            m: 10,
            ..Default::default()
        })
        .unwrap();
        let (tr, te) = split(&data, 0.8, 3).unwrap();
        assert_eq!((tr.len(), te.len()), (8, 2));
        assert_eq!(split(&data, 0.8, 3).unwrap(), (tr, te));

        let data = generate(&SyntheticSpec::default()).unwrap();
        let (tr, te) = split(&data, 0.8, 3).unwrap();
        assert_eq!((tr.len(), te.len()), (800, 200));

        assert!(split(&data, 1.0, 0).is_err());
        assert!(split(&data, 0.0, 0).is_err());
        assert!(split(&data.select(&[0]), 0.5, 0).is_err());
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let data = generate(&SyntheticSpec {
            m: 25,
            n: 3,
            ..Default::default()
        })
        .unwrap();
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x1,x2,x3,y\n"));
        assert_eq!(Dataset::read_csv(buf.as_slice()).unwrap(), data);

        let err = Dataset::read_csv("x1,x2,y\n1.0,2.0,1\n0.5,0.5,0\n".as_bytes()).unwrap_err();
        match err {
            Error::Format { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            Dataset::read_csv("x1,x2,y\n1.0,abc,1\n".as_bytes()),
            Err(Error::Format { line: 2, .. })
        ));
        assert!(matches!(
            Dataset::read_csv("a,b\n".as_bytes()),
            Err(Error::Format { line: 1, .. })
        ));
        assert!(matches!(Dataset::read_csv("".as_bytes()), Err(Error::Format { .. })));

        let empty = Dataset::read_csv("x1,x2,y\n".as_bytes()).unwrap();
        assert!(empty.is_empty());
        assert_eq!(empty.dim(), 2);
    }

    #[test]
    fn spec_json_defaults() {
        let spec: SyntheticSpec = serde_json::from_str(r#"{"seed": 9}"#).unwrap();
        assert_eq!(spec, SyntheticSpec::default().with_seed(9));
        assert!(serde_json::from_str::<SyntheticSpec>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn invalid_specs() {
        for spec in [
            SyntheticSpec { m: 0, ..Default::default() },
            SyntheticSpec { n: 0, ..Default::default() },
            SyntheticSpec { noise_sigma: 0.0, ..Default::default() },
            SyntheticSpec { center_distance: -1.0, ..Default::default() },
            SyntheticSpec { split_fraction: 1.0, ..Default::default() },
        ] {
            assert!(matches!(generate(&spec), Err(Error::Validation(_))));
        }
    }

    proptest! {
        #[test]
        fn split_is_a_partition(m in 2usize..200, fraction in 0.01f64..0.99, seed in any::<u64>()) {
            // Tag every row with its index in the first feature.
            let features: Vec<f64> = (0..m).flat_map(|i| [i as f64, 0.0]).collect();
            let labels = vec![1i8; m];
            let data = Dataset::new(2, features, labels).unwrap();
            let (tr, te) = split(&data, fraction, seed).unwrap();
            prop_assert_eq!(tr.len(), (fraction * m as f64 - 1e-9).ceil() as usize);
            let mut ids: Vec<usize> = tr.iter().chain(te.iter()).map(|(x, _)| x[0] as usize).collect();
            ids.sort_unstable();
            prop_assert_eq!(ids, (0..m).collect::<Vec<_>>());
        }

        #[test]
        fn csv_round_trip_is_exact(values in proptest::collection::vec(-1e300f64..1e300, 0..40)) {
            let m = values.len() / 2;
            let features = values[..2 * m].to_vec();
            let labels: Vec<i8> = (0..m).map(|i| if i % 3 == 0 { -1 } else { 1 }).collect();
            let data = Dataset::new(2, features, labels).unwrap();
            let mut buf = Vec::new();
            data.write_csv(&mut buf).unwrap();
            prop_assert_eq!(Dataset::read_csv(buf.as_slice()).unwrap(), data);
        }
    }
}

//! Data matrices: the synthetic generator, delimited-text I/O,
//! standardization and stratified train/test splits.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

pub const LABEL_COLUMN: &str = "label";

#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    /// `N×m`, one sample per row.
    pub values: DMatrix<f64>,
    pub feature_names: Vec<String>,
    pub labels: Option<Vec<u32>>,
    pub standardized: bool,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>, labels: Option<Vec<u32>>) -> Result<Self> {
        let names = (1..=values.ncols()).map(|j| format!("f{j}")).collect();
        Self::with_names(values, names, labels)
    }

    pub fn with_names(
        values: DMatrix<f64>,
        feature_names: Vec<String>,
        labels: Option<Vec<u32>>,
    ) -> Result<Self> {
        if feature_names.len() != values.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "{} names for {} features",
                feature_names.len(),
                values.ncols()
            )));
        }
        if let Some(l) = &labels {
            if l.len() != values.nrows() {
                return Err(Error::ShapeMismatch(format!(
                    "{} labels for {} samples",
                    l.len(),
                    values.nrows()
                )));
            }
            let distinct = distinct(l);
            if distinct.len() > 2 {
                return Err(Error::NonBinaryLabels {
                    distinct: distinct.len(),
                });
            }
            if let [only] = distinct[..] {
                return Err(Error::SingleClass { class: only });
            }
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("data matrix"));
        }
        Ok(Self {
            values,
            feature_names,
            labels,
            standardized: false,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn require_labels(&self) -> Result<&[u32]> {
        self.labels
            .as_deref()
            .ok_or_else(|| Error::InvalidParameter("data have no label column".into()))
    }

    /// Rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(indices.len(), self.n_features(), |r, c| {
            self.values[(indices[r], c)]
        })
    }
}

fn distinct(labels: &[u32]) -> Vec<u32> {
    let mut d = labels.to_vec();
    d.sort_unstable();
    d.dedup();
    d
}

/// Synthetic two-class data with three informative and seven noise features.
///
/// Class 1 (first half) lies on a spherical shell with radius uniform in
/// [1.5, 2] and class 2 (second half) fills a ball of radius 0.5, both
/// centred at the origin of features 1–3. The classes are not linearly
/// separable in any projection. Features 4–10 are independent Uniform[0, 1].
pub fn generate_toy(n_samples: usize, seed: u64) -> Result<DataMatrix> {
    if n_samples < 8 || n_samples % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "toy data need an even sample count of at least 8, got {n_samples}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = n_samples / 2;
    let unit = Uniform::new(0.0f64, 1.0).expect("valid range");
    let shell = Uniform::new(1.5f64, 2.0).expect("valid range");
    let mut values = DMatrix::zeros(n_samples, 10);
    for i in 0..n_samples {
        let dir: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        let radius = if i < half {
            shell.sample(&mut rng)
        } else {
            0.5 * unit.sample(&mut rng).cbrt()
        };
        for (d, x) in dir.iter().enumerate() {
            values[(i, d)] = radius * x / norm;
        }
    }
    for i in 0..n_samples {
        for j in 3..10 {
            values[(i, j)] = unit.sample(&mut rng);
        }
    }
    let labels = (0..n_samples).map(|i| if i < half { 1 } else { 2 }).collect();
    DataMatrix::new(values, Some(labels))
}

/// Centres every column and divides by its population standard deviation.
pub fn standardize(data: &DataMatrix) -> Result<DataMatrix> {
    let n = data.n_samples() as f64;
    let mut out = data.clone();
    for j in 0..data.n_features() {
        let col = data.values.column(j);
        let mean = col.sum() / n;
        let var = col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        if !(var > 1e-12) {
            return Err(Error::ZeroVariance {
                feature: data.feature_names[j].clone(),
            });
        }
        let sd = var.sqrt();
        for x in out.values.column_mut(j).iter_mut() {
            *x = (*x - mean) / sd;
        }
    }
    out.standardized = true;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delimiter {
    Comma,
    Tab,
}

impl Delimiter {
    /// Tab for `.tsv`/`.tab`/`.txt`, comma otherwise.
    pub fn for_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv" | "tab" | "txt") => Delimiter::Tab,
            _ => Delimiter::Comma,
        }
    }

    fn byte(self) -> u8 {
        match self {
            Delimiter::Comma => b',',
            Delimiter::Tab => b'\t',
        }
    }
}

pub fn load_matrix(path: &Path, delimiter: Delimiter) -> Result<DataMatrix> {
    let file = File::open(path)?;
    read_matrix(BufReader::new(file), delimiter, path)
}

/// Parses a delimited table. The first row is a header when any of its
/// cells is not a number; a header column named `label` holds class labels.
pub fn read_matrix<R: Read>(reader: R, delimiter: Delimiter, path: &Path) -> Result<DataMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter.byte())
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut names: Option<Vec<String>> = None;
    let mut label_col: Option<usize> = None;
    let mut width: Option<usize> = None;
    let mut values: Vec<f64> = Vec::new();
    let mut labels: Vec<u32> = Vec::new();
    let mut rows = 0usize;
    let mut record = csv::StringRecord::new();
    let mut first = true;
    loop {
        let more = rdr.read_record(&mut record).map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        if !more {
            break;
        }
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        if first {
            first = false;
            let is_header = record.iter().any(|c| c.trim().parse::<f64>().is_err());
            if is_header {
                let cells: Vec<String> = record.iter().map(|c| c.trim().to_string()).collect();
                label_col = cells.iter().position(|c| c == LABEL_COLUMN);
                width = Some(cells.len());
                names = Some(
                    cells
                        .into_iter()
                        .enumerate()
                        .filter(|(j, _)| Some(*j) != label_col)
                        .map(|(_, c)| c)
                        .collect(),
                );
                continue;
            }
        }
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(parse_err(
                line,
                format!("expected {w} fields, found {}", record.len()),
            ));
        }
        for (j, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            if cell.is_empty() {
                return Err(parse_err(line, format!("missing value in column {}", j + 1)));
            }
            if Some(j) == label_col {
                let l = cell
                    .parse::<u32>()
                    .map_err(|_| parse_err(line, format!("label '{cell}' is not a class id")))?;
                labels.push(l);
            } else {
                let x = cell
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| parse_err(line, format!("'{cell}' is not a finite number")))?;
                values.push(x);
            }
        }
        rows += 1;
    }
    let m = width.unwrap_or(0) - usize::from(label_col.is_some());
    let matrix = DMatrix::from_row_slice(rows, m, &values);
    let labels = label_col.map(|_| labels);
    match names {
        Some(n) => DataMatrix::with_names(matrix, n, labels),
        None => DataMatrix::new(matrix, labels),
    }
}

pub fn save_matrix(data: &DataMatrix, path: &Path, delimiter: Delimiter) -> Result<()> {
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    write_matrix(&mut out, data, delimiter)?;
    out.flush()?;
    Ok(())
}

/// Writes a header and one row per sample; numbers use the shortest
/// representation that parses back to the same value.
pub fn write_matrix<W: Write>(out: W, data: &DataMatrix, delimiter: Delimiter) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .delimiter(delimiter.byte())
        .from_writer(out);
    let mut header: Vec<&str> = data.feature_names.iter().map(String::as_str).collect();
    if data.labels.is_some() {
        header.push(LABEL_COLUMN);
    }
    wtr.write_record(&header).map_err(csv_io)?;
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for i in 0..data.n_samples() {
        row.clear();
        row.extend(data.values.row(i).iter().map(|x| x.to_string()));
        if let Some(l) = &data.labels {
            row.push(l[i].to_string());
        }
        wtr.write_record(&row).map_err(csv_io)?;
    }
    wtr.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub repetitions: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified random split for one repetition.
///
/// Each class contributes `round(fraction·n_c)` training samples, at least
/// one, drawn from ChaCha stream `repetition` of `spec.seed`. Indices come
/// back sorted.
pub fn split(labels: &[u32], spec: &SplitSpec, repetition: usize) -> Result<Split> {
    let f = spec.train_fraction;
    if !(f > 0.0 && f <= 1.0) {
        return Err(Error::InvalidParameter(format!("train fraction {f}")));
    }
    let classes = distinct(labels);
    if classes.len() < 2 {
        return Err(Error::DegenerateSupervision);
    }
    if classes.len() > 2 {
        return Err(Error::NonBinaryLabels {
            distinct: classes.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(repetition as u64);
    let mut in_train = vec![false; labels.len()];
    for class in classes {
        let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        let k = ((f * members.len() as f64).round() as usize).clamp(1, members.len());
        for pick in rand::seq::index::sample(&mut rng, members.len(), k) {
            in_train[members[pick]] = true;
        }
    }
    let (train, test): (Vec<usize>, Vec<usize>) =
        (0..labels.len()).partition(|&i| in_train[i]);
    Ok(Split { train, test })
}

/// The split holding out sample `held_out`.
pub fn leave_one_out(n: usize, held_out: usize) -> Split {
    Split {
        train: (0..n).filter(|&i| i != held_out).collect(),
        test: vec![held_out],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn toy_shape_and_determinism() {
        let a = generate_toy(800, 3).unwrap();
        assert_eq!(a.values.shape(), (800, 10));
        let l = a.labels.as_ref().unwrap();
        assert_eq!(l.iter().filter(|&&x| x == 1).count(), 400);
        assert_eq!(a, generate_toy(800, 3).unwrap());
        assert_ne!(a, generate_toy(800, 4).unwrap());
        let tol = 3.0 / (12.0 * 800.0f64).sqrt();
        for j in 3..10 {
            let mean = a.values.column(j).mean();
            assert!((mean - 0.5).abs() < tol, "feature {j} mean {mean}");
        }
        assert!(generate_toy(7, 0).is_err());
        assert!(generate_toy(6, 0).is_err());
    }

    #[test]
    fn toy_radii() {
        let a = generate_toy(40, 1).unwrap();
        for i in 0..40 {
            let r = a.values.row(i).columns(0, 3).norm();
            if i < 20 {
                assert!((1.5..=2.0).contains(&r));
            } else {
                assert!(r <= 0.5);
            }
        }
    }

    #[test]
    fn standardize_examples() {
        let d = DataMatrix::new(DMatrix::from_row_slice(2, 1, &[0.0, 2.0]), None).unwrap();
        let s = standardize(&d).unwrap();
        assert_eq!(s.values.as_slice(), &[-1.0, 1.0]);
        assert!(s.standardized);
        let again = standardize(&s).unwrap();
        assert_relative_eq!(again.values, s.values, epsilon = 1e-10);
        let c = DataMatrix::new(DMatrix::from_element(3, 1, 1.0), None).unwrap();
        assert!(matches!(standardize(&c), Err(Error::ZeroVariance { .. })));
    }

    #[test]
    fn read_with_header_and_labels() {
        let text = "a,b,label\n1,2,1\n3,4.5,2\n-1,0,1\n";
        let d = read_matrix(text.as_bytes(), Delimiter::Comma, Path::new("t.csv")).unwrap();
        assert_eq!(d.feature_names, vec!["a", "b"]);
        assert_eq!(d.labels, Some(vec![1, 2, 1]));
        assert_eq!(d.values[(1, 1)], 4.5);
    }

    #[test]
    fn read_headerless_tab() {
        let d = read_matrix("1\t2\n3\t4\n".as_bytes(), Delimiter::Tab, Path::new("t.tsv")).unwrap();
        assert_eq!(d.feature_names, vec!["f1", "f2"]);
        assert!(d.labels.is_none());
    }

    #[test]
    fn parse_errors_cite_line() {
        let p = Path::new("bad.csv");
        let ragged = read_matrix("a,b\n1,2\n3\n".as_bytes(), Delimiter::Comma, p);
        assert!(matches!(ragged, Err(Error::Parse { line: 3, .. })), "{ragged:?}");
        let text = read_matrix("a,b\n1,x\n".as_bytes(), Delimiter::Comma, p);
        assert!(matches!(text, Err(Error::Parse { line: 2, .. })), "{text:?}");
        let missing = read_matrix("a,b\n1,\n".as_bytes(), Delimiter::Comma, p);
        assert!(matches!(missing, Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn write_read_round_trip() {
        let d = generate_toy(16, 9).unwrap();
        let mut buf = Vec::new();
        write_matrix(&mut buf, &d, Delimiter::Comma).unwrap();
        let back = read_matrix(buf.as_slice(), Delimiter::Comma, Path::new("m.csv")).unwrap();
        assert_eq!(back.values, d.values);
        assert_eq!(back.labels, d.labels);
        assert_eq!(back.feature_names, d.feature_names);
    }

    #[test]
    fn split_examples() {
        let labels: Vec<u32> = (0..800).map(|i| if i < 400 { 1 } else { 2 }).collect();
        let spec = SplitSpec {
            train_fraction: 0.5,
            seed: 5,
            repetitions: 1,
        };
        let s = split(&labels, &spec, 0).unwrap();
        assert_eq!(s.train.len(), 400);
        assert_eq!(s, split(&labels, &spec, 0).unwrap());
        assert_ne!(s, split(&labels, &spec, 1).unwrap());
        let full = split(&labels, &SplitSpec { train_fraction: 1.0, ..spec }, 0).unwrap();
        assert_eq!(full.train.len(), 800);
        assert!(full.test.is_empty());
        let tiny = split(&labels, &SplitSpec { train_fraction: 0.001, ..spec }, 0).unwrap();
        assert_eq!(tiny.train.len(), 2);
    }

    #[test]
    fn loo_split() {
        let s = leave_one_out(4, 2);
        assert_eq!(s.train, vec![0, 1, 3]);
        assert_eq!(s.test, vec![2]);
    }
}

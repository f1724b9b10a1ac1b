//! Accuracy-style agreement and normalized mutual information for two-class labelings.

use crate::{Error, Result};

/// 2×2 table of truth (rows) against prediction (columns).
///
/// Row and column classes are the sorted distinct values of each labeling;
/// a labeling with a single value leaves its second row or column empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contingency {
    pub counts: [[usize; 2]; 2],
    pub truth_classes: Vec<u32>,
    pub predicted_classes: Vec<u32>,
}

fn classes(labels: &[u32]) -> Result<Vec<u32>> {
    let mut d = labels.to_vec();
    d.sort_unstable();
    d.dedup();
    if d.len() > 2 {
        return Err(Error::NonBinaryLabels { distinct: d.len() });
    }
    Ok(d)
}

impl Contingency {
    pub fn new(truth: &[u32], predicted: &[u32]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} true labels, {} predicted",
                truth.len(),
                predicted.len()
            )));
        }
        if truth.is_empty() {
            return Err(Error::InvalidParameter("empty labeling".into()));
        }
        let truth_classes = classes(truth)?;
        let predicted_classes = classes(predicted)?;
        let mut counts = [[0usize; 2]; 2];
        for (t, p) in truth.iter().zip(predicted) {
            let i = truth_classes.iter().position(|c| c == t).expect("class");
            let j = predicted_classes.iter().position(|c| c == p).expect("class");
            counts[i][j] += 1;
        }
        Ok(Self {
            counts,
            truth_classes,
            predicted_classes,
        })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sums(&self) -> [usize; 2] {
        [
            self.counts[0][0] + self.counts[0][1],
            self.counts[1][0] + self.counts[1][1],
        ]
    }

    pub fn col_sums(&self) -> [usize; 2] {
        [
            self.counts[0][0] + self.counts[1][0],
            self.counts[0][1] + self.counts[1][1],
        ]
    }
}

/// Fraction of samples whose predicted label matches the truth.
///
/// With `align` set, cluster ids carry no meaning, so the better of the two
/// one-to-one cluster/class matchings is used.
pub fn rand_index(truth: &[u32], predicted: &[u32], align: bool) -> Result<f64> {
    let table = Contingency::new(truth, predicted)?;
    let n = table.total() as f64;
    if align {
        let c = table.counts;
        Ok((c[0][0] + c[1][1]).max(c[0][1] + c[1][0]) as f64 / n)
    } else {
        let hits = truth.iter().zip(predicted).filter(|(t, p)| t == p).count();
        Ok(hits as f64 / n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmiValue {
    pub value: f64,
    /// One of the labelings is constant, so the normalizer vanishes.
    pub degenerate: bool,
}

/// Mutual information over the geometric mean of the two entropies.
pub fn nmi(truth: &[u32], predicted: &[u32]) -> Result<NmiValue> {
    let table = Contingency::new(truth, predicted)?;
    let n = table.total() as f64;
    let xlogx = |c: usize, d: f64| {
        if c == 0 {
            0.0
        } else {
            c as f64 * (c as f64 / d).ln()
        }
    };
    let rows = table.row_sums();
    let cols = table.col_sums();
    let hr: f64 = rows.iter().map(|&c| xlogx(c, n)).sum();
    let hc: f64 = cols.iter().map(|&c| xlogx(c, n)).sum();
    if hr == 0.0 || hc == 0.0 {
        return Ok(NmiValue {
            value: 0.0,
            degenerate: true,
        });
    }
    let mut mi = 0.0;
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                mi += c as f64 * (n * c as f64 / (rows[i] as f64 * cols[j] as f64)).ln();
            }
        }
    }
    // round-off can leave tiny excursions outside [0, 1]
    let value = (mi / (hr * hc).sqrt()).clamp(0.0, 1.0);
    Ok(NmiValue {
        value,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ri_examples() {
        assert_eq!(rand_index(&[1, 2, 1], &[1, 2, 1], false).unwrap(), 1.0);
        assert_eq!(rand_index(&[1, 1, 2, 2], &[1, 2, 1, 2], false).unwrap(), 0.5);
        assert_eq!(rand_index(&[1, 1, 2, 2], &[2, 2, 1, 1], true).unwrap(), 1.0);
        assert_eq!(rand_index(&[1, 1, 2, 2], &[2, 2, 1, 1], false).unwrap(), 0.0);
        assert_eq!(rand_index(&[1, 1, 2, 2], &[0, 0, 1, 1], true).unwrap(), 1.0);
        assert!(matches!(
            rand_index(&[1, 2, 3], &[1, 1, 1], false),
            Err(Error::NonBinaryLabels { distinct: 3 })
        ));
    }

    #[test]
    fn nmi_examples() {
        let perfect = nmi(&[1, 1, 2, 2], &[1, 1, 2, 2]).unwrap();
        assert_relative_eq!(perfect.value, 1.0, epsilon = 1e-15);
        let quarters = nmi(&[1, 1, 2, 2], &[1, 2, 1, 2]).unwrap();
        assert_eq!(quarters.value, 0.0);
        let constant = nmi(&[1, 1, 2, 2], &[1, 1, 1, 1]).unwrap();
        assert!(constant.degenerate);
        assert_eq!(constant.value, 0.0);
    }

    #[test]
    fn nmi_three_one_table() {
        // contingency [[3,1],[1,3]]: entropy-identity oracle I / H
        let truth = [1, 1, 1, 1, 2, 2, 2, 2];
        let pred = [1, 1, 1, 2, 1, 2, 2, 2];
        let h = std::f64::consts::LN_2;
        let (p, q) = (0.75f64, 0.25f64);
        let hc = -(p * p.ln() + q * q.ln());
        let oracle = (h - hc) / h;
        assert_relative_eq!(nmi(&truth, &pred).unwrap().value, oracle, epsilon = 1e-12);
    }

    #[test]
    fn contingency_margins() {
        let t = Contingency::new(&[1, 1, 2, 2, 2], &[5, 7, 7, 7, 5]).unwrap();
        assert_eq!(t.counts, [[1, 1], [1, 2]]);
        assert_eq!(t.row_sums(), [2, 3]);
        assert_eq!(t.col_sums(), [2, 3]);
        assert_eq!(t.predicted_classes, vec![5, 7]);
    }
}

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{train_tree, Hyperparams, PhysicalActivity};
use crate::signal::FeatureMatrix;
use crate::{Error, Result};

const K: usize = PhysicalActivity::COUNT;

/// Rows are the expected activity, columns the predicted one.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: [[usize; K]; K],
}

impl ConfusionMatrix {
    pub fn from_predictions(expected: &[PhysicalActivity], predicted: &[PhysicalActivity]) -> Self {
        let mut m = ConfusionMatrix::default();
        for (e, p) in expected.iter().zip(predicted) {
            m.counts[e.index()][p.index()] += 1;
        }
        m
    }

    pub fn support(&self) -> [usize; K] {
        let mut s = [0; K];
        for (i, row) in self.counts.iter().enumerate() {
            s[i] = row.iter().sum();
        }
        s
    }

    /// Row-normalised rates; rows without support are all zero.
    pub fn rates(&self) -> [[f64; K]; K] {
        let support = self.support();
        let mut r = [[0.0; K]; K];
        for ((row, counts), &s) in r.iter_mut().zip(&self.counts).zip(&support) {
            if s > 0 {
                for (x, &c) in row.iter_mut().zip(counts) {
                    *x = c as f64 / s as f64;
                }
            }
        }
        r
    }

    pub fn accuracy(&self) -> f64 {
        let total: usize = self.support().iter().sum();
        if total == 0 {
            return 0.0;
        }
        (0..K).map(|i| self.counts[i][i]).sum::<usize>() as f64 / total as f64
    }

    /// CSV with activity names on both axes and a trailing support column.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("expected\\predicted");
        for a in PhysicalActivity::ALL {
            s.push(',');
            s.push_str(a.name());
        }
        s.push_str(",support\n");
        let rates = self.rates();
        let support = self.support();
        for a in PhysicalActivity::ALL {
            s.push_str(a.name());
            for r in rates[a.index()] {
                let _ = write!(s, ",{r}");
            }
            let _ = writeln!(s, ",{}", support[a.index()]);
        }
        s
    }

    /// Fixed-width table with two decimals.
    pub fn to_table(&self) -> String {
        let mut s = format!("{:>11}", "");
        for a in PhysicalActivity::ALL {
            let _ = write!(s, "{:>11}", a.name());
        }
        s.push('\n');
        let rates = self.rates();
        for a in PhysicalActivity::ALL {
            let _ = write!(s, "{:>11}", a.name());
            for r in rates[a.index()] {
                let _ = write!(s, "{r:>11.2}");
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    /// Fold index of every row.
    pub folds: Vec<usize>,
    pub stratified: bool,
    pub warnings: Vec<String>,
}

fn assign_folds(labels: &[PhysicalActivity], k: usize, seed: u64, warnings: &mut Vec<String>) -> (Vec<usize>, bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; labels.len()];
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); K];
    for (i, l) in labels.iter().enumerate() {
        by_class[l.index()].push(i);
    }
    let short: Vec<_> = PhysicalActivity::ALL
        .into_iter()
        .filter(|a| (1..k).contains(&by_class[a.index()].len()))
        .collect();
    if !short.is_empty() {
        let names: Vec<_> = short.iter().map(|a| a.name()).collect();
        let msg = format!(
            "classes with fewer than {k} rows ({}); using a non-stratified split",
            names.join(", ")
        );
        log::warn!("{msg}");
        warnings.push(msg);
        let mut idx: Vec<usize> = (0..labels.len()).collect();
        idx.shuffle(&mut rng);
        for (j, i) in idx.into_iter().enumerate() {
            folds[i] = j % k;
        }
        return (folds, false);
    }
    let mut next = 0;
    for class in &mut by_class {
        class.shuffle(&mut rng);
        for &i in class.iter() {
            folds[i] = next % k;
            next += 1;
        }
    }
    (folds, true)
}

/// Seeded (stratified when possible) k-fold cross-validation with out-of-fold
/// predictions aggregated into one confusion matrix.
pub fn cross_validate(data: &FeatureMatrix, k: usize, params: Hyperparams, seed: u64) -> Result<CvReport> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k must be >= 2, got {k}")));
    }
    let labels = data
        .labels
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("cross-validation needs labels".into()))?;
    if labels.len() < k {
        return Err(Error::InvalidParameter(format!(
            "{} rows cannot be split into {k} folds",
            labels.len()
        )));
    }
    let mut warnings = Vec::new();
    let (folds, stratified) = assign_folds(labels, k, seed, &mut warnings);
    let mut predicted = vec![PhysicalActivity::Lie; labels.len()];
    for fold in 0..k {
        let (test, train): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| folds[i] == fold);
        if test.is_empty() {
            continue;
        }
        let model = train_tree(&data.subset(&train), params)?;
        for &i in &test {
            predicted[i] = model.predict(&data.rows[i])?.0;
        }
    }
    let confusion = ConfusionMatrix::from_predictions(labels, &predicted);
    Ok(CvReport {
        accuracy: confusion.accuracy(),
        confusion,
        folds,
        stratified,
        warnings,
    })
}

//! Friedman test and Nemenyi critical difference over classifier scores.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-dataset ranks of `k` classifiers on `N` datasets (rank 1 is best).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    /// `scores[j][d]`: classifier `j` on dataset `d`.
    pub scores: Vec<Vec<f64>>,
    pub ranks: Vec<Vec<f64>>,
    /// Mean rank `R_j` of each classifier.
    pub mean_ranks: Vec<f64>,
}

impl RankTable {
    pub fn k(&self) -> usize {
        self.scores.len()
    }

    pub fn n(&self) -> usize {
        self.scores.first().map_or(0, Vec::len)
    }
}

/// Midranks per dataset, averaged per classifier.
pub fn average_ranks(scores: &[Vec<f64>], higher_is_better: bool) -> Result<RankTable> {
    let k = scores.len();
    let n = scores.first().map_or(0, Vec::len);
    if k < 2 || n < 2 {
        return Err(Error::InvalidParameter(format!("need k >= 2 classifiers and N >= 2 datasets, got k = {k}, N = {n}")));
    }
    if scores.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidParameter("ragged score matrix".into()));
    }
    if scores.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite score".into()));
    }
    let mut ranks = vec![vec![0.0; n]; k];
    for d in 0..n {
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| {
            let ord = scores[a][d].total_cmp(&scores[b][d]);
            if higher_is_better {
                ord.reverse()
            } else {
                ord
            }
        });
        let mut start = 0;
        while start < k {
            let mut end = start;
            while end + 1 < k && scores[order[end + 1]][d] == scores[order[start]][d] {
                end += 1;
            }
            let mid = (start + end) as f64 / 2.0 + 1.0;
            for &j in &order[start..=end] {
                ranks[j][d] = mid;
            }
            start = end + 1;
        }
    }
    let mean_ranks = ranks.iter().map(|r| r.iter().sum::<f64>() / n as f64).collect();
    Ok(RankTable {
        scores: scores.to_vec(),
        ranks,
        mean_ranks,
    })
}

/// `12N / (k(k+1)) · (Σ R_j² − k(k+1)²/4)`.
pub fn friedman_chi2(rt: &RankTable) -> f64 {
    let (k, n) = (rt.k() as f64, rt.n() as f64);
    let sum_sq: f64 = rt.mean_ranks.iter().map(|r| r * r).sum();
    12.0 * n / (k * (k + 1.0)) * (sum_sq - k * (k + 1.0) * (k + 1.0) / 4.0)
}

/// Iman–Davenport statistic `(N−1)χ² / (N(k−1) − χ²)`.
pub fn friedman_f(chi2: f64, n: usize, k: usize) -> Result<f64> {
    let denom = n as f64 * (k as f64 - 1.0) - chi2;
    if !(denom > 0.0) {
        return Err(Error::FriedmanDenominator(denom));
    }
    Ok((n as f64 - 1.0) * chi2 / denom)
}

/// `q · sqrt(k(k+1) / (6N))`.
pub fn nemenyi_cd(k: usize, n: usize, q: f64) -> Result<f64> {
    if !(q > 0.0) || n == 0 {
        return Err(Error::InvalidParameter(format!("nemenyi_cd needs q > 0 and N > 0, got q = {q}, N = {n}")));
    }
    let k = k as f64;
    Ok(q * (k * (k + 1.0) / (6.0 * n as f64)).sqrt())
}

/// Studentized range statistic divided by `sqrt(2)` for `k = 2..=10`
/// (Demšar, 2006, Table 5).
const Q_005: [f64; 9] = [1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164];
const Q_010: [f64; 9] = [1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920];

/// Nemenyi critical value for `alpha ∈ {0.05, 0.10}` and `2 <= k <= 10`.
pub fn nemenyi_q(alpha: f64, k: usize) -> Result<f64> {
    let table = if (alpha - 0.05).abs() < 1e-12 {
        &Q_005
    } else if (alpha - 0.10).abs() < 1e-12 {
        &Q_010
    } else {
        return Err(Error::InvalidParameter(format!("no Nemenyi table for alpha = {alpha}; use 0.05 or 0.1")));
    };
    if !(2..=10).contains(&k) {
        return Err(Error::InvalidParameter(format!("no Nemenyi table entry for k = {k}")));
    }
    Ok(table[k - 2])
}

/// Input for a critical-difference diagram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdDiagram {
    pub cd: f64,
    /// `(classifier index, mean rank)` by increasing rank.
    pub order: Vec<(usize, f64)>,
    /// Maximal groups (size >= 2) whose pairwise rank differences are all <= `cd`.
    pub cliques: Vec<Vec<usize>>,
}

pub fn cd_diagram_data(rt: &RankTable, cd: f64) -> CdDiagram {
    let mut order: Vec<(usize, f64)> = rt.mean_ranks.iter().copied().enumerate().collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let mut cliques = Vec::new();
    let mut last_end = None;
    for start in 0..order.len() {
        let mut end = start;
        while end + 1 < order.len() && order[end + 1].1 - order[start].1 <= cd {
            end += 1;
        }
        if end > start && last_end.is_none_or(|e| end > e) {
            cliques.push(order[start..=end].iter().map(|&(j, _)| j).collect());
            last_end = Some(end);
        }
    }
    CdDiagram { cd, order, cliques }
}

/// Omnibus and post-hoc summary for one score matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedmanReport {
    pub classifiers: Vec<String>,
    pub k: usize,
    pub n: usize,
    pub mean_ranks: Vec<f64>,
    pub chi2: f64,
    /// `None` when `χ² >= N(k-1)` (all datasets rank the classifiers identically).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ff: Option<f64>,
    pub alpha: f64,
    pub q: f64,
    pub cd: f64,
    pub cliques: Vec<Vec<String>>,
}

impl FriedmanReport {
    /// `scores[j][d]` for classifier `names[j]` on dataset `d`.
    pub fn compute(names: &[String], scores: &[Vec<f64>], higher_is_better: bool, alpha: f64) -> Result<Self> {
        if names.len() != scores.len() {
            return Err(Error::DimensionMismatch { expected: scores.len(), got: names.len() });
        }
        let rt = average_ranks(scores, higher_is_better)?;
        let (k, n) = (rt.k(), rt.n());
        let chi2 = friedman_chi2(&rt);
        let ff = friedman_f(chi2, n, k).ok();
        let q = nemenyi_q(alpha, k)?;
        let cd = nemenyi_cd(k, n, q)?;
        let diagram = cd_diagram_data(&rt, cd);
        Ok(Self {
            classifiers: names.to_vec(),
            k,
            n,
            mean_ranks: rt.mean_ranks,
            chi2,
            ff,
            alpha,
            q,
            cd,
            cliques: diagram
                .cliques
                .iter()
                .map(|c| c.iter().map(|&j| names[j].clone()).collect())
                .collect(),
        })
    }

    /// TOML document tagged `scheme = "baen-report/1"`.
    pub fn to_toml(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Doc<'a> {
            scheme: &'a str,
            #[serde(flatten)]
            report: &'a FriedmanReport,
        }
        toml::to_string(&Doc { scheme: "baen-report/1", report: self }).map_err(|e| Error::Protocol(e.to_string()))
    }
}

/// Scores of several classifiers on several datasets, as read from or
/// written to CSV (`dataset,<classifier>,...`, one row per dataset).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub classifiers: Vec<String>,
    pub datasets: Vec<String>,
    /// `values[d][j]`: classifier `j` on dataset `d`.
    pub values: Vec<Vec<f64>>,
}

impl ScoreMatrix {
    /// Transposed to `[classifier][dataset]`.
    pub fn by_classifier(&self) -> Vec<Vec<f64>> {
        (0..self.classifiers.len())
            .map(|j| self.values.iter().map(|row| row[j]).collect())
            .collect()
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Parse { row: 0, column: String::new(), detail: format!("{other:?}") },
        })?;
        let header = r.headers()?.clone();
        if header.len() < 3 {
            return Err(Error::Parse {
                row: 0,
                column: String::new(),
                detail: "need a dataset column and at least two classifier columns".into(),
            });
        }
        let classifiers: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut datasets = Vec::new();
        let mut values = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            datasets.push(rec.get(0).unwrap_or_default().to_string());
            let mut row = Vec::with_capacity(classifiers.len());
            for (j, name) in classifiers.iter().enumerate() {
                let cell = rec.get(j + 1).unwrap_or_default().trim();
                let v: f64 = cell.parse().map_err(|_| Error::Parse {
                    row: i + 1,
                    column: name.clone(),
                    detail: format!("not a number: {cell:?}"),
                })?;
                row.push(v);
            }
            values.push(row);
        }
        Ok(Self { classifiers, datasets, values })
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["dataset".to_string()];
        header.extend(self.classifiers.iter().cloned());
        w.write_record(&header)?;
        for (name, row) in self.datasets.iter().zip(&self.values) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }
}

//! Balanced two-way fixed-effects ANOVA with interaction.

use serde::{Deserialize, Serialize};

use super::dist::f_sf;
use crate::error::{Error, Result};

/// Observations arranged by factor levels: `cells[a][b]` holds the samples at
/// level `a` of the first factor and level `b` of the second.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorialData {
    pub factor_a: String,
    pub factor_b: String,
    pub levels_a: Vec<String>,
    pub levels_b: Vec<String>,
    pub cells: Vec<Vec<Vec<f64>>>,
}

impl FactorialData {
    pub fn new(
        factor_a: impl Into<String>,
        factor_b: impl Into<String>,
        levels_a: Vec<String>,
        levels_b: Vec<String>,
        cells: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let data = FactorialData {
            factor_a: factor_a.into(),
            factor_b: factor_b.into(),
            levels_a,
            levels_b,
            cells,
        };
        data.check_shape()?;
        Ok(data)
    }

    fn check_shape(&self) -> Result<()> {
        if self.cells.len() != self.levels_a.len() || self.cells.iter().any(|row| row.len() != self.levels_b.len()) {
            return Err(Error::InvalidParameter("cell grid does not match factor levels".into()));
        }
        if let Some((i, j)) = self.cell_indices().find(|&(i, j)| self.cells[i][j].is_empty()) {
            return Err(Error::InsufficientData(format!(
                "cell ({}, {}) is empty",
                self.levels_a[i], self.levels_b[j]
            )));
        }
        if self.cells.iter().flatten().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("observations must be finite".into()));
        }
        Ok(())
    }

    fn cell_indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.levels_a.len()).flat_map(move |i| (0..self.levels_b.len()).map(move |j| (i, j)))
    }

    /// Common per-cell sample size, or an error when cells differ.
    pub fn balanced_n(&self) -> Result<usize> {
        let n = self.cells.first().and_then(|r| r.first()).map(Vec::len).unwrap_or(0);
        if self.cells.iter().flatten().any(|c| c.len() != n) {
            return Err(Error::Unbalanced("every cell needs the same number of observations".into()));
        }
        Ok(n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    A,
    B,
    Interaction,
    Residual,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnovaRow {
    pub source: Source,
    pub name: String,
    pub sum_sq: f64,
    pub df: f64,
    pub mean_sq: f64,
    /// `None` on the residual row.
    pub f: Option<f64>,
    pub p: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnovaTable {
    pub rows: Vec<AnovaRow>,
    pub total_sum_sq: f64,
    pub total_df: f64,
}

impl AnovaTable {
    pub fn row(&self, source: Source) -> &AnovaRow {
        self.rows.iter().find(|r| r.source == source).expect("all sources present")
    }
}

/// Standard decomposition `SS_total = SS_A + SS_B + SS_AB + SS_residual`.
pub fn anova2(data: &FactorialData) -> Result<AnovaTable> {
    data.check_shape()?;
    let a = data.levels_a.len();
    let b = data.levels_b.len();
    if a < 2 || b < 2 {
        return Err(Error::InsufficientData("each factor needs at least two levels".into()));
    }
    let n = data.balanced_n()?;
    if n < 2 {
        return Err(Error::InsufficientData("each cell needs at least two observations".into()));
    }

    // shift by one observation so constant data gives exact zeros
    let shift = data.cells[0][0][0];
    let mean = |xs: &[f64]| xs.iter().map(|x| x - shift).sum::<f64>() / xs.len() as f64;
    let cell_mean: Vec<Vec<f64>> = data.cells.iter().map(|row| row.iter().map(|c| mean(c)).collect()).collect();
    let a_mean: Vec<f64> = cell_mean.iter().map(|row| row.iter().sum::<f64>() / b as f64).collect();
    let b_mean: Vec<f64> = (0..b)
        .map(|j| cell_mean.iter().map(|row| row[j]).sum::<f64>() / a as f64)
        .collect();
    let grand = a_mean.iter().sum::<f64>() / a as f64;

    let nf = n as f64;
    let ss_a = nf * b as f64 * a_mean.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_b = nf * a as f64 * b_mean.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let mut ss_ab = 0.0;
    let mut ss_res = 0.0;
    let mut ss_total = 0.0;
    for i in 0..a {
        for j in 0..b {
            let m = cell_mean[i][j];
            ss_ab += nf * (m - a_mean[i] - b_mean[j] + grand).powi(2);
            for &x in &data.cells[i][j] {
                let x = x - shift;
                ss_res += (x - m).powi(2);
                ss_total += (x - grand).powi(2);
            }
        }
    }

    let df_a = (a - 1) as f64;
    let df_b = (b - 1) as f64;
    let df_ab = df_a * df_b;
    let df_res = (a * b * (n - 1)) as f64;
    let ms_res = ss_res / df_res;

    let effect = |source, name: String, ss: f64, df: f64| {
        let ms = ss / df;
        let (f, p) = f_test(ms, ms_res, df, df_res);
        AnovaRow {
            source,
            name,
            sum_sq: ss,
            df,
            mean_sq: ms,
            f: Some(f),
            p: Some(p),
        }
    };
    let rows = vec![
        effect(Source::A, data.factor_a.clone(), ss_a, df_a),
        effect(Source::B, data.factor_b.clone(), ss_b, df_b),
        effect(
            Source::Interaction,
            format!("{}:{}", data.factor_a, data.factor_b),
            ss_ab,
            df_ab,
        ),
        AnovaRow {
            source: Source::Residual,
            name: "residual".into(),
            sum_sq: ss_res,
            df: df_res,
            mean_sq: ms_res,
            f: None,
            p: None,
        },
    ];
    Ok(AnovaTable {
        rows,
        total_sum_sq: ss_total,
        total_df: (a * b * n - 1) as f64,
    })
}

/// F ratio and upper-tail p. A zero effect gives `(0, 1)`; a non-zero effect
/// over zero residual variance gives `(inf, 0)`.
fn f_test(ms: f64, ms_res: f64, df: f64, df_res: f64) -> (f64, f64) {
    if ms <= 0.0 {
        return (0.0, 1.0);
    }
    if ms_res <= 0.0 {
        return (f64::INFINITY, 0.0);
    }
    let f = ms / ms_res;
    (f, f_sf(f, df, df_res))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(cells: Vec<Vec<Vec<f64>>>) -> FactorialData {
        let a = cells.len();
        let b = cells[0].len();
        FactorialData::new(
            "res",
            "fov",
            (0..a).map(|i| format!("a{i}")).collect(),
            (0..b).map(|j| format!("b{j}")).collect(),
            cells,
        )
        .unwrap()
    }

    #[test]
    fn identical_observations_give_zero_ss_and_p_one() {
        let t = anova2(&data(vec![vec![vec![0.1; 3]; 3]; 2])).unwrap();
        for row in &t.rows {
            assert_eq!(row.sum_sq, 0.0);
        }
        for s in [Source::A, Source::B, Source::Interaction] {
            assert_eq!(t.row(s).p, Some(1.0));
        }
        assert_eq!(t.total_df, 17.0);
    }

    #[test]
    fn textbook_example() {
        // hand-computed: cell means 2,4 / 6,8 with +-1 noise
        let t = anova2(&data(vec![
            vec![vec![1.0, 3.0], vec![3.0, 5.0]],
            vec![vec![5.0, 7.0], vec![7.0, 9.0]],
        ]))
        .unwrap();
        assert!((t.row(Source::A).sum_sq - 32.0).abs() < 1e-12);
        assert!((t.row(Source::B).sum_sq - 8.0).abs() < 1e-12);
        assert!(t.row(Source::Interaction).sum_sq.abs() < 1e-12);
        assert!((t.row(Source::Residual).sum_sq - 8.0).abs() < 1e-12);
        assert!((t.row(Source::A).f.unwrap() - 16.0).abs() < 1e-12);
        assert!((t.total_sum_sq - 48.0).abs() < 1e-12);
    }

    #[test]
    fn one_factor_effect_dominates() {
        // B shifts by 10 per level; both A levels see the same noise, so A has no effect
        let noise = [0.3, -0.2, 0.1, -0.4, 0.25, -0.05, 0.15, 0.0, -0.1];
        let cells = (0..2)
            .map(|_| {
                (0..3)
                    .map(|j| (0..3).map(|r| 10.0 * j as f64 + noise[3 * j + r]).collect())
                    .collect()
            })
            .collect();
        let t = anova2(&data(cells)).unwrap();
        assert!(t.row(Source::B).f.unwrap() > 1000.0);
        assert!(t.row(Source::A).sum_sq < 1e-20);
        assert_eq!(t.row(Source::A).p, Some(1.0));
    }

    #[test]
    fn rejects_bad_designs() {
        let single_level = FactorialData::new("a", "b", vec!["x".into()], vec!["y".into(), "z".into()], vec![vec![
            vec![1.0, 2.0],
            vec![3.0, 4.0],
        ]])
        .unwrap();
        assert!(anova2(&single_level).is_err());
        let unbalanced = data(vec![
            vec![vec![1.0, 2.0], vec![3.0, 4.0, 5.0]],
            vec![vec![1.0, 2.0], vec![3.0, 4.0]],
        ]);
        assert!(matches!(anova2(&unbalanced), Err(Error::Unbalanced(_))));
        let singletons = data(vec![vec![vec![1.0], vec![2.0]], vec![vec![3.0], vec![4.0]]]);
        assert!(anova2(&singletons).is_err());
        assert!(FactorialData::new("a", "b", vec!["x".into()], vec!["y".into()], vec![vec![vec![]]]).is_err());
    }
}

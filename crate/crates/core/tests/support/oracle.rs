//! Independent references for the statistics: least-squares model
//! comparison (nalgebra) for the two-way ANOVA and statrs distributions.
//! Shared by several test targets via `#[path]`.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use spv_core::stats::FactorialData;
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

/// Balanced a×b design with `n` replicates: μ + a_i + b_j + ab_ij + noise.
pub fn random_design(seed: u64, a: usize, b: usize, n: usize) -> FactorialData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mu: f64 = rng.gen_range(-5.0..5.0);
    let ea: Vec<f64> = (0..a).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let eb: Vec<f64> = (0..b).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let interaction = rng.gen_bool(0.5);
    let cells = (0..a)
        .map(|i| {
            (0..b)
                .map(|j| {
                    let ab = if interaction { 0.5 * ((i * b + j) as f64).sin() } else { 0.0 };
                    (0..n)
                        .map(|_| {
                            let z: f64 = rng.sample(StandardNormal);
                            mu + ea[i] + eb[j] + ab + z
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    FactorialData::new(
        "a",
        "b",
        (0..a).map(|i| format!("a{i}")).collect(),
        (0..b).map(|j| format!("b{j}")).collect(),
        cells,
    )
    .unwrap()
}

/// Residual sum of squares of a least-squares fit with dummy-coded columns.
pub fn rss(y: &DVector<f64>, columns: &[Vec<f64>]) -> f64 {
    let x = DMatrix::from_fn(y.len(), columns.len(), |r, c| columns[c][r]);
    let svd = x.clone().svd(true, true);
    let beta = svd.solve(y, 1e-12).unwrap();
    (y - x * beta).norm_squared()
}

pub struct Reference {
    pub ss: [f64; 4],
    pub df: [f64; 4],
    pub f: [f64; 3],
    pub p: [f64; 3],
}

/// Two-way ANOVA by nested-model comparison; in a balanced design every
/// sequential ordering gives the same sums of squares.
pub fn reference_anova(data: &FactorialData) -> Reference {
    let (a, b) = (data.levels_a.len(), data.levels_b.len());
    let mut y = Vec::new();
    let mut ia = Vec::new();
    let mut ib = Vec::new();
    for i in 0..a {
        for j in 0..b {
            for &v in &data.cells[i][j] {
                y.push(v);
                ia.push(i);
                ib.push(j);
            }
        }
    }
    let n = y.len();
    let y = DVector::from_vec(y);
    let intercept = vec![1.0; n];
    let dummies = |idx: &[usize], levels: usize| -> Vec<Vec<f64>> {
        (1..levels).map(|l| idx.iter().map(|&i| (i == l) as u8 as f64).collect()).collect()
    };
    let da = dummies(&ia, a);
    let db = dummies(&ib, b);
    let dab: Vec<Vec<f64>> = da
        .iter()
        .flat_map(|ca| db.iter().map(move |cb| ca.iter().zip(cb).map(|(x, y)| x * y).collect()))
        .collect();

    let model = |parts: &[&Vec<Vec<f64>>]| -> f64 {
        let mut cols = vec![intercept.clone()];
        for p in parts {
            cols.extend(p.iter().cloned());
        }
        rss(&y, &cols)
    };
    let r0 = model(&[]);
    let r_a = model(&[&da]);
    let r_ab_add = model(&[&da, &db]);
    let r_full = model(&[&da, &db, &dab]);
    let ss = [r0 - r_a, r_a - r_ab_add, r_ab_add - r_full, r_full];
    let df_res = (n - a * b) as f64;
    let df = [(a - 1) as f64, (b - 1) as f64, ((a - 1) * (b - 1)) as f64, df_res];
    let ms_res = ss[3] / df_res;
    let mut f = [0.0; 3];
    let mut p = [0.0; 3];
    for k in 0..3 {
        f[k] = ss[k] / df[k] / ms_res;
        p[k] = 1.0 - FisherSnedecor::new(df[k], df_res).unwrap().cdf(f[k]);
    }
    Reference { ss, df, f, p }
}

/// Two-sided p of the pooled two-sample t-test.
pub fn pooled_t_p(g1: &[f64], g2: &[f64]) -> f64 {
    let mean = |g: &[f64]| g.iter().sum::<f64>() / g.len() as f64;
    let (m1, m2) = (mean(g1), mean(g2));
    let ss: f64 = g1.iter().map(|x| (x - m1).powi(2)).sum::<f64>() + g2.iter().map(|x| (x - m2).powi(2)).sum::<f64>();
    let df = (g1.len() + g2.len() - 2) as f64;
    let sp2 = ss / df;
    let t = (m1 - m2) / (sp2 * (1.0 / g1.len() as f64 + 1.0 / g2.len() as f64)).sqrt();
    2.0 * (1.0 - StudentsT::new(0.0, 1.0, df).unwrap().cdf(t.abs()))
}

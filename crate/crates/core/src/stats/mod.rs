//! Distribution functions, two-way ANOVA, Tukey HSD and descriptive summaries.

pub mod anova;
pub mod describe;
pub mod dist;
pub mod tukey;

pub use anova::{anova2, AnovaRow, AnovaTable, FactorialData, Source};
pub use describe::{mean, quantile_sorted, sample_sd, BoxStats};
pub use tukey::{significance_stars, tukey_hsd, Comparison, TukeyResult};

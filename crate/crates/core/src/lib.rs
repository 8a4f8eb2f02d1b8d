//! Statistically equivalent signature (SES) feature selection.
//!
//! A constraint-based search that returns the variables directly associated
//! with a target together with, for each of them, the queue of variables that
//! proved interchangeable with it. Any choice of one member per queue is a
//! signature of equivalent predictive value.
//!
//! The numeric code is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`, which is what the documented
//! accuracy targets assume.
//!
//! ```
//! use ses_core::{ses_run, DatasetF64, SesConfigF64, Target};
//!
//! let x: Vec<f64> = (0..60).map(|i| ((i * 37) % 61) as f64).collect();
//! let noise: Vec<f64> = (0..60).map(|i| ((i * 11) % 7) as f64).collect();
//! let y: Vec<f64> = x.iter().zip(&noise).map(|(a, b)| 2.0 * a + b).collect();
//! let ds = DatasetF64::from_continuous(vec![x.clone(), x, noise]).unwrap();
//! let out = ses_run(&ds, &Target::Continuous(y), &SesConfigF64::new(0.05, 2), None).unwrap();
//! assert_eq!(out.selected_vars[0], 0);
//! assert_eq!(out.queues[0], vec![0, 1]);
//! ```

pub mod bench;
pub mod citests;
pub mod data;
pub mod error;
pub mod modelsel;
mod par;
pub mod regress;
pub mod scalar;
pub mod ses;
pub mod special;

pub use citests::{dispatch_test, TestChoice, TestKey, TestResult, TestSpec};
pub use data::{column_stats, load_dataset, ColumnKind, Dataset, Schema, Target, TargetColumn};
pub use error::{Error, Result};
pub use par::parallel_map;
pub use scalar::Real;
pub use ses::{enumerate_signatures, ses_run, SesConfig, SesOutput, Signatures, TestCache};

pub type DatasetF64 = Dataset<f64>;
pub type DatasetF32 = Dataset<f32>;
pub type TargetF64 = Target<f64>;
pub type TargetF32 = Target<f32>;
pub type TestResultF64 = TestResult<f64>;
pub type TestSpecF64 = TestSpec<f64>;
pub type SesConfigF64 = SesConfig<f64>;
pub type SesConfigF32 = SesConfig<f32>;
pub type SesOutputF64 = SesOutput<f64>;
pub type SesOutputF32 = SesOutput<f32>;
pub type TestCacheF64 = TestCache<f64>;
pub type LinearFitF64 = regress::LinearFit<f64>;
pub type LogisticFitF64 = regress::LogisticFit<f64>;
pub type CvConfigF64 = modelsel::CvConfig<f64>;
pub type CvResultF64 = modelsel::CvResult<f64>;

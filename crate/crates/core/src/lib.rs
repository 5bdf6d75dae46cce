//! Differentially private publishing of two-dimensional point sets.
//!
//! Points are projected onto a Hilbert curve, sorted, grouped into blocks of
//! `k` consecutive values, and the block sums are released with Laplace
//! noise. Consumers reconstruct a monotone estimate of the sorted sequence
//! with isotonic regression and map it back to the plane.
//!
//! ```
//! use geodp::{publish, reconstruct, GroupSize, HilbertConfig, Noise, Point2D};
//! use rand::SeedableRng;
//!
//! let points = vec![Point2D::new(0.1, 0.2), Point2D::new(0.8, 0.9), Point2D::new(0.5, 0.5)];
//! let cfg = HilbertConfig::new(8, geodp::Rect::unit()).unwrap();
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
//! let release = publish(&points, 1.0, GroupSize::Fixed(1), &cfg, Noise::On, &mut rng).unwrap();
//! let rec = reconstruct(&release).unwrap();
//! assert_eq!(rec.points2d.len(), 3);
//! ```

pub mod baselines;
pub mod error;
pub mod error_model;
pub mod estimators;
pub mod io;
pub mod mechanism;
pub mod regression;
pub mod synth;
pub mod transform;

pub use error::{Error, Result};
pub use error_model::{choose_group_size, default_table, predict_err, DatasetFamily, ErrorTable, Lookup};
pub use estimators::{density_from_values, range_count, DensityEstimate, RangeCounter, RectQuery};
pub use io::Meta;
pub use mechanism::{publish, publish_sorted, GroupPartition, GroupSize, Noise, Release, SortedUnitSequence};
pub use regression::{isotonic_l1, isotonic_l2, reconstruct, Reconstruction};
pub use transform::{hilbert_forward, hilbert_inverse, map_dataset, HilbertConfig, Point2D, PointSet2D, Rect, UnitPoint2D};

//! Meal-to-meal blood glucose prediction benchmark.
//!
//! The pipeline runs from raw diary records to baseline-relative loss tables:
//!
//! 1. [`ingest`] parses diary CSVs, cleans them and fills missing carbs and
//!    boluses.
//! 2. [`features`] builds one row per consecutive record pair (insulin on
//!    board, time since the last carb and bolus event, day of week,
//!    demographics, optional PCA).
//! 3. [`ep`] flags the records an expert could reasonably predict.
//! 4. [`variants`] combines those choices into the named dataset variants.
//! 5. [`models`] holds the predictor zoo, up to the confidence-weighted GPR
//!    ensemble.
//! 6. [`eval`] runs contiguous k-fold cross-validation per patient and
//!    computes the six metrics.
//! 7. [`grid`] runs a model × variant grid and writes the result tables.
//!
//! [`synth`] generates seeded cohorts with controllable signal for desk-scale
//! runs. Runnable walkthroughs live in `examples/`:
//!
//! ```text
//! cargo run --example iob_curve
//! cargo run --example clean_and_impute
//! cargo run --example features
//! cargo run --example ep_filter
//! cargo run --example variants
//! cargo run --example weighted_gpr
//! cargo run --example cross_validation
//! cargo run --example metrics
//! cargo run --example synth_grid
//! ```

pub mod ep;
pub mod error;
pub mod eval;
pub mod features;
pub mod grid;
pub mod ingest;
pub mod model;
pub mod models;
pub mod scaling;
pub mod synth;
pub mod variants;

pub use error::{Error, Result};
pub use model::{
    DiaryRecord, ExerciseLevel, FeatureRow, MealSlot, PatientHistory, PredictionPair, Sex,
    StaticProfile,
};

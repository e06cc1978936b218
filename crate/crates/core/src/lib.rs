//! Decision trees for data with missing covariates.
//!
//! Five ways of handling a missing split variable are available through
//! [`Strategy`]: send missing rows to the larger child (Majority), learn their
//! direction (MIA), split them fractionally across both children
//! (Fractional Case), give them their own child (Trinary), or pick the better
//! of MIA and Trinary at every node (TrinaryMIA).
//!
//! ```
//! use tritree::{train, Dataset, FeatureColumn, Response, Strategy, TrainConfig};
//!
//! let x = FeatureColumn::numeric("x", vec![Some(1.0), Some(2.0), None, Some(8.0), Some(9.0)]);
//! let ds = Dataset::new(vec![x], "y", Response::Real(vec![1.0, 1.0, 5.0, 5.0, 5.0])).unwrap();
//! let rows: Vec<usize> = (0..ds.n_rows()).collect();
//! let tree = train(&ds, &rows, &TrainConfig::new(Strategy::Trinary, 2, 1)).unwrap();
//! assert_eq!(tree.predict(&ds).unwrap().len(), 5);
//! ```

pub mod bench;
pub mod biasdemo;
pub mod censor;
pub mod data;
pub mod error;
pub mod loss;
pub mod rng;
pub mod split;
pub mod synth;
pub mod tree;

pub use censor::{apply_scenario, censor_im, censor_mcar, CensorSpec, Scenario};
pub use data::{
    load_csv, read_csv, stratified_kfold, Cell, ColumnData, ColumnKind, Dataset, FeatureColumn, FoldAssignment,
    Response, Schema, TaskKind,
};
pub use error::{Error, Result};
pub use loss::{LeafValue, LossKind};
pub use split::{best_split, FractionBasis, MissingRoute, Partition, ScoredSplit, SplitConfig, Strategy};
pub use tree::{train, Node, TrainConfig, Tree};

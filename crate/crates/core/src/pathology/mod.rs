//! Fat Cantor sets, the standard bump, and the two series built from them.

mod bump;
mod cantor;
mod series;

pub use bump::{standard_bump, BumpFunction};
pub use cantor::{build_fat_cantor, closed_form_measure, FatCantorSet, Interval, MAX_LEVELS};
pub use series::{
    construct_thm51, construct_thm52, rescale_to_2pi, thm52_epsilon, triple_of, CantorMetadata,
    CounterexampleSeries, Quantity, SeriesKind, SeriesMetadata, SeriesParams, Term, TermMetadata,
};

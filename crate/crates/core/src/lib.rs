//! Translation surfaces, straight-line flow and equidistribution statistics.
//!
//! The geometric core is generic over the scalar type ([`Real`], implemented
//! for `f32` and `f64`). The aliases at the crate root fix `f64`, which is
//! what the command-line tool and the statistics use.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod balance;
pub mod constants;
pub mod error;
pub mod flow;
pub mod geom;
pub mod intervals;
pub mod projection;
pub mod saddle;
pub mod scalar;
pub mod spreading;
pub mod surface;
pub mod unfold;

pub use balance::{PartitionParams, PointSet};
pub use error::{Error, Result};
pub use geom::Vec2;
pub use intervals::IntervalUnion;
pub use saddle::{DirectionSet, SaddleCensus};
pub use scalar::Real;
pub use surface::{EdgeRef, Polygon, SurfaceFile, TranslationSurface};
pub use unfold::{RationalPolygon, Unfolding};

pub type Point = Vec2<f64>;
pub type Surface = TranslationSurface<f64>;
pub type SurfaceF32 = TranslationSurface<f32>;
pub type HitSeq = flow::HitSequence<f64>;
pub type Iet = projection::IntervalExchange<f64>;
pub type Projection = projection::ProjectionMap<f64>;
pub type SaddleConnection = saddle::SaddleConnectionRec<f64>;
pub type Census = saddle::SaddleCensus<f64>;

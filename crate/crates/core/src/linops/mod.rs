//! Linear operators, the stacked operator of a block grid, and the projector
//! onto its graph.

mod grid;
mod op;
mod projector;

pub use grid::{BlockOperatorGrid, GridEntry};
pub use op::{BlurRows, LinOp};
pub use projector::{GramSide, SubspaceProjector};

//! Output formats: UPPAAL 4 XML with a query file, and DOT.

mod dot;
mod uppaal;

pub use dot::to_dot;
pub use uppaal::{default_queries, to_uppaal, translate_query, ExportError, UppaalModel, URGENT_CHANNEL, URGENT_TEMPLATE};

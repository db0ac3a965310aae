//! HTTP API over the explanation engine: sessions, queries, corrections and
//! evaluation reports.

mod error;
mod routes;
mod session;

pub use error::{ApiError, ErrorBody};
pub use routes::{router, serve, AppState};
pub use session::{
    status_map, CorrectionOutcome, NoCorrectionFound, OrderRow, QueryKind, ScheduleDiff, ScheduleSummary, Session,
};

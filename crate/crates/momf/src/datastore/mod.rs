//! Schema-governed tables with traveler-form validation and provenance.

pub mod filter;
pub mod form;
pub mod schema;
mod store;
pub mod units;
pub mod value;

pub use filter::{CmpOp, FilterError, FilterExpr};
pub use form::{TravelerForm, Violation};
pub use schema::{Archetype, FieldSpec, SchemaTemplate, Vocabulary};
pub use store::{
    check_header, ColumnMetadata, ImportReport, Lineage, ProvenanceStamp, Query, RowSet, Store, StoreError, StoreOptions,
    TableMetadata, TableSummary, ValidatedRecord,
};
pub use units::{UnitError, UnitRegistry};
pub use value::{DType, Value};

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use chrono::{DateTime, Utc};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value as Json};
use thiserror::Error;
use uuid::Uuid;

use super::filter::{FilterError, FilterExpr};
use super::form::{TravelerForm, Violation};
use super::schema::{Archetype, FieldSpec, SchemaTemplate, Vocabulary};
use super::units::{UnitError, UnitRegistry};
use super::value::{DType, Value};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StoreError {
    #[error("table {0:?} already exists")]
    DuplicateName(String),
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
    #[error("no table named {0:?}")]
    TableMissing(String),
    #[error("no form named {0:?}")]
    FormMissing(String),
    #[error("invalid form: {0}")]
    InvalidForm(String),
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error("malformed filter: {0}")]
    MalformedFilter(FilterError),
    #[error("record rejected with {} violation(s)", .0.len())]
    Rejected(Vec<Violation>),
    #[error("record was not validated against table {0:?}")]
    ValidationNotRun(String),
    #[error("unknown parent uuid {0}")]
    UnknownParent(Uuid),
    #[error(transparent)]
    Unit(#[from] UnitError),
    #[error("malformed cursor")]
    MalformedCursor,
    #[error("CSV header does not match the table: {0}")]
    HeaderMismatch(String),
    #[error("CSV error: {0}")]
    Csv(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("injected datastore fault")]
    Injected,
}

impl StoreError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::DuplicateName(_) => "duplicate_name",
            StoreError::InvalidTemplate(_) => "invalid_template",
            StoreError::TableMissing(_) => "table_missing",
            StoreError::FormMissing(_) => "form_missing",
            StoreError::InvalidForm(_) => "invalid_form",
            StoreError::UnknownColumn(_) => "unknown_column",
            StoreError::MalformedFilter(_) => "malformed_filter",
            StoreError::Rejected(_) => "validation_failed",
            StoreError::ValidationNotRun(_) => "validation_not_run",
            StoreError::UnknownParent(_) => "unknown_parent",
            StoreError::Unit(UnitError::UnknownUnit(_)) => "unknown_unit",
            StoreError::Unit(UnitError::IncompatibleDimension { .. }) => "incompatible_dimension",
            StoreError::Unit(UnitError::Parse { .. }) => "unit_file",
            StoreError::MalformedCursor => "malformed_cursor",
            StoreError::HeaderMismatch(_) => "header_mismatch",
            StoreError::Csv(_) => "csv",
            StoreError::Io(_) => "io",
            StoreError::Injected => "injected_fault",
        }
    }
}

impl From<std::io::Error> for StoreError {
    fn from(e: std::io::Error) -> Self {
        StoreError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceStamp {
    pub uuid: Uuid,
    pub source: String,
    pub actor: String,
    pub timestamp: DateTime<Utc>,
    pub parent_uuids: Vec<Uuid>,
    pub transform: String,
}

/// Where a record came from; everything but the actor is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Lineage {
    #[serde(default)]
    pub source: String,
    #[serde(default)]
    pub parents: Vec<Uuid>,
    #[serde(default)]
    pub transform: String,
}

/// A record that passed its traveler form. Only [`Store::validate`] makes one.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedRecord {
    table: String,
    schema_digest: u64,
    values: Vec<Value>,
}

impl ValidatedRecord {
    pub fn values(&self) -> &[Value] {
        &self.values
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Query {
    #[serde(default)]
    pub columns: Option<Vec<String>>,
    #[serde(default)]
    pub filter: Option<FilterExpr>,
    #[serde(default)]
    pub num_rows: Option<usize>,
    #[serde(default)]
    pub cursor: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowSet {
    pub columns: Vec<FieldSpec>,
    pub rows: Vec<Vec<Value>>,
    pub provenance: Vec<ProvenanceStamp>,
    /// Present when `num_rows` cut the result short.
    pub next_cursor: Option<String>,
}

impl RowSet {
    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    /// RFC 4180 text with a header; nulls are written as `""`.
    pub fn to_csv(&self) -> String {
        let mut w = csv_writer(Vec::new());
        w.write_record(self.column_names()).expect("writing to memory");
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_csv().unwrap_or_default())).expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("flushing memory")).expect("cells are UTF-8")
    }
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().quote_style(csv::QuoteStyle::NonNumeric).from_writer(w)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnMetadata {
    pub name: String,
    pub dtype: DType,
    pub unit: Option<String>,
    pub nullable: bool,
    pub ontology_tag: Option<String>,
    pub missing: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableMetadata {
    pub name: String,
    pub archetype: Archetype,
    pub columns: Vec<ColumnMetadata>,
    pub row_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableSummary {
    pub name: String,
    pub archetype: Archetype,
    pub row_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ImportReport {
    pub accepted: usize,
    pub rejected: usize,
    /// First ten rejected rows (1-based data row number) with their violations.
    pub violations: Vec<(usize, Vec<Violation>)>,
}

#[derive(Debug, Clone, Default)]
pub struct StoreOptions {
    /// Directory for the per-table journals; `None` keeps everything in memory.
    pub data_dir: Option<PathBuf>,
    /// Draw record UUIDs from a seeded generator instead of the OS.
    pub uuid_seed: Option<u64>,
    pub units: Option<UnitRegistry>,
    pub vocabulary: Option<Vocabulary>,
}

#[derive(Debug, Clone, Default)]
struct TableData {
    rows: Vec<Vec<Value>>,
    stamps: Vec<ProvenanceStamp>,
}

#[derive(Debug)]
struct Table {
    schema: SchemaTemplate,
    digest: u64,
    data: RwLock<Arc<TableData>>,
    journal: Option<Mutex<File>>,
}

#[derive(Debug)]
struct Provenance {
    rng: Option<ChaCha8Rng>,
    known: HashSet<Uuid>,
    last_seen: HashMap<String, DateTime<Utc>>,
}

#[derive(Debug)]
struct Inner {
    tables: RwLock<BTreeMap<String, Arc<Table>>>,
    forms: RwLock<BTreeMap<String, TravelerForm>>,
    forms_journal: Option<Mutex<File>>,
    provenance: Mutex<Provenance>,
    units: UnitRegistry,
    vocabulary: Vocabulary,
    data_dir: Option<PathBuf>,
    fault: AtomicBool,
}

/// Schema-governed tables with snapshot reads and per-table serialized writes.
///
/// Cloning is cheap and shares the same tables.
#[derive(Debug, Clone)]
pub struct Store {
    inner: Arc<Inner>,
}

const FORMS_FILE: &str = "forms.journal";
const JOURNAL_EXT: &str = "journal";

fn digest(schema: &SchemaTemplate) -> u64 {
    let text = serde_json::to_string(schema).expect("schemas serialize");
    text.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

fn read_lock<T>(l: &RwLock<T>) -> std::sync::RwLockReadGuard<'_, T> {
    l.read().unwrap_or_else(|e| e.into_inner())
}

fn write_lock<T>(l: &RwLock<T>) -> std::sync::RwLockWriteGuard<'_, T> {
    l.write().unwrap_or_else(|e| e.into_inner())
}

fn lock<T>(m: &Mutex<T>) -> std::sync::MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

fn append_line(file: &Mutex<File>, line: &Json) -> Result<(), StoreError> {
    let mut f = lock(file);
    let mut text = serde_json::to_string(line).expect("journal entries serialize");
    text.push('\n');
    f.write_all(text.as_bytes())?;
    f.flush()?;
    Ok(())
}

impl Default for Store {
    fn default() -> Self {
        Store::in_memory()
    }
}

impl Store {
    pub fn in_memory() -> Store {
        Store::open(StoreOptions::default()).expect("an in-memory store cannot fail to open")
    }

    /// Opens a store, replaying any journals found in the data directory.
    pub fn open(options: StoreOptions) -> Result<Store, StoreError> {
        let units = options.units.unwrap_or_default();
        let vocabulary = options.vocabulary.unwrap_or_default();
        let mut tables = BTreeMap::new();
        let mut forms = BTreeMap::new();
        let mut known = HashSet::new();
        let mut forms_journal = None;
        if let Some(dir) = &options.data_dir {
            fs::create_dir_all(dir)?;
            let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e == JOURNAL_EXT))
                .collect();
            paths.sort();
            for path in paths {
                if path.file_name().is_some_and(|n| n == FORMS_FILE) {
                    for entry in read_journal(&path)? {
                        let form: TravelerForm = serde_json::from_value(entry["form"].clone())
                            .map_err(|e| StoreError::Io(format!("{}: {e}", path.display())))?;
                        forms.insert(form.form_id.clone(), form);
                    }
                    continue;
                }
                let table = replay_table(&path, &mut known)?;
                tables.insert(table.schema.name.clone(), Arc::new(table));
            }
            let f = OpenOptions::new().create(true).append(true).open(dir.join(FORMS_FILE))?;
            forms_journal = Some(Mutex::new(f));
        }
        Ok(Store {
            inner: Arc::new(Inner {
                tables: RwLock::new(tables),
                forms: RwLock::new(forms),
                forms_journal,
                provenance: Mutex::new(Provenance {
                    rng: options.uuid_seed.map(ChaCha8Rng::seed_from_u64),
                    known,
                    last_seen: HashMap::new(),
                }),
                units,
                vocabulary,
                data_dir: options.data_dir,
                fault: AtomicBool::new(false),
            }),
        })
    }

    /// Makes every subsequent operation fail with [`StoreError::Injected`].
    #[doc(hidden)]
    pub fn inject_fault(&self, on: bool) {
        self.inner.fault.store(on, Ordering::SeqCst);
    }

    fn check_fault(&self) -> Result<(), StoreError> {
        if self.inner.fault.load(Ordering::SeqCst) {
            Err(StoreError::Injected)
        } else {
            Ok(())
        }
    }

    pub fn units(&self) -> &UnitRegistry {
        &self.inner.units
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.inner.vocabulary
    }

    pub fn convert_unit(&self, value: f64, from: &str, to: &str) -> Result<f64, StoreError> {
        Ok(self.inner.units.convert(value, from, to)?)
    }

    fn table(&self, name: &str) -> Result<Arc<Table>, StoreError> {
        self.check_fault()?;
        read_lock(&self.inner.tables).get(name).cloned().ok_or_else(|| StoreError::TableMissing(name.to_string()))
    }

    /// Creates an empty table; the template name is the table id.
    pub fn create_table(&self, template: SchemaTemplate) -> Result<String, StoreError> {
        self.check_fault()?;
        template.validate(&self.inner.units, &self.inner.vocabulary).map_err(StoreError::InvalidTemplate)?;
        let mut tables = write_lock(&self.inner.tables);
        if tables.contains_key(&template.name) {
            return Err(StoreError::DuplicateName(template.name));
        }
        let journal = match &self.inner.data_dir {
            Some(dir) => {
                let path = dir.join(format!("{}.{JOURNAL_EXT}", template.name));
                let f = OpenOptions::new().create_new(true).append(true).open(&path)?;
                let f = Mutex::new(f);
                append_line(&f, &json!({"op": "create", "template": template}))?;
                Some(f)
            }
            None => None,
        };
        let name = template.name.clone();
        let table = Table { digest: digest(&template), schema: template, data: RwLock::default(), journal };
        tables.insert(name.clone(), Arc::new(table));
        Ok(name)
    }

    pub fn list_tables(&self) -> Result<Vec<TableSummary>, StoreError> {
        self.check_fault()?;
        let tables: Vec<Arc<Table>> = read_lock(&self.inner.tables).values().cloned().collect();
        Ok(tables
            .iter()
            .map(|t| TableSummary {
                name: t.schema.name.clone(),
                archetype: t.schema.archetype,
                row_count: read_lock(&t.data).rows.len(),
            })
            .collect())
    }

    pub fn schema(&self, table: &str) -> Result<SchemaTemplate, StoreError> {
        Ok(self.table(table)?.schema.clone())
    }

    pub fn register_form(&self, form: TravelerForm) -> Result<(), StoreError> {
        let schema = self.schema(&form.target_table)?;
        form.check(&schema).map_err(StoreError::InvalidForm)?;
        let mut forms = write_lock(&self.inner.forms);
        if let Some(j) = &self.inner.forms_journal {
            append_line(j, &json!({"op": "form", "form": form}))?;
        }
        forms.insert(form.form_id.clone(), form);
        Ok(())
    }

    pub fn form(&self, form_id: &str) -> Result<TravelerForm, StoreError> {
        self.check_fault()?;
        read_lock(&self.inner.forms).get(form_id).cloned().ok_or_else(|| StoreError::FormMissing(form_id.to_string()))
    }

    /// Validates `record` for `table` with the named form, or with type and
    /// nullability checks only when no form is given.
    pub fn validate(&self, table: &str, form_id: Option<&str>, record: &Map<String, Json>) -> Result<ValidatedRecord, StoreError> {
        let t = self.table(table)?;
        let form = match form_id {
            Some(id) => {
                let f = self.form(id)?;
                if f.target_table != table {
                    return Err(StoreError::InvalidForm(format!("form {id:?} targets {:?}", f.target_table)));
                }
                f
            }
            None => TravelerForm::basic(table),
        };
        let values = form.validate(&t.schema, record).map_err(StoreError::Rejected)?;
        Ok(ValidatedRecord { table: table.to_string(), schema_digest: t.digest, values })
    }

    /// Appends a validated row and returns its fresh provenance stamp.
    pub fn ingest(&self, table: &str, record: ValidatedRecord, actor: &str, lineage: Lineage) -> Result<ProvenanceStamp, StoreError> {
        let t = self.table(table)?;
        if record.table != table || record.schema_digest != t.digest || record.values.len() != t.schema.fields.len() {
            return Err(StoreError::ValidationNotRun(table.to_string()));
        }
        let mut data = write_lock(&t.data);
        let stamp = {
            let mut prov = lock(&self.inner.provenance);
            if let Some(missing) = lineage.parents.iter().find(|p| !prov.known.contains(p)) {
                return Err(StoreError::UnknownParent(*missing));
            }
            let uuid = loop {
                let u = match &mut prov.rng {
                    Some(rng) => {
                        let mut bytes = [0u8; 16];
                        rng.fill_bytes(&mut bytes);
                        uuid::Builder::from_random_bytes(bytes).into_uuid()
                    }
                    None => Uuid::new_v4(),
                };
                if !prov.known.contains(&u) {
                    break u;
                }
            };
            let now = Utc::now();
            let timestamp = match prov.last_seen.get(actor) {
                Some(last) if *last > now => *last,
                _ => now,
            };
            prov.last_seen.insert(actor.to_string(), timestamp);
            prov.known.insert(uuid);
            ProvenanceStamp {
                uuid,
                source: lineage.source,
                actor: actor.to_string(),
                timestamp,
                parent_uuids: lineage.parents,
                transform: lineage.transform,
            }
        };
        if let Some(j) = &t.journal {
            let values: Vec<Json> = record.values.iter().map(Value::to_json).collect();
            if let Err(e) = append_line(j, &json!({"op": "row", "values": values, "stamp": stamp})) {
                lock(&self.inner.provenance).known.remove(&stamp.uuid);
                return Err(e);
            }
        }
        let d = Arc::make_mut(&mut data);
        d.rows.push(record.values);
        d.stamps.push(stamp.clone());
        Ok(stamp)
    }

    /// Validate-then-ingest convenience.
    pub fn insert(
        &self,
        table: &str,
        form_id: Option<&str>,
        record: &Map<String, Json>,
        actor: &str,
        lineage: Lineage,
    ) -> Result<ProvenanceStamp, StoreError> {
        let v = self.validate(table, form_id, record)?;
        self.ingest(table, v, actor, lineage)
    }

    fn snapshot(&self, table: &str) -> Result<(Arc<Table>, Arc<TableData>), StoreError> {
        let t = self.table(table)?;
        let data = read_lock(&t.data).clone();
        Ok((t, data))
    }

    pub fn row_count(&self, table: &str) -> Result<usize, StoreError> {
        Ok(self.snapshot(table)?.1.rows.len())
    }

    /// Rows passing the filter, in ingestion order, projected onto `columns`.
    pub fn query(&self, table: &str, query: &Query) -> Result<RowSet, StoreError> {
        let (t, data) = self.snapshot(table)?;
        let schema = &t.schema;
        let indices: Vec<usize> = match &query.columns {
            Some(cols) => cols
                .iter()
                .map(|c| schema.field(c).map(|(i, _)| i).ok_or_else(|| StoreError::UnknownColumn(c.clone())))
                .collect::<Result<_, _>>()?,
            None => (0..schema.fields.len()).collect(),
        };
        let filter = match &query.filter {
            Some(f) => Some(f.compile(schema).map_err(|e| match e.unknown_column {
                Some(c) => StoreError::UnknownColumn(c),
                None => StoreError::MalformedFilter(e),
            })?),
            None => None,
        };
        let start = match &query.cursor {
            Some(c) => decode_cursor(c, table)?,
            None => 0,
        };
        let limit = query.num_rows.unwrap_or(usize::MAX);
        let mut out = RowSet {
            columns: indices.iter().map(|&i| schema.fields[i].clone()).collect(),
            rows: Vec::new(),
            provenance: Vec::new(),
            next_cursor: None,
        };
        for pos in start..data.rows.len() {
            let row = &data.rows[pos];
            if filter.as_ref().is_some_and(|f| !f.matches(row)) {
                continue;
            }
            if out.rows.len() == limit {
                out.next_cursor = Some(encode_cursor(table, pos));
                break;
            }
            out.rows.push(indices.iter().map(|&i| row[i].clone()).collect());
            out.provenance.push(data.stamps[pos].clone());
        }
        Ok(out)
    }

    pub fn metadata(&self, table: &str) -> Result<TableMetadata, StoreError> {
        let (t, data) = self.snapshot(table)?;
        let columns = t
            .schema
            .fields
            .iter()
            .enumerate()
            .map(|(i, f)| ColumnMetadata {
                name: f.name.clone(),
                dtype: f.dtype,
                unit: f.unit.clone(),
                nullable: f.nullable,
                ontology_tag: f.ontology_tag.clone(),
                missing: data.rows.iter().filter(|r| r[i].is_null()).count(),
            })
            .collect();
        Ok(TableMetadata { name: t.schema.name.clone(), archetype: t.schema.archetype, columns, row_count: data.rows.len() })
    }

    /// Writes the whole table as CSV; returns the number of data rows.
    pub fn export_csv<W: Write>(&self, table: &str, out: W) -> Result<usize, StoreError> {
        let (t, data) = self.snapshot(table)?;
        let mut w = csv_writer(out);
        let csv_err = |e: csv::Error| StoreError::Csv(e.to_string());
        w.write_record(t.schema.fields.iter().map(|f| f.name.as_str())).map_err(csv_err)?;
        for row in &data.rows {
            w.write_record(row.iter().map(|v| v.to_csv().unwrap_or_default())).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(data.rows.len())
    }

    /// Validates and ingests every CSV row; a header that is not exactly the
    /// table's column set is rejected before anything is written.
    pub fn import_csv<R: Read>(
        &self,
        table: &str,
        input: R,
        form_id: Option<&str>,
        actor: &str,
        source: &str,
    ) -> Result<ImportReport, StoreError> {
        let schema = self.schema(table)?;
        if let Some(id) = form_id {
            self.form(id)?;
        }
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header: Vec<String> =
            reader.headers().map_err(|e| StoreError::Csv(e.to_string()))?.iter().map(str::to_string).collect();
        check_header(&schema, &header)?;
        let dtypes: Vec<DType> = header.iter().map(|h| schema.field(h).expect("header checked").1.dtype).collect();
        let mut report = ImportReport::default();
        for (n, row) in reader.records().enumerate() {
            let row = row.map_err(|e| StoreError::Csv(e.to_string()))?;
            let mut record = Map::new();
            let mut violations = Vec::new();
            for ((name, dtype), cell) in header.iter().zip(&dtypes).zip(row.iter()) {
                match Value::from_csv(*dtype, cell) {
                    Ok(v) => {
                        record.insert(name.clone(), v.to_json());
                    }
                    Err(message) => violations.push(Violation {
                        field: name.clone(),
                        rule: "type_mismatch".into(),
                        observed: Json::String(cell.to_string()),
                        message,
                    }),
                }
            }
            let result = if violations.is_empty() {
                self.insert(table, form_id, &record, actor, Lineage { source: source.to_string(), ..Lineage::default() })
                    .map(|_| ())
            } else {
                Err(StoreError::Rejected(violations))
            };
            match result {
                Ok(()) => report.accepted += 1,
                Err(StoreError::Rejected(v)) => {
                    report.rejected += 1;
                    if report.violations.len() < 10 {
                        report.violations.push((n + 1, v));
                    }
                }
                Err(e) => return Err(e),
            }
        }
        Ok(report)
    }
}

/// The header must name every column exactly once, in any order.
pub fn check_header(schema: &SchemaTemplate, header: &[String]) -> Result<(), StoreError> {
    let mut seen = HashSet::new();
    for h in header {
        if schema.field(h).is_none() {
            return Err(StoreError::HeaderMismatch(format!("unknown column {h:?}")));
        }
        if !seen.insert(h.as_str()) {
            return Err(StoreError::HeaderMismatch(format!("column {h:?} appears twice")));
        }
    }
    if let Some(missing) = schema.fields.iter().find(|f| !seen.contains(f.name.as_str())) {
        return Err(StoreError::HeaderMismatch(format!("missing column {:?}", missing.name)));
    }
    Ok(())
}

fn encode_cursor(table: &str, pos: usize) -> String {
    URL_SAFE_NO_PAD.encode(format!("{table}\u{0}{pos}"))
}

fn decode_cursor(cursor: &str, table: &str) -> Result<usize, StoreError> {
    let bytes = URL_SAFE_NO_PAD.decode(cursor).map_err(|_| StoreError::MalformedCursor)?;
    let text = String::from_utf8(bytes).map_err(|_| StoreError::MalformedCursor)?;
    let (t, pos) = text.split_once('\u{0}').ok_or(StoreError::MalformedCursor)?;
    if t != table {
        return Err(StoreError::MalformedCursor);
    }
    pos.parse().map_err(|_| StoreError::MalformedCursor)
}

fn read_journal(path: &Path) -> Result<Vec<Json>, StoreError> {
    let f = File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(v) => out.push(v),
            // a torn final line from an interrupted append is dropped
            Err(_) if i + 1 == count_lines(path)? => break,
            Err(e) => return Err(StoreError::Io(format!("{} line {}: {e}", path.display(), i + 1))),
        }
    }
    Ok(out)
}

fn count_lines(path: &Path) -> Result<usize, StoreError> {
    Ok(BufReader::new(File::open(path)?).lines().count())
}

fn replay_table(path: &Path, known: &mut HashSet<Uuid>) -> Result<Table, StoreError> {
    let bad = |m: String| StoreError::Io(format!("{}: {m}", path.display()));
    let entries = read_journal(path)?;
    let mut iter = entries.into_iter();
    let first = iter.next().ok_or_else(|| bad("empty journal".into()))?;
    if first["op"] != "create" {
        return Err(bad("journal does not start with a create entry".into()));
    }
    let schema: SchemaTemplate = serde_json::from_value(first["template"].clone()).map_err(|e| bad(e.to_string()))?;
    let mut data = TableData::default();
    for entry in iter {
        let raw = entry["values"].as_array().ok_or_else(|| bad("row without values".into()))?;
        if raw.len() != schema.fields.len() {
            return Err(bad("row arity does not match the schema".into()));
        }
        let row = schema
            .fields
            .iter()
            .zip(raw)
            .map(|(f, v)| Value::from_json(f.dtype, v))
            .collect::<Result<Vec<_>, _>>()
            .map_err(bad)?;
        let stamp: ProvenanceStamp = serde_json::from_value(entry["stamp"].clone()).map_err(|e| bad(e.to_string()))?;
        known.insert(stamp.uuid);
        data.rows.push(row);
        data.stamps.push(stamp);
    }
    let journal = OpenOptions::new().append(true).open(path)?;
    Ok(Table { digest: digest(&schema), schema, data: RwLock::new(Arc::new(data)), journal: Some(Mutex::new(journal)) })
}

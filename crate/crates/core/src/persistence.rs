//! CSV-backed tables with atomic file replacement.
//!
//! Each table lives in `<dir>/<name>.csv` with a mandatory header row.
//! [`TableStore`] keeps immutable snapshots in memory and serializes writers;
//! a write persists the new table before swapping the snapshot.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use rand::RngCore;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const EMAIL_COLUMN: &str = "emailid";
pub const PASSWORD_COLUMN: &str = "password";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("table `{name}` not found at {}", path.display())]
    TableNotFound { name: String, path: PathBuf },
    #[error("{}: empty file (a header row is required)", path.display())]
    EmptyFile { path: PathBuf },
    #[error("{}:{line}: row has {found} fields, header has {expected}", path.display())]
    RaggedRow {
        path: PathBuf,
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("table `{table}`: duplicate column `{column}`")]
    DuplicateColumn { table: String, column: String },
    #[error("table `{table}` has no column `{column}`")]
    MissingColumn { table: String, column: String },
    #[error("table `{table}`: {message}")]
    InvalidTable { table: String, message: String },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub name: String,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(
        name: impl Into<String>,
        columns: Vec<String>,
        rows: Vec<Vec<String>>,
    ) -> Result<Self, StoreError> {
        let name = name.into();
        if columns.is_empty() {
            return Err(StoreError::InvalidTable {
                table: name,
                message: "at least one column is required".into(),
            });
        }
        for (i, c) in columns.iter().enumerate() {
            if columns[..i].contains(c) {
                return Err(StoreError::DuplicateColumn {
                    table: name,
                    column: c.clone(),
                });
            }
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != columns.len()) {
            return Err(StoreError::InvalidTable {
                message: format!(
                    "row {bad} has {} fields, expected {}",
                    rows[bad].len(),
                    columns.len()
                ),
                table: name,
            });
        }
        Ok(Table {
            name,
            columns,
            rows,
        })
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn column_index(&self, column: &str) -> Result<usize, StoreError> {
        self.columns
            .iter()
            .position(|c| c == column)
            .ok_or_else(|| StoreError::MissingColumn {
                table: self.name.clone(),
                column: column.to_string(),
            })
    }

    pub fn push_row(&mut self, row: Vec<String>) -> Result<(), StoreError> {
        if row.len() != self.columns.len() {
            return Err(StoreError::InvalidTable {
                table: self.name.clone(),
                message: format!(
                    "row has {} fields, expected {}",
                    row.len(),
                    self.columns.len()
                ),
            });
        }
        self.rows.push(row);
        Ok(())
    }
}

pub fn table_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.csv"))
}

pub fn load_table(dir: &Path, name: &str) -> Result<Table, StoreError> {
    let path = table_path(dir, name);
    let bytes = match fs::read(&path) {
        Ok(b) => b,
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            return Err(StoreError::TableNotFound {
                name: name.to_string(),
                path,
            })
        }
        Err(source) => return Err(StoreError::Io { path, source }),
    };
    parse_table(name, &path, &bytes)
}

fn parse_table(name: &str, path: &Path, bytes: &[u8]) -> Result<Table, StoreError> {
    let csv_err = |source: csv::Error| match source.kind() {
        csv::ErrorKind::UnequalLengths {
            pos,
            expected_len,
            len,
        } => StoreError::RaggedRow {
            path: path.to_path_buf(),
            line: pos.as_ref().map(|p| p.line()).unwrap_or(0),
            expected: *expected_len as usize,
            found: *len as usize,
        },
        _ => StoreError::Csv {
            path: path.to_path_buf(),
            source,
        },
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(bytes);
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.is_empty() {
        return Err(StoreError::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    let columns: Vec<String> = header.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    Table::new(name, columns, rows)
}

pub fn serialize_table(table: &Table) -> Vec<u8> {
    let mut writer = csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::Necessary)
        .from_writer(Vec::new());
    writer
        .write_record(&table.columns)
        .expect("in-memory write");
    for row in &table.rows {
        writer.write_record(row).expect("in-memory write");
    }
    writer.into_inner().expect("in-memory flush")
}

/// Writes `<dir>/<table.name>.csv` through a temp file and rename, so readers
/// see either the old or the new file, never a partial one.
pub fn save_table(dir: &Path, table: &Table) -> Result<(), StoreError> {
    let path = table_path(dir, &table.name);
    let io_err = |source: io::Error| StoreError::Io {
        path: path.clone(),
        source,
    };
    let mut tmp = tempfile::Builder::new()
        .prefix(&format!(".{}.", table.name))
        .suffix(".tmp")
        .tempfile_in(dir)
        .map_err(io_err)?;
    tmp.write_all(&serialize_table(table)).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(&path).map_err(|e| io_err(e.error))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserRecord {
    pub emailid: String,
    pub password: String,
}

/// How the password column is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PasswordMode {
    /// Stored verbatim and compared byte-for-byte.
    #[default]
    Plaintext,
    /// Stored as `sha256$<salt hex>$<digest hex>`.
    SaltedSha256,
}

pub fn hash_password(password: &str) -> String {
    let mut salt = [0u8; 16];
    rand::thread_rng().fill_bytes(&mut salt);
    hash_with_salt(&salt, password)
}

fn hash_with_salt(salt: &[u8], password: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(salt);
    hasher.update(password.as_bytes());
    format!(
        "sha256${}${}",
        hex::encode(salt),
        hex::encode(hasher.finalize())
    )
}

impl PasswordMode {
    pub fn verify(self, stored: &str, supplied: &str) -> bool {
        match self {
            PasswordMode::Plaintext => stored == supplied,
            PasswordMode::SaltedSha256 => {
                let mut parts = stored.splitn(3, '$');
                let (Some("sha256"), Some(salt), Some(_)) =
                    (parts.next(), parts.next(), parts.next())
                else {
                    return false;
                };
                match hex::decode(salt) {
                    Ok(salt) => hash_with_salt(&salt, supplied) == stored,
                    Err(_) => false,
                }
            }
        }
    }

    /// The value to store for a new password.
    pub fn encode(self, password: &str) -> String {
        match self {
            PasswordMode::Plaintext => password.to_string(),
            PasswordMode::SaltedSha256 => hash_password(password),
        }
    }
}

/// Linear scan for the first row whose email and password both match
/// exactly (case-sensitive).
pub fn find_user(
    table: &Table,
    emailid: &str,
    password: &str,
) -> Result<Option<UserRecord>, StoreError> {
    find_user_with(table, emailid, password, PasswordMode::Plaintext)
}

pub fn find_user_with(
    table: &Table,
    emailid: &str,
    password: &str,
    mode: PasswordMode,
) -> Result<Option<UserRecord>, StoreError> {
    let email_col = table.column_index(EMAIL_COLUMN)?;
    let pass_col = table.column_index(PASSWORD_COLUMN)?;
    Ok(table
        .rows
        .iter()
        .find(|row| row[email_col] == emailid && mode.verify(&row[pass_col], password))
        .map(|row| UserRecord {
            emailid: row[email_col].clone(),
            password: row[pass_col].clone(),
        }))
}

/// Read access to named tables.
pub trait TableSource: Send + Sync {
    fn table(&self, name: &str) -> Result<Arc<Table>, StoreError>;
}

#[derive(Debug)]
pub struct TableStore {
    dir: PathBuf,
    snapshots: RwLock<HashMap<String, Arc<Table>>>,
    writer: Mutex<()>,
}

impl TableStore {
    /// Loads the named tables from `dir`.
    pub fn open(dir: impl Into<PathBuf>, names: &[&str]) -> Result<Self, StoreError> {
        let dir = dir.into();
        let mut snapshots = HashMap::new();
        for name in names {
            snapshots.insert(name.to_string(), Arc::new(load_table(&dir, name)?));
        }
        Ok(TableStore {
            dir,
            snapshots: RwLock::new(snapshots),
            writer: Mutex::new(()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn table_names(&self) -> Vec<String> {
        let mut names: Vec<_> = self.snapshots.read().unwrap().keys().cloned().collect();
        names.sort();
        names
    }

    /// Applies `change` to a copy of the table. When it returns `true` the
    /// copy is written to disk and becomes the new snapshot. Writers are
    /// serialized; readers keep whichever snapshot they already hold.
    pub fn update<F>(&self, name: &str, change: F) -> Result<bool, StoreError>
    where
        F: FnOnce(&mut Table) -> Result<bool, StoreError>,
    {
        let _guard = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        let mut next = (*self.table(name)?).clone();
        if !change(&mut next)? {
            return Ok(false);
        }
        save_table(&self.dir, &next)?;
        self.snapshots
            .write()
            .unwrap()
            .insert(name.to_string(), Arc::new(next));
        Ok(true)
    }
}

impl TableSource for TableStore {
    fn table(&self, name: &str) -> Result<Arc<Table>, StoreError> {
        self.snapshots
            .read()
            .unwrap()
            .get(name)
            .cloned()
            .ok_or_else(|| StoreError::TableNotFound {
                name: name.to_string(),
                path: table_path(&self.dir, name),
            })
    }
}

/// Every `*.csv` file in `dir`, by table name, sorted.
pub fn table_files(dir: &Path) -> io::Result<Vec<String>> {
    let mut names: Vec<String> = fs::read_dir(dir)?
        .filter_map(Result::ok)
        .filter_map(|e| {
            let p = e.path();
            (p.is_file() && p.extension().is_some_and(|x| x == "csv"))
                .then(|| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
                .flatten()
        })
        .collect();
    names.sort();
    Ok(names)
}

//! Records Collection for India: the login and registration actions, role
//! routing, and assembly of the full application from its three asset
//! directories.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::action::{ActionContext, Executor, ExecutorError, ExecutorRegistry};
use crate::check::{self, Finding, Report};
use crate::forms::{FormState, RequiredFields, ValidatorRegistry, LOGIN_FORM, PASSWORD_REQUIRED};
use crate::http::dispatch::App;
use crate::http::session::Session;
use crate::persistence::{
    find_user_with, PasswordMode, StoreError, TableSource, TableStore, EMAIL_COLUMN,
    PASSWORD_COLUMN,
};

pub const LOGIN_ACTION: &str = "com.pawan.LoginAction";
pub const REGISTER_ACTION: &str = "com.pawan.RegisterAction";
pub const REGISTER_FORM: &str = "RegisterForm";
pub const EMAILID_REQUIRED: &str = "error.emailid.required";

/// Session attribute holding the logged-in user's email id.
pub const SESSION_USER: &str = "sessUserName";

pub const FAILURE: &str = "failure";
pub const REGISTERED: &str = "registered";
pub const DUPLICATE: &str = "duplicate";

pub const CITIZEN_TABLE: &str = "citizen_signup_details";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Citizen,
    Employee,
    Hospital,
    School,
    Admin,
}

impl Role {
    pub const ALL: [Role; 5] = [
        Role::Citizen,
        Role::Employee,
        Role::Hospital,
        Role::School,
        Role::Admin,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Citizen => "citizen",
            Role::Employee => "employee",
            Role::Hospital => "hospital",
            Role::School => "school",
            Role::Admin => "admin",
        }
    }

    /// Credential table for the role. A fixed table, never derived from
    /// the submitted choice string.
    pub fn table(self) -> &'static str {
        match self {
            Role::Citizen => CITIZEN_TABLE,
            Role::Employee => "employee_signup_details",
            Role::Hospital => "hospital_signup_details",
            Role::School => "school_signup_details",
            Role::Admin => "admin_signup_details",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown role `{0}`")]
pub struct UnknownRole(pub String);

impl FromStr for Role {
    type Err = UnknownRole;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Role::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| UnknownRole(s.to_string()))
    }
}

pub fn credential_tables() -> Vec<&'static str> {
    Role::ALL.iter().map(|r| r.table()).collect()
}

#[derive(Debug, Error)]
pub enum PortalError {
    #[error("credential store unavailable: {0}")]
    StoreUnavailable(#[from] StoreError),
}

impl From<PortalError> for ExecutorError {
    fn from(e: PortalError) -> Self {
        ExecutorError {
            message: e.to_string(),
            source: Some(Box::new(e)),
        }
    }
}

/// Checks the submitted credentials against the table for the chosen role.
/// On a match the session records the user and the role name is returned;
/// anything else returns `failure`.
pub fn login_execute(
    form: &FormState,
    session: &mut Session,
    store: &dyn TableSource,
    mode: PasswordMode,
) -> Result<&'static str, PortalError> {
    let Ok(role) = form.value("choice").parse::<Role>() else {
        return Ok(FAILURE);
    };
    let table = store.table(role.table())?;
    match find_user_with(&table, form.value("userName"), form.value("password"), mode)? {
        Some(user) => {
            session.set_attribute(SESSION_USER, user.emailid);
            Ok(role.as_str())
        }
        None => Ok(FAILURE),
    }
}

/// Adds a citizen credential row unless the email id is already taken.
pub fn register_citizen(
    form: &FormState,
    store: &TableStore,
    mode: PasswordMode,
) -> Result<&'static str, PortalError> {
    let email = form.value("emailid").to_string();
    let password = mode.encode(form.value("password"));
    let added = store.update(CITIZEN_TABLE, |table| {
        let email_col = table.column_index(EMAIL_COLUMN)?;
        let pass_col = table.column_index(PASSWORD_COLUMN)?;
        if table.rows().iter().any(|r| r[email_col] == email) {
            return Ok(false);
        }
        let mut row = vec![String::new(); table.columns().len()];
        row[email_col] = email.clone();
        row[pass_col] = password.clone();
        table.push_row(row)?;
        Ok(true)
    })?;
    Ok(if added { REGISTERED } else { DUPLICATE })
}

pub struct LoginAction {
    store: Arc<dyn TableSource>,
    mode: PasswordMode,
}

impl LoginAction {
    pub fn new(store: Arc<dyn TableSource>, mode: PasswordMode) -> Self {
        LoginAction { store, mode }
    }
}

impl Executor for LoginAction {
    fn forwards(&self) -> Vec<String> {
        Role::ALL
            .iter()
            .map(|r| r.as_str())
            .chain([FAILURE])
            .map(str::to_string)
            .collect()
    }

    fn execute(&self, ctx: ActionContext<'_>) -> Result<String, ExecutorError> {
        let form = ctx
            .form
            .ok_or_else(|| ExecutorError::new("login action needs a form bean"))?;
        Ok(login_execute(form, ctx.session, self.store.as_ref(), self.mode)?.to_string())
    }
}

pub struct RegisterAction {
    store: Arc<TableStore>,
    mode: PasswordMode,
}

impl RegisterAction {
    pub fn new(store: Arc<TableStore>, mode: PasswordMode) -> Self {
        RegisterAction { store, mode }
    }
}

impl Executor for RegisterAction {
    fn forwards(&self) -> Vec<String> {
        vec![REGISTERED.into(), DUPLICATE.into()]
    }

    fn execute(&self, ctx: ActionContext<'_>) -> Result<String, ExecutorError> {
        let form = ctx
            .form
            .ok_or_else(|| ExecutorError::new("register action needs a form bean"))?;
        Ok(register_citizen(form, &self.store, self.mode)?.to_string())
    }
}

pub fn validators() -> ValidatorRegistry {
    let mut reg = ValidatorRegistry::new();
    reg.register(LOGIN_FORM, RequiredFields::login());
    reg.register(
        REGISTER_FORM,
        RequiredFields::new([
            ("emailid", EMAILID_REQUIRED),
            ("password", PASSWORD_REQUIRED),
        ]),
    );
    reg
}

pub fn executors(store: Arc<TableStore>, mode: PasswordMode) -> ExecutorRegistry {
    let mut reg = ExecutorRegistry::new();
    reg.register(LOGIN_ACTION, LoginAction::new(store.clone(), mode));
    reg.register(REGISTER_ACTION, RegisterAction::new(store, mode));
    reg
}

#[derive(Debug, Clone)]
pub struct AssetDirs {
    pub config: PathBuf,
    pub data: PathBuf,
    pub templates: PathBuf,
}

impl AssetDirs {
    pub fn new(
        config: impl Into<PathBuf>,
        data: impl Into<PathBuf>,
        templates: impl Into<PathBuf>,
    ) -> Self {
        AssetDirs {
            config: config.into(),
            data: data.into(),
            templates: templates.into(),
        }
    }

    /// `<root>/config`, `<root>/data`, `<root>/templates`.
    pub fn under(root: &Path) -> Self {
        Self::new(
            root.join("config"),
            root.join("data"),
            root.join("templates"),
        )
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PortalOptions {
    pub password_mode: PasswordMode,
}

#[derive(Debug)]
pub struct Portal {
    pub app: App,
    pub store: Arc<TableStore>,
}

#[derive(Debug, Error)]
#[error("startup failed with {} error(s):\n{}", errors.len(), render_findings(errors))]
pub struct StartupError {
    pub errors: Vec<Finding>,
}

fn render_findings(findings: &[Finding]) -> String {
    findings.iter().map(|f| format!("  {f}\n")).collect()
}

/// Loads and cross-checks everything. Returns the wired application only
/// when the report has no errors.
pub fn inspect(dirs: &AssetDirs, options: PortalOptions) -> (Option<Portal>, Report) {
    let mut report = Report::default();
    let tables = credential_tables();
    let config = check::read_config(&dirs.config, &mut report);
    let descriptor = check::read_descriptor(&dirs.config, &mut report);
    let bundle = check::read_bundle(&dirs.config, &mut report);
    let templates = check::read_templates(&dirs.templates, &mut report);
    check::check_tables(&dirs.data, &tables, &mut report);

    let (Some(config), Some(descriptor), Some(bundle), Some(templates)) =
        (config, descriptor, bundle, templates)
    else {
        return (None, report);
    };
    let store = match TableStore::open(&dirs.data, &tables) {
        Ok(s) => Arc::new(s),
        Err(_) => return (None, report),
    };
    let mut app = App::new(
        config,
        descriptor,
        bundle,
        templates,
        validators(),
        executors(store.clone(), options.password_mode),
    );
    let static_dir = dirs.templates.join("static");
    if static_dir.is_dir() {
        app = app.with_static_dir(static_dir);
    }
    check::cross_check(&app, &dirs.config, &dirs.templates, &mut report);
    if report.error_count() > 0 {
        return (None, report);
    }
    (Some(Portal { app, store }), report)
}

pub fn build_portal(
    config_dir: &Path,
    data_dir: &Path,
    template_dir: &Path,
) -> Result<Portal, StartupError> {
    build_portal_with(
        &AssetDirs::new(config_dir, data_dir, template_dir),
        PortalOptions::default(),
    )
}

pub fn build_portal_with(dirs: &AssetDirs, options: PortalOptions) -> Result<Portal, StartupError> {
    match inspect(dirs, options) {
        (Some(portal), _) => Ok(portal),
        (None, report) => Err(StartupError {
            errors: report.errors().cloned().collect(),
        }),
    }
}

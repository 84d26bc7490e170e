//! Startup validation. Every asset is loaded and cross-checked, producing
//! findings of the form `SEVERITY file:context message`. The same checks
//! gate server startup and back the `check` command.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;

use crate::config::{
    is_action_path, parse_deployment_descriptor, parse_framework_config, view_template_name,
    ActionMapping, ConfigError, DeploymentDescriptor, FrameworkConfig,
};
use crate::http::dispatch::App;
use crate::persistence::{
    load_table, table_files, table_path, StoreError, EMAIL_COLUMN, PASSWORD_COLUMN,
};
use crate::resources::{parse_properties, MessageBundle};
use crate::views::{load_templates, TagKind, TemplateSet};

pub const FRAMEWORK_CONFIG_FILE: &str = "struts-config.xml";
pub const DEPLOYMENT_DESCRIPTOR_FILE: &str = "web.xml";
pub const MESSAGE_BUNDLE_FILE: &str = "ApplicationResource.properties";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "ERROR",
            Severity::Warning => "WARNING",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub severity: Severity,
    pub file: String,
    pub context: String,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}:{} {}",
            self.severity, self.file, self.context, self.message
        )
    }
}

#[derive(Debug, Default, Clone)]
pub struct Report {
    pub findings: Vec<Finding>,
}

impl Report {
    pub fn error(
        &mut self,
        file: impl fmt::Display,
        context: impl Into<String>,
        message: impl Into<String>,
    ) {
        self.push(Severity::Error, file, context, message);
    }

    pub fn warning(
        &mut self,
        file: impl fmt::Display,
        context: impl Into<String>,
        message: impl Into<String>,
    ) {
        self.push(Severity::Warning, file, context, message);
    }

    fn push(
        &mut self,
        severity: Severity,
        file: impl fmt::Display,
        context: impl Into<String>,
        message: impl Into<String>,
    ) {
        self.findings.push(Finding {
            severity,
            file: file.to_string(),
            context: context.into(),
            message: message.into(),
        });
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Error)
    }

    pub fn error_count(&self) -> usize {
        self.errors().count()
    }

    pub fn warning_count(&self) -> usize {
        self.findings.len() - self.error_count()
    }
}

fn read_text(path: &Path, report: &mut Report) -> Option<String> {
    match fs::read_to_string(path) {
        Ok(text) => Some(text),
        Err(e) => {
            report.error(path.display(), "0", format!("cannot read file: {e}"));
            None
        }
    }
}

fn line_context(line: Option<u32>) -> String {
    line.map(|l| l.to_string()).unwrap_or_else(|| "0".into())
}

/// The error text without the `line N: ` prefix already carried by the
/// finding's context.
fn config_message(e: &ConfigError) -> String {
    let text = e.to_string();
    match e.line() {
        Some(l) => text
            .strip_prefix(&format!("line {l}: "))
            .map(str::to_string)
            .unwrap_or(text),
        None => text,
    }
}

pub fn read_config(dir: &Path, report: &mut Report) -> Option<FrameworkConfig> {
    let path = dir.join(FRAMEWORK_CONFIG_FILE);
    let text = read_text(&path, report)?;
    match parse_framework_config(&text) {
        Ok(c) => Some(c),
        Err(e) => {
            report.error(path.display(), line_context(e.line()), config_message(&e));
            None
        }
    }
}

pub fn read_descriptor(dir: &Path, report: &mut Report) -> Option<DeploymentDescriptor> {
    let path = dir.join(DEPLOYMENT_DESCRIPTOR_FILE);
    let text = read_text(&path, report)?;
    match parse_deployment_descriptor(&text) {
        Ok(d) => Some(d),
        Err(e) => {
            report.error(path.display(), line_context(e.line()), config_message(&e));
            None
        }
    }
}

pub fn read_bundle(dir: &Path, report: &mut Report) -> Option<MessageBundle> {
    let path = dir.join(MESSAGE_BUNDLE_FILE);
    let text = read_text(&path, report)?;
    match parse_properties(MESSAGE_BUNDLE_FILE, &text) {
        Ok(b) => Some(b),
        Err(e) => {
            report.error(path.display(), e.line().to_string(), e.to_string());
            None
        }
    }
}

pub fn read_templates(dir: &Path, report: &mut Report) -> Option<TemplateSet> {
    match load_templates(dir) {
        Ok((set, failures)) => {
            for f in &failures {
                let context = match &f.error {
                    crate::views::TemplateLoadError::Compile(e) => e.line().to_string(),
                    crate::views::TemplateLoadError::Io(_) => "0".into(),
                };
                report.error(dir.join(&f.file).display(), context, f.error.to_string());
            }
            Some(set)
        }
        Err(e) => {
            report.error(
                dir.display(),
                "0",
                format!("cannot read template directory: {e}"),
            );
            None
        }
    }
}

/// Every CSV in `dir` must load; `required` tables must exist and carry the
/// credential columns.
pub fn check_tables(dir: &Path, required: &[&str], report: &mut Report) {
    let present = match table_files(dir) {
        Ok(names) => names,
        Err(e) => {
            report.error(
                dir.display(),
                "0",
                format!("cannot read data directory: {e}"),
            );
            return;
        }
    };
    let mut names: BTreeSet<String> = present.into_iter().collect();
    names.extend(required.iter().map(|s| s.to_string()));
    for name in names {
        let path = table_path(dir, &name);
        match load_table(dir, &name) {
            Ok(table) => {
                if required.contains(&name.as_str()) {
                    for col in [EMAIL_COLUMN, PASSWORD_COLUMN] {
                        if table.column_index(col).is_err() {
                            report.error(
                                path.display(),
                                "1",
                                format!("table `{name}` lacks column `{col}`"),
                            );
                        }
                    }
                }
            }
            Err(StoreError::RaggedRow {
                line,
                expected,
                found,
                ..
            }) => report.error(
                path.display(),
                line.to_string(),
                format!("ragged row in table `{name}`: {found} fields, header has {expected}"),
            ),
            Err(StoreError::TableNotFound { .. }) => report.error(
                path.display(),
                "0",
                format!("required table `{name}` is missing"),
            ),
            Err(e) => report.error(path.display(), "0", format!("table `{name}`: {e}")),
        }
    }
}

fn mapping_context(m: &ActionMapping) -> String {
    format!("action[{}]", m.path)
}

/// Cross-references between config, executors, validators, messages and
/// templates.
pub fn cross_check(app: &App, config_dir: &Path, template_dir: &Path, report: &mut Report) {
    let cfg_file = config_dir.join(FRAMEWORK_CONFIG_FILE);
    let cfg_file = cfg_file.display();
    let bundle_file = config_dir.join(MESSAGE_BUNDLE_FILE);
    let config = &app.config;

    let view_exists = |path: &str| app.templates.contains(&view_template_name(path));

    for mapping in &config.action_mappings {
        let ctx = mapping_context(mapping);
        if let Some(id) = mapping.action_id() {
            match app.executors.get(id) {
                None => report.error(
                    &cfg_file,
                    &ctx,
                    format!("no executor registered for type `{id}`"),
                ),
                Some(exec) => {
                    for name in exec.forwards() {
                        if config.resolve_forward(mapping, &name).is_err() {
                            report.error(
                                &cfg_file,
                                &ctx,
                                format!("forward `{name}` returned by `{id}` is not declared locally or globally"),
                            );
                        }
                    }
                }
            }
        }
        let mut views: Vec<(&str, &str)> = mapping
            .local_forwards
            .iter()
            .map(|f| (f.name.as_str(), f.path.as_str()))
            .collect();
        if let Some(p) = mapping.direct_forward() {
            views.push(("forward", p));
        }
        if let Some(p) = &mapping.input_page {
            views.push(("input", p));
        }
        for (label, path) in views {
            if !is_action_path(path) && !view_exists(path) {
                report.error(
                    &cfg_file,
                    &ctx,
                    format!(
                        "`{label}` view `{path}` has no template `{}`",
                        view_template_name(path)
                    ),
                );
            }
        }
        if let Some(bean) = &mapping.form_bean {
            if app.validators.get(bean).is_some() {
                match &mapping.input_page {
                    None => report.error(
                        &cfg_file,
                        &ctx,
                        format!("form `{bean}` is validated but the action declares no input page"),
                    ),
                    Some(input) => {
                        if let Some(t) = app.templates.get(&view_template_name(input)) {
                            if !t.contains(TagKind::Errors) {
                                report.warning(
                                    &cfg_file,
                                    &ctx,
                                    format!("input page `{input}` has no errors tag"),
                                );
                            }
                        }
                    }
                }
            }
        }
    }

    for fwd in &config.global_forwards {
        if !fwd.is_action() && !view_exists(&fwd.path) {
            report.error(
                &cfg_file,
                format!("global-forward[{}]", fwd.name),
                format!(
                    "view `{}` has no template `{}`",
                    fwd.path,
                    view_template_name(&fwd.path)
                ),
            );
        }
    }

    for (bean_name, validator) in app.validators.iter() {
        let Some(def) = config.form_bean(bean_name) else {
            continue;
        };
        let ctx = format!("form-bean[{bean_name}]");
        if def.properties.is_empty() {
            report.error(
                &cfg_file,
                &ctx,
                "validated form bean declares no form-property elements",
            );
        }
        for prop in validator.required_properties() {
            if !def.properties.is_empty() && !def.property_names().any(|p| p == prop) {
                report.error(
                    &cfg_file,
                    &ctx,
                    format!("validator reads undeclared property `{prop}`"),
                );
            }
        }
        for key in validator.message_keys() {
            if !app.bundle.contains_key(key) {
                report.error(
                    bundle_file.display(),
                    key,
                    format!("missing message key `{key}` emitted by the `{bean_name}` validator"),
                );
            }
        }
    }

    let welcome = &app.descriptor.welcome_files;
    let reachable = |f: &String| {
        if is_action_path(f) {
            config.resolve_action(&format!("/{f}")).is_ok()
        } else {
            view_exists(f)
        }
    };
    let dd_file = config_dir.join(DEPLOYMENT_DESCRIPTOR_FILE);
    for f in welcome.iter().filter(|f| !reachable(f)) {
        report.warning(
            dd_file.display(),
            format!("welcome-file[{f}]"),
            "welcome file does not resolve",
        );
    }
    if !welcome.is_empty() && !welcome.iter().any(reachable) {
        report.error(
            dd_file.display(),
            "welcome-file-list",
            format!(
                "no welcome file resolves to a template or action: {}",
                welcome.join(", ")
            ),
        );
    }

    for name in app.templates.names() {
        let template = app.templates.get(name).expect("listed");
        let file = template_dir.join(name);
        let file = file.display();
        let bound = template.bound_properties();
        let Some(action) = template.form_action() else {
            for (kind, prop, line) in bound {
                report.error(
                    &file,
                    line.to_string(),
                    format!("`{kind}` tag for `{prop}` has no enclosing form"),
                );
            }
            continue;
        };
        let mapping = match config.resolve_action(action) {
            Ok(m) => m,
            Err(_) => {
                report.error(
                    &file,
                    "form",
                    format!("form action `{action}` matches no action mapping"),
                );
                continue;
            }
        };
        let def = mapping
            .form_bean
            .as_deref()
            .and_then(|b| config.form_bean(b));
        for (kind, prop, line) in bound {
            match def {
                None => report.error(
                    &file,
                    line.to_string(),
                    format!(
                        "`{kind}` tag for `{prop}` but action `{}` has no form bean",
                        mapping.path
                    ),
                ),
                Some(def) if !def.property_names().any(|p| p == prop) => report.error(
                    &file,
                    line.to_string(),
                    format!(
                        "`{kind}` tag binds undeclared property `{prop}` of `{}`",
                        def.name
                    ),
                ),
                Some(_) => {}
            }
        }
    }
}
